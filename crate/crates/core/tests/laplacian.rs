mod common;

use detforest::graph::{cover, lattices, Kind};
use detforest::laplacian::*;
use detforest::laurent::{newton_polygon, Poly};
use detforest::C64;
use proptest::prelude::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[test]
fn width4_delta_pattern() {
    let z = C64::from_polar(1.3, 0.7);
    let d = delta_matrix(&lattices::width4(), z, c(1.0), false).unwrap().entries;
    let base = -z - 1.0 / z;
    for (i, deg) in [3.0, 4.0, 4.0, 3.0].into_iter().enumerate() {
        assert!((d[(i, i)] - (base + deg)).norm() < 1e-14);
        for j in 0..4 {
            let want = if i.abs_diff(j) == 1 { c(-1.0) } else if i == j { d[(i, i)] } else { c(0.0) };
            assert!((d[(i, j)] - want).norm() < 1e-14, "({i},{j})");
        }
    }
}

#[test]
fn small_delta_examples() {
    let z = C64::new(0.4, -1.1);
    let w = C64::new(-0.8, 0.3);
    let d = delta_matrix(&lattices::line(0.0), z, w, true).unwrap();
    assert_eq!(d.entries.shape(), (1, 1));
    assert!((d.entries[(0, 0)] - (2.0 - z - 1.0 / z)).norm() < 1e-14);

    let d = delta_matrix(&lattices::square(1.0), z, w, true).unwrap();
    assert!((d.entries[(0, 0)] - (5.0 - z - 1.0 / z - w - 1.0 / w)).norm() < 1e-14);
    let d = delta_matrix(&lattices::square(1.0), z, w, false).unwrap();
    assert!((d.entries[(0, 0)] - (4.0 - z - 1.0 / z - w - 1.0 / w)).norm() < 1e-14);

    assert!(delta_matrix(&lattices::square(0.0), c(0.0), w, false).is_err());
}

#[test]
fn row_sums_vanish_at_the_trivial_connection() {
    for g in [lattices::width4(), lattices::triangular(0.0), lattices::ladder()] {
        let d = delta_matrix(&g, c(1.0), c(1.0), true).unwrap().entries;
        for i in 0..d.nrows() {
            assert!(d.row(i).iter().sum::<C64>().norm() < 1e-13);
        }
    }
}

#[test]
fn char_poly_examples() {
    let Poly::One(p) = char_poly(&lattices::width4()).unwrap() else { panic!("strip") };
    let want = [(4, 1.0), (3, -14.0), (2, 74.0), (1, -190.0), (0, 258.0)];
    for (k, v) in want {
        assert!((p.coeff(k) - v).norm() < 1e-9, "z^{k}");
        assert!((p.coeff(-k) - v).norm() < 1e-9, "z^-{k}");
    }
    assert_eq!(p.coeffs().len(), 9);

    let Poly::One(p) = char_poly(&lattices::line(0.0)).unwrap() else { panic!("strip") };
    assert_eq!(p.coeffs().len(), 3);
    for (k, v) in [(-1, -1.0), (0, 2.0), (1, -1.0)] {
        assert!((p.coeff(k) - v).norm() < 1e-12);
    }

    let Poly::Two(p) = char_poly(&lattices::square(0.0)).unwrap() else { panic!("torus") };
    assert_eq!(p.coeffs().len(), 5);
    for ((i, j), v) in [((0, 0), 4.0), ((1, 0), -1.0), ((-1, 0), -1.0), ((0, 1), -1.0), ((0, -1), -1.0)] {
        assert!((p.coeff(i, j) - v).norm() < 1e-12);
    }
}

#[test]
fn contractible_cycles_give_the_zero_polynomial() {
    use detforest::graph::{Edge, PeriodicGraph};
    let e = |u, v, dy| Edge { u, v, dx: 0, dy, c: 1.0 };
    let names = vec!["a".into(), "b".into(), "c".into()];
    let g = PeriodicGraph::new(Kind::Torus, names, vec![e(0, 1, 0), e(1, 2, 1), e(2, 0, -1)], vec![0.0; 3]).unwrap();
    let Poly::Two(p) = char_poly(&g).unwrap() else { panic!("torus") };
    assert!(p.is_zero());
    let massive = g.with_mass(vec![1.0, 0.0, 0.0]).unwrap();
    let Poly::Two(p) = char_poly(&massive).unwrap() else { panic!("torus") };
    // rooted spanning trees of the triangle with one root: 3
    assert_eq!(p.coeffs().len(), 1);
    assert!((p.coeff(0, 0) - 3.0).norm() < 1e-12);
}

#[test]
fn brute_force_examples() {
    let line = cover(&lattices::line(0.0), 1, 1).unwrap().graph;
    let z = brute_force_partition(&line, c(-1.0), c(1.0), 12).unwrap();
    assert!((z - 4.0).norm() < 1e-14);

    // rooted forests of the triangle, each tree weighted by its mass
    let tri = lattices::triangle(1.0);
    let z = brute_force_partition(&tri, c(1.0), c(1.0), 12).unwrap();
    assert!((z - 16.0).norm() < 1e-12);
    assert!((z - delta_matrix(&tri, c(1.0), c(1.0), true).unwrap().det()).norm() < 1e-12);

    let sq = cover(&lattices::square(0.0), 1, 1).unwrap().graph;
    let (zz, ww) = (c(-1.0), c(1.0));
    let bf = brute_force_partition(&sq, zz, ww, 12).unwrap();
    let det = char_value(&sq, zz, ww).unwrap();
    assert!((bf - det).norm() < 1e-12, "{bf} vs {det}");
    assert!((bf - 4.0).norm() < 1e-12);
}

#[test]
fn enumeration_guard() {
    let big = cover(&lattices::square(0.0), 3, 3).unwrap().graph;
    assert!(matches!(brute_force_partition(&big, c(1.0), c(1.0), 12), Err(detforest::Error::SizeGuard { .. })));
}

#[test]
fn boundary_coefficients_ignore_the_mass() {
    for g in [lattices::square(0.0), lattices::triangular(0.0)] {
        let massive = g.with_mass(vec![1.0]).unwrap();
        let (Poly::Two(p0), Poly::Two(p1)) = (char_poly(&g).unwrap(), char_poly(&massive).unwrap()) else { panic!() };
        let n = newton_polygon(&p0).unwrap();
        for &(i, j) in p0.support().iter().chain(p1.support().iter()) {
            if n.slack(i as f64, j as f64) < 1e-9 {
                assert!((p0.coeff(i, j) - p1.coeff(i, j)).norm() < 1e-12, "({i},{j})");
            }
        }
        assert!((p1.coeff(0, 0) - p0.coeff(0, 0) - 1.0).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn enumeration_equals_the_determinant(seed in any::<u64>(), torus in any::<bool>()) {
        let kind = if torus { Kind::Torus } else { Kind::Strip };
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r, kind, 10);
        for _ in 0..20 {
            let (z, w) = (common::random_point(&mut r), common::random_point(&mut r));
            let bf = brute_force_partition(&g, z, w, 12).unwrap();
            let det = char_value(&g, z, w).unwrap();
            prop_assert!(common::rel_err(bf, det) < 1e-9 || (bf - det).norm() < 1e-12, "{bf} vs {det}");
        }
    }

    #[test]
    fn char_poly_matches_the_determinant(seed in any::<u64>(), torus in any::<bool>()) {
        let kind = if torus { Kind::Torus } else { Kind::Strip };
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r, kind, 8);
        let p = char_poly(&g).unwrap();
        for _ in 0..20 {
            let (z, w) = (common::random_point(&mut r), common::random_point(&mut r));
            let det = char_value(&g, z, w).unwrap();
            let v = match &p {
                Poly::One(p) => p.eval(z).unwrap(),
                Poly::Two(p) => p.eval(z, w).unwrap(),
            };
            prop_assert!(common::rel_err(v, det) < 1e-9 || (v - det).norm() < 1e-10, "{v} vs {det}");
        }
        match &p {
            Poly::One(p) => for (&k, &v) in p.coeffs() {
                prop_assert!((v - p.coeff(-k)).norm() < 1e-10);
            },
            Poly::Two(p) => for (&(i, j), &v) in p.coeffs() {
                prop_assert!((v - p.coeff(-i, -j)).norm() < 1e-10);
            },
        }
    }

    #[test]
    fn inversion_transposes(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r, Kind::Torus, 8);
        let (z, w) = (common::random_point(&mut r), common::random_point(&mut r));
        let a = delta_matrix(&g, z, w, true).unwrap().entries;
        let b = delta_matrix(&g, 1.0 / z, 1.0 / w, true).unwrap().entries;
        let diff = (b - a.transpose()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }
}
