mod common;

use detforest::graph::{cover, lattices, Kind, PeriodicGraph};
use detforest::kernel::*;
use detforest::laplacian::{char_value, configuration_weight, enumerate_configurations};
use detforest::C64;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn with_conductance(g: &PeriodicGraph, e: usize, factor: f64) -> PeriodicGraph {
    let mut edges = g.edges().to_vec();
    edges[e].c *= factor;
    PeriodicGraph::new(g.kind(), g.names().to_vec(), edges, g.mass().to_vec()).unwrap()
}

/// `c_e ∂ log det(Δ + D_M) / ∂c_e` by a central difference in `log c_e`.
fn log_derivative(g: &PeriodicGraph, e: usize, z: C64, w: C64) -> f64 {
    let h: f64 = 1e-5;
    let up = char_value(&with_conductance(g, e, h.exp()), z, w).unwrap();
    let dn = char_value(&with_conductance(g, e, (-h).exp()), z, w).unwrap();
    ((up / dn).ln() / (2.0 * h)).re
}

fn without_edge(g: &PeriodicGraph, e: usize) -> PeriodicGraph {
    let mut edges = g.edges().to_vec();
    edges.remove(e);
    PeriodicGraph::new(g.kind(), g.names().to_vec(), edges, g.mass().to_vec()).unwrap()
}

#[test]
fn line_kernel_is_one_everywhere() {
    let g = lattices::line(0.0);
    for z in [c(-1.0), C64::new(0.2, 1.7), c(3.0)] {
        let k = transfer_current(&g, z, c(1.0)).unwrap();
        assert!((k.entries[(0, 0)] - 1.0).norm() < 1e-14);
    }
    for z in [c(-1.0), C64::new(0.5, 0.5)] {
        for a in 0..3 {
            assert!((cylinder_kernel(&g, 3, z, (0, a), (0, a)).unwrap() - 1.0).norm() < 1e-13);
        }
    }
    assert!((strip_kernel_entry(&g, 1, 0, 0, 5, 5).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn width4_entries_at_minus_one() {
    let g = lattices::width4();
    let k = transfer_current(&g, c(-1.0), c(1.0)).unwrap();
    // off-diagonal rung entry from the rational expression (1−z)²z / (1−8z+16z²−8z³+z⁴)
    let z = -1.0f64;
    let want = (1.0 - z).powi(2) * z / (1.0 - 8.0 * z + 16.0 * z * z - 8.0 * z.powi(3) + z.powi(4));
    assert!((k.entries[(0, 1)].re - want).abs() < 1e-12);
    assert!((want + 2.0 / 17.0).abs() < 1e-15);
    // diagonal entries are the log-derivatives of the partition function
    for e in 0..7 {
        let fd = log_derivative(&g, e, c(-1.0), c(1.0));
        assert!((k.entries[(e, e)].re - fd).abs() < 1e-8, "edge {e}: {} vs {fd}", k.entries[(e, e)]);
    }
    assert!((k.entries[(0, 0)].re - 16.0 / 51.0).abs() < 1e-12);
    assert!((k.trace() - 4.0).norm() < 1e-12);
}

#[test]
fn finite_marginals_match_enumeration() {
    let g = lattices::width4();
    let z = c(-1.0);
    let mut total = c(0.0);
    let mut with = vec![c(0.0); 7];
    let mut pair = c(0.0);
    enumerate_configurations(&g, 12, |cfg| {
        let wt = configuration_weight(&g, cfg, z, c(1.0));
        total += wt;
        for &e in &cfg.edges {
            with[e] += wt;
        }
        if cfg.edges.contains(&1) && cfg.edges.contains(&4) {
            pair += wt;
        }
    })
    .unwrap();
    let k = transfer_current(&g, z, c(1.0)).unwrap();
    for e in 0..7 {
        let p = (with[e] / total).re;
        assert!((edge_probability(&k, &[e]).unwrap() - p).abs() < 1e-12);
        assert!((cylinder_kernel(&g, 1, z, (e, 0), (e, 0)).unwrap() - k.entries[(e, e)]).norm() < 1e-13);
    }
    assert!((edge_probability(&k, &[1, 4]).unwrap() - (pair / total).re).abs() < 1e-12);
}

#[test]
fn eight_cover_marginal_by_deletion() {
    // Pr(e) = 1 − Z(G∖e)/Z(G) on the 8-fold cover at monodromy −1
    let g = lattices::width4();
    let cv = cover(&g, 8, 1).unwrap();
    let z = c(-1.0);
    let full = char_value(&cv.graph, z, c(1.0)).unwrap();
    for e in [1, 4] {
        let idx = cv.edge_index(e, 3, 0);
        let p = 1.0 - (char_value(&without_edge(&cv.graph, idx), z, c(1.0)).unwrap() / full).re;
        let k = cylinder_kernel(&g, 8, z, (e, 3), (e, 3)).unwrap();
        assert!((k.re - p).abs() < 1e-10, "edge {e}: {k} vs {p}");
    }
}

#[test]
fn strip_kernel_trace_and_middle_rung() {
    let g = lattices::width4();
    let k = StripKernel::new(&g, 1, None).unwrap();
    let m = k.matrix(0).unwrap();
    assert!((m.trace().re - 4.0).abs() < 1e-8);
    assert!(m.trace().im.abs() < 1e-8);

    let rung = k.entry(1, 1, 0, 0).unwrap();
    let r = 2.11239f64.sqrt();
    let finite = cylinder_kernel(&g, 64, c(r.powi(64)), (1, 0), (1, 0)).unwrap();
    assert!((finite.re - rung).abs() < 1e-4, "{finite} vs {rung}");

    // one full period (three rungs, four horizontals) is a forest: positive
    // probability, matching the 7×7 minor on a long finite cylinder
    let all: Vec<usize> = (0..7).collect();
    let p = edge_probability(&m, &all).unwrap();
    let mut cyl = nalgebra::DMatrix::<C64>::zeros(7, 7);
    for a in 0..7 {
        for b in 0..7 {
            cyl[(a, b)] = cylinder_kernel(&g, 64, c(r.powi(64)), (a, 0), (b, 0)).unwrap();
        }
    }
    assert!(p > 1e-3);
    assert!((p - cyl.determinant().re).abs() < 1e-8, "{p}");
    // the symbol K(z) has rank |V| = 4, so its full 7×7 minor vanishes
    let symbol = transfer_current(&g, C64::new(1.3, 0.2), c(1.0)).unwrap();
    assert!(edge_probability(&symbol, &all).unwrap().abs() < 1e-8);
}

#[test]
fn finite_cylinders_converge_to_the_strip_kernel() {
    let g = lattices::width4();
    let exact = strip_kernel_entry(&g, 1, 4, 1, 0, 0).unwrap();
    let r = 2.11239f64.sqrt();
    let errs: Vec<f64> = [4, 8, 16, 32]
        .iter()
        .map(|&n| (cylinder_kernel(&g, n, c(r.powi(n as i32)), (4, 0), (1, 0)).unwrap().re - exact).abs())
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    assert!(errs[3] < 1e-3, "{errs:?}");
}

/// Potential kernel a(x, 0) of the simple random walk on ℤ², by integrating
/// out the second angle analytically and the first with a midpoint rule.
fn potential_kernel(x: i32) -> f64 {
    let n = 200_000;
    let h = 2.0 * PI / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        let t = (k as f64 + 0.5) * h;
        let a = 4.0 - 2.0 * t.cos();
        acc += (1.0 - (x as f64 * t).cos()) / (a * a - 4.0).sqrt();
    }
    acc * h / (2.0 * PI)
}

#[test]
fn square_grid_kernel_entries() {
    let g = lattices::square(0.0);
    let k = TorusKernel::new(&g, 0.0, 0.0).unwrap();
    for e in 0..2 {
        assert!((k.entry(e, e, (0, 0)).unwrap() - 0.5).abs() < 1e-6);
    }
    let a1 = potential_kernel(1);
    let a2 = potential_kernel(2);
    assert!((a1 - 0.25).abs() < 1e-6 && (a2 - (1.0 - 2.0 / PI)).abs() < 1e-6);
    // current through (1,0)→(2,0) when a unit current enters at 0 and leaves at (1,0)
    let oracle = a2 - 2.0 * a1;
    let v = k.entry(0, 0, (1, 0)).unwrap();
    assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
}

#[test]
fn torus_trace_and_contour_independence() {
    let tri = lattices::triangular(0.0);
    for (s, t) in [(0.2, 0.1), (-0.4, 0.3)] {
        let m = TorusKernel::new(&tri, s, t).unwrap().matrix((0, 0)).unwrap();
        assert!((m.trace().re - 1.0).abs() < 1e-6, "({s},{t}): {}", m.trace());
    }
    // the origin lies in the bounded complement component for a massive square grid
    let g = lattices::square(1.0);
    let base = TorusKernel::at_point(&g, 0.0, 0.0).unwrap().matrix((1, -1)).unwrap();
    for (x, y) in [(0.05, -0.03), (-0.08, 0.02)] {
        let moved = TorusKernel::at_point(&g, x, y).unwrap().matrix((1, -1)).unwrap();
        let d = (&moved.entries - &base.entries).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(d < 1e-8, "({x},{y}): {d}");
    }
}

#[test]
fn massive_kernels_are_not_projections() {
    // tr K + tr D_M (Δ + D_M)^{-1} = |V|, so K² ≠ K once masses are present
    let g = lattices::triangular(0.5);
    let (z, w) = (C64::new(0.3, 0.9), c(1.4));
    let k = transfer_current(&g, z, w).unwrap();
    assert!(k.projection_defect() > 1e-3);
    let d = detforest::laplacian::delta_matrix(&g, z, w, true).unwrap().entries;
    let inv = d.try_inverse().unwrap();
    let massive = 0.5 * inv[(0, 0)];
    assert!((k.trace() + massive - 1.0).norm() < 1e-12);
}

#[test]
fn contractible_cycles_make_every_point_singular() {
    // the only cycle v1 → v2 → v1 has zero net offset and there is no mass, so P ≡ 0
    let e = |u, v, dx, c| detforest::graph::Edge { u, v, dx, dy: 0, c };
    let g = PeriodicGraph::new(
        Kind::Strip,
        vec!["v0".into(), "v1".into(), "v2".into()],
        vec![e(0, 1, 0, 1.75), e(1, 2, -1, 1.15), e(2, 1, 1, 1.5)],
        vec![0.0; 3],
    )
    .unwrap();
    for z in [C64::new(0.039, -0.98), C64::from_polar(1.3, 2.0), c(-1.0)] {
        assert!(matches!(transfer_current(&g, z, c(1.0)), Err(detforest::Error::Singular(_))), "z = {z}");
    }
}

fn massless(g: PeriodicGraph) -> PeriodicGraph {
    let n = g.num_vertices();
    g.with_mass(vec![0.0; n]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bundle_kernels_are_projections(seed in any::<u64>(), torus in any::<bool>()) {
        let kind = if torus { Kind::Torus } else { Kind::Strip };
        let mut r = common::rng(seed);
        let g = massless(common::random_graph(&mut r, kind, 7));
        for _ in 0..10 {
            let (z, w) = (common::random_point(&mut r), common::random_point(&mut r));
            let Ok(k) = transfer_current(&g, z, w) else { continue };
            prop_assert!(k.projection_defect() < 1e-8, "{}", k.projection_defect());
            prop_assert!((k.trace() - g.num_vertices() as f64).norm() < 1e-8);
        }
    }

    #[test]
    fn strip_kernel_ignores_the_radius_within_a_gap(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let g = common::random_planar_strip(&mut r, 3);
        let m = detforest::graph::width(&g).unwrap();
        let j = r.random_range(if g.is_massless() { 1 } else { 0 }..=m);
        let k0 = StripKernel::new(&g, j, None).unwrap();
        let (lo, hi) = StripKernel::gap(&k0.report, j).unwrap();
        let t: f64 = r.random_range(0.2..0.8);
        // the top gap (λ_m, ∞) is unbounded
        let radius = if hi.is_finite() { (lo.ln() * (1.0 - t) + hi.ln() * t).exp() } else { lo * (1.5 + 2.0 * t) };
        let k1 = StripKernel::new(&g, k0.j, Some(radius)).unwrap();
        let ne = g.num_edges();
        for shift in [0, 1, -2] {
            let (a, b) = (k0.matrix(shift).unwrap(), k1.matrix(shift).unwrap());
            for i in 0..ne {
                for j in 0..ne {
                    prop_assert!((a.entries[(i, j)] - b.entries[(i, j)]).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn marginals_are_probabilities(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r, Kind::Torus, 8);
        let k = if g.is_massless() {
            transfer_current_grounded(&g, 0).unwrap()
        } else {
            transfer_current(&g, c(1.0), c(1.0)).unwrap()
        };
        let ne = g.num_edges();
        for i in 0..ne {
            let p = edge_probability(&k, &[i]).unwrap();
            prop_assert!((-1e-8..=1.0 + 1e-8).contains(&p), "{p}");
            for j in 0..ne {
                let q = edge_probability(&k, &[i, j]).unwrap();
                prop_assert!((-1e-8..=1.0 + 1e-8).contains(&q), "{q}");
                let x = event_probability(&k, &[i], &[j]).unwrap();
                prop_assert!((-1e-8..=1.0 + 1e-8).contains(&x), "{x}");
            }
        }
    }
}
