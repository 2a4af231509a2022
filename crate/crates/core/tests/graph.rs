mod common;

use detforest::graph::*;
use detforest::laplacian::{char_value, delta_matrix};
use detforest::C64;
use proptest::prelude::*;

fn e(u: usize, v: usize, dx: i32, dy: i32, c: f64) -> Edge {
    Edge { u, v, dx, dy, c }
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn load_examples() {
    let text = r#"{"kind":"strip","vertices":["a","b","c","d"],"edges":[
        {"u":"a","v":"b","c":1},{"u":"b","v":"c","c":1},{"u":"c","v":"d","c":1},
        {"u":"a","v":"a","dx":1,"c":1},{"u":"b","v":"b","dx":1,"c":1},
        {"u":"c","v":"c","dx":1,"c":1},{"u":"d","v":"d","dx":1,"c":1}]}"#;
    let g = load_graph(text).unwrap();
    assert_eq!((g.num_vertices(), g.num_edges()), (4, 7));
    assert!(g.is_massless());
    assert_eq!(g, lattices::width4());

    let line = load_graph(r#"{"kind":"strip","vertices":["o"],"edges":[{"u":"o","v":"o","dx":1,"c":1}]}"#).unwrap();
    assert_eq!(line, lattices::line(0.0));

    let zero = load_graph(r#"{"kind":"strip","vertices":["o"],"edges":[{"u":"o","v":"o","dx":1,"c":0}]}"#);
    assert!(matches!(zero, Err(detforest::Error::Validation(_))));
    let dy = load_graph(r#"{"kind":"strip","vertices":["o"],"edges":[{"u":"o","v":"o","dy":1,"c":1}]}"#);
    assert!(matches!(dy, Err(detforest::Error::Validation(_))));
    let split = load_graph(r#"{"kind":"torus","vertices":["a","b"],"edges":[{"u":"a","v":"a","dx":1,"c":1}]}"#);
    assert!(matches!(split, Err(detforest::Error::Validation(_))));
    let neg = load_graph(r#"{"kind":"torus","vertices":["a"],"edges":[{"u":"a","v":"a","dx":1,"c":1}],"mass":{"a":-1}}"#);
    assert!(neg.is_err());
}

#[test]
fn json_round_trip_keeps_file_order() {
    let g = lattices::triangular(0.5);
    let back = load_graph(&graph_to_json(&g)).unwrap();
    assert_eq!(back, g);
}

#[test]
fn width_examples() {
    assert_eq!(width(&lattices::width4()).unwrap(), 4);
    assert_eq!(width(&lattices::line(0.0)).unwrap(), 1);
    assert_eq!(width(&lattices::ladder()).unwrap(), 2);
    assert!(width(&lattices::square(0.0)).is_err());
}

#[test]
fn cover_examples() {
    let c = cover(&lattices::line(0.0), 3, 1).unwrap();
    assert_eq!((c.graph.num_vertices(), c.graph.num_edges()), (3, 3));
    let wrapped: Vec<&Edge> = c.graph.edges().iter().filter(|e| e.dx != 0).collect();
    assert_eq!(wrapped.len(), 1);
    assert_eq!(wrapped[0].dx, 1);

    let c = cover(&lattices::width4(), 2, 1).unwrap();
    assert_eq!((c.graph.num_vertices(), c.graph.num_edges()), (8, 14));
    let c = cover(&lattices::square(0.0), 2, 2).unwrap();
    assert_eq!((c.graph.num_vertices(), c.graph.num_edges()), (4, 8));
    assert!(cover(&lattices::width4(), 2, 2).is_err());
}

/// Laplacian of the cover at the trivial connection, assembled from the base edges.
fn lifted_laplacian(g: &PeriodicGraph, n1: usize, n2: usize) -> nalgebra::DMatrix<f64> {
    let nv = g.num_vertices();
    let n = nv * n1 * n2;
    let idx = |v: usize, a: i64, b: i64| v + nv * (a.rem_euclid(n1 as i64) as usize + n1 * b.rem_euclid(n2 as i64) as usize);
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for b in 0..n2 as i64 {
        for a in 0..n1 as i64 {
            for ed in g.edges() {
                let (i, j) = (idx(ed.u, a, b), idx(ed.v, a + ed.dx as i64, b + ed.dy as i64));
                m[(i, i)] += ed.c;
                m[(j, j)] += ed.c;
                m[(i, j)] -= ed.c;
                m[(j, i)] -= ed.c;
            }
        }
    }
    for b in 0..n2 as i64 {
        for a in 0..n1 as i64 {
            for v in 0..nv {
                m[(idx(v, a, b), idx(v, a, b))] += g.mass()[v];
            }
        }
    }
    m
}

#[test]
fn cover_laplacian_is_the_lift() {
    let one = C64::new(1.0, 0.0);
    for (g, n1, n2) in [(lattices::triangular(0.3), 3, 2), (lattices::width4(), 3, 1), (common::random_graph(&mut common::rng(4), Kind::Torus, 6), 2, 3)] {
        let cv = cover(&g, n1, n2).unwrap();
        let d = delta_matrix(&cv.graph, one, one, true).unwrap().entries;
        let lift = lifted_laplacian(&g, n1, n2);
        let diff = d.iter().zip(lift.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }
}

fn star(a: f64, b: f64, c: f64, m0: f64) -> PeriodicGraph {
    PeriodicGraph::new(
        Kind::Torus,
        names(&["p", "q", "r", "x"]),
        vec![e(3, 0, 0, 0, a), e(3, 1, 0, 0, b), e(3, 2, 0, 0, c), e(0, 1, 1, 0, 1.0)],
        vec![0.0, 0.0, 0.0, m0],
    )
    .unwrap()
}

fn conductance(g: &PeriodicGraph, u: &str, v: &str) -> f64 {
    let (u, v) = (g.vertex_index(u).unwrap(), g.vertex_index(v).unwrap());
    g.edges()
        .iter()
        .filter(|ed| (ed.u, ed.v) == (u, v) || (ed.u, ed.v) == (v, u))
        .filter(|ed| ed.offset() == (0, 0))
        .map(|ed| ed.c)
        .sum()
}

#[test]
fn star_triangle_example() {
    let g = star(1.0, 1.0, 1.0, 0.0);
    let h = electrical_transform(&g, Move::StarTriangle { vertex: 3 }).unwrap();
    assert_eq!(h.num_vertices(), 3);
    for (u, v) in [("p", "q"), ("q", "r"), ("r", "p")] {
        assert!((conductance(&h, u, v) - 1.0 / 3.0).abs() < 1e-15);
    }
    assert_eq!(h.mass(), &[0.0, 0.0, 0.0]);

    // with mass: A = bc/(a+b+c+m0), m1' = m1 + a m0/(a+b+c+m0)
    let (a, b, c, m0) = (1.0, 2.0, 3.0, 0.5);
    let h = electrical_transform(&star(a, b, c, m0), Move::StarTriangle { vertex: 3 }).unwrap();
    let s = a + b + c + m0;
    assert!((conductance(&h, "q", "r") - b * c / s).abs() < 1e-14);
    assert!((conductance(&h, "p", "r") - a * c / s).abs() < 1e-14);
    assert!((h.mass()[0] - a * m0 / s).abs() < 1e-14);
    assert!((h.mass()[2] - c * m0 / s).abs() < 1e-14);
}

#[test]
fn series_and_dead_branch_examples() {
    let path = PeriodicGraph::new(
        Kind::Torus,
        names(&["p", "x", "q"]),
        vec![e(0, 1, 0, 0, 1.0), e(1, 2, 0, 0, 1.0), e(0, 2, 1, 0, 1.0)],
        vec![0.0; 3],
    )
    .unwrap();
    let h = electrical_transform(&path, Move::Series { vertex: 1 }).unwrap();
    assert_eq!(h.num_vertices(), 2);
    assert!((conductance(&h, "p", "q") - 0.5).abs() < 1e-15);
    assert_eq!(h.mass(), &[0.0, 0.0]);

    let branch = PeriodicGraph::new(
        Kind::Torus,
        names(&["p", "x"]),
        vec![e(0, 0, 1, 0, 1.0), e(0, 1, 0, 0, 1.0)],
        vec![0.7, 0.0],
    )
    .unwrap();
    let h = electrical_transform(&branch, Move::DeadBranch { vertex: 1 }).unwrap();
    assert_eq!((h.num_vertices(), h.num_edges()), (1, 1));
    assert_eq!(h.mass(), &[0.7]);

    // a massive leaf feeds a·m₂/(a+m₂) into its neighbour
    let branch = branch.with_mass(vec![0.7, 2.0]).unwrap();
    let h = electrical_transform(&branch, Move::DeadBranch { vertex: 1 }).unwrap();
    assert!((h.mass()[0] - (0.7 + 2.0 / 3.0)).abs() < 1e-15);
}

#[test]
fn width_survives_series_and_parallel() {
    // width-4 strip with the first rung subdivided and the second doubled
    let g = PeriodicGraph::new(
        Kind::Strip,
        names(&["a", "b", "c", "d", "s"]),
        vec![
            e(0, 4, 0, 0, 1.0),
            e(4, 1, 0, 0, 1.0),
            e(1, 2, 0, 0, 1.0),
            e(1, 2, 0, 0, 2.0),
            e(2, 3, 0, 0, 1.0),
            e(0, 0, 1, 0, 1.0),
            e(1, 1, 1, 0, 1.0),
            e(2, 2, 1, 0, 1.0),
            e(3, 3, 1, 0, 1.0),
        ],
        vec![0.0; 5],
    )
    .unwrap();
    assert_eq!(width(&g).unwrap(), 4);
    let h = electrical_transform(&g, Move::Series { vertex: 4 }).unwrap();
    assert_eq!(width(&h).unwrap(), 4);
    let (b, c) = (h.vertex_index("b").unwrap(), h.vertex_index("c").unwrap());
    let rungs: Vec<usize> = (0..h.num_edges()).filter(|&i| (h.edges()[i].u, h.edges()[i].v) == (b, c)).collect();
    assert_eq!(rungs.len(), 2);
    let k = electrical_transform(&h, Move::Parallel { e1: rungs[0], e2: rungs[1] }).unwrap();
    assert_eq!(k.num_edges(), 7);
    assert_eq!(width(&k).unwrap(), 4);
}

/// Torus graphs exhibiting each move pattern at a vertex called `x`.
fn pattern(kind: u8, c: &[f64], m: &[f64]) -> (PeriodicGraph, Move) {
    let nm = |xs: &[&str]| names(xs);
    match kind {
        0 => (
            PeriodicGraph::new(
                Kind::Torus,
                nm(&["h", "x"]),
                vec![e(0, 1, 0, 0, c[0]), e(1, 0, 1, 0, c[1]), e(1, 0, 0, 1, c[2])],
                vec![m[0], m[1]],
            )
            .unwrap(),
            Move::StarTriangle { vertex: 1 },
        ),
        1 => (
            PeriodicGraph::new(
                Kind::Torus,
                nm(&["a", "x"]),
                vec![e(0, 1, 0, 0, c[0]), e(1, 0, 1, 0, c[1]), e(0, 0, 0, 1, c[2])],
                vec![m[0], m[1]],
            )
            .unwrap(),
            Move::Series { vertex: 1 },
        ),
        2 => (
            PeriodicGraph::new(
                Kind::Torus,
                nm(&["a", "b"]),
                vec![e(0, 1, 1, 0, c[0]), e(0, 1, 1, 0, c[1]), e(0, 0, 0, 1, c[2]), e(0, 1, 0, 0, 1.0)],
                vec![m[0], m[1]],
            )
            .unwrap(),
            Move::Parallel { e1: 0, e2: 1 },
        ),
        _ => (
            PeriodicGraph::new(
                Kind::Torus,
                nm(&["a", "x"]),
                vec![e(0, 0, 1, 0, c[0]), e(0, 0, 0, 1, c[1]), e(0, 1, 0, 0, c[2])],
                vec![m[0], m[1]],
            )
            .unwrap(),
            Move::DeadBranch { vertex: 1 },
        ),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn moves_preserve_the_determinant_up_to_a_constant(
        kind in 0u8..4,
        c in prop::collection::vec(0.2f64..3.0, 3),
        m in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..2.0], 2),
        seed in any::<u64>(),
    ) {
        let (g, mv) = pattern(kind, &c, &m);
        let h = electrical_transform(&g, mv).unwrap();
        let mut r = common::rng(seed);
        let mut ratio = None;
        for _ in 0..5 {
            let (z, w) = (common::random_point(&mut r), common::random_point(&mut r));
            let (a, b) = (char_value(&g, z, w).unwrap(), char_value(&h, z, w).unwrap());
            let q = a / b;
            match ratio {
                None => ratio = Some(q),
                Some(q0) => prop_assert!(common::rel_err(q, q0) < 1e-9, "{q} vs {q0}"),
            }
        }
    }

    #[test]
    fn cover_counts(seed in any::<u64>(), n1 in 1usize..4, n2 in 1usize..4) {
        let g = common::random_graph(&mut common::rng(seed), Kind::Torus, 6);
        // covers of graphs whose offsets miss a direction are disconnected and rejected
        let cv = cover(&g, n1, n2);
        prop_assume!(cv.is_ok());
        let cv = cv.unwrap();
        prop_assert_eq!(cv.graph.num_vertices(), n1 * n2 * g.num_vertices());
        prop_assert_eq!(cv.graph.num_edges(), n1 * n2 * g.num_edges());
        for i in 0..cv.graph.num_edges() {
            let (e, a, b) = cv.edge_lift(i);
            prop_assert_eq!(cv.edge_index(e, a, b), i);
            prop_assert_eq!(cv.graph.edges()[i].c, g.edges()[e].c);
        }
    }
}
