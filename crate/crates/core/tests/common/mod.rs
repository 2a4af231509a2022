#![allow(dead_code)]

use detforest::graph::{Edge, Kind, PeriodicGraph};
use detforest::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small connected periodic graph with at most `max_edges` edges: a random
/// spanning path through 1–3 vertices plus extra edges and loops with
/// offsets in {−1, 0, 1}; masses vanish half of the time.
pub fn random_graph(r: &mut ChaCha8Rng, kind: Kind, max_edges: usize) -> PeriodicGraph {
    loop {
        let nv = r.random_range(1..=3usize);
        let mut edges = Vec::new();
        let off = |r: &mut ChaCha8Rng| r.random_range(-1..=1);
        for v in 1..nv {
            let u = r.random_range(0..v);
            let dy = if kind == Kind::Torus { off(r) } else { 0 };
            edges.push(Edge { u, v, dx: off(r), dy, c: r.random_range(0.5..2.0) });
        }
        let extra = r.random_range(1..=max_edges.saturating_sub(edges.len()).max(1));
        for _ in 0..extra {
            if edges.len() >= max_edges {
                break;
            }
            let (u, v) = (r.random_range(0..nv), r.random_range(0..nv));
            let (mut dx, mut dy) = (off(r), if kind == Kind::Torus { off(r) } else { 0 });
            if u == v && dx == 0 && dy == 0 {
                dx = 1;
                if kind == Kind::Torus && r.random_bool(0.5) {
                    (dx, dy) = (0, 1);
                }
            }
            edges.push(Edge { u, v, dx, dy, c: r.random_range(0.5..2.0) });
        }
        let massive = r.random_bool(0.5);
        let mass = (0..nv).map(|_| if massive { r.random_range(0.0..1.5) } else { 0.0 }).collect();
        let names = (0..nv).map(|i| format!("v{i}")).collect();
        if let Ok(g) = PeriodicGraph::new(kind, names, edges, mass) {
            return g;
        }
    }
}

/// Point of modulus in [0.5, 2] and random argument.
pub fn random_point(r: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(r.random_range(0.5..2.0), r.random_range(0.0..std::f64::consts::TAU))
}

pub fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

/// Random graph embedded in the cylinder: `k` levels, each with a horizontal
/// edge to its translate, consecutive levels joined by a rung and/or one
/// diagonal per face (so no two edges cross).
pub fn random_planar_strip(r: &mut ChaCha8Rng, max_levels: usize) -> PeriodicGraph {
    let k = r.random_range(1..=max_levels);
    let mut edges: Vec<Edge> = (0..k).map(|h| Edge { u: h, v: h, dx: 1, dy: 0, c: r.random_range(0.5..2.0) }).collect();
    for h in 0..k.saturating_sub(1) {
        let (rung, diag) = match r.random_range(0..3) {
            0 => (true, false),
            1 => (false, true),
            _ => (true, true),
        };
        if rung {
            edges.push(Edge { u: h, v: h + 1, dx: 0, dy: 0, c: r.random_range(0.5..2.0) });
        }
        if diag {
            let dx = if r.random_bool(0.5) { 1 } else { -1 };
            edges.push(Edge { u: h, v: h + 1, dx, dy: 0, c: r.random_range(0.5..2.0) });
        }
    }
    let massive = r.random_bool(0.5);
    let mass = (0..k).map(|_| if massive { r.random_range(0.0..1.5) } else { 0.0 }).collect();
    let names = (0..k).map(|i| format!("h{i}")).collect();
    PeriodicGraph::new(Kind::Strip, names, edges, mass).expect("planar strip is valid")
}
