//! Bundle Laplacians, characteristic polynomials and the forest-enumeration oracle.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{width, Kind, PeriodicGraph};
use crate::laurent::{interpolate_1d, interpolate_2d, LaurentPoly1, LaurentPoly2, Poly, DEFAULT_INTERP_TOL};
use crate::numerics::det;

/// Default edge-count limit for exhaustive enumeration.
pub const DEFAULT_GUARD: usize = 12;

/// `Δ(z,w)` (optionally plus `D_M`) at one point.
#[derive(Debug, Clone)]
pub struct BundleMatrix {
    pub entries: DMatrix<C64>,
    pub z: C64,
    pub w: C64,
    pub mass_included: bool,
}

impl BundleMatrix {
    pub fn det(&self) -> C64 {
        det(&self.entries)
    }
}

/// Parallel transport `z^dx w^dy` along an edge; strips ignore `w`.
pub fn phase(kind: Kind, z: C64, w: C64, dx: i32, dy: i32) -> C64 {
    match kind {
        Kind::Strip => z.powi(dx),
        Kind::Torus => z.powi(dx) * w.powi(dy),
    }
}

fn check_point(z: C64, w: C64) -> Result<()> {
    if z.norm() == 0.0 || w.norm() == 0.0 || !z.is_finite() || !w.is_finite() {
        return Err(Error::Domain(format!("bundle Laplacian at a zero or non-finite point ({z}, {w})")));
    }
    Ok(())
}

pub fn delta_matrix(g: &PeriodicGraph, z: C64, w: C64, with_mass: bool) -> Result<BundleMatrix> {
    check_point(z, w)?;
    let n = g.num_vertices();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for e in g.edges() {
        let phi = phase(g.kind(), z, w, e.dx, e.dy);
        if e.u == e.v {
            m[(e.u, e.u)] += e.c * (2.0 - phi - 1.0 / phi);
        } else {
            m[(e.u, e.u)] += e.c;
            m[(e.v, e.v)] += e.c;
            m[(e.u, e.v)] -= e.c * phi;
            m[(e.v, e.u)] -= e.c / phi;
        }
    }
    if with_mass {
        for (v, &mv) in g.mass().iter().enumerate() {
            m[(v, v)] += mv;
        }
    }
    Ok(BundleMatrix { entries: m, z, w, mass_included: with_mass })
}

/// Twisted coboundary `d(z,w)`: row e has −1 at its tail and `+φ_e` at its head.
pub fn incidence(g: &PeriodicGraph, z: C64, w: C64) -> Result<DMatrix<C64>> {
    check_point(z, w)?;
    let mut d = DMatrix::<C64>::zeros(g.num_edges(), g.num_vertices());
    for (i, e) in g.edges().iter().enumerate() {
        d[(i, e.u)] -= 1.0;
        d[(i, e.v)] += phase(g.kind(), z, w, e.dx, e.dy);
    }
    Ok(d)
}

/// `det(Δ(z,w) + D_M)`.
pub fn char_value(g: &PeriodicGraph, z: C64, w: C64) -> Result<C64> {
    Ok(delta_matrix(g, z, w, true)?.det())
}

/// Options for recovering the characteristic polynomial.
#[derive(Debug, Clone, Copy)]
pub struct CharPolyOptions {
    pub radius: f64,
    pub tol: f64,
}

impl Default for CharPolyOptions {
    fn default() -> Self {
        CharPolyOptions { radius: 1.0, tol: DEFAULT_INTERP_TOL }
    }
}

/// Hadamard bound `Π_i ‖row_i‖` on `|det(Δ + D_M)|` over the circle(s) of radius `r`.
fn det_bound(g: &PeriodicGraph, r: f64) -> f64 {
    let s = r.max(1.0 / r);
    let mut rows = vec![0.0f64; g.num_vertices()];
    for e in g.edges() {
        let k = s.powi(e.dx.abs() + e.dy.abs());
        rows[e.u] += 2.0 * e.c * k;
        rows[e.v] += 2.0 * e.c * k;
    }
    rows.iter().zip(g.mass()).map(|(r, m)| r + m).product()
}

/// Values indistinguishable from rounding noise mean `P ≡ 0` (no mass and
/// no cycle with a non-zero net offset).
fn vanishes<'a>(g: &PeriodicGraph, r: f64, values: impl IntoIterator<Item = &'a C64>) -> bool {
    let floor = 1e3 * f64::EPSILON * det_bound(g, r);
    values.into_iter().all(|v| v.norm() <= floor)
}

fn grid_size(span: usize) -> usize {
    (2 * span + 1).next_power_of_two()
}

/// `P(z) = det(Δ(z) + D_M)` for a strip graph, exponents in `[−m, m]` with `m` the width.
pub fn char_poly_strip(g: &PeriodicGraph, opts: CharPolyOptions) -> Result<LaurentPoly1> {
    if g.kind() != Kind::Strip {
        return Err(Error::Domain("char_poly_strip needs a strip graph".into()));
    }
    let m = width(g)? as i32;
    let n = grid_size(2 * m as usize);
    let one = C64::new(1.0, 0.0);
    let values: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let z = C64::from_polar(opts.radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
            char_value(g, z, one)
        })
        .collect::<Result<_>>()?;
    if vanishes(g, opts.radius, &values) {
        return Ok(LaurentPoly1::default());
    }
    interpolate_1d(&values, opts.radius, -m, m, opts.tol)
}

/// Conservative exponent bound `max(|dx|,|dy|)·|V|` used for torus graphs.
pub fn torus_exponent_bound(g: &PeriodicGraph) -> i32 {
    let (a, b) = g.max_offsets();
    a.max(b) * g.num_vertices() as i32
}

/// `P(z,w) = det(Δ(z,w) + D_M)` for a torus graph.
pub fn char_poly_torus(g: &PeriodicGraph, opts: CharPolyOptions) -> Result<LaurentPoly2> {
    if g.kind() != Kind::Torus {
        return Err(Error::Domain("char_poly_torus needs a torus graph".into()));
    }
    let b = torus_exponent_bound(g);
    let n = grid_size(2 * b as usize);
    let tau = 2.0 * std::f64::consts::PI / n as f64;
    let values: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let z = C64::from_polar(opts.radius, tau * a as f64);
            (0..n)
                .map(|c| char_value(g, z, C64::from_polar(opts.radius, tau * c as f64)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    if vanishes(g, opts.radius, values.iter().flatten()) {
        return Ok(LaurentPoly2::default());
    }
    interpolate_2d(&values, (opts.radius, opts.radius), ((-b, b), (-b, b)), opts.tol)
}

pub fn char_poly(g: &PeriodicGraph) -> Result<Poly> {
    match g.kind() {
        Kind::Strip => Ok(Poly::One(char_poly_strip(g, CharPolyOptions::default())?)),
        Kind::Torus => Ok(Poly::Two(char_poly_torus(g, CharPolyOptions::default())?)),
    }
}

/// One component of an enumerated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentInfo {
    pub vertices: Vec<usize>,
    /// Offset accumulated around the unique cycle, if the component has one.
    pub cycle: Option<(i32, i32)>,
}

/// An edge subset whose components are all trees or unicyclic.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub edges: Vec<usize>,
    pub components: Vec<ComponentInfo>,
}

#[derive(Clone, Copy)]
struct Node {
    parent: usize,
    off: (i32, i32), // position relative to parent
    size: usize,
    cycle: Option<(i32, i32)>,
}

struct Rollback {
    nodes: Vec<Node>,
    log: Vec<(usize, Node, usize, Node)>,
}

impl Rollback {
    fn find(&self, mut x: usize) -> (usize, (i32, i32)) {
        let mut off = (0, 0);
        while self.nodes[x].parent != x {
            off.0 += self.nodes[x].off.0;
            off.1 += self.nodes[x].off.1;
            x = self.nodes[x].parent;
        }
        (x, off)
    }

    /// Add edge u→v with offset o; false if a component would get two cycles.
    fn add(&mut self, u: usize, v: usize, o: (i32, i32)) -> bool {
        let (ru, pu) = self.find(u);
        let (rv, pv) = self.find(v);
        let gap = (pu.0 + o.0 - pv.0, pu.1 + o.1 - pv.1);
        if ru == rv {
            if self.nodes[ru].cycle.is_some() {
                return false;
            }
            self.log.push((ru, self.nodes[ru], ru, self.nodes[ru]));
            self.nodes[ru].cycle = Some(gap);
            return true;
        }
        if self.nodes[ru].cycle.is_some() && self.nodes[rv].cycle.is_some() {
            return false;
        }
        let (child, root, off) = if self.nodes[ru].size < self.nodes[rv].size {
            (ru, rv, (-gap.0, -gap.1))
        } else {
            (rv, ru, gap)
        };
        self.log.push((child, self.nodes[child], root, self.nodes[root]));
        let cyc = self.nodes[child].cycle.or(self.nodes[root].cycle);
        self.nodes[child].parent = root;
        self.nodes[child].off = off;
        self.nodes[root].size += self.nodes[child].size;
        self.nodes[root].cycle = cyc;
        true
    }

    fn undo(&mut self) {
        let (a, na, b, nb) = self.log.pop().expect("undo without add");
        self.nodes[b] = nb;
        self.nodes[a] = na;
    }
}

/// Visit every edge subset of `g` whose components are trees or unicyclic
/// (the candidate MTSFs / CRSFs), ignoring weights.  Errors if `g` has more
/// than `guard` edges.
pub fn enumerate_configurations<F: FnMut(&Configuration)>(g: &PeriodicGraph, guard: usize, mut visit: F) -> Result<()> {
    let ne = g.num_edges();
    if ne > guard {
        return Err(Error::SizeGuard { edges: ne, limit: guard });
    }
    let nv = g.num_vertices();
    let mut dsu = Rollback {
        nodes: (0..nv).map(|i| Node { parent: i, off: (0, 0), size: 1, cycle: None }).collect(),
        log: Vec::new(),
    };
    let mut chosen = Vec::new();
    fn rec<F: FnMut(&Configuration)>(
        g: &PeriodicGraph,
        i: usize,
        dsu: &mut Rollback,
        chosen: &mut Vec<usize>,
        visit: &mut F,
    ) {
        if i == g.num_edges() {
            let nv = g.num_vertices();
            let mut groups: Vec<Vec<usize>> = vec![vec![]; nv];
            for v in 0..nv {
                groups[dsu.find(v).0].push(v);
            }
            let components = groups
                .into_iter()
                .enumerate()
                .filter(|(_, vs)| !vs.is_empty())
                .map(|(r, vertices)| ComponentInfo { vertices, cycle: dsu.nodes[r].cycle })
                .collect();
            visit(&Configuration { edges: chosen.clone(), components });
            return;
        }
        rec(g, i + 1, dsu, chosen, visit);
        let e = g.edges()[i];
        if dsu.add(e.u, e.v, (e.dx, e.dy)) {
            chosen.push(i);
            rec(g, i + 1, dsu, chosen, visit);
            chosen.pop();
            dsu.undo();
        }
    }
    rec(g, 0, &mut dsu, &mut chosen, &mut visit);
    Ok(())
}

/// Weight of a configuration: `Π c_e · Π_trees (Σ_v M_v) · Π_cycles (2 − m − 1/m)`,
/// with `m = z^p w^q` the monodromy of the cycle.
pub fn configuration_weight(g: &PeriodicGraph, cfg: &Configuration, z: C64, w: C64) -> C64 {
    let mut wt = C64::new(1.0, 0.0);
    for &e in &cfg.edges {
        wt *= g.edges()[e].c;
    }
    for comp in &cfg.components {
        match comp.cycle {
            Some((p, q)) => {
                let m = phase(g.kind(), z, w, p, q);
                wt *= 2.0 - m - 1.0 / m;
            }
            None => wt *= comp.vertices.iter().map(|&v| g.mass()[v]).sum::<f64>(),
        }
    }
    wt
}

/// `Σ_γ wt(γ)` over all MTSFs of the finite graph `g` (a cover, with its
/// residual offsets) at monodromy `(z, w)`.  Equals `det(Δ(z,w) + D_M)`.
pub fn brute_force_partition(g: &PeriodicGraph, z: C64, w: C64, guard: usize) -> Result<C64> {
    check_point(z, w)?;
    let mut terms = Vec::new();
    enumerate_configurations(g, guard, |cfg| terms.push(configuration_weight(g, cfg, z, w)))?;
    Ok(crate::numerics::pairwise_sum_c(&terms))
}
