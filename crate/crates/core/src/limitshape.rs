//! Discrete limit shapes: minimise `Σ_T area(T)·σ(∇h|_T)` over piecewise-linear
//! height functions with fixed boundary values and gradients constrained to N.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::laurent::{newton_polygon, LaurentPoly2, NewtonPolygon};
use crate::sampling::rng_for;
use crate::spectral::surface_tension;

const CONVEXITY_TOL: f64 = 1e-6;
const EPS_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvexityViolation {
    /// Midpoint of the offending grid segment.
    pub s: f64,
    pub t: f64,
    pub direction: (i32, i32),
    /// `σ(mid) − (σ(a) + σ(b))/2`, positive.
    pub excess: f64,
}

#[derive(Debug, Clone, Copy)]
struct Plane {
    a: (f64, f64),
    b: f64,
}

/// σ sampled on a regular grid over the bounding box of N, `+∞` at nodes
/// outside N, interpolated linearly on a triangulation of the grid.  Each cell
/// is split along whichever diagonal keeps more finite triangles, so the
/// triangulated region follows the slanted edges of N.
#[derive(Debug, Clone)]
pub struct TensionTable {
    pub polygon: NewtonPolygon,
    pub resolution: usize,
    pub origin: (f64, f64),
    pub step: (f64, f64),
    /// Row-major `(resolution + 1)²` node values, `values[j * (resolution + 1) + i]`.
    pub values: Vec<f64>,
    pub violations: Vec<ConvexityViolation>,
    /// Node gradients `∇σ = (x, y)`; NaN on ∂N and outside.
    pub gradients: Vec<(f64, f64)>,
    /// Width of the log-sum-exp smoothing used by the solver.
    pub epsilon: f64,
    anti: Vec<bool>,
    planes: Vec<Plane>,
    half_planes: Vec<((f64, f64), f64)>,
}

pub fn build_tension_table(p: &LaurentPoly2, resolution: usize) -> Result<TensionTable> {
    if resolution < 4 {
        return Err(Error::Validation("resolution must be ≥ 4".into()));
    }
    let polygon = newton_polygon(p)?;
    if !polygon.has_interior() {
        return Err(Error::Domain("the Newton polygon has no interior".into()));
    }
    let ((smin, smax), (tmin, tmax)) = polygon.bounding_box();
    let m = resolution + 1;
    let origin = (smin as f64, tmin as f64);
    let step = ((smax - smin) as f64 / resolution as f64, (tmax - tmin) as f64 / resolution as f64);
    let node = |k: usize| (origin.0 + (k % m) as f64 * step.0, origin.1 + (k / m) as f64 * step.1);
    // on a centrally symmetric polygon the grid is symmetric too: evaluate one node per ±pair
    let symmetric = polygon.is_centrally_symmetric() && smin == -smax && tmin == -tmax;
    let reps: Vec<usize> = (0..m * m).filter(|&k| !symmetric || k <= m * m - 1 - k).collect();
    // (σ, ∇σ) per node; ∇σ is the amoeba point (x, y) and is infinite on ∂N
    let sampled: Vec<(usize, Result<(f64, f64, f64)>)> = reps
        .par_iter()
        .map(|&k| {
            let (s, t) = node(k);
            if polygon.slack(s, t) < -1e-12 {
                return (k, Ok((f64::INFINITY, f64::NAN, f64::NAN)));
            }
            (k, surface_tension(p, s, t).map(|a| (a.sigma, a.x, a.y)))
        })
        .collect();
    let mut values = vec![f64::NAN; m * m];
    let mut grads = vec![(f64::NAN, f64::NAN); m * m];
    let mut failed = Vec::new();
    for (k, r) in sampled {
        match r {
            Ok((v, x, y)) => {
                values[k] = v;
                grads[k] = (x, y);
                if symmetric {
                    values[m * m - 1 - k] = v;
                    grads[m * m - 1 - k] = (-x, -y);
                }
            }
            Err(e) => failed.push(format!("({}, {}): {e}", node(k).0, node(k).1)),
        }
    }
    if !failed.is_empty() {
        return Err(Error::NonConvergence(format!("surface tension failed at {}", failed.join("; "))));
    }

    let at = |i: usize, j: usize| values[j * m + i];
    let mut anti = vec![false; resolution * resolution];
    for j in 0..resolution {
        for i in 0..resolution {
            let (f00, f10, f01, f11) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
            let fin = |xs: [f64; 3]| xs.iter().all(|v| v.is_finite()) as usize;
            let main = fin([f00, f10, f11]) + fin([f00, f11, f01]);
            let other = fin([f00, f10, f01]) + fin([f11, f01, f10]);
            anti[j * resolution + i] = other > main;
        }
    }

    // tangent planes at interior nodes: a convex minorant of σ, exact at the nodes
    let mut planes = Vec::new();
    for k in 0..m * m {
        let (x, y) = grads[k];
        if values[k].is_finite() && x.is_finite() && y.is_finite() {
            let (s, t) = node(k);
            planes.push(Plane { a: (x, y), b: values[k] - x * s - y * t });
        }
    }
    if planes.is_empty() {
        return Err(Error::Domain("no interior grid node; raise the resolution".into()));
    }

    let mut violations = Vec::new();
    let mut gaps = Vec::new();
    for j in 0..m {
        for i in 0..m {
            for d in [(1i32, 0i32), (0, 1), (1, 1), (1, -1)] {
                let (ia, ja) = (i as i32 - d.0, j as i32 - d.1);
                let (ic, jc) = (i as i32 + d.0, j as i32 + d.1);
                if ia < 0 || ja < 0 || ic < 0 || jc < 0 || ia >= m as i32 || ja >= m as i32 || ic >= m as i32 || jc >= m as i32 {
                    continue;
                }
                let (a, b, c) = (at(ia as usize, ja as usize), at(i, j), at(ic as usize, jc as usize));
                if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                    continue;
                }
                let excess = b - 0.5 * (a + c);
                if excess > CONVEXITY_TOL {
                    let (s, t) = node(j * m + i);
                    violations.push(ConvexityViolation { s, t, direction: d, excess });
                }
                // how far the tangent plane at the midpoint drops below its neighbour
                let (gx, gy) = grads[j * m + i];
                if gx.is_finite() && gy.is_finite() {
                    let (s, t) = node(j * m + i);
                    let (sa, ta) = node(ja as usize * m + ia as usize);
                    gaps.push(a - (b + gx * (sa - s) + gy * (ta - t)));
                }
            }
        }
    }
    // smooth at a fraction of the typical gap between neighbouring tangent planes
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let epsilon = (EPS_FRACTION * gaps.get(gaps.len() / 2).copied().unwrap_or(0.0)).max(1e-9);

    let half_planes = polygon
        .half_planes()
        .into_iter()
        .map(|((nx, ny), b)| {
            let l = nx.hypot(ny);
            ((nx / l, ny / l), b / l)
        })
        .collect();
    Ok(TensionTable { polygon, resolution, origin, step, values, violations, gradients: grads, epsilon, anti, planes, half_planes })
}

impl TensionTable {
    pub fn node(&self, i: usize, j: usize) -> (f64, f64, f64) {
        let m = self.resolution + 1;
        (self.origin.0 + i as f64 * self.step.0, self.origin.1 + j as f64 * self.step.1, self.values[j * m + i])
    }

    /// Piecewise-linear interpolant; `+∞` outside the triangulated region.
    pub fn value(&self, s: f64, t: f64) -> f64 {
        let r = self.resolution;
        let u = (s - self.origin.0) / self.step.0;
        let v = (t - self.origin.1) / self.step.1;
        let eps = 1e-12;
        if u < -eps || v < -eps || u > r as f64 + eps || v > r as f64 + eps {
            return f64::INFINITY;
        }
        // a point on a cell boundary may be covered only by a neighbouring cell
        let cells = |x: f64| -> Vec<usize> {
            let k = (x.floor().max(0.0) as usize).min(r - 1);
            let mut c = vec![k];
            if (x - x.round()).abs() < 1e-9 {
                let m = x.round() as usize;
                for cand in [m.wrapping_sub(1), m] {
                    if cand < r && !c.contains(&cand) {
                        c.push(cand);
                    }
                }
            }
            c
        };
        let mut best = f64::INFINITY;
        for i in cells(u) {
            for j in cells(v) {
                let val = self.cell_value(i, j, u - i as f64, v - j as f64);
                if val.is_finite() {
                    best = if best.is_finite() { best.min(val) } else { val };
                }
            }
        }
        best
    }

    fn cell_value(&self, i: usize, j: usize, u: f64, v: f64) -> f64 {
        let (r, m) = (self.resolution, self.resolution + 1);
        let f = |di: usize, dj: usize| self.values[(j + dj) * m + i + di];
        let (f00, f10, f01, f11) = (f(0, 0), f(1, 0), f(0, 1), f(1, 1));
        // the two triangles of the cell, each with a containment test; points on
        // the shared diagonal (up to rounding) may use either
        let tol = 1e-9;
        let cands: [(bool, f64, [f64; 3]); 2] = if self.anti[j * r + i] {
            [
                (u + v <= 1.0 + tol, f00 + u * (f10 - f00) + v * (f01 - f00), [f00, f10, f01]),
                (u + v >= 1.0 - tol, f11 + (1.0 - u) * (f01 - f11) + (1.0 - v) * (f10 - f11), [f11, f01, f10]),
            ]
        } else {
            [
                (u >= v - tol, f00 + u * (f10 - f00) + v * (f11 - f10), [f00, f10, f11]),
                (u <= v + tol, f00 + v * (f01 - f00) + u * (f11 - f01), [f00, f11, f01]),
            ]
        };
        cands
            .iter()
            .filter(|c| c.0 && c.2.iter().all(|x| x.is_finite()))
            .map(|c| c.1)
            .next()
            .unwrap_or(f64::INFINITY)
    }

    pub fn contains(&self, s: f64, t: f64) -> bool {
        self.half_planes.iter().all(|&((nx, ny), b)| nx * s + ny * t <= b + 1e-12)
    }

    /// Smoothed `ε·log Σ exp(plane/ε)` with gradient and Hessian.
    fn smooth(&self, g: (f64, f64)) -> (f64, (f64, f64), [f64; 3]) {
        let eps = self.epsilon;
        let vals: Vec<f64> = self.planes.iter().map(|p| p.a.0 * g.0 + p.a.1 * g.1 + p.b).collect();
        let mx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut gx, mut gy, mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (p, &v) in self.planes.iter().zip(&vals) {
            let d = (v - mx) / eps;
            if d < -40.0 {
                continue;
            }
            let w = d.exp();
            z += w;
            gx += w * p.a.0;
            gy += w * p.a.1;
            hxx += w * p.a.0 * p.a.0;
            hxy += w * p.a.0 * p.a.1;
            hyy += w * p.a.1 * p.a.1;
        }
        let (gx, gy) = (gx / z, gy / z);
        let h = [(hxx / z - gx * gx) / eps, (hxy / z - gx * gy) / eps, (hyy / z - gy * gy) / eps];
        (mx + eps * z.ln(), (gx, gy), h)
    }

    /// The function the solver actually minimises: `ε·log Σ_k exp(T_k/ε)` over
    /// the tangent planes `T_k` of σ at the interior nodes — smooth, strictly
    /// convex, and within `ε·log(#planes)` above their maximum.
    pub fn smoothed(&self, s: f64, t: f64) -> f64 {
        if !self.contains(s, t) {
            return f64::INFINITY;
        }
        self.smooth((s, t)).0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshDoc {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Vertices with prescribed heights; defaults to the mesh boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Vec<usize>>,
}

/// A triangulated planar domain with heights at the vertices; fixed vertices
/// carry the boundary data.
#[derive(Debug, Clone, Serialize)]
pub struct HeightField {
    pub vertices: Vec<(f64, f64)>,
    pub triangles: Vec<[usize; 3]>,
    pub heights: Vec<f64>,
    pub fixed: Vec<bool>,
}

impl HeightField {
    /// Triangles are reoriented counter-clockwise; degenerate ones are rejected.
    pub fn new(vertices: Vec<(f64, f64)>, triangles: Vec<[usize; 3]>, heights: Vec<f64>, fixed: Vec<bool>) -> Result<Self> {
        let n = vertices.len();
        if heights.len() != n || fixed.len() != n {
            return Err(Error::Validation("heights and fixed flags must match the vertex count".into()));
        }
        if triangles.is_empty() {
            return Err(Error::Validation("mesh has no triangles".into()));
        }
        let mut tris = triangles;
        for t in &mut tris {
            if t.iter().any(|&v| v >= n) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::Validation(format!("bad triangle {t:?}")));
            }
            let a = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if a.abs() < 1e-14 {
                return Err(Error::Validation(format!("degenerate triangle {t:?}")));
            }
            if a < 0.0 {
                t.swap(1, 2);
            }
        }
        if vertices.iter().any(|v| !v.0.is_finite() || !v.1.is_finite()) {
            return Err(Error::Validation("non-finite vertex coordinate".into()));
        }
        Ok(HeightField { vertices, triangles: tris, heights, fixed })
    }

    pub fn from_doc(doc: &MeshDoc) -> Result<Self> {
        let vertices: Vec<(f64, f64)> = doc.vertices.iter().map(|v| (v[0], v[1])).collect();
        let n = vertices.len();
        let mut f = HeightField::new(vertices, doc.triangles.clone(), vec![f64::NAN; n], vec![false; n])?;
        match &doc.fixed {
            Some(list) => {
                for &v in list {
                    if v >= n {
                        return Err(Error::Validation(format!("fixed vertex {v} out of range")));
                    }
                    f.fixed[v] = true;
                }
            }
            None => {
                for v in f.boundary_vertices() {
                    f.fixed[v] = true;
                }
            }
        }
        Ok(f)
    }

    pub fn to_doc(&self) -> MeshDoc {
        MeshDoc {
            vertices: self.vertices.iter().map(|v| [v.0, v.1]).collect(),
            triangles: self.triangles.clone(),
            fixed: Some((0..self.vertices.len()).filter(|&v| self.fixed[v]).collect()),
        }
    }

    /// Structured right-triangle mesh of `[x0, x1] × [y0, y1]` with `nx × ny`
    /// cells, each cut along its (1,1) diagonal; boundary vertices fixed at 0.
    pub fn rectangle(nx: usize, ny: usize, lo: (f64, f64), hi: (f64, f64)) -> Result<Self> {
        if nx == 0 || ny == 0 || !(hi.0 > lo.0 && hi.1 > lo.1) {
            return Err(Error::Validation("rectangle needs positive cell counts and extent".into()));
        }
        let idx = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::new();
        let mut fixed = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push((lo.0 + (hi.0 - lo.0) * i as f64 / nx as f64, lo.1 + (hi.1 - lo.1) * j as f64 / ny as f64));
                fixed.push(i == 0 || j == 0 || i == nx || j == ny);
            }
        }
        let mut triangles = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        let heights = fixed.iter().map(|&f| if f { 0.0 } else { f64::NAN }).collect();
        HeightField::new(vertices, triangles, heights, fixed)
    }

    /// Vertices on edges that belong to exactly one triangle, ascending.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut out: Vec<usize> = count.into_iter().filter(|&(_, c)| c == 1).flat_map(|((a, b), _)| [a, b]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Assign `f(x, y)` to every fixed vertex.
    pub fn set_boundary<F: Fn(f64, f64) -> f64>(&mut self, f: F) {
        for v in 0..self.vertices.len() {
            if self.fixed[v] {
                self.heights[v] = f(self.vertices[v].0, self.vertices[v].1);
            }
        }
    }

    /// Assign `f(x, y)` to every vertex.
    pub fn set_all<F: Fn(f64, f64) -> f64>(&mut self, f: F) {
        for v in 0..self.vertices.len() {
            self.heights[v] = f(self.vertices[v].0, self.vertices[v].1);
        }
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| self.tri_area(t)).sum()
    }

    fn tri_area(&self, t: &[usize; 3]) -> f64 {
        signed_area(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]])
    }

    /// Gradients of the three hat functions on a triangle.
    fn hats(&self, t: &[usize; 3]) -> [(f64, f64); 3] {
        let p: Vec<(f64, f64)> = t.iter().map(|&v| self.vertices[v]).collect();
        let a2 = 2.0 * signed_area(p[0], p[1], p[2]);
        let mut out = [(0.0, 0.0); 3];
        for k in 0..3 {
            let (b, c) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            out[k] = ((b.1 - c.1) / a2, (c.0 - b.0) / a2);
        }
        out
    }

    pub fn gradients(&self) -> Vec<(f64, f64)> {
        self.triangles
            .iter()
            .map(|t| {
                let c = self.hats(t);
                (0..3).fold((0.0, 0.0), |g, k| (g.0 + self.heights[t[k]] * c[k].0, g.1 + self.heights[t[k]] * c[k].1))
            })
            .collect()
    }

    /// `Σ_T area(T)·σ(∇h|_T)` with the piecewise-linear table.
    pub fn energy(&self, table: &TensionTable) -> f64 {
        self.gradients().iter().zip(&self.triangles).map(|(g, t)| self.tri_area(t) * table.value(g.0, g.1)).sum()
    }

    /// The smoothed energy minimised by [`minimize_height`].
    pub fn smoothed_energy(&self, table: &TensionTable) -> f64 {
        self.gradients().iter().zip(&self.triangles).map(|(g, t)| self.tri_area(t) * table.smoothed(g.0, g.1)).sum()
    }

    /// Largest violation of `∇h|_T ∈ N` over all triangles.
    pub fn max_violation(&self, polygon: &NewtonPolygon) -> f64 {
        self.gradients().iter().map(|g| -polygon.slack(g.0, g.1)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Free heights shifted by independent uniform noise in `[−amp, amp]`.
    pub fn perturbed(&self, seed: u64, amp: f64) -> HeightField {
        let mut rng = rng_for(seed, 0x11);
        let mut out = self.clone();
        for v in 0..out.heights.len() {
            if !out.fixed[v] {
                out.heights[v] += rng.random_range(-amp..=amp);
            }
        }
        out
    }
}

fn signed_area(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1))
}

#[derive(PartialEq)]
struct Entry(f64, usize);
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal).then(o.1.cmp(&self.1))
    }
}

/// Shortest mesh-path lengths from `src`, edge `a → b` costing
/// `max_{q ∈ N} q·(x_b − x_a)` (or `x_a − x_b` when `reverse`).
fn support_distances(field: &HeightField, adj: &[Vec<usize>], polygon: &NewtonPolygon, src: usize, reverse: bool) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; field.vertices.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry(0.0, src));
    while let Some(Entry(d, a)) = heap.pop() {
        if d > dist[a] {
            continue;
        }
        for &b in &adj[a] {
            let (pa, pb) = (field.vertices[a], field.vertices[b]);
            let dir = if reverse { (pa.0 - pb.0, pa.1 - pb.1) } else { (pb.0 - pa.0, pb.1 - pa.1) };
            let nd = d + polygon.support_value(dir);
            if nd < dist[b] {
                dist[b] = nd;
                heap.push(Entry(nd, b));
            }
        }
    }
    dist
}

fn adjacency(field: &HeightField) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); field.vertices.len()];
    for t in &field.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Cyclic projection of the free heights onto the constraints `n·∇h_T ≤ b`.
fn repair(field: &mut HeightField, half_planes: &[((f64, f64), f64)], max_sweeps: usize) -> Result<()> {
    let scale = field.heights.iter().fold(1.0f64, |m, h| m.max(h.abs()));
    let margin = 1e-12 * scale;
    let hats: Vec<[(f64, f64); 3]> = field.triangles.iter().map(|t| field.hats(t)).collect();
    for _ in 0..max_sweeps {
        let mut worst = 0.0f64;
        for (ti, t) in field.triangles.iter().enumerate() {
            for &((nx, ny), b) in half_planes {
                let coef: Vec<f64> = hats[ti].iter().map(|c| nx * c.0 + ny * c.1).collect();
                let val: f64 = (0..3).map(|k| coef[k] * field.heights[t[k]]).sum();
                let viol = val - b;
                if viol <= 0.0 {
                    continue;
                }
                worst = worst.max(viol);
                let norm2: f64 = (0..3).filter(|&k| !field.fixed[t[k]]).map(|k| coef[k] * coef[k]).sum();
                if norm2 < 1e-300 {
                    if viol > 1e-9 * scale {
                        return Err(Error::Infeasible(format!(
                            "triangle of fixed vertices ({}, {}, {}) has a slope outside N",
                            t[0], t[1], t[2]
                        )));
                    }
                    continue;
                }
                let step = (viol + margin) / norm2;
                for k in 0..3 {
                    if !field.fixed[t[k]] {
                        field.heights[t[k]] -= step * coef[k];
                    }
                }
            }
        }
        if worst <= 1e-11 * scale {
            return Ok(());
        }
    }
    Err(Error::Infeasible("could not find heights with all triangle slopes in N".into()))
}

/// A feasible starting point: the boundary data is checked against the
/// Lipschitz condition `h(p) − h(q) ≤ d_N(q → p)` along mesh paths, extended
/// to the interior by the mean of the upper and lower McShane extensions,
/// and projected onto the per-triangle slope constraints.
pub fn feasible_extension(field: &HeightField, polygon: &NewtonPolygon) -> Result<HeightField> {
    let n = field.vertices.len();
    let fixed: Vec<usize> = (0..n).filter(|&v| field.fixed[v]).collect();
    if fixed.is_empty() {
        return Err(Error::Validation("no fixed vertices".into()));
    }
    if let Some(&v) = fixed.iter().find(|&&v| !field.heights[v].is_finite()) {
        return Err(Error::Validation(format!("fixed vertex {v} has no height")));
    }
    let adj = adjacency(field);
    let forward: Vec<Vec<f64>> = fixed.par_iter().map(|&q| support_distances(field, &adj, polygon, q, false)).collect();
    let backward: Vec<Vec<f64>> = fixed.par_iter().map(|&q| support_distances(field, &adj, polygon, q, true)).collect();
    let scale = fixed.iter().fold(1.0f64, |m, &v| m.max(field.heights[v].abs()));
    for (qi, &q) in fixed.iter().enumerate() {
        for &p in &fixed {
            let rise = field.heights[p] - field.heights[q];
            let bound = forward[qi][p];
            if rise > bound + 1e-9 * scale {
                return Err(Error::Infeasible(format!(
                    "boundary heights at vertices {q} → {p} rise by {rise} but slopes in N allow at most {bound}"
                )));
            }
        }
    }
    let mut out = field.clone();
    for v in 0..n {
        if out.fixed[v] {
            continue;
        }
        let upper = fixed.iter().enumerate().map(|(qi, &q)| field.heights[q] + forward[qi][v]).fold(f64::INFINITY, f64::min);
        let lower = fixed.iter().enumerate().map(|(qi, &q)| field.heights[q] - backward[qi][v]).fold(f64::NEG_INFINITY, f64::max);
        if !upper.is_finite() || !lower.is_finite() {
            return Err(Error::Validation(format!("vertex {v} is not connected to the boundary")));
        }
        out.heights[v] = 0.5 * (upper + lower);
    }
    let hp = normalized_half_planes(polygon);
    repair(&mut out, &hp, 20_000)?;
    Ok(out)
}

fn normalized_half_planes(polygon: &NewtonPolygon) -> Vec<((f64, f64), f64)> {
    polygon
        .half_planes()
        .into_iter()
        .map(|((nx, ny), b)| {
            let l = nx.hypot(ny);
            ((nx / l, ny / l), b / l)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub max_sweeps: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { max_sweeps: 200_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitShape {
    pub height: HeightField,
    /// Smoothed energy after each sweep (index 0: the feasible start).
    pub history: Vec<f64>,
    pub energy: f64,
    /// Energy with the piecewise-linear table.
    pub energy_pl: f64,
    /// Largest projected partial derivative, divided by the vertex star area.
    pub residual: f64,
    pub sweeps: usize,
}

pub fn minimize_height(initial: &HeightField, table: &TensionTable, tol: f64) -> Result<LimitShape> {
    minimize_height_with(initial, table, tol, MinimizeOptions::default())
}

struct Star {
    /// (triangle, local index of the vertex)
    tris: Vec<(usize, usize)>,
    area: f64,
}

/// Projected coordinate descent.  Each sweep visits the free vertices in index
/// order and minimises the smoothed energy exactly (safeguarded Newton) over
/// the interval keeping every incident slope in N, so the energy never
/// increases.  Free heights that are not finite are initialised by
/// [`feasible_extension`]; otherwise the given heights are projected onto the
/// feasible set first.
pub fn minimize_height_with(initial: &HeightField, table: &TensionTable, tol: f64, opts: MinimizeOptions) -> Result<LimitShape> {
    if !(tol > 0.0) {
        return Err(Error::Validation("tol must be positive".into()));
    }
    let polygon = &table.polygon;
    let n = initial.vertices.len();
    let mut field = if (0..n).any(|v| !initial.fixed[v] && !initial.heights[v].is_finite()) {
        feasible_extension(initial, polygon)?
    } else {
        // run the boundary check, then keep the caller's interior
        feasible_extension(initial, polygon)?;
        let mut f = initial.clone();
        repair(&mut f, &table.half_planes, 20_000)?;
        f
    };

    let hats: Vec<[(f64, f64); 3]> = field.triangles.iter().map(|t| field.hats(t)).collect();
    let areas: Vec<f64> = field.triangles.iter().map(|t| field.tri_area(t)).collect();
    let mut stars: Vec<Star> = (0..n).map(|_| Star { tris: vec![], area: 0.0 }).collect();
    for (ti, t) in field.triangles.iter().enumerate() {
        for k in 0..3 {
            stars[t[k]].tris.push((ti, k));
            stars[t[k]].area += areas[ti];
        }
    }
    let free: Vec<usize> = (0..n).filter(|&v| !field.fixed[v]).collect();

    let grad_of = |h: &[f64], ti: usize, t: &[usize; 3]| -> (f64, f64) {
        (0..3).fold((0.0, 0.0), |g, k| (g.0 + h[t[k]] * hats[ti][k].0, g.1 + h[t[k]] * hats[ti][k].1))
    };
    let energy = |h: &[f64]| -> f64 {
        field.triangles.iter().enumerate().map(|(ti, t)| areas[ti] * table.smooth(grad_of(h, ti, t)).0).sum()
    };
    // local energy, derivative and second derivative in h_v
    let local = |v: usize, x: f64, base: &[(f64, f64)]| -> (f64, f64, f64) {
        let (mut e, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (slot, &(ti, k)) in stars[v].tris.iter().enumerate() {
            let c = hats[ti][k];
            let g = (base[slot].0 + x * c.0, base[slot].1 + x * c.1);
            let (f, gr, hs) = table.smooth(g);
            e += areas[ti] * f;
            d1 += areas[ti] * (gr.0 * c.0 + gr.1 * c.1);
            d2 += areas[ti] * (hs[0] * c.0 * c.0 + 2.0 * hs[1] * c.0 * c.1 + hs[2] * c.1 * c.1);
        }
        (e, d1, d2)
    };
    let bases = |h: &[f64], v: usize| -> Vec<(f64, f64)> {
        stars[v]
            .tris
            .iter()
            .map(|&(ti, k)| {
                let g = grad_of(h, ti, &field.triangles[ti]);
                (g.0 - h[v] * hats[ti][k].0, g.1 - h[v] * hats[ti][k].1)
            })
            .collect()
    };
    let interval = |v: usize, base: &[(f64, f64)]| -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (slot, &(ti, k)) in stars[v].tris.iter().enumerate() {
            let c = hats[ti][k];
            for &((nx, ny), b) in &table.half_planes {
                let a = nx * c.0 + ny * c.1;
                let r = b - (nx * base[slot].0 + ny * base[slot].1);
                if a > 1e-300 {
                    hi = hi.min(r / a);
                } else if a < -1e-300 {
                    lo = lo.max(r / a);
                }
            }
        }
        (lo, hi)
    };
    let residual = |h: &[f64]| -> f64 {
        free.iter()
            .map(|&v| {
                let base = bases(h, v);
                let (lo, hi) = interval(v, &base);
                let (_, d1, _) = local(v, h[v], &base);
                let w = 1e-12 * (1.0 + h[v].abs());
                let proj = if (h[v] <= lo + w && d1 > 0.0) || (h[v] >= hi - w && d1 < 0.0) { 0.0 } else { d1 };
                proj.abs() / stars[v].area
            })
            .fold(0.0, f64::max)
    };

    let mut h = field.heights.clone();
    let mut history = vec![energy(&h)];
    let mut res = residual(&h);
    let mut sweeps = 0;
    while res >= tol {
        if sweeps >= opts.max_sweeps {
            return Err(Error::NonConvergence(format!("residual {res:.3e} after {sweeps} sweeps")));
        }
        for &v in &free {
            let base = bases(&h, v);
            let (lo, hi) = interval(v, &base);
            if lo >= hi {
                // pinned by constraints (the interval can be empty by rounding)
                continue;
            }
            let x0 = h[v].clamp(lo, hi);
            let (e0, g0, _) = local(v, h[v], &base);
            let (mut a, mut b) = (lo, hi);
            let mut x = x0;
            for _ in 0..100 {
                let (_, d1, d2) = local(v, x, &base);
                if d1 > 0.0 {
                    b = x;
                } else if d1 < 0.0 {
                    a = x;
                } else {
                    break;
                }
                let newton = x - d1 / d2;
                let next = if d2 > 0.0 && newton > a && newton < b && newton.is_finite() {
                    newton
                } else if a.is_finite() && b.is_finite() {
                    0.5 * (a + b)
                } else {
                    break;
                };
                let done = (next - x).abs() <= 1e-15 * (1.0 + x.abs());
                x = next;
                if done || b - a <= 1e-15 * (1.0 + x.abs()) {
                    break;
                }
            }
            let (e1, g1, _) = local(v, x, &base);
            // near the optimum the energy gain drops below rounding; the slope still certifies progress
            if e1 <= e0 || g1.abs() < g0.abs() {
                h[v] = x;
            }
        }
        sweeps += 1;
        history.push(energy(&h));
        res = residual(&h);
    }
    field.heights = h;
    let energy = *history.last().unwrap();
    let energy_pl = field.energy(table);
    Ok(LimitShape { height: field, history, energy, energy_pl, residual: res, sweeps })
}

#[derive(Debug, Clone, Serialize)]
pub struct Leaf {
    pub level: f64,
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum Key {
    Vertex(usize),
    Edge(usize, usize),
}

/// Level curves `h = k·spacing` strictly between min h and max h, traced by
/// linear interpolation on triangle edges.  A vertex exactly at a level counts
/// as above it, so levels running along mesh edges come out once.
pub fn extract_leaves(field: &HeightField, spacing: f64) -> Result<Vec<Leaf>> {
    if !(spacing > 0.0) {
        return Err(Error::Validation("spacing must be positive".into()));
    }
    let h = &field.heights;
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("height field has missing values".into()));
    }
    let (lo, hi) = h.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mut leaves = Vec::new();
    let kmin = (lo / spacing).floor() as i64 + 1;
    let kmax = (hi / spacing).ceil() as i64 - 1;
    for k in kmin..=kmax {
        let c = k as f64 * spacing;
        if c <= lo || c >= hi {
            continue;
        }
        let point = |key: Key| -> (f64, f64) {
            match key {
                Key::Vertex(v) => field.vertices[v],
                Key::Edge(a, b) => {
                    let s = (c - h[a]) / (h[b] - h[a]);
                    let (pa, pb) = (field.vertices[a], field.vertices[b]);
                    (pa.0 + s * (pb.0 - pa.0), pa.1 + s * (pb.1 - pa.1))
                }
            }
        };
        let mut segs: Vec<(Key, Key)> = Vec::new();
        for t in &field.triangles {
            let mut keys = Vec::with_capacity(2);
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let (above_a, above_b) = (h[a] >= c, h[b] >= c);
                if above_a == above_b {
                    continue;
                }
                let key = if h[a] == c {
                    Key::Vertex(a)
                } else if h[b] == c {
                    Key::Vertex(b)
                } else {
                    Key::Edge(a.min(b), a.max(b))
                };
                keys.push(key);
            }
            if keys.len() == 2 && keys[0] != keys[1] {
                segs.push((keys[0], keys[1]));
            }
        }
        segs.sort();
        segs.dedup_by(|x, y| (x.0 == y.0 && x.1 == y.1) || (x.0 == y.1 && x.1 == y.0));
        for chain in chain_segments(&segs) {
            let closed = chain.len() > 2 && chain.first() == chain.last();
            leaves.push(Leaf { level: c, points: chain.into_iter().map(point).collect(), closed });
        }
    }
    Ok(leaves)
}

fn chain_segments(segs: &[(Key, Key)]) -> Vec<Vec<Key>> {
    let mut adj: HashMap<Key, Vec<usize>> = HashMap::new();
    for (i, s) in segs.iter().enumerate() {
        adj.entry(s.0).or_default().push(i);
        adj.entry(s.1).or_default().push(i);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let walk = |start: Key, used: &mut Vec<bool>| -> Vec<Key> {
        let mut chain = vec![start];
        let mut cur = start;
        while let Some(&i) = adj[&cur].iter().find(|&&i| !used[i]) {
            used[i] = true;
            cur = if segs[i].0 == cur { segs[i].1 } else { segs[i].0 };
            chain.push(cur);
        }
        chain
    };
    // open chains start at endpoints of odd degree
    let mut keys: Vec<Key> = adj.keys().copied().collect();
    keys.sort();
    for &k in &keys {
        if adj[&k].len() % 2 == 1 && adj[&k].iter().any(|&i| !used[i]) {
            out.push(walk(k, &mut used));
        }
    }
    for &k in &keys {
        if adj[&k].iter().any(|&i| !used[i]) {
            out.push(walk(k, &mut used));
        }
    }
    out
}

/// Deterministic SVG of the mesh outline and the leaves.
pub fn leaves_svg(field: &HeightField, leaves: &[Leaf]) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in &field.vertices {
        x0 = x0.min(v.0);
        y0 = y0.min(v.1);
        x1 = x1.max(v.0);
        y1 = y1.max(v.1);
    }
    let size = 480.0;
    let pad = 10.0;
    let scale = (size - 2.0 * pad) / (x1 - x0).max(y1 - y0).max(1e-12);
    // y grows upwards in the domain, downwards on the canvas
    let map = |p: (f64, f64)| (pad + (p.0 - x0) * scale, size - pad - (p.1 - y0) * scale);
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n");
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &field.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut outline: Vec<(usize, usize)> = edges.into_iter().filter(|&(_, c)| c == 1).map(|(e, _)| e).collect();
    outline.sort_unstable();
    for (a, b) in outline {
        let (p, q) = (map(field.vertices[a]), map(field.vertices[b]));
        s += &format!("<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#888\" stroke-width=\"1\"/>\n", p.0, p.1, q.0, q.1);
    }
    for leaf in leaves {
        let pts: Vec<String> = leaf.points.iter().map(|&p| map(p)).map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        let tag = if leaf.closed { "polygon" } else { "polyline" };
        s += &format!("<{tag} points=\"{}\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.2\"/>\n", pts.join(" "));
    }
    s += "</svg>\n";
    s
}
