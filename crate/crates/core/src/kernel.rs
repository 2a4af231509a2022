//! Transfer currents and contour-integral determinantal kernels.
//!
//! Edges of the fundamental domain keep the canonical file order; a shifted
//! edge is addressed by `(edge index, integer shift)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::graph::{Kind, PeriodicGraph};
use crate::laplacian::{char_poly_strip, char_poly_torus, delta_matrix, incidence, phase, CharPolyOptions};
use crate::laurent::LaurentPoly2;
use crate::numerics::{det, integrate_adaptive, inverse, pairwise_sum_c, poly_roots};
use crate::spectral::{strip_roots, surface_tension, SpectralReport};

/// Tolerated imaginary part of quantities that must be real.
pub const IMAG_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub entries: DMatrix<C64>,
    pub provenance: String,
}

impl KernelMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// `max |(K² − K)_{ij}|`.
    pub fn projection_defect(&self) -> f64 {
        let k2 = &self.entries * &self.entries;
        (k2 - &self.entries).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `C·d(z,w)·(Δ(z,w)+D_M)^{-1}·d(1/z,1/w)^T`.
pub fn transfer_current(g: &PeriodicGraph, z: C64, w: C64) -> Result<KernelMatrix> {
    let delta = delta_matrix(g, z, w, true)?;
    // a determinant at rounding level relative to the Hadamard bound is a zero
    // (e.g. P ≡ 0), not a badly conditioned but usable point
    let hadamard: f64 = delta.entries.row_iter().map(|r| r.iter().map(|c| c.norm()).sum::<f64>()).product();
    if det(&delta.entries).norm() <= 1e3 * f64::EPSILON * hadamard {
        return Err(Error::Singular(format!("Δ + D_M is singular at (z, w) = ({z}, {w})")));
    }
    let inv = inverse(&delta.entries).ok_or_else(|| {
        Error::Singular(format!("Δ + D_M is singular at (z, w) = ({z}, {w})"))
    })?;
    if inv.iter().any(|c| !c.is_finite()) {
        return Err(Error::Singular(format!("Δ + D_M is singular at (z, w) = ({z}, {w})")));
    }
    let d = incidence(g, z, w)?;
    let dt = incidence(g, 1.0 / z, 1.0 / w)?;
    let c = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        g.num_edges(),
        g.edges().iter().map(|e| C64::new(e.c, 0.0)),
    ));
    let k = c * d * inv * dt.transpose();
    Ok(KernelMatrix { entries: k, provenance: format!("transfer current at z = {z}, w = {w}") })
}

/// Spanning-tree transfer current of the graph read as a finite graph
/// (offsets ignored), grounded at `root`.  The result does not depend on
/// the root.
pub fn transfer_current_grounded(g: &PeriodicGraph, root: usize) -> Result<KernelMatrix> {
    let n = g.num_vertices();
    if root >= n {
        return Err(Error::OutOfRange(format!("root {root} ≥ {n} vertices")));
    }
    let keep: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    let pos = |v: usize| keep.iter().position(|&k| k == v);
    let mut lap = DMatrix::<C64>::zeros(n - 1, n - 1);
    let mut d = DMatrix::<C64>::zeros(g.num_edges(), n - 1);
    for (i, e) in g.edges().iter().enumerate() {
        if e.u == e.v {
            continue;
        }
        if let Some(a) = pos(e.u) {
            lap[(a, a)] += e.c;
            d[(i, a)] -= 1.0;
        }
        if let Some(b) = pos(e.v) {
            lap[(b, b)] += e.c;
            d[(i, b)] += 1.0;
        }
        if let (Some(a), Some(b)) = (pos(e.u), pos(e.v)) {
            lap[(a, b)] -= e.c;
            lap[(b, a)] -= e.c;
        }
    }
    let inv = inverse(&lap).ok_or_else(|| Error::Singular("grounded Laplacian is singular (disconnected?)".into()))?;
    let c = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        g.num_edges(),
        g.edges().iter().map(|e| C64::new(e.c, 0.0)),
    ));
    let k = c * &d * inv * d.transpose();
    Ok(KernelMatrix { entries: k, provenance: format!("spanning-tree transfer current grounded at vertex {root}") })
}

/// Requested entries `K(z,w)[e1,e2]` only, through one inverse.
fn kernel_entries(g: &PeriodicGraph, z: C64, w: C64, pairs: &[(usize, usize)]) -> Result<Vec<C64>> {
    let delta = delta_matrix(g, z, w, true)?;
    let inv = inverse(&delta.entries)
        .filter(|m| m.iter().all(|c| c.is_finite()))
        .ok_or_else(|| Error::Singular(format!("Δ + D_M is singular at (z, w) = ({z}, {w})")))?;
    let edges = g.edges();
    let (zi, wi) = (1.0 / z, 1.0 / w);
    Ok(pairs
        .iter()
        .map(|&(a, b)| {
            let ea = &edges[a];
            let eb = &edges[b];
            let pa = phase(g.kind(), z, w, ea.dx, ea.dy);
            let pb = phase(g.kind(), zi, wi, eb.dx, eb.dy);
            // row of d at a: −1 at u, +pa at v; row of d(1/z) at b likewise
            let row = |x: usize| -inv[(ea.u, x)] + pa * inv[(ea.v, x)];
            let val = -row(eb.u) + pb * row(eb.v);
            val * ea.c
        })
        .collect())
}

fn check_edge(g: &PeriodicGraph, e: usize) -> Result<()> {
    if e >= g.num_edges() {
        return Err(Error::OutOfRange(format!("edge {e} ≥ {} edges", g.num_edges())));
    }
    Ok(())
}

/// `(1/n) Σ_{ζⁿ = z} K(ζ)[e1, e2]·ζ^{a1 − a2}`: the transfer current of the
/// n-fold cyclic cover between edge `e1` in copy `a1` and `e2` in copy `a2`.
pub fn cylinder_kernel(g: &PeriodicGraph, n: usize, z: C64, e1: (usize, i32), e2: (usize, i32)) -> Result<C64> {
    if n == 0 {
        return Err(Error::Validation("cover size must be ≥ 1".into()));
    }
    if g.kind() != Kind::Strip {
        return Err(Error::Domain("cylinder_kernel needs a strip graph".into()));
    }
    check_edge(g, e1.0)?;
    check_edge(g, e2.0)?;
    let r = z.norm().powf(1.0 / n as f64);
    let vals: Vec<C64> = (0..n)
        .map(|k| {
            let zeta = C64::from_polar(r, (z.arg() + 2.0 * PI * k as f64) / n as f64);
            let k = kernel_entries(g, zeta, one(), &[(e1.0, e2.0)])?[0];
            Ok(k * zeta.powi(e1.1 - e2.1))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum_c(&vals) / n as f64)
}

/// The kernel `K^{(j)}` of a strip graph: contour integral of `K(u)·u^{x1−x2}`
/// over `|u| = r`, with `r` in the j-th root gap.
#[derive(Debug, Clone)]
pub struct StripKernel<'a> {
    g: &'a PeriodicGraph,
    pub report: SpectralReport,
    pub j: usize,
    pub radius: f64,
    pub tol: f64,
    pub max_nodes: usize,
}

impl<'a> StripKernel<'a> {
    /// With `radius = None` the geometric mean of the two bounding roots is
    /// used (`2λ_m` above the top root, 1 for the massive `j = 0`).
    pub fn new(g: &'a PeriodicGraph, j: usize, radius: Option<f64>) -> Result<Self> {
        if g.kind() != Kind::Strip {
            return Err(Error::Domain("strip kernel needs a strip graph".into()));
        }
        let p = char_poly_strip(g, CharPolyOptions::default())?;
        let massive = !g.is_massless();
        let report = strip_roots(&p, massive)?;
        let (lo, hi) = Self::gap(&report, j)?;
        let r = match radius {
            Some(r) => {
                let margin = 1e-8;
                if !(r > lo * (1.0 + margin) && r < hi * (1.0 - margin)) {
                    return Err(Error::Domain(format!(
                        "radius {r} is not strictly inside the root gap ({lo}, {hi}) for j = {j}"
                    )));
                }
                r
            }
            None => {
                if hi.is_infinite() {
                    2.0 * lo
                } else {
                    (lo * hi).sqrt()
                }
            }
        };
        Ok(StripKernel { g, report, j, radius: r, tol: 1e-8, max_nodes: 1 << 16 })
    }

    /// Open interval of admissible radii for component `j`.
    pub fn gap(report: &SpectralReport, j: usize) -> Result<(f64, f64)> {
        let m = report.m;
        let lam = report.roots_at_least_one();
        if report.massive {
            if j > m {
                return Err(Error::OutOfRange(format!("j = {j} > m = {m}")));
            }
            if j == 0 {
                let l1 = lam.first().copied().unwrap_or(f64::INFINITY);
                return Ok((1.0 / l1, l1));
            }
            Ok((lam[j - 1], lam.get(j).copied().unwrap_or(f64::INFINITY)))
        } else {
            if j < 1 || j > m {
                return Err(Error::OutOfRange(format!("j = {j} outside [1, {m}]")));
            }
            Ok((lam[j - 1], lam.get(j).copied().unwrap_or(f64::INFINITY)))
        }
    }

    fn average(&self, pairs: &[(usize, usize, i32)], n: usize) -> Result<Vec<C64>> {
        let ep: Vec<(usize, usize)> = pairs.iter().map(|&(a, b, _)| (a, b)).collect();
        let samples: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let u = C64::from_polar(self.radius, 2.0 * PI * k as f64 / n as f64);
                let vals = kernel_entries(self.g, u, one(), &ep)?;
                Ok(vals.iter().zip(pairs).map(|(v, &(_, _, s))| v * u.powi(s)).collect())
            })
            .collect::<Result<_>>()?;
        Ok((0..pairs.len())
            .map(|i| {
                let col: Vec<C64> = samples.iter().map(|s| s[i]).collect();
                pairwise_sum_c(&col) / n as f64
            })
            .collect())
    }

    /// Entries `K^{(j)}[(e1, x1), (e2, x2)]` for `(e1, e2, x1 − x2)` triples.
    pub fn entries(&self, pairs: &[(usize, usize, i32)]) -> Result<Vec<C64>> {
        for &(a, b, _) in pairs {
            check_edge(self.g, a)?;
            check_edge(self.g, b)?;
        }
        let mut n = 64;
        let mut prev = self.average(pairs, n)?;
        loop {
            n *= 2;
            let cur = self.average(pairs, n)?;
            let diff = cur.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if diff < self.tol {
                return Ok(cur);
            }
            if n >= self.max_nodes {
                return Err(Error::NonConvergence(format!("strip contour still moving by {diff:.3e} at {n} nodes")));
            }
            prev = cur;
        }
    }

    pub fn entry(&self, e1: usize, e2: usize, x1: i32, x2: i32) -> Result<f64> {
        real_part(self.entries(&[(e1, e2, x1 - x2)])?[0])
    }

    /// All fundamental-domain entries with `x1 − x2 = shift`.
    pub fn matrix(&self, shift: i32) -> Result<KernelMatrix> {
        let ne = self.g.num_edges();
        let pairs: Vec<(usize, usize, i32)> = (0..ne).flat_map(|a| (0..ne).map(move |b| (a, b, shift))).collect();
        let v = self.entries(&pairs)?;
        Ok(KernelMatrix {
            entries: DMatrix::from_row_slice(ne, ne, &v),
            provenance: format!("K^({}) on |u| = {}, shift {shift}", self.j, self.radius),
        })
    }
}

fn real_part(v: C64) -> Result<f64> {
    if v.im.abs() > IMAG_TOL {
        return Err(Error::NonConvergence(format!("kernel value {v} has imaginary residue above {IMAG_TOL}")));
    }
    Ok(v.re)
}

pub fn strip_kernel_entry(g: &PeriodicGraph, j: usize, e1: usize, e2: usize, x1: i32, x2: i32) -> Result<f64> {
    StripKernel::new(g, j, None)?.entry(e1, e2, x1, x2)
}

/// Integration of a function `F(z, w)` whose only poles near the torus
/// `|z| = e^x, |w| = e^y` are simple zeros of `P(z, ·)`.  The θ-integral is
/// adaptive Gauss–Kronrod; for each θ the w-integral is a trapezoid rule on
/// `F` minus the principal parts at roots within `delta` (in log-modulus) of
/// the circle, plus the residues of those inside.
pub(crate) struct TorusIntegrator<'a> {
    pub p: &'a LaurentPoly2,
    pub x: f64,
    pub y: f64,
    pub delta: f64,
    pub nodes: usize,
    pub tol: f64,
    pub max_segments: usize,
}

impl TorusIntegrator<'_> {
    /// `eval(z, w)` returns F; `residue(z, w_k)` returns `Res_{w = w_k} F`.
    pub fn integrate<E, R>(&self, dim: usize, eval: E, residue: R) -> Result<Vec<C64>>
    where
        E: Fn(C64, C64) -> Result<Vec<C64>> + Sync,
        R: Fn(C64, C64) -> Result<Vec<C64>> + Sync,
    {
        let ey = self.y.exp();
        let inner = |theta: f64| -> Result<Vec<C64>> {
            let z = C64::from_polar(self.x.exp(), theta);
            let cj = self.p.w_coefficients(z);
            let top = cj.iter().rposition(|c| c.norm() > 0.0).unwrap_or(0);
            let roots = if top == 0 { vec![] } else { poly_roots(&cj[..=top])? };
            let near: Vec<C64> = roots
                .into_iter()
                .filter(|w| w.norm() > 0.0 && (w.norm().ln() - self.y).abs() < self.delta)
                .collect();
            let mut rho: Vec<Vec<C64>> = Vec::with_capacity(near.len());
            for &wk in &near {
                rho.push(residue(z, wk)?.into_iter().map(|r| r / wk).collect());
            }
            let n = self.nodes;
            // rotate the nodes half a step away from the root closest to the circle
            let phi0 = near
                .iter()
                .min_by(|a, b| {
                    (a.norm().ln() - self.y).abs().partial_cmp(&(b.norm().ln() - self.y).abs()).unwrap()
                })
                .map(|w| w.arg() + PI / n as f64)
                .unwrap_or(PI / n as f64);
            let mut acc = vec![C64::new(0.0, 0.0); dim];
            let mut cols: Vec<Vec<C64>> = vec![Vec::with_capacity(n); dim];
            for m in 0..n {
                let w = C64::from_polar(ey, phi0 + 2.0 * PI * m as f64 / n as f64);
                let f = eval(z, w)?;
                for i in 0..dim {
                    let mut g = f[i];
                    for (k, &wk) in near.iter().enumerate() {
                        g -= rho[k][i] * w / (w - wk);
                    }
                    cols[i].push(g);
                }
            }
            for i in 0..dim {
                acc[i] = pairwise_sum_c(&cols[i]) / n as f64;
                for (k, &wk) in near.iter().enumerate() {
                    if wk.norm() < ey {
                        acc[i] += rho[k][i];
                    }
                }
                acc[i] /= 2.0 * PI;
            }
            Ok(acc)
        };
        let (v, _) = integrate_adaptive(inner, 0.0, 2.0 * PI, self.tol, self.max_segments)?;
        Ok(v)
    }
}

/// Residue of `(Δ(z,·) + D_M)^{-1}` at a simple zero `w_k` of `P(z, ·)`:
/// `v uᵀ / (uᵀ ∂_wΔ v)` with `u`, `v` the left and right null vectors.
fn resolvent_residue(g: &PeriodicGraph, z: C64, wk: C64) -> Result<DMatrix<C64>> {
    let a = delta_matrix(g, z, wk, true)?.entries;
    let n = a.nrows();
    let mut dw = DMatrix::<C64>::zeros(n, n);
    for e in g.edges() {
        let phi = phase(g.kind(), z, wk, e.dx, e.dy);
        let dphi = phi * e.dy as f64 / wk;
        let dinv = -(e.dy as f64) / (phi * wk);
        if e.u == e.v {
            dw[(e.u, e.u)] -= e.c * (dphi + dinv);
        } else {
            dw[(e.u, e.v)] -= e.c * dphi;
            dw[(e.v, e.u)] -= e.c * dinv;
        }
    }
    let svd = a.svd(true, true);
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let u_mat = svd.u.ok_or_else(|| Error::NonConvergence("SVD failed".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::NonConvergence("SVD failed".into()))?;
    let v = vt.row(imin).adjoint();
    let u = u_mat.column(imin).map(|c| c.conj());
    let denom = (u.transpose() * &dw * &v)[(0, 0)];
    if denom.norm() == 0.0 || !denom.is_finite() {
        return Err(Error::Singular(format!("degenerate zero of P at (z, w) = ({z}, {wk})")));
    }
    Ok(&v * u.transpose() / denom)
}

/// The translation-invariant kernel `K^{s,t}` of a torus graph, evaluated by
/// a double contour integral over `|z| = e^x, |w| = e^y` where `(x, y)` is
/// the amoeba point with `∇R(x, y) = (s, t)`.
#[derive(Debug, Clone)]
pub struct TorusKernel<'a> {
    g: &'a PeriodicGraph,
    pub p: LaurentPoly2,
    pub x: f64,
    pub y: f64,
    pub tol: f64,
}

impl<'a> TorusKernel<'a> {
    pub fn new(g: &'a PeriodicGraph, s: f64, t: f64) -> Result<Self> {
        let p = char_poly_torus(g, CharPolyOptions::default())?;
        let a = surface_tension(&p, s, t)?;
        if a.boundary {
            return Err(Error::Domain(format!("slope ({s}, {t}) lies on the boundary of the Newton polygon")));
        }
        Ok(TorusKernel { g, p, x: a.x, y: a.y, tol: 1e-10 })
    }

    pub fn at_point(g: &'a PeriodicGraph, x: f64, y: f64) -> Result<Self> {
        if g.kind() != Kind::Torus {
            return Err(Error::Domain("torus kernel needs a torus graph".into()));
        }
        let p = char_poly_torus(g, CharPolyOptions::default())?;
        Ok(TorusKernel { g, p, x, y, tol: 1e-10 })
    }

    fn integrate_at(&self, x: f64, y: f64, req: &[(usize, usize, (i32, i32))]) -> Result<Vec<C64>> {
        let g = self.g;
        let pairs: Vec<(usize, usize)> = req.iter().map(|&(a, b, _)| (a, b)).collect();
        let max_shift = req.iter().map(|r| r.2 .1.abs()).max().unwrap_or(0) as usize;
        let integ = TorusIntegrator {
            p: &self.p,
            x,
            y,
            delta: 0.35,
            nodes: 128 + 8 * max_shift,
            tol: self.tol,
            max_segments: 4000,
        };
        let eval = |z: C64, w: C64| -> Result<Vec<C64>> {
            let k = kernel_entries(g, z, w, &pairs)?;
            Ok(k.iter().zip(req).map(|(v, r)| v * z.powi(-r.2 .0) * w.powi(-r.2 .1)).collect())
        };
        let residue = |z: C64, wk: C64| -> Result<Vec<C64>> {
            let res = resolvent_residue(g, z, wk)?;
            let d = incidence(g, z, wk)?;
            let dt = incidence(g, 1.0 / z, 1.0 / wk)?;
            Ok(req
                .iter()
                .map(|&(a, b, (sx, sy))| {
                    let val = (d.row(a) * &res * dt.row(b).transpose())[(0, 0)];
                    val * g.edges()[a].c * z.powi(-sx) * wk.powi(-sy)
                })
                .collect())
        };
        integ.integrate(req.len(), eval, residue)
    }

    /// Entries `K^{s,t}[(e1, 0), (e2, shift)]`.  If the contour meets a zero
    /// of P the point is perturbed within its complement component.
    pub fn entries(&self, req: &[(usize, usize, (i32, i32))]) -> Result<Vec<C64>> {
        for &(a, b, _) in req {
            check_edge(self.g, a)?;
            check_edge(self.g, b)?;
        }
        let mut last = None;
        for (dx, dy) in [(0.0, 0.0), (1e-4, 0.0), (0.0, 1e-4), (-1e-4, -1e-4)] {
            match self.integrate_at(self.x + dx, self.y + dy, req) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_numerical() => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap())
    }

    pub fn entry(&self, e1: usize, e2: usize, shift: (i32, i32)) -> Result<f64> {
        real_part(self.entries(&[(e1, e2, shift)])?[0])
    }

    pub fn matrix(&self, shift: (i32, i32)) -> Result<KernelMatrix> {
        let ne = self.g.num_edges();
        let req: Vec<(usize, usize, (i32, i32))> =
            (0..ne).flat_map(|a| (0..ne).map(move |b| (a, b, shift))).collect();
        let v = self.entries(&req)?;
        Ok(KernelMatrix {
            entries: DMatrix::from_row_slice(ne, ne, &v),
            provenance: format!("K^(s,t) on |z| = e^{}, |w| = e^{}, shift {shift:?}", self.x, self.y),
        })
    }
}

pub fn torus_kernel_entry(g: &PeriodicGraph, s: f64, t: f64, e1: usize, e2: usize, shift: (i32, i32)) -> Result<f64> {
    TorusKernel::new(g, s, t)?.entry(e1, e2, shift)
}

/// `Pr(S ⊂ config) = det K_S^S`.
pub fn edge_probability(k: &KernelMatrix, edges: &[usize]) -> Result<f64> {
    event_probability(k, edges, &[])
}

/// Probability that all of `include` and none of `exclude` are present:
/// `(−1)^{|exclude|} det(K_T − X)` on `T = include ∪ exclude`, with `X` the
/// indicator of `exclude` on the diagonal.
pub fn event_probability(k: &KernelMatrix, include: &[usize], exclude: &[usize]) -> Result<f64> {
    let t: Vec<usize> = include.iter().chain(exclude).copied().collect();
    for &e in &t {
        if e >= k.dim() {
            return Err(Error::OutOfRange(format!("edge {e} ≥ kernel size {}", k.dim())));
        }
    }
    let mut sub = DMatrix::<C64>::from_fn(t.len(), t.len(), |i, j| k.entries[(t[i], t[j])]);
    for i in include.len()..t.len() {
        sub[(i, i)] -= 1.0;
    }
    let sign = if exclude.len() % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * det(&sub).re)
}

/// Summary written by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct ContourInfo {
    pub kind: String,
    pub radius_z: f64,
    pub radius_w: f64,
}
