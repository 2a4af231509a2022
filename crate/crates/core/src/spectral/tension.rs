use num_complex::Complex64 as C64;
use serde::Serialize;

use super::ronkin::{ronkin, Slice};
use crate::error::{Error, Result};
use crate::laurent::{newton_polygon, LaurentPoly2, NewtonPolygon};
use crate::numerics::{golden_section, poly_roots};

#[derive(Debug, Clone, Copy)]
pub struct TensionOptions {
    /// θ-nodes of the slices used while searching for the optimal x.
    pub search_nodes: usize,
    /// θ-nodes of the slice that produces the reported value.
    pub final_nodes: usize,
    pub xtol: f64,
    /// Distance to ∂N below which the boundary formula is used.
    pub boundary_tol: f64,
    pub max_abs_x: f64,
}

impl Default for TensionOptions {
    fn default() -> Self {
        TensionOptions { search_nodes: 256, final_nodes: 4096, xtol: 1e-7, boundary_tol: 1e-9, max_abs_x: 40.0 }
    }
}

/// The Legendre pair at a slope `(s, t)`: `σ(s, t) = max_{x,y} (s x + t y − R(x, y))`
/// attained at `(x, y)`; `free_energy = −σ`.  On ∂N the optimum sits at
/// infinity and `x`, `y` are NaN.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AmoebaPoint {
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    pub free_energy: f64,
    pub boundary: bool,
}

pub fn surface_tension(p: &LaurentPoly2, s: f64, t: f64) -> Result<AmoebaPoint> {
    surface_tension_with(p, s, t, TensionOptions::default())
}

pub fn surface_tension_with(p: &LaurentPoly2, s: f64, t: f64, opts: TensionOptions) -> Result<AmoebaPoint> {
    let poly = newton_polygon(p)?;
    if !poly.has_interior() {
        return Err(Error::Domain("surface tension needs a two-dimensional Newton polygon".into()));
    }
    let slack = poly.slack(s, t);
    if slack < -opts.boundary_tol {
        return Err(Error::Domain(format!("slope ({s}, {t}) lies outside the Newton polygon")));
    }
    if slack <= opts.boundary_tol {
        let sigma = boundary_tension(p, &poly, s, t)?;
        return Ok(AmoebaPoint { s, t, x: f64::NAN, y: f64::NAN, sigma, free_energy: -sigma, boundary: true });
    }
    interior_tension(p, s, t, opts)
}

fn interior_tension(p: &LaurentPoly2, s: f64, t: f64, opts: TensionOptions) -> Result<AmoebaPoint> {
    // h(x) = min_y [R(x, y) − t y] − s x is convex; σ = −min_x h
    let h = |x: f64, n: usize| -> Result<(f64, f64)> {
        let slice = Slice::new(p, x, n)?;
        let (y, v) = slice
            .minimize(t)
            .ok_or_else(|| Error::Domain(format!("slope t = {t} outside the slice range at x = {x}")))?;
        Ok((v - s * x, y))
    };
    let hs = |x: f64| h(x, opts.search_nodes).map(|r| r.0);

    // bracket the minimum by walking downhill with doubling steps
    let (mut a, mut m, mut b) = (-1.0, 0.0, 1.0);
    let (mut fa, mut fm, mut fb) = (hs(a)?, hs(m)?, hs(b)?);
    let mut step = 1.0;
    while !(fm <= fa && fm <= fb) {
        step *= 2.0;
        if fa < fb {
            b = m;
            fb = fm;
            m = a;
            fm = fa;
            a = m - step;
            fa = hs(a)?;
        } else {
            a = m;
            fa = fm;
            m = b;
            fm = fb;
            b = m + step;
            fb = hs(b)?;
        }
        if a.abs() > opts.max_abs_x || b.abs() > opts.max_abs_x {
            return Err(Error::NonConvergence(format!(
                "no interior optimum for slope ({s}, {t}) within |x| ≤ {}",
                opts.max_abs_x
            )));
        }
    }
    let _ = (fa, fb);
    let mut err = None;
    let x = golden_section(
        |x| match hs(x) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::INFINITY
            }
        },
        a,
        b,
        opts.xtol,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let (_, y) = h(x, opts.final_nodes)?;
    // the value is stationary in (x, y), so an exact R at the located optimum suffices
    let sigma = s * x + t * y - ronkin(p, x, y)?;
    Ok(AmoebaPoint { s, t, x, y, sigma, free_energy: -sigma, boundary: false })
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// On an edge `[A, B]` of N, σ is the Legendre transform of the Ronkin
/// function of the edge polynomial `q(u) = Σ_k C_{A + k e} u^k`.
fn boundary_tension(p: &LaurentPoly2, poly: &NewtonPolygon, s: f64, t: f64) -> Result<f64> {
    let n = poly.vertices.len();
    for k in 0..n {
        let a = poly.vertices[k];
        let b = poly.vertices[(k + 1) % n];
        let (dx, dy) = ((b.0 - a.0) as f64, (b.1 - a.1) as f64);
        let len2 = dx * dx + dy * dy;
        let u = ((s - a.0 as f64) * dx + (t - a.1 as f64) * dy) / len2;
        let dist = (s - a.0 as f64 - u * dx).hypot(t - a.1 as f64 - u * dy);
        if dist > 1e-8 || !(-1e-9..=1.0 + 1e-9).contains(&u) {
            continue;
        }
        let g = gcd(b.0 - a.0, b.1 - a.1);
        let e = ((b.0 - a.0) / g, (b.1 - a.1) / g);
        let q: Vec<C64> = (0..=g).map(|k| p.coeff(a.0 + k * e.0, a.1 + k * e.1)).collect();
        let tau = (u * g as f64).clamp(0.0, g as f64);
        let mut logs: Vec<f64> = poly_roots(&q)?.iter().map(|r| r.norm().ln()).collect();
        logs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let top = q[g as usize].norm().ln();
        let r = |v: f64| top + logs.iter().map(|&l| l.max(v)).sum::<f64>();
        let i = (tau.floor() as usize).min(g as usize - 1);
        return Ok(tau * logs[i] - r(logs[i]));
    }
    Err(Error::Domain(format!("({s}, {t}) is not on an edge of the Newton polygon")))
}
