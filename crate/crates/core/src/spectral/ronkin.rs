use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly2;
use crate::numerics::{integrate_adaptive, pairwise_sum, poly_roots};

#[derive(Debug, Clone, Copy)]
pub struct RonkinOptions {
    /// Absolute error target of the adaptive θ-quadrature.
    pub tol: f64,
    pub max_segments: usize,
}

impl Default for RonkinOptions {
    fn default() -> Self {
        RonkinOptions { tol: 1e-11, max_segments: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RonkinValue {
    pub value: f64,
    pub error_estimate: f64,
}

/// `(2π)^{-2} ∬ log|P|` on an `n × n` midpoint grid.  Converges slowly where
/// the torus meets the curve; kept as an independent cross-check.
pub fn ronkin_grid(p: &LaurentPoly2, x: f64, y: f64, n: usize) -> f64 {
    let (ex, ey) = (x.exp(), y.exp());
    let jlo = p.bounds().map(|b| b.1 .0).unwrap_or(0);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|a| {
            let th = 2.0 * PI * (a as f64 + 0.5) / n as f64;
            let cj = p.w_coefficients(C64::from_polar(ex, th));
            let vals: Vec<f64> = (0..n)
                .map(|b| {
                    let w = C64::from_polar(ey, 2.0 * PI * (b as f64 + 0.5) / n as f64);
                    let mut acc = C64::new(0.0, 0.0);
                    for &c in cj.iter().rev() {
                        acc = acc * w + c;
                    }
                    (acc * w.powi(jlo)).norm().ln()
                })
                .collect();
            pairwise_sum(&vals) / n as f64
        })
        .collect();
    pairwise_sum(&rows) / n as f64
}

fn jensen_integrand(p: &LaurentPoly2, x: f64, y: f64, theta: f64) -> Result<f64> {
    let jlo = p.bounds().map(|b| b.1 .0).unwrap_or(0);
    let cj = p.w_coefficients(C64::from_polar(x.exp(), theta));
    let top = cj
        .iter()
        .rposition(|c| c.norm() > 0.0)
        .ok_or_else(|| Error::Domain("P(z, ·) vanishes identically".into()))?;
    let roots = if top == 0 { vec![] } else { poly_roots(&cj[..=top])? };
    Ok(cj[top].norm().ln() + jlo as f64 * y + roots.iter().map(|r| r.norm().ln().max(y)).sum::<f64>())
}

/// `R(x, y) = (2π)^{-2} ∬ log|P(e^{x+iθ}, e^{y+iφ})| dθ dφ`.  The φ-average
/// is done exactly by Jensen's formula in `w`,
/// `log|c_top(z)| + jlo·y + Σ_k max(log|w_k(z)|, y)`, and the remaining
/// θ-integral (continuous, with kinks where roots cross `|w| = e^y`) by
/// adaptive Gauss–Kronrod.
pub fn ronkin(p: &LaurentPoly2, x: f64, y: f64) -> Result<f64> {
    ronkin_with(p, x, y, RonkinOptions::default()).map(|r| r.value)
}

pub fn ronkin_with(p: &LaurentPoly2, x: f64, y: f64, opts: RonkinOptions) -> Result<RonkinValue> {
    if p.is_zero() {
        return Err(Error::Domain("Ronkin function of the zero polynomial".into()));
    }
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!("non-finite point ({x}, {y})")));
    }
    let f = |t: f64| jensen_integrand(p, x, y, t).map(|v| vec![C64::new(v / (2.0 * PI), 0.0)]);
    let (v, err) = integrate_adaptive(f, 0.0, 2.0 * PI, opts.tol, opts.max_segments)?;
    Ok(RonkinValue { value: v[0].re, error_estimate: err })
}

/// One-dimensional form of the Ronkin function through Jensen's formula in
/// `w`: `R(x, y) = mean_θ [log|c_top(z)| + jlo·y + Σ_k max(log|w_k(z)|, y)]`,
/// with `w_k(z)` the roots of `P(z, ·)`.  Midpoint rule with `n` nodes.
pub fn ronkin_jensen(p: &LaurentPoly2, x: f64, y: f64, n: usize) -> Result<f64> {
    Ok(Slice::new(p, x, n)?.ronkin(y))
}

/// Root data of `P(e^{x+iθ}, ·)` along a circle of z, sufficient to evaluate
/// `y ↦ R(x, y)` and to minimise `R(x, y) − t·y` in closed form.
pub(crate) struct Slice {
    pub base: f64,
    pub jlo: i32,
    /// All `log|w_k(θ_a)|`, ascending.
    pub logs: Vec<f64>,
    /// `suffix[i] = Σ_{k ≥ i} logs[k]`.
    suffix: Vec<f64>,
    pub n_theta: usize,
}

impl Slice {
    pub fn new(p: &LaurentPoly2, x: f64, n: usize) -> Result<Slice> {
        let ((_, _), (jlo, _)) = p
            .bounds()
            .ok_or_else(|| Error::Domain("zero polynomial".into()))?;
        let ex = x.exp();
        let per: Vec<Result<(f64, Vec<f64>)>> = (0..n)
            .into_par_iter()
            .map(|a| {
                let th = 2.0 * PI * (a as f64 + 0.5) / n as f64;
                let cj = p.w_coefficients(C64::from_polar(ex, th));
                let top = cj
                    .iter()
                    .rposition(|c| c.norm() > 0.0)
                    .ok_or_else(|| Error::Domain("P(z, ·) vanishes identically".into()))?;
                let roots = if top == 0 { vec![] } else { poly_roots(&cj[..=top])? };
                Ok((cj[top].norm().ln(), roots.iter().map(|r| r.norm().ln()).collect()))
            })
            .collect();
        let mut bases = Vec::with_capacity(n);
        let mut logs = Vec::new();
        let mut degree = None;
        for r in per {
            let (b, l) = r?;
            match degree {
                None => degree = Some(l.len()),
                Some(d) if d != l.len() => {
                    return Err(Error::Domain("w-degree drops on the circle; rotate or perturb x".into()))
                }
                _ => {}
            }
            bases.push(b);
            logs.extend(l);
        }
        logs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut suffix = vec![0.0; logs.len() + 1];
        for i in (0..logs.len()).rev() {
            suffix[i] = suffix[i + 1] + logs[i];
        }
        Ok(Slice { base: pairwise_sum(&bases) / n as f64, jlo, logs, suffix, n_theta: n })
    }

    fn sum_max(&self, y: f64) -> f64 {
        // Σ max(l, y) = (#l < y)·y + Σ_{l ≥ y} l
        let i = self.logs.partition_point(|&l| l < y);
        i as f64 * y + self.suffix[i]
    }

    pub fn ronkin(&self, y: f64) -> f64 {
        self.base + self.jlo as f64 * y + self.sum_max(y) / self.n_theta as f64
    }

    /// `min_y R(x, y) − t·y` and its minimiser; `None` when `t` lies outside
    /// the open range of slopes `(jlo, jlo + degree)`.
    pub fn minimize(&self, t: f64) -> Option<(f64, f64)> {
        let n = self.n_theta as f64;
        let a = (t - self.jlo as f64) * n;
        let total = self.logs.len() as f64;
        if a <= 0.0 || a >= total {
            return None;
        }
        // dR/dy = jlo + #{l < y}/n; the minimiser is the a-th order statistic
        let i = a.floor() as usize;
        let y = if (a - a.floor()).abs() < 1e-12 && i > 0 {
            0.5 * (self.logs[i - 1] + self.logs[i])
        } else {
            self.logs[i]
        };
        Some((y, self.ronkin(y) - t * y))
    }
}
