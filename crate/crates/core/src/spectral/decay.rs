use num_complex::Complex64 as C64;
use serde::Serialize;

use super::tension::surface_tension;
use crate::error::{Error, Result};
use crate::kernel::TorusIntegrator;
use crate::laurent::LaurentPoly2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    /// Coefficients decay like a power of the distance (covariances quadratically).
    Quadratic,
    Exponential,
}

#[derive(Debug, Clone, Copy)]
pub struct DecayOptions {
    /// Absolute quadrature tolerance; much below 1e-10 the estimate hits rounding noise.
    pub tol: f64,
    /// Profile values below this are treated as zero.
    pub floor: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { tol: 1e-10, floor: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub class: DecayClass,
    /// Exponential: rate κ in `e^{−κ d}`.  Quadratic: exponent α in `d^{−α}`.
    pub rate: f64,
    pub r2_power: f64,
    pub r2_exponential: f64,
    pub x: f64,
    pub y: f64,
    /// `(d, envelope)` over the fitted window.
    pub profile: Vec<(usize, f64)>,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    // slope and coefficient of determination
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

const RAYS: [(i32, i32); 3] = [(1, 0), (0, 1), (1, 1)];

/// Decay of the Fourier coefficients `C_{a,b}` of `1/P` on the torus through
/// the amoeba point of slope `(s, t)`.  Because `1/P` is not integrable at a
/// real node, the profile uses the discrete gradients
/// `C_{a,b} − C_{a+1,b}` and `C_{a,b} − C_{a,b+1}` along the rays (1,0),
/// (0,1), (1,1); their maximum, made monotone from the right, is fitted on
/// `d ∈ [max_dist/2, max_dist]` against `log d` and against `d`.
pub fn correlation_class(p: &LaurentPoly2, s: f64, t: f64, max_dist: usize) -> Result<DecayFit> {
    correlation_class_with(p, s, t, max_dist, DecayOptions::default())
}

pub fn correlation_class_with(p: &LaurentPoly2, s: f64, t: f64, max_dist: usize, opts: DecayOptions) -> Result<DecayFit> {
    if max_dist < 4 {
        return Err(Error::Validation("max_dist must be ≥ 4".into()));
    }
    let a = surface_tension(p, s, t)?;
    if a.boundary {
        return Err(Error::Domain(format!("slope ({s}, {t}) is on the boundary of N")));
    }
    // requested coefficients C_{a,b}: rays × distances 0..=max_dist, plus neighbours
    let mut shifts: Vec<(i32, i32)> = Vec::new();
    for &(rx, ry) in &RAYS {
        for d in 0..=max_dist as i32 {
            let (a0, b0) = (rx * d, ry * d);
            shifts.push((a0, b0));
            shifts.push((a0 + 1, b0));
            shifts.push((a0, b0 + 1));
        }
    }
    let max_b = shifts.iter().map(|s| s.1.abs()).max().unwrap() as usize;
    let integ = TorusIntegrator {
        p,
        x: a.x,
        y: a.y,
        delta: 0.35,
        nodes: 128 + 8 * max_b,
        tol: opts.tol,
        max_segments: 4000,
    };
    let dw = p.w_derivative();
    let shifts_ref = &shifts;
    let eval = |z: C64, w: C64| -> Result<Vec<C64>> {
        let inv = 1.0 / p.eval_unchecked(z, w);
        Ok(shifts_ref.iter().map(|&(a, b)| inv * z.powi(-a) * w.powi(-b)).collect())
    };
    let residue = |z: C64, wk: C64| -> Result<Vec<C64>> {
        let pw = dw.eval_unchecked(z, wk);
        Ok(shifts_ref.iter().map(|&(a, b)| z.powi(-a) * wk.powi(-b) / pw).collect())
    };
    // gradients cancel the node singularity only in combination, so integrate the differences directly
    let diffs: Vec<(usize, usize)> = (0..shifts.len() / 3).flat_map(|k| [(3 * k, 3 * k + 1), (3 * k, 3 * k + 2)]).collect();
    let eval_d = |z: C64, w: C64| -> Result<Vec<C64>> {
        let f = eval(z, w)?;
        Ok(diffs.iter().map(|&(i, j)| f[i] - f[j]).collect())
    };
    let residue_d = |z: C64, wk: C64| -> Result<Vec<C64>> {
        let f = residue(z, wk)?;
        Ok(diffs.iter().map(|&(i, j)| f[i] - f[j]).collect())
    };
    let vals = integ.integrate(diffs.len(), eval_d, residue_d)?;

    // profile(d) = max over rays and both gradient directions
    let per_ray = 2 * (max_dist + 1);
    let mut profile = vec![0.0f64; max_dist + 1];
    for r in 0..RAYS.len() {
        for d in 0..=max_dist {
            for k in 0..2 {
                let v = vals[r * per_ray + 2 * d + k].norm();
                profile[d] = profile[d].max(v);
            }
        }
    }
    for d in (0..max_dist).rev() {
        profile[d] = profile[d].max(profile[d + 1]);
    }
    let lo = (max_dist / 2).max(1);
    let window: Vec<(usize, f64)> = (lo..=max_dist).map(|d| (d, profile[d])).collect();
    if window.iter().all(|&(_, v)| v < opts.floor) {
        return Ok(DecayFit {
            class: DecayClass::Exponential,
            rate: -(opts.floor.ln()) / lo as f64,
            r2_power: 0.0,
            r2_exponential: 1.0,
            x: a.x,
            y: a.y,
            profile: window,
        });
    }
    let pts: Vec<(usize, f64)> = window.iter().copied().filter(|&(_, v)| v >= opts.floor).collect();
    let ds: Vec<f64> = pts.iter().map(|&(d, _)| d as f64).collect();
    let logd: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let logv: Vec<f64> = pts.iter().map(|&(_, v)| v.ln()).collect();
    let (sp, r2p) = linear_fit(&logd, &logv);
    let (se, r2e) = linear_fit(&ds, &logv);
    let (class, rate) = if r2p >= r2e { (DecayClass::Quadratic, -sp) } else { (DecayClass::Exponential, -se) };
    Ok(DecayFit { class, rate, r2_power: r2p, r2_exponential: r2e, x: a.x, y: a.y, profile: window })
}
