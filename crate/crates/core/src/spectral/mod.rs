//! Spectral data of characteristic polynomials: strip roots and growth
//! rates, Ronkin function, surface tension, Harnack checks, the special
//! divisor of the square grid and correlation-decay fits.

mod decay;
mod divisor;
mod harnack;
mod ronkin;
mod tension;

pub use decay::{correlation_class, correlation_class_with, DecayClass, DecayFit, DecayOptions};
pub use divisor::{special_divisor_grid, DivisorPoint};
pub use harnack::{harnack_check, harnack_check_with, HarnackClass, HarnackOptions, HarnackReport};
pub use ronkin::{ronkin, ronkin_grid, ronkin_jensen, ronkin_with, RonkinOptions, RonkinValue};
pub use tension::{surface_tension, surface_tension_with, AmoebaPoint, TensionOptions};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly1;
use crate::numerics::{poly_roots, polish_root};

/// Tolerances for classifying strip roots.
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// A root counts as real if `|Im λ| < imag_tol·|λ|`.
    pub imag_tol: f64,
    /// Two roots count as distinct if they differ by more than `sep_tol·|λ|`.
    pub sep_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { imag_tol: 1e-8, sep_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    /// All 2m roots, ascending.
    pub roots: Vec<f64>,
    /// Coefficient `C_m` of `z^m`.
    pub leading_coeff: f64,
    pub massive: bool,
    /// Half-degree m.
    pub m: usize,
    /// Violated invariants, if any (the report never silently passes them).
    pub flags: Vec<String>,
}

impl SpectralReport {
    /// `λ_1 ≤ … ≤ λ_m`: the roots ≥ 1, with the double root at 1 listed once
    /// in the massless case.
    pub fn roots_at_least_one(&self) -> Vec<f64> {
        let upper: Vec<f64> = self.roots[self.m..].to_vec();
        if self.massive {
            upper
        } else {
            let mut v = vec![1.0];
            v.extend(upper.into_iter().skip(1));
            v
        }
    }

    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

fn deflate_by_one(a: &[C64]) -> (Vec<C64>, C64) {
    // divide Σ a_k z^k by (z − 1); returns quotient and remainder
    let n = a.len() - 1;
    let mut q = vec![C64::new(0.0, 0.0); n];
    let mut acc = C64::new(0.0, 0.0);
    for k in (0..=n).rev() {
        acc = acc + a[k];
        if k > 0 {
            q[k - 1] = acc;
        } else {
            return (q, acc);
        }
    }
    unreachable!()
}

/// Roots of a reciprocal strip polynomial `P(z)` of degree span `2m`,
/// through the companion matrix of `z^m P(z)`.  In the massless case the
/// double root at 1 is divided out first.  Non-real roots are an error;
/// other invariant violations are listed in `flags`.
pub fn strip_roots(p: &LaurentPoly1, massive: bool) -> Result<SpectralReport> {
    strip_roots_with(p, massive, RootOptions::default())
}

pub fn strip_roots_with(p: &LaurentPoly1, massive: bool, opts: RootOptions) -> Result<SpectralReport> {
    let (lo, hi) = match (p.degree_lo(), p.degree_hi()) {
        (Some(l), Some(h)) => (l, h),
        _ => return Err(Error::Domain("roots of the zero polynomial".into())),
    };
    if lo != -hi || !p.is_reciprocal(1e-8) {
        return Err(Error::Domain("strip_roots needs a reciprocal polynomial".into()));
    }
    let m = hi as usize;
    let (_, full) = p.dense();
    let mut flags = Vec::new();
    let mut roots: Vec<C64> = Vec::with_capacity(2 * m);
    if m > 0 {
        if massive {
            roots = poly_roots(&full)?;
        } else {
            let scale = full.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let (q1, r1) = deflate_by_one(&full);
            let (q2, r2) = deflate_by_one(&q1);
            if r1.norm() > 1e-8 * scale || r2.norm() > 1e-8 * scale {
                flags.push(format!("no double root at 1 (remainders {:.2e}, {:.2e})", r1.norm(), r2.norm()));
            }
            roots.push(C64::new(1.0, 0.0));
            roots.push(C64::new(1.0, 0.0));
            if q2.len() > 1 {
                for r in poly_roots(&q2)? {
                    roots.push(polish_root(&full, r, 3));
                }
            }
        }
    }
    for r in &roots {
        if r.im.abs() > opts.imag_tol * r.norm().max(1e-300) {
            return Err(Error::Invariant(format!("complex root {r} (not a Laplacian polynomial)")));
        }
    }
    let mut re: Vec<f64> = roots.iter().map(|r| r.re).collect();
    re.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if let Some(r) = re.iter().find(|&&r| r <= 0.0) {
        flags.push(format!("nonpositive root {r}"));
    }
    for k in 0..re.len() {
        let partner = re[re.len() - 1 - k];
        if (re[k] * partner - 1.0).abs() > 1e-6 {
            flags.push(format!("roots {} and {} are not reciprocal", re[k], partner));
            break;
        }
    }
    for k in 1..re.len() {
        let (a, b) = (re[k - 1], re[k]);
        let both_one = (a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12;
        if (b - a).abs() <= opts.sep_tol * b.abs() && !(both_one && !massive) {
            flags.push(format!("repeated root near {b}"));
        }
    }
    if massive && re.iter().any(|r| (r - 1.0).abs() < 1e-8) {
        flags.push("root at 1 in the massive case".into());
    }
    let lead = p.coeff(hi);
    if lead.im.abs() > 1e-8 * lead.norm() {
        flags.push(format!("leading coefficient {lead} is not real"));
    }
    Ok(SpectralReport { roots: re, leading_coeff: lead.re, massive, m, flags })
}

/// `a_j = log|C_m| + Σ_{i=j+1}^m log λ_i`; `1 ≤ j ≤ m` when massless, `0 ≤ j ≤ m` when massive.
pub fn growth_rate(report: &SpectralReport, j: usize) -> Result<f64> {
    let lo = if report.massive { 0 } else { 1 };
    if j < lo || j > report.m {
        return Err(Error::OutOfRange(format!("j = {j} outside [{lo}, {}]", report.m)));
    }
    let lam = report.roots_at_least_one();
    Ok(report.leading_coeff.abs().ln() + lam[j..].iter().map(|l| l.ln()).sum::<f64>())
}
