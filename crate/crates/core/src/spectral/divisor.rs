use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A point `u` of the unit disk with
/// `ξ = (u+a)(u+b)/((u−a)(u−b))`, `η = (u+a)(u−b)/((u−a)(u+b))`,
/// `a = e^{iπ/4}`, `b = e^{3iπ/4}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DivisorPoint {
    pub u: C64,
    pub xi: C64,
    pub eta: C64,
    /// Multiples `(k, l)` of `π/2n` giving the arguments of
    /// `(u+a)/(u−a)` and `(u+b)/(u−b)`.
    pub k: usize,
    pub l: usize,
}

fn consts() -> (C64, C64) {
    (C64::from_polar(1.0, PI / 4.0), C64::from_polar(1.0, 3.0 * PI / 4.0))
}

pub(crate) fn xi_eta(u: C64) -> (C64, C64) {
    let (a, b) = consts();
    let xi = (u + a) * (u + b) / ((u - a) * (u - b));
    let eta = (u + a) * (u - b) / ((u - a) * (u + b));
    (xi, eta)
}

/// Solve `arg (u+a)/(u−a) = α`, `arg (u+b)/(u−b) = β` for `α, β ∈ (π/2, 3π/2)`.
/// With `ζ = (u+a)/(u−a) = ρ e^{iα}` one has `(u+b)/(u−b) = i(ζ−i)/(ζ+i)`,
/// whose argument falls monotonically from 3π/2 to π/2 as ρ runs over (0, ∞).
fn solve_u(alpha: f64, beta: f64) -> Result<C64> {
    let (a, _) = consts();
    let i = C64::i();
    let arg_of = |lr: f64| {
        let zeta = C64::from_polar(lr.exp(), alpha);
        (i * (zeta - i) / (zeta + i)).arg().rem_euclid(2.0 * PI)
    };
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    if !(arg_of(lo) > beta && arg_of(hi) < beta) {
        return Err(Error::NonConvergence(format!("no bracket for α = {alpha}, β = {beta}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if arg_of(mid) > beta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let zeta = C64::from_polar((0.5 * (lo + hi)).exp(), alpha);
    Ok(a * (zeta + 1.0) / (zeta - 1.0))
}

/// Points of the unit disk where `ξ^n` and `η^n` are real, excluding `u = 0`:
/// the arguments `(k π/2n, l π/2n)` with `n < k, l < 3n` and `k + l` even,
/// `2n² − 2n` points in all.
pub fn special_divisor_grid(n: usize) -> Result<Vec<DivisorPoint>> {
    if n < 1 {
        return Err(Error::Validation("n must be ≥ 1".into()));
    }
    let step = PI / (2 * n) as f64;
    let mut out = Vec::with_capacity(2 * n * n);
    for k in n + 1..3 * n {
        for l in n + 1..3 * n {
            if (k + l) % 2 != 0 || (k == 2 * n && l == 2 * n) {
                continue;
            }
            let u = solve_u(k as f64 * step, l as f64 * step)?;
            if u.norm() >= 1.0 {
                return Err(Error::Invariant(format!("divisor point {u} outside the unit disk")));
            }
            let (xi, eta) = xi_eta(u);
            out.push(DivisorPoint { u, xi, eta, k, l });
        }
    }
    Ok(out)
}
