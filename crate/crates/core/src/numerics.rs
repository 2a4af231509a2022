//! Small numerical kernels shared by the other modules: dense complex linear
//! algebra, polynomial roots, adaptive Gauss–Kronrod quadrature and
//! order-stable summation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Determinant by partial-pivoted LU.
pub fn det(m: &DMatrix<C64>) -> C64 {
    if m.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Inverse by partial-pivoted LU; `None` if a pivot vanishes.
pub fn inverse(m: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    let n = m.nrows();
    let lu = m.clone().lu();
    let mut id = DMatrix::<C64>::identity(n, n);
    if lu.solve_mut(&mut id) {
        Some(id)
    } else {
        None
    }
}

/// Pairwise (tree) summation in index order, so results do not depend on how
/// the terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn pairwise_sum_c(xs: &[C64]) -> C64 {
    match xs.len() {
        0 => C64::new(0.0, 0.0),
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum_c(a) + pairwise_sum_c(b)
        }
    }
}

fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    // value and derivative
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of `Σ coeffs[k] z^k` (ascending order), with
/// multiplicity.  Leading zero coefficients are dropped; trailing zero
/// coefficients yield roots at the origin.  Degrees ≤ 2 are solved in
/// closed form, higher degrees through the eigenvalues of the companion
/// matrix followed by two Newton polishing steps.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Domain("zero polynomial has no well-defined roots".into()));
    }
    let tiny = scale * 1e-300;
    let mut hi = coeffs.len() - 1;
    while coeffs[hi].norm() <= tiny {
        hi -= 1;
    }
    let mut lo = 0;
    while coeffs[lo].norm() <= tiny {
        lo += 1;
    }
    let mut roots = vec![C64::new(0.0, 0.0); lo];
    let a = &coeffs[lo..=hi];
    let n = a.len() - 1;
    match n {
        0 => {}
        1 => roots.push(-a[0] / a[1]),
        2 => {
            let (c, b, aa) = (a[0], a[1], a[2]);
            let disc = (b * b - 4.0 * aa * c).sqrt();
            // numerically stable pair
            let q = if (b.conj() * disc).re >= 0.0 { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
            if q.norm() == 0.0 {
                roots.push(C64::new(0.0, 0.0));
                roots.push(C64::new(0.0, 0.0));
            } else {
                roots.push(q / aa);
                roots.push(c / q);
            }
        }
        _ => {
            let lead = a[n];
            let mut comp = DMatrix::<C64>::zeros(n, n);
            for j in 0..n {
                comp[(0, j)] = -a[n - 1 - j] / lead;
            }
            for i in 1..n {
                comp[(i, i - 1)] = C64::new(1.0, 0.0);
            }
            let schur = nalgebra::linalg::Schur::try_new(comp, 1e-15, 10_000)
                .ok_or_else(|| Error::NonConvergence("companion eigenvalues did not converge".into()))?;
            let ev = schur
                .eigenvalues()
                .ok_or_else(|| Error::NonConvergence("companion Schur form not triangular".into()))?;
            for mut r in ev.iter().copied() {
                for _ in 0..2 {
                    let (p, dp) = horner(a, r);
                    if dp.norm() > 0.0 {
                        let step = p / dp;
                        if step.is_finite() && step.norm() < 1e-3 * (1.0 + r.norm()) {
                            r -= step;
                        }
                    }
                }
                roots.push(r);
            }
        }
    }
    Ok(roots)
}

/// Newton refinement of a root of `Σ coeffs[k] z^k`.
pub fn polish_root(coeffs: &[C64], mut r: C64, iters: usize) -> C64 {
    for _ in 0..iters {
        let (p, dp) = horner(coeffs, r);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.is_finite() {
            break;
        }
        r -= step;
        if step.norm() <= 1e-16 * r.norm() {
            break;
        }
    }
    r
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Segment {
    a: f64,
    b: f64,
    value: Vec<C64>,
    err: f64,
}

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Segment>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let dim = fc.len();
    let mut kron: Vec<C64> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut gauss: Vec<C64> = fc.iter().map(|v| v * WG[3]).collect();
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x)?;
        let f2 = f(c + x)?;
        for k in 0..dim {
            let s = f1[k] + f2[k];
            kron[k] += s * WGK[j];
            if j % 2 == 1 {
                gauss[k] += s * WG[j / 2];
            }
        }
    }
    let mut err: f64 = 0.0;
    for k in 0..dim {
        kron[k] *= h;
        gauss[k] *= h;
        err = err.max((kron[k] - gauss[k]).norm());
    }
    Ok(Segment { a, b, value: kron, err })
}

/// Globally adaptive 15-point Gauss–Kronrod quadrature of a vector-valued
/// function on `[a, b]`.  Returns the integral and the summed error estimate.
/// The endpoints are never evaluated.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, tol: f64, max_segments: usize) -> Result<(Vec<C64>, f64)>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    let mut segs = vec![gk15(&f, a, b)?];
    loop {
        let total_err: f64 = segs.iter().map(|s| s.err).sum();
        if total_err <= tol {
            break;
        }
        if segs.len() >= max_segments {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature stalled at error {:.3e} after {} segments",
                total_err,
                segs.len()
            )));
        }
        // split the worst segment
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, s)| if s.err > acc.1 { (i, s.err) } else { acc });
        let s = segs.swap_remove(worst);
        let m = 0.5 * (s.a + s.b);
        segs.push(gk15(&f, s.a, m)?);
        segs.push(gk15(&f, m, s.b)?);
    }
    segs.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
    let dim = segs[0].value.len();
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for k in 0..dim {
        let col: Vec<C64> = segs.iter().map(|s| s.value[k]).collect();
        out[k] = pairwise_sum_c(&col);
    }
    let err = segs.iter().map(|s| s.err).sum();
    Ok((out, err))
}

/// Solve `m x = b`; `None` when singular.
pub fn solve(m: &DMatrix<C64>, b: &DVector<C64>) -> Option<DVector<C64>> {
    m.clone().lu().solve(b)
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
