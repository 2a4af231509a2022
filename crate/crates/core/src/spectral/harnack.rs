use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly2;
use crate::numerics::poly_roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnackClass {
    Empty,
    TwoConjugate,
    RealNode,
    BoundaryTangent,
    /// More intersection points than a Harnack curve allows.
    Excess,
}

#[derive(Debug, Clone, Copy)]
pub struct HarnackOptions {
    pub samples: usize,
    pub max_depth: usize,
    /// Relative tolerance for a root to sit on the circle `|w| = r2`.
    pub touch_tol: f64,
}

impl Default for HarnackOptions {
    fn default() -> Self {
        HarnackOptions { samples: 720, max_depth: 40, touch_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub r1: f64,
    pub r2: f64,
    /// Intersection points of the curve with the torus `|z| = r1, |w| = r2`,
    /// a touching point counted once.
    pub count: usize,
    pub class: HarnackClass,
    pub pass: bool,
    /// `(arg z, w)` of the transverse crossings.
    pub crossings: Vec<(f64, C64)>,
    /// `(z, w)` of touching points on real z.
    pub touch_points: Vec<(C64, C64)>,
}

fn roots_at(p: &LaurentPoly2, z: C64) -> Result<Vec<C64>> {
    let cj = p.w_coefficients(z);
    let top = cj.iter().rposition(|c| c.norm() > 0.0).ok_or_else(|| Error::Domain("P(z, ·) ≡ 0".into()))?;
    if top == 0 {
        return Ok(vec![]);
    }
    poly_roots(&cj[..=top])
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// Assignment of `a[i]` to `b[perm[i]]` minimising the largest displacement.
fn matching(a: &[C64], b: &[C64]) -> (Vec<usize>, f64) {
    let n = a.len();
    if n <= 6 {
        let mut best = (Vec::new(), f64::INFINITY);
        for p in permutations(n) {
            let d = (0..n).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max);
            if d < best.1 {
                best = (p, d);
            }
        }
        return best;
    }
    let mut used = vec![false; n];
    let mut perm = vec![0; n];
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let j = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&x, &y| (a[i] - b[x]).norm().partial_cmp(&(a[i] - b[y]).norm()).unwrap())
            .unwrap();
        used[j] = true;
        perm[i] = j;
        worst = worst.max((a[i] - b[j]).norm());
    }
    (perm, worst)
}

fn min_separation(r: &[C64]) -> f64 {
    let mut s = f64::INFINITY;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            s = s.min((r[i] - r[j]).norm());
        }
    }
    s
}

struct Tracker<'a> {
    p: &'a LaurentPoly2,
    r1: f64,
    r2: f64,
    opts: HarnackOptions,
    crossings: Vec<(f64, C64)>,
}

impl Tracker<'_> {
    fn interval(&mut self, ta: f64, ra: &[C64], tb: f64, rb: &[C64], depth: usize) -> Result<()> {
        if ra.len() != rb.len() {
            return Err(Error::Domain("w-degree changes along the circle".into()));
        }
        let (perm, moved) = matching(ra, rb);
        let sep = min_separation(ra).min(min_separation(rb));
        if moved < 0.25 * sep || ra.len() <= 1 {
            for (i, &j) in perm.iter().enumerate() {
                let fa = ra[i].norm() - self.r2;
                let fb = rb[j].norm() - self.r2;
                if (fa < 0.0) != (fb < 0.0) {
                    let u = fa / (fa - fb);
                    self.crossings.push((ta + u * (tb - ta), ra[i] + (rb[j] - ra[i]) * u));
                }
            }
            return Ok(());
        }
        if depth >= self.opts.max_depth {
            // two branches collide inside the interval
            let near = ra.iter().any(|w| (w.norm() - self.r2).abs() < 1e-4 * self.r2);
            if near {
                return Err(Error::Ambiguous(format!(
                    "branches collide on the torus near arg z = {ta:.6} off the real axis"
                )));
            }
            let inside = |r: &[C64]| r.iter().filter(|w| w.norm() < self.r2).count() as i64;
            if inside(ra) != inside(rb) {
                return Err(Error::Ambiguous(format!("unresolved branch collision near arg z = {ta:.6}")));
            }
            return Ok(());
        }
        let tm = 0.5 * (ta + tb);
        let rm = roots_at(self.p, C64::from_polar(self.r1, tm))?;
        self.interval(ta, ra, tm, &rm, depth + 1)?;
        self.interval(tm, &rm, tb, rb, depth + 1)
    }
}

pub fn harnack_check(p: &LaurentPoly2, r1: f64, r2: f64) -> Result<HarnackReport> {
    harnack_check_with(p, r1, r2, HarnackOptions::default())
}

/// Count the points where `{P = 0}` meets the torus `|z| = r1, |w| = r2`.
/// Roots in `w` are tracked along `|z| = r1` by matching; the sign changes
/// of `|w| − r2` give transverse crossings, and the real values `z = ±r1`
/// are checked separately for touching points (a real node if both partial
/// derivatives vanish there, a tangency to the amoeba boundary otherwise).
/// A Harnack curve has at most two such points.
pub fn harnack_check_with(p: &LaurentPoly2, r1: f64, r2: f64, opts: HarnackOptions) -> Result<HarnackReport> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Domain("radii must be positive".into()));
    }
    let n = opts.samples.max(8);
    let thetas: Vec<f64> = (0..n).map(|k| 2.0 * PI * (k as f64 + 0.5) / n as f64).collect();
    let roots: Vec<Vec<C64>> = thetas
        .iter()
        .map(|&t| roots_at(p, C64::from_polar(r1, t)))
        .collect::<Result<_>>()?;
    let mut tr = Tracker { p, r1, r2, opts, crossings: Vec::new() };
    for k in 0..n {
        let k2 = (k + 1) % n;
        let tb = if k2 == 0 { thetas[0] + 2.0 * PI } else { thetas[k2] };
        tr.interval(thetas[k], &roots[k], tb, &roots[k2], 0)?;
    }
    let crossings: Vec<(f64, C64)> = tr.crossings.into_iter().map(|(t, w)| (t.rem_euclid(2.0 * PI), w)).collect();

    let dz = p.z_derivative();
    let mut touch_points: Vec<(C64, C64)> = Vec::new();
    let mut node = false;
    for z in [C64::new(r1, 0.0), C64::new(-r1, 0.0)] {
        let cj = p.w_coefficients(z);
        let mut found: Vec<C64> = Vec::new();
        for w in roots_at(p, z)? {
            if (w.norm() - r2).abs() >= opts.touch_tol.sqrt().max(opts.touch_tol) * r2 {
                continue;
            }
            if (w.norm() - r2).abs() >= opts.touch_tol * r2 && w.im.abs() > 1e-6 * r2 {
                continue;
            }
            if found.iter().any(|f| (f - w).norm() < 1e-4 * r2) {
                continue;
            }
            found.push(w);
        }
        for w in found {
            // a nearly double root can sit up to √tol off the circle
            let jlo = p.bounds().unwrap().1 .0;
            let mut pw = C64::new(0.0, 0.0);
            for (k, &c) in cj.iter().enumerate() {
                let e = jlo + k as i32;
                pw += c * e as f64 * w.powi(e - 1);
            }
            let pz = dz.eval_unchecked(z, w);
            let scale: f64 = p
                .coeffs()
                .iter()
                .map(|(&(i, j), c)| c.norm() * r1.powi(i) * r2.powi(j))
                .sum();
            let w_on = C64::from_polar(r2, w.arg());
            let pz = if pz.norm() > 0.0 { pz } else { dz.eval_unchecked(z, w_on) };
            if (pz * z).norm() < 1e-5 * scale && (pw * w).norm() < 1e-5 * scale {
                node = true;
            }
            touch_points.push((z, w_on));
        }
    }
    // a touching point should not also be reported as a crossing
    let crossings: Vec<(f64, C64)> = crossings
        .into_iter()
        .filter(|(t, _)| {
            !touch_points
                .iter()
                .any(|(z, _)| angle_dist(*t, z.arg().rem_euclid(2.0 * PI)) < 4.0 * PI / n as f64)
        })
        .collect();
    let count = crossings.len() + touch_points.len();
    // all intersection points as (z, w); a conjugate pair may sit at real z
    let points: Vec<(C64, C64)> = crossings
        .iter()
        .map(|&(t, w)| (C64::from_polar(r1, t), w))
        .chain(touch_points.iter().copied())
        .collect();
    let conjugate = |(z1, w1): (C64, C64), (z2, w2): (C64, C64)| {
        angle_dist(z1.arg(), -z2.arg()) < 4.0 * PI / n as f64 && (w1.conj() - w2).norm() < 1e-2 * r2
    };
    let class = if count == 0 {
        HarnackClass::Empty
    } else if count == 1 && node {
        HarnackClass::RealNode
    } else if count == 1 {
        HarnackClass::BoundaryTangent
    } else if count == 2 && !node && conjugate(points[0], points[1]) {
        HarnackClass::TwoConjugate
    } else {
        HarnackClass::Excess
    };
    let pass = count <= 2 && class != HarnackClass::Excess;
    Ok(HarnackReport { r1, r2, count, class, pass, crossings, touch_points })
}

fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
