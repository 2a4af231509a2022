//! Laurent polynomials in one and two variables with complex coefficients.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients below this fraction of the largest one are dropped.
pub const DEFAULT_PRUNE: f64 = 1e-12;

/// Default tolerance on the relative re-evaluation residual of an interpolation.
pub const DEFAULT_INTERP_TOL: f64 = 1e-9;

fn prune_map<K: Ord + Copy>(m: &mut BTreeMap<K, C64>, rel: f64) {
    let big = m.values().map(|c| c.norm()).fold(0.0, f64::max);
    let cut = big * rel;
    m.retain(|_, c| c.norm() > cut && c.norm() > 0.0);
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentPoly1 {
    coeffs: BTreeMap<i32, C64>,
}

impl LaurentPoly1 {
    /// Build from `(exponent, coefficient)` pairs; repeated exponents add up.
    /// Exact zeros are dropped, nothing else is pruned.
    pub fn from_terms<I: IntoIterator<Item = (i32, C64)>>(terms: I) -> Self {
        let mut coeffs = BTreeMap::new();
        for (k, c) in terms {
            *coeffs.entry(k).or_insert(C64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c: &mut C64| c.norm() > 0.0);
        LaurentPoly1 { coeffs }
    }

    pub fn from_real<I: IntoIterator<Item = (i32, f64)>>(terms: I) -> Self {
        Self::from_terms(terms.into_iter().map(|(k, c)| (k, C64::new(c, 0.0))))
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, C64> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i32) -> C64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree_hi(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn degree_lo(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    /// Drop coefficients below `rel` times the largest magnitude.
    pub fn pruned(mut self, rel: f64) -> Self {
        prune_map(&mut self.coeffs, rel);
        self
    }

    /// `Σ c_k z^k` by Horner's rule on the shifted polynomial.
    pub fn eval(&self, z: C64) -> Result<C64> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("Laurent polynomial evaluated at z = 0".into()));
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: C64) -> C64 {
        let (lo, hi) = match (self.degree_lo(), self.degree_hi()) {
            (Some(l), Some(h)) => (l, h),
            _ => return C64::new(0.0, 0.0),
        };
        let mut acc = C64::new(0.0, 0.0);
        for k in (lo..=hi).rev() {
            acc = acc * z + self.coeff(k);
        }
        acc * z.powi(lo)
    }

    /// True iff `c[k] = c[−k]` for every k, up to `tol` relative to the largest coefficient.
    pub fn is_reciprocal(&self, tol: f64) -> bool {
        let big = self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max);
        self.coeffs
            .iter()
            .all(|(&k, &c)| (c - self.coeff(-k)).norm() <= tol * big.max(1e-300))
    }

    /// Dense ascending coefficient vector of `z^{−lo} p(z)` together with `lo`.
    pub fn dense(&self) -> (i32, Vec<C64>) {
        match (self.degree_lo(), self.degree_hi()) {
            (Some(lo), Some(hi)) => (lo, (lo..=hi).map(|k| self.coeff(k)).collect()),
            _ => (0, vec![]),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::new();
        for (&a, &ca) in &self.coeffs {
            for (&b, &cb) in &other.coeffs {
                terms.push((a + b, ca * cb));
            }
        }
        Self::from_terms(terms)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.coeffs.iter().chain(other.coeffs.iter()).map(|(&k, &c)| (k, c)))
    }

    pub fn to_doc(&self) -> PolyDoc {
        PolyDoc {
            var: 1,
            terms: self
                .coeffs
                .iter()
                .map(|(&k, c)| TermDoc { e: vec![k], re: c.re, im: c.im })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentPoly2 {
    coeffs: BTreeMap<(i32, i32), C64>,
}

impl LaurentPoly2 {
    pub fn from_terms<I: IntoIterator<Item = ((i32, i32), C64)>>(terms: I) -> Self {
        let mut coeffs = BTreeMap::new();
        for (k, c) in terms {
            *coeffs.entry(k).or_insert(C64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c: &mut C64| c.norm() > 0.0);
        LaurentPoly2 { coeffs }
    }

    pub fn from_real<I: IntoIterator<Item = ((i32, i32), f64)>>(terms: I) -> Self {
        Self::from_terms(terms.into_iter().map(|(k, c)| (k, C64::new(c, 0.0))))
    }

    pub fn coeffs(&self) -> &BTreeMap<(i32, i32), C64> {
        &self.coeffs
    }

    pub fn coeff(&self, i: i32, j: i32) -> C64 {
        self.coeffs.get(&(i, j)).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support(&self) -> Vec<(i32, i32)> {
        self.coeffs.keys().copied().collect()
    }

    pub fn pruned(mut self, rel: f64) -> Self {
        prune_map(&mut self.coeffs, rel);
        self
    }

    /// Exponent bounds `((ilo, ihi), (jlo, jhi))`.
    pub fn bounds(&self) -> Option<((i32, i32), (i32, i32))> {
        if self.coeffs.is_empty() {
            return None;
        }
        let ilo = self.coeffs.keys().map(|k| k.0).min().unwrap();
        let ihi = self.coeffs.keys().map(|k| k.0).max().unwrap();
        let jlo = self.coeffs.keys().map(|k| k.1).min().unwrap();
        let jhi = self.coeffs.keys().map(|k| k.1).max().unwrap();
        Some(((ilo, ihi), (jlo, jhi)))
    }

    pub fn eval(&self, z: C64, w: C64) -> Result<C64> {
        if z.norm() == 0.0 || w.norm() == 0.0 {
            return Err(Error::Domain("Laurent polynomial evaluated with a zero coordinate".into()));
        }
        Ok(self.eval_unchecked(z, w))
    }

    /// Horner in z for each power of w, then Horner in w.
    pub(crate) fn eval_unchecked(&self, z: C64, w: C64) -> C64 {
        let Some(((ilo, _), (jlo, jhi))) = self.bounds() else {
            return C64::new(0.0, 0.0);
        };
        let rows = self.w_coefficients(z);
        let mut acc = C64::new(0.0, 0.0);
        for j in (0..=(jhi - jlo) as usize).rev() {
            acc = acc * w + rows[j];
        }
        let _ = ilo;
        acc * w.powi(jlo)
    }

    /// For fixed z, the coefficients `c_j(z)` of `P(z, w) = Σ_j c_j(z) w^j`,
    /// indexed from `jlo` upward.
    pub fn w_coefficients(&self, z: C64) -> Vec<C64> {
        let Some(((ilo, ihi), (jlo, jhi))) = self.bounds() else {
            return vec![];
        };
        let nj = (jhi - jlo + 1) as usize;
        let ni = (ihi - ilo + 1) as usize;
        let mut grid = vec![vec![C64::new(0.0, 0.0); ni]; nj];
        for (&(i, j), &c) in &self.coeffs {
            grid[(j - jlo) as usize][(i - ilo) as usize] = c;
        }
        let zlo = z.powi(ilo);
        grid.iter()
            .map(|row| {
                let mut acc = C64::new(0.0, 0.0);
                for &c in row.iter().rev() {
                    acc = acc * z + c;
                }
                acc * zlo
            })
            .collect()
    }

    /// Swap the roles of the two variables.
    pub fn transposed(&self) -> Self {
        LaurentPoly2 { coeffs: self.coeffs.iter().map(|(&(i, j), &c)| ((j, i), c)).collect() }
    }

    pub fn is_reciprocal(&self, tol: f64) -> bool {
        let big = self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max);
        self.coeffs
            .iter()
            .all(|(&(i, j), &c)| (c - self.coeff(-i, -j)).norm() <= tol * big.max(1e-300))
    }

    pub fn z_derivative(&self) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(&(i, j), &c)| ((i - 1, j), c * i as f64)))
    }

    pub fn w_derivative(&self) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(&(i, j), &c)| ((i, j - 1), c * j as f64)))
    }

    pub fn shifted(&self, a: i32, b: i32) -> Self {
        LaurentPoly2 { coeffs: self.coeffs.iter().map(|(&(i, j), &c)| ((i + a, j + b), c)).collect() }
    }

    pub fn to_doc(&self) -> PolyDoc {
        PolyDoc {
            var: 2,
            terms: self
                .coeffs
                .iter()
                .map(|(&(i, j), c)| TermDoc { e: vec![i, j], re: c.re, im: c.im })
                .collect(),
        }
    }
}

/// Serialized form: `{"var": 1|2, "terms": [{"e": [i(,j)], "re": x, "im": y}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyDoc {
    pub var: u8,
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub e: Vec<i32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Either kind of polynomial, as read from or written to JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum Poly {
    One(LaurentPoly1),
    Two(LaurentPoly2),
}

impl Poly {
    pub fn to_doc(&self) -> PolyDoc {
        match self {
            Poly::One(p) => p.to_doc(),
            Poly::Two(p) => p.to_doc(),
        }
    }

    pub fn from_doc(doc: &PolyDoc) -> Result<Self> {
        match doc.var {
            1 => {
                let mut terms = Vec::new();
                for t in &doc.terms {
                    if t.e.len() != 1 {
                        return Err(Error::Validation(format!("term {:?} must have one exponent", t.e)));
                    }
                    terms.push((t.e[0], C64::new(t.re, t.im)));
                }
                Ok(Poly::One(LaurentPoly1::from_terms(terms)))
            }
            2 => {
                let mut terms = Vec::new();
                for t in &doc.terms {
                    if t.e.len() != 2 {
                        return Err(Error::Validation(format!("term {:?} must have two exponents", t.e)));
                    }
                    terms.push(((t.e[0], t.e[1]), C64::new(t.re, t.im)));
                }
                Ok(Poly::Two(LaurentPoly2::from_terms(terms)))
            }
            v => Err(Error::Validation(format!("unsupported variable count {v}"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PolyDoc = serde_json::from_str(text).map_err(|e| Error::Validation(e.to_string()))?;
        Self::from_doc(&doc)
    }
}

fn unit_root(n: usize, k: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (k % n) as f64 / n as f64)
}

/// Recover `Σ_{lo ≤ k ≤ hi} c_k z^k` from its values at `z_k = r·e^{2πik/N}`.
///
/// Needs `N > hi − lo`; extra samples are used to detect aliasing: the
/// relative re-evaluation residual must stay below `tol`.
pub fn interpolate_1d(values: &[C64], radius: f64, lo: i32, hi: i32, tol: f64) -> Result<LaurentPoly1> {
    let n = values.len();
    if hi < lo || n <= (hi - lo) as usize {
        return Err(Error::Domain(format!(
            "{} samples cannot resolve the exponent range [{lo}, {hi}]",
            n
        )));
    }
    if !(radius > 0.0) || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("interpolation needs a positive radius and finite values".into()));
    }
    let mut terms = Vec::new();
    for k in lo..=hi {
        let kk = k.rem_euclid(n as i32) as usize;
        let mut acc = C64::new(0.0, 0.0);
        for (t, v) in values.iter().enumerate() {
            acc += v * unit_root(n, (n - (kk * t) % n) % n);
        }
        terms.push((k, acc / (n as f64 * radius.powi(k))));
    }
    let p = LaurentPoly1::from_terms(terms);
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut resid: f64 = 0.0;
    for (t, v) in values.iter().enumerate() {
        let z = unit_root(n, t) * radius;
        resid = resid.max((p.eval_unchecked(z) - v).norm() / scale);
    }
    if resid > tol {
        return Err(Error::Interpolation { residual: resid, tol });
    }
    Ok(p.pruned(DEFAULT_PRUNE))
}

/// Two-variable version on the product grid `values[a][b]` at
/// `(r1 ω1^a, r2 ω2^b)`; separable DFT, then a full re-evaluation check.
pub fn interpolate_2d(
    values: &[Vec<C64>],
    radii: (f64, f64),
    bounds: ((i32, i32), (i32, i32)),
    tol: f64,
) -> Result<LaurentPoly2> {
    let n1 = values.len();
    let n2 = values.first().map(|r| r.len()).unwrap_or(0);
    let ((ilo, ihi), (jlo, jhi)) = bounds;
    if values.iter().any(|r| r.len() != n2) {
        return Err(Error::Domain("ragged interpolation grid".into()));
    }
    if ihi < ilo || jhi < jlo || n1 <= (ihi - ilo) as usize || n2 <= (jhi - jlo) as usize {
        return Err(Error::Domain(format!(
            "a {n1}x{n2} grid cannot resolve exponents [{ilo},{ihi}]x[{jlo},{jhi}]"
        )));
    }
    let (r1, r2) = radii;
    if !(r1 > 0.0 && r2 > 0.0) || values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("interpolation needs positive radii and finite values".into()));
    }
    // transform along b for every a
    let js: Vec<i32> = (jlo..=jhi).collect();
    let half: Vec<Vec<C64>> = values
        .iter()
        .map(|row| {
            js.iter()
                .map(|&j| {
                    let jj = j.rem_euclid(n2 as i32) as usize;
                    let mut acc = C64::new(0.0, 0.0);
                    for (t, v) in row.iter().enumerate() {
                        acc += v * unit_root(n2, (n2 - (jj * t) % n2) % n2);
                    }
                    acc / (n2 as f64 * r2.powi(j))
                })
                .collect()
        })
        .collect();
    let mut terms = Vec::new();
    for i in ilo..=ihi {
        let ii = i.rem_euclid(n1 as i32) as usize;
        for (jx, &j) in js.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (t, row) in half.iter().enumerate() {
                acc += row[jx] * unit_root(n1, (n1 - (ii * t) % n1) % n1);
            }
            terms.push(((i, j), acc / (n1 as f64 * r1.powi(i))));
        }
    }
    let p = LaurentPoly2::from_terms(terms);
    let scale = values.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut resid: f64 = 0.0;
    for (a, row) in values.iter().enumerate() {
        let z = unit_root(n1, a) * r1;
        for (b, v) in row.iter().enumerate() {
            let w = unit_root(n2, b) * r2;
            resid = resid.max((p.eval_unchecked(z, w) - v).norm() / scale);
        }
    }
    if resid > tol {
        return Err(Error::Interpolation { residual: resid, tol });
    }
    Ok(p.pruned(DEFAULT_PRUNE))
}

/// Convex hull of the exponent support, counter-clockwise, without
/// collinear boundary points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    pub vertices: Vec<(i32, i32)>,
}

fn cross(o: (i32, i32), a: (i32, i32), b: (i32, i32)) -> i64 {
    (a.0 - o.0) as i64 * (b.1 - o.1) as i64 - (a.1 - o.1) as i64 * (b.0 - o.0) as i64
}

pub fn newton_polygon(p: &LaurentPoly2) -> Result<NewtonPolygon> {
    let mut pts = p.support();
    if pts.is_empty() {
        return Err(Error::Domain("Newton polygon of the zero polynomial".into()));
    }
    pts.sort();
    pts.dedup();
    if pts.len() == 1 {
        return Ok(NewtonPolygon { vertices: pts });
    }
    let mut lower: Vec<(i32, i32)> = Vec::new();
    for &q in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<(i32, i32)> = Vec::new();
    for &q in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    // start at the lowest-then-leftmost vertex for a canonical order
    let start = lower
        .iter()
        .enumerate()
        .min_by_key(|(_, v)| (v.1, v.0))
        .map(|(i, _)| i)
        .unwrap();
    lower.rotate_left(start);
    Ok(NewtonPolygon { vertices: lower })
}

impl NewtonPolygon {
    /// Number of vertices; 1 for a point, 2 for a segment.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn has_interior(&self) -> bool {
        self.vertices.len() >= 3
    }

    pub fn is_centrally_symmetric(&self) -> bool {
        let mut a = self.vertices.clone();
        let mut b: Vec<(i32, i32)> = self.vertices.iter().map(|&(i, j)| (-i, -j)).collect();
        a.sort();
        b.sort();
        a == b
    }

    /// Half-planes `n·q ≤ b` describing a 2-dimensional polygon (outward normals).
    pub fn half_planes(&self) -> Vec<((f64, f64), f64)> {
        let n = self.vertices.len();
        if n < 3 {
            return vec![];
        }
        (0..n)
            .map(|k| {
                let a = self.vertices[k];
                let b = self.vertices[(k + 1) % n];
                let normal = ((b.1 - a.1) as f64, -((b.0 - a.0) as f64));
                (normal, normal.0 * a.0 as f64 + normal.1 * a.1 as f64)
            })
            .collect()
    }

    /// Signed slack: min over edges of `(b − n·q)/|n|`; positive inside.
    pub fn slack(&self, s: f64, t: f64) -> f64 {
        if self.vertices.len() < 3 {
            return f64::NEG_INFINITY;
        }
        self.half_planes()
            .iter()
            .map(|&((nx, ny), b)| (b - nx * s - ny * t) / (nx * nx + ny * ny).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, s: f64, t: f64, tol: f64) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => {
                let v = self.vertices[0];
                (s - v.0 as f64).hypot(t - v.1 as f64) <= tol
            }
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let (dx, dy) = ((b.0 - a.0) as f64, (b.1 - a.1) as f64);
                let len2 = dx * dx + dy * dy;
                let u = ((s - a.0 as f64) * dx + (t - a.1 as f64) * dy) / len2;
                let u = u.clamp(0.0, 1.0);
                (s - a.0 as f64 - u * dx).hypot(t - a.1 as f64 - u * dy) <= tol
            }
            _ => self.slack(s, t) >= -tol,
        }
    }

    /// Support function `max_{q ∈ N} q·d`.
    pub fn support_value(&self, d: (f64, f64)) -> f64 {
        self.vertices
            .iter()
            .map(|&(i, j)| i as f64 * d.0 + j as f64 * d.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn bounding_box(&self) -> ((i32, i32), (i32, i32)) {
        let xs = self.vertices.iter().map(|v| v.0);
        let ys = self.vertices.iter().map(|v| v.1);
        ((xs.clone().min().unwrap(), xs.max().unwrap()), (ys.clone().min().unwrap(), ys.max().unwrap()))
    }
}

fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Rewrite `Σ_{k=1}^m C_k (2 − X − 1/X)^k` as `D_0 + Σ_{j≥1} D_j (X^j + X^{−j})`.
/// `c[k−1]` holds `C_k`; the result has `m + 1` entries, `D_0` being the
/// constant term counted once.
pub fn basis_change(c: &[f64]) -> Vec<f64> {
    let m = c.len();
    (0..=m)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let s: f64 = (j.max(1)..=m)
                .map(|k| c[k - 1] * binom(2 * k as u64, (k - j) as u64))
                .sum();
            sign * s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn eval_and_zero_point() {
        let p = LaurentPoly1::from_real([(-1, -1.0), (0, 2.0), (1, -1.0)]);
        assert!(p.eval(c(1.0)).unwrap().norm() < 1e-15);
        assert!(p.eval(c(0.0)).is_err());
        let q = LaurentPoly2::from_real([((0, 0), 4.0), ((1, 0), -1.0), ((-1, 0), -1.0), ((0, 1), -1.0), ((0, -1), -1.0)]);
        assert!((q.eval(c(-1.0), c(-1.0)).unwrap() - c(8.0)).norm() < 1e-14);
    }

    #[test]
    fn interpolation_recovers_two_minus_z_minus_inverse() {
        let vals: Vec<C64> = (0..4)
            .map(|k| {
                let z = unit_root(4, k);
                2.0 - z - 1.0 / z
            })
            .collect();
        let p = interpolate_1d(&vals, 1.0, -1, 1, 1e-12).unwrap();
        assert_eq!(p.coeffs().len(), 3);
        assert!((p.coeff(-1) + 1.0).norm() < 1e-14);
        assert!((p.coeff(0) - 2.0).norm() < 1e-14);
    }

    #[test]
    fn aliasing_is_detected() {
        // z^3 cannot be represented in [-1, 1]
        let vals: Vec<C64> = (0..8).map(|k| unit_root(8, k).powi(3)).collect();
        assert!(matches!(interpolate_1d(&vals, 1.0, -1, 1, 1e-9), Err(Error::Interpolation { .. })));
    }

    #[test]
    fn square_grid_polygon_and_constant() {
        let q = LaurentPoly2::from_real([((0, 0), 4.0), ((1, 0), -1.0), ((-1, 0), -1.0), ((0, 1), -1.0), ((0, -1), -1.0)]);
        let n = newton_polygon(&q).unwrap();
        assert_eq!(n.vertices, vec![(0, -1), (1, 0), (0, 1), (-1, 0)]);
        assert!(n.is_centrally_symmetric());
        let k = newton_polygon(&LaurentPoly2::from_real([((0, 0), 3.0)])).unwrap();
        assert_eq!(k.vertices, vec![(0, 0)]);
        assert!(newton_polygon(&LaurentPoly2::default()).is_err());
    }

    #[test]
    fn basis_change_small_cases() {
        assert_eq!(basis_change(&[1.0]), vec![2.0, -1.0]);
        assert_eq!(basis_change(&[0.0, 1.0]), vec![6.0, -4.0, 1.0]);
        assert_eq!(basis_change(&[0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn polygon_membership() {
        let n = NewtonPolygon { vertices: vec![(0, -1), (1, 0), (0, 1), (-1, 0)] };
        assert!(n.contains(0.5, 0.5, 1e-12));
        assert!(!n.contains(0.6, 0.5, 1e-12));
        assert!((n.support_value((1.0, 1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let p = Poly::Two(LaurentPoly2::from_real([((1, -1), 2.5), ((0, 0), -1.0)]));
        let text = serde_json::to_string(&p.to_doc()).unwrap();
        assert_eq!(Poly::from_json(&text).unwrap(), p);
    }
}
