//! Full-rank lattices, lattice pairs, fundamental cells and point enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, Cone};

pub const DEFAULT_BUDGET: f64 = 1e8;

/// Determinant and inverse by Gaussian elimination with partial pivoting.
/// `m` is row-major `d x d`. Returns `None` for an exactly singular matrix.
fn det_inverse(m: &[Vec<f64>]) -> (f64, Option<Vec<Vec<f64>>>) {
    let d = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> =
        (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut det = 1.0;
    for c in 0..d {
        let p = (c..d)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        if a[p][c] == 0.0 {
            return (0.0, None);
        }
        if p != c {
            a.swap(p, c);
            inv.swap(p, c);
            det = -det;
        }
        let piv = a[c][c];
        det *= piv;
        for k in 0..d {
            a[c][k] /= piv;
            inv[c][k] /= piv;
        }
        for r in 0..d {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for k in 0..d {
                        a[r][k] -= f * a[c][k];
                        inv[r][k] -= f * inv[c][k];
                    }
                }
            }
        }
    }
    (det, Some(inv))
}

/// `offset + Σ t_j e_j`, `t ∈ ℤ^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct Lattice {
    basis: Vec<Vec<f64>>,
    offset: Vec<f64>,
    // dual[j] satisfies <dual[j], basis[k]> = δ_jk
    dual: Vec<Vec<f64>>,
    volume: f64,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    basis: Vec<Vec<f64>>,
    #[serde(default)]
    offset: Option<Vec<f64>>,
}

impl TryFrom<LatticeRepr> for Lattice {
    type Error = Error;
    fn try_from(r: LatticeRepr) -> Result<Self> {
        let d = r.basis.len();
        Lattice::new(r.basis, r.offset.unwrap_or_else(|| vec![0.0; d]))
    }
}

impl From<Lattice> for LatticeRepr {
    fn from(l: Lattice) -> Self {
        LatticeRepr { basis: l.basis, offset: Some(l.offset) }
    }
}

impl Lattice {
    pub fn new(basis: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let d = basis.len();
        if d == 0 {
            return Err(Error::invalid("lattice basis is empty"));
        }
        for v in &basis {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        if offset.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: offset.len() });
        }
        // columns of the matrix are the basis vectors
        let m: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| basis[j][i]).collect()).collect();
        let (det, inv) = det_inverse(&m);
        let max_norm = basis.iter().map(|v| norm(v)).fold(0.0, f64::max);
        let threshold = 1e-12 * max_norm.powi(d as i32);
        match inv {
            Some(inv) if det.abs() > threshold && det.is_finite() => {
                Ok(Self { basis, offset, dual: inv, volume: det.abs() })
            }
            _ => Err(Error::SingularBasis { det, threshold }),
        }
    }

    /// `a ℤ^d`.
    pub fn cubic(d: usize, a: f64) -> Result<Self> {
        let basis = (0..d).map(|i| (0..d).map(|j| if i == j { a } else { 0.0 }).collect()).collect();
        Self::new(basis, vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// `‖Λ‖`, the volume of a fundamental cell.
    pub fn cell_volume(&self) -> f64 {
        self.volume
    }

    pub fn min_basis_norm(&self) -> f64 {
        self.basis.iter().map(|v| norm(v)).fold(f64::INFINITY, f64::min)
    }

    pub fn point(&self, t: &[i64]) -> Vec<f64> {
        let mut x = self.offset.clone();
        for (tj, e) in t.iter().zip(&self.basis) {
            for (xi, ei) in x.iter_mut().zip(e) {
                *xi += *tj as f64 * ei;
            }
        }
        x
    }

    /// Real coordinates `t` with `x = offset + Σ t_j e_j`.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        self.dual.iter().map(|row| dot(row, &y)).collect()
    }

    pub fn dual_rows(&self) -> &[Vec<f64>] {
        &self.dual
    }

    pub fn with_offset(&self, offset: Vec<f64>) -> Result<Self> {
        Self::new(self.basis.clone(), offset)
    }

    /// `ε Λ`, offset included.
    pub fn scaled(&self, eps: f64) -> Result<Self> {
        Self::new(
            self.basis.iter().map(|v| v.iter().map(|x| x * eps).collect()).collect(),
            self.offset.iter().map(|x| x * eps).collect(),
        )
    }

    /// Integer box `[lo_j, hi_j]` of coordinates whose points can lie in the
    /// axis box `[xlo, xhi]`.
    fn index_box(&self, xlo: &[f64], xhi: &[f64]) -> (Vec<i64>, Vec<i64>) {
        let c = self.coords(&vec![0.0; self.dim()]);
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for (j, row) in self.dual.iter().enumerate() {
            let (mut a, mut b) = (c[j], c[j]);
            for i in 0..self.dim() {
                let (u, v) = (row[i] * xlo[i], row[i] * xhi[i]);
                a += u.min(v);
                b += u.max(v);
            }
            lo.push((a - 1e-9).floor() as i64);
            hi.push((b + 1e-9).ceil() as i64);
        }
        (lo, hi)
    }
}

pub fn make_lattice(basis: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Lattice> {
    Lattice::new(basis, offset)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    Strong,
    Weak,
    Inadmissible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePair {
    pub lambda1: Lattice,
    pub lambda2: Lattice,
    pub coupling: f64,
    pub class: PairClass,
}

impl LatticePair {
    pub fn is_strong(&self) -> bool {
        self.class == PairClass::Strong
    }
}

const PAIR_TOL: f64 = 1e-10;

pub fn classify_pair(l1: &Lattice, l2: &Lattice) -> Result<LatticePair> {
    if l1.dim() != l2.dim() {
        return Err(Error::DimensionMismatch { expected: l1.dim(), got: l2.dim() });
    }
    let d = l1.dim();
    let g: Vec<Vec<f64>> =
        (0..d).map(|j| (0..d).map(|k| dot(&l1.basis[j], &l2.basis[k])).collect()).collect();
    let c = g[0][0];
    let diag_ok = (0..d).all(|j| (g[j][j] - c).abs() <= PAIR_TOL);
    let off_ok = (0..d).all(|j| (0..d).all(|k| j == k || g[j][k].abs() <= PAIR_TOL));
    let tau = std::f64::consts::TAU;
    let class = if !(diag_ok && off_ok) || c <= PAIR_TOL {
        PairClass::Inadmissible
    } else if (c - tau).abs() <= PAIR_TOL {
        PairClass::Weak
    } else if c < tau {
        PairClass::Strong
    } else {
        PairClass::Inadmissible
    };
    Ok(LatticePair { lambda1: l1.clone(), lambda2: l2.clone(), coupling: c, class })
}

/// Fundamental cell `{anchor + Σ t_j e_j : t ∈ [0,1]^d}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parallelepiped {
    pub anchor_index: Vec<i64>,
    pub anchor: Vec<f64>,
    pub edges: Vec<Vec<f64>>,
    pub volume: f64,
    #[serde(skip)]
    dual: Vec<Vec<f64>>,
}

impl Parallelepiped {
    fn local(&self, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(&self.anchor).map(|(a, b)| a - b).collect();
        self.dual.iter().map(|row| dot(row, &y)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.local(x).iter().all(|t| (-1e-12..=1.0 + 1e-12).contains(t))
    }

    pub fn center(&self) -> Vec<f64> {
        let mut c = self.anchor.clone();
        for e in &self.edges {
            for (ci, ei) in c.iter_mut().zip(e) {
                *ci += 0.5 * ei;
            }
        }
        c
    }

    /// Half-width of the largest axis-aligned cube centred at `x` inside the
    /// closed cell (negative when `x` is outside).
    pub fn inscribed_cube_halfwidth(&self, x: &[f64]) -> f64 {
        let t = self.local(x);
        let mut r = f64::INFINITY;
        for (tj, row) in t.iter().zip(&self.dual) {
            let l1: f64 = row.iter().map(|v| v.abs()).sum();
            r = r.min(tj / l1).min((1.0 - tj) / l1);
        }
        r
    }
}

fn snap(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() <= 1e-9 * t.abs().max(1.0) {
        r
    } else {
        t
    }
}

/// Cell containing `x0`; on a face the anchor coordinate is the smaller one.
pub fn parallelepiped_containing(l: &Lattice, x0: &[f64]) -> Parallelepiped {
    let t = l.coords(x0);
    let anchor_index: Vec<i64> = t.iter().map(|v| snap(*v).ceil() as i64 - 1).collect();
    Parallelepiped {
        anchor: l.point(&anchor_index),
        anchor_index,
        edges: l.basis.clone(),
        volume: l.volume,
        dual: l.dual.clone(),
    }
}

/// Cell of the translate of `l` that has `x0` at its centre. The index is
/// that of the untranslated cell containing `x0`.
pub fn parallelepiped_centered(l: &Lattice, x0: &[f64]) -> Parallelepiped {
    let mut p = parallelepiped_containing(l, x0);
    let mut a = x0.to_vec();
    for e in &p.edges {
        for (ai, ei) in a.iter_mut().zip(e) {
            *ai -= 0.5 * ei;
        }
    }
    p.anchor = a;
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticePoint {
    pub index: Vec<i64>,
    pub point: Vec<f64>,
}

fn for_each_index(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    let d = lo.len();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut t = lo.to_vec();
    loop {
        f(&t);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if t[k] < hi[k] {
                t[k] += 1;
                break;
            }
            t[k] = lo[k];
        }
    }
}

fn candidate_count(lo: &[i64], hi: &[i64]) -> f64 {
    lo.iter().zip(hi).map(|(a, b)| (b - a + 1).max(0) as f64).product()
}

/// Points of `l` in `cone` with `r_min < |ξ| <= r_max`, ordered lexicographically
/// in integer coordinates.
pub fn points_in_cone_shell(
    l: &Lattice,
    cone: &Cone,
    r_min: f64,
    r_max: f64,
    budget: f64,
) -> Result<Vec<LatticePoint>> {
    if cone.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), got: cone.dim() });
    }
    if !(r_min >= 0.0 && r_min < r_max) {
        return Err(Error::invalid(format!("need 0 <= r_min < r_max, got ({r_min}, {r_max}]")));
    }
    let d = l.dim();
    let mut xlo = vec![0.0; d];
    let mut xhi = vec![0.0; d];
    for i in 0..d {
        let mut u = vec![0.0; d];
        u[i] = 1.0;
        xhi[i] = cone.support_value(&u, r_max);
        u[i] = -1.0;
        xlo[i] = -cone.support_value(&u, r_max);
    }
    let (lo, hi) = l.index_box(&xlo, &xhi);
    let candidates = candidate_count(&lo, &hi);
    if candidates > budget {
        return Err(Error::BudgetExceeded { candidates, budget });
    }
    let mut out = Vec::new();
    for_each_index(&lo, &hi, |t| {
        let x = l.point(t);
        let r = norm(&x);
        if r > r_min && r <= r_max && cone.contains(&x) {
            out.push(LatticePoint { index: t.to_vec(), point: x });
        }
    });
    Ok(out)
}

/// Points of `l` with `|ξ| <= r`, origin included when it is a lattice point.
pub fn points_in_ball(l: &Lattice, r: f64, budget: f64) -> Result<Vec<LatticePoint>> {
    let d = l.dim();
    let (lo, hi) = l.index_box(&vec![-r; d], &vec![r; d]);
    let candidates = candidate_count(&lo, &hi);
    if candidates > budget {
        return Err(Error::BudgetExceeded { candidates, budget });
    }
    let mut out = Vec::new();
    for_each_index(&lo, &hi, |t| {
        let x = l.point(t);
        if norm(&x) <= r {
            out.push(LatticePoint { index: t.to_vec(), point: x });
        }
    });
    Ok(out)
}

/// Points of `l` inside the closed axis box, lexicographic order.
pub fn points_in_box(l: &Lattice, lo: &[f64], hi: &[f64], budget: f64) -> Result<Vec<LatticePoint>> {
    let (ilo, ihi) = l.index_box(lo, hi);
    let candidates = candidate_count(&ilo, &ihi);
    if candidates > budget {
        return Err(Error::BudgetExceeded { candidates, budget });
    }
    let mut out = Vec::new();
    for_each_index(&ilo, &ihi, |t| {
        let x = l.point(t);
        if x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b) {
            out.push(LatticePoint { index: t.to_vec(), point: x });
        }
    });
    Ok(out)
}
