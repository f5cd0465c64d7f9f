//! Circular cones in frequency space and polynomially moderate weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Angle between two nonzero vectors, computed with atan2 so that small
/// angles keep full precision.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return f64::NAN;
    }
    let c = dot(a, b) / (na * nb);
    let s2: f64 = a
        .iter()
        .map(|x| x / na)
        .zip(b.iter().map(|y| y / nb))
        .map(|(x, y)| y - c * x)
        .map(|v| v * v)
        .sum();
    s2.sqrt().atan2(c)
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::invalid("box has lo > hi on some axis"));
        }
        Ok(Self { lo, hi })
    }

    /// Cube of half-width `r` around `center`.
    pub fn cube(center: &[f64], r: f64) -> Self {
        Self {
            lo: center.iter().map(|c| c - r).collect(),
            hi: center.iter().map(|c| c + r).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Every face of `self` lies strictly inside `outer`.
    pub fn strictly_inside(&self, outer: &AxisBox) -> bool {
        self.dim() == outer.dim()
            && (0..self.dim()).all(|i| outer.lo[i] < self.lo[i] && self.hi[i] < outer.hi[i])
    }

    pub fn intersect(&self, other: &AxisBox) -> Option<AxisBox> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).all(|(a, b)| a <= b) {
            Some(AxisBox { lo, hi })
        } else {
            None
        }
    }

    /// Norm of the corner farthest from the origin.
    pub fn corner_extent(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_side(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }
}

/// Open circular cone `{ξ ≠ 0 : angle(ξ, axis) < aperture}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeRepr", into = "ConeRepr")]
pub struct Cone {
    axis: Vec<f64>,
    aperture: f64,
}

#[derive(Serialize, Deserialize)]
struct ConeRepr {
    axis: Vec<f64>,
    aperture_deg: f64,
}

impl TryFrom<ConeRepr> for Cone {
    type Error = Error;
    fn try_from(r: ConeRepr) -> Result<Self> {
        Cone::from_degrees(&r.axis, r.aperture_deg)
    }
}

impl From<Cone> for ConeRepr {
    fn from(c: Cone) -> Self {
        ConeRepr { aperture_deg: c.aperture.to_degrees(), axis: c.axis }
    }
}

impl Cone {
    /// `aperture` is the half-angle in radians. The axis is normalised.
    pub fn new(axis: &[f64], aperture: f64) -> Result<Self> {
        let n = norm(axis);
        if axis.is_empty() || !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("cone axis must be a nonzero finite vector"));
        }
        if !(aperture > 0.0 && aperture < std::f64::consts::PI) {
            return Err(Error::invalid(format!(
                "cone aperture must lie in (0, 180) degrees, got {}",
                aperture.to_degrees()
            )));
        }
        Ok(Self { axis: axis.iter().map(|v| v / n).collect(), aperture })
    }

    pub fn from_degrees(axis: &[f64], aperture_deg: f64) -> Result<Self> {
        Self::new(axis, aperture_deg.to_radians())
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn dim(&self) -> usize {
        self.axis.len()
    }

    pub fn with_aperture(&self, aperture: f64) -> Result<Self> {
        Self::new(&self.axis, aperture)
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        if xi.len() != self.axis.len() || xi.iter().all(|v| *v == 0.0) {
            return false;
        }
        angle_between(xi, &self.axis) < self.aperture
    }

    /// `closure(self) \ 0` lies inside `outer`.
    pub fn compactly_contained_in(&self, outer: &Cone) -> bool {
        self.dim() == outer.dim()
            && angle_between(&self.axis, &outer.axis) + self.aperture < outer.aperture
    }

    /// Largest value of `<x, u>` over the closed sector `{x in cone, |x| <= r}`
    /// for a unit vector `u`.
    pub(crate) fn support_value(&self, u: &[f64], r: f64) -> f64 {
        let a = angle_between(u, &self.axis);
        if a <= self.aperture {
            r
        } else {
            r * (a - self.aperture).cos().max(0.0)
        }
    }
}

pub fn cone_contains(cone: &Cone, xi: &[f64]) -> bool {
    cone.contains(xi)
}

pub fn compactly_contained(inner: &Cone, outer: &Cone) -> bool {
    inner.compactly_contained_in(outer)
}

/// `⟨ξ⟩ = (1 + |ξ|²)^{1/2}`.
pub fn bracket(xi: &[f64]) -> f64 {
    (1.0 + dot(xi, xi)).sqrt()
}

/// Positive frequency weight ω(ξ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    /// `⟨ξ⟩^s`.
    BracketPower { s: f64 },
    /// `Π_i ⟨ξ_i⟩^{s_i}`, one exponent per axis.
    Product { s: Vec<f64> },
    /// Radial table, log-linear interpolation in `|ξ|`, constant outside the table.
    Table { radii: Vec<f64>, values: Vec<f64>, moderating_exponent: f64 },
}

impl Weight {
    pub fn bracket_power(s: f64) -> Self {
        Weight::BracketPower { s }
    }

    pub fn unit() -> Self {
        Weight::BracketPower { s: 0.0 }
    }

    pub fn table(radii: Vec<f64>, values: Vec<f64>, moderating_exponent: f64) -> Result<Self> {
        if radii.is_empty() || radii.len() != values.len() {
            return Err(Error::invalid("weight table needs matching, nonempty radii and values"));
        }
        if radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("weight table radii must be strictly increasing"));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("weight table values must be positive"));
        }
        Ok(Weight::Table { radii, values, moderating_exponent })
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        match self {
            Weight::BracketPower { s } => {
                if *s == 0.0 {
                    1.0
                } else {
                    (1.0 + dot(xi, xi)).powf(0.5 * s)
                }
            }
            Weight::Product { s } => xi
                .iter()
                .zip(s)
                .map(|(x, e)| (1.0 + x * x).powf(0.5 * e))
                .product(),
            Weight::Table { radii, values, .. } => {
                let r = norm(xi);
                let n = radii.len();
                if r <= radii[0] {
                    return values[0];
                }
                if r >= radii[n - 1] {
                    return values[n - 1];
                }
                let i = radii.partition_point(|v| *v <= r) - 1;
                let t = (r - radii[i]) / (radii[i + 1] - radii[i]);
                (values[i].ln() * (1.0 - t) + values[i + 1].ln() * t).exp()
            }
        }
    }

    /// Exponent `m` such that ω is `⟨·⟩^m`-moderate.
    pub fn moderating_exponent(&self) -> f64 {
        match self {
            Weight::BracketPower { s } => s.abs(),
            Weight::Product { s } => s.iter().map(|v| v.abs()).sum(),
            Weight::Table { moderating_exponent, .. } => *moderating_exponent,
        }
    }

    /// The weight multiplied by `⟨ξ⟩^t`, when that stays in closed form.
    pub fn shifted(&self, t: f64) -> Option<Weight> {
        match self {
            Weight::BracketPower { s } => Some(Weight::BracketPower { s: s + t }),
            _ => None,
        }
    }
}

pub fn weight_eval(w: &Weight, xi: &[f64]) -> f64 {
    w.eval(xi)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// `n` deterministic Halton points in `b`. The first point is the lower corner.
pub(crate) fn halton_points(b: &AxisBox, n: usize, skip: usize) -> Vec<Vec<f64>> {
    let d = b.dim();
    (0..n)
        .map(|i| {
            (0..d)
                .map(|k| {
                    let u = radical_inverse((i + skip) as u64, PRIMES[k % PRIMES.len()]);
                    b.lo[k] + u * (b.hi[k] - b.lo[k])
                })
                .collect()
        })
        .collect()
}

/// Largest observed `ω(ξ+η) / (ω(ξ) v(η))` over `n²` pairs drawn from `b`.
pub fn check_moderate(w: &Weight, v: &Weight, b: &AxisBox, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("check_moderate needs n >= 1"));
    }
    let xs = halton_points(b, n, 0);
    let ys = halton_points(b, n, 7 * n + 3);
    let mut worst = 0.0f64;
    let mut sum = vec![0.0; b.dim()];
    for x in &xs {
        let wx = w.eval(x);
        for y in &ys {
            for k in 0..sum.len() {
                sum[k] = x[k] + y[k];
            }
            worst = worst.max(w.eval(&sum) / (wx * v.eval(y)));
        }
    }
    Ok(worst)
}
