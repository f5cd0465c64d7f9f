use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{for_each_in_box, GridSignal};
use crate::error::{Error, Result};
use crate::geometry::AxisBox;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "order", rename_all = "snake_case")]
pub enum Smoothness {
    /// C^∞ transition built from `e^{-1/t}`.
    Exp,
    /// Polynomial smoothstep of class C^m.
    Spline(u32),
}

impl Default for Smoothness {
    fn default() -> Self {
        Smoothness::Exp
    }
}

fn e_inv(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Monotone step from 0 at `t <= 0` to 1 at `t >= 1`.
pub(crate) fn smooth_step(t: f64, s: Smoothness) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    match s {
        Smoothness::Exp => {
            let a = e_inv(t);
            a / (a + e_inv(1.0 - t))
        }
        Smoothness::Spline(m) => {
            let m = m as u64;
            let mut acc = 0.0;
            for n in 0..=m {
                acc += binom(m + n, n) * binom(2 * m + 1, m - n) * (-t).powi(n as i32);
            }
            t.powi(m as i32 + 1) * acc
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowKind {
    Zero { d: usize },
    /// 1 on `inner`, 0 outside `outer`, tensor product of smooth steps.
    Cutoff { inner: AxisBox, outer: AxisBox, smoothness: Smoothness },
    /// `Π_i (β/2π) g(y_i) / Σ_j g(y_i - αj)` with `g(t) = exp(-1/(1 - (2t/α₁)²))`.
    Partition { d: usize, alpha: f64, alpha1: f64, beta: f64 },
}

fn bump_g(t: f64, alpha1: f64) -> f64 {
    let u = 2.0 * t / alpha1;
    let v = 1.0 - u * u;
    if v > 0.0 {
        (-1.0 / v).exp()
    } else {
        0.0
    }
}

impl WindowKind {
    fn dim(&self) -> usize {
        match self {
            WindowKind::Zero { d } | WindowKind::Partition { d, .. } => *d,
            WindowKind::Cutoff { inner, .. } => inner.dim(),
        }
    }

    fn axis_factor(&self, k: usize, y: f64) -> f64 {
        match self {
            WindowKind::Zero { .. } => 0.0,
            WindowKind::Cutoff { inner, outer, smoothness } => {
                let (a, b, lo, hi) = (outer.lo[k], inner.lo[k], inner.hi[k], outer.hi[k]);
                if y >= b && y <= lo {
                    1.0
                } else if y <= a || y >= hi {
                    0.0
                } else if y < b {
                    smooth_step((y - a) / (b - a), *smoothness)
                } else {
                    smooth_step((hi - y) / (hi - lo), *smoothness)
                }
            }
            WindowKind::Partition { alpha, alpha1, beta, .. } => {
                let g = bump_g(y, *alpha1);
                if g == 0.0 {
                    return 0.0;
                }
                let r = 0.5 * alpha1;
                let j0 = ((y - r) / alpha).floor() as i64;
                let j1 = ((y + r) / alpha).ceil() as i64;
                let s: f64 = (j0..=j1).map(|j| bump_g(y - *alpha * j as f64, *alpha1)).sum();
                beta / std::f64::consts::TAU * g / s
            }
        }
    }

    fn support(&self) -> AxisBox {
        match self {
            WindowKind::Zero { d } => AxisBox::cube(&vec![0.0; *d], 0.0),
            WindowKind::Cutoff { outer, .. } => outer.clone(),
            WindowKind::Partition { d, alpha1, .. } => AxisBox::cube(&vec![0.0; *d], 0.5 * alpha1),
        }
    }
}

/// `amplitude · kind((x - shift) / scale)`; real valued, compactly supported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpWindow {
    pub kind: WindowKind,
    pub shift: Vec<f64>,
    pub scale: f64,
    pub amplitude: f64,
}

impl BumpWindow {
    pub fn from_kind(kind: WindowKind) -> Self {
        let d = kind.dim();
        Self { kind, shift: vec![0.0; d], scale: 1.0, amplitude: 1.0 }
    }

    pub fn zero(d: usize) -> Self {
        Self::from_kind(WindowKind::Zero { d })
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, WindowKind::Zero { .. }) || self.amplitude == 0.0
    }

    pub fn nonnegative(&self) -> bool {
        self.amplitude >= 0.0
    }

    pub fn smoothness(&self) -> Option<Smoothness> {
        match &self.kind {
            WindowKind::Cutoff { smoothness, .. } => Some(*smoothness),
            WindowKind::Partition { .. } => Some(Smoothness::Exp),
            WindowKind::Zero { .. } => None,
        }
    }

    /// `x ↦ w(x - a)`.
    pub fn translated(&self, a: &[f64]) -> Self {
        let mut w = self.clone();
        for (s, v) in w.shift.iter_mut().zip(a) {
            *s += v;
        }
        w
    }

    /// `x ↦ w(x / ε)`.
    pub fn dilated(&self, eps: f64) -> Self {
        let mut w = self.clone();
        w.shift.iter_mut().for_each(|s| *s *= eps);
        w.scale *= eps;
        w
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut w = self.clone();
        w.amplitude *= a;
        w
    }

    pub(crate) fn axis_value(&self, k: usize, x: f64) -> f64 {
        self.kind.axis_factor(k, (x - self.shift[k]) / self.scale)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.amplitude;
        for (k, xk) in x.iter().enumerate() {
            if v == 0.0 {
                break;
            }
            v *= self.axis_value(k, *xk);
        }
        v
    }

    /// Closed box outside which the window vanishes.
    pub fn support(&self) -> AxisBox {
        let b = self.kind.support();
        AxisBox {
            lo: b.lo.iter().zip(&self.shift).map(|(l, s)| l * self.scale + s).collect(),
            hi: b.hi.iter().zip(&self.shift).map(|(h, s)| h * self.scale + s).collect(),
        }
    }
}

/// Product cutoff equal to 1 on `inner` and 0 outside `outer`.
pub fn make_cutoff(inner: AxisBox, outer: AxisBox, smoothness: Smoothness) -> Result<BumpWindow> {
    if inner.dim() != outer.dim() {
        return Err(Error::DimensionMismatch { expected: outer.dim(), got: inner.dim() });
    }
    if !inner.strictly_inside(&outer) {
        return Err(Error::DegenerateBoxes);
    }
    Ok(BumpWindow::from_kind(WindowKind::Cutoff { inner, outer, smoothness }))
}

/// Pointwise product `f · w`, stored on the intersection of both supports.
pub fn multiply(f: &GridSignal, w: &BumpWindow) -> Result<GridSignal> {
    if w.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: w.dim() });
    }
    let d = f.dim();
    let empty = || f.with_box(vec![0; d], vec![0; d], Vec::new());
    if w.is_zero() {
        return Ok(empty());
    }
    let Some((lo, shape)) = f.index_range_in(&w.support()) else {
        return Ok(empty());
    };
    let factors: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            (0..shape[k])
                .map(|i| {
                    let x = f.origin()[k] + (lo[k] + i) as f64 * f.spacing()[k];
                    w.axis_value(k, x)
                })
                .collect()
        })
        .collect();
    let mut data = Vec::with_capacity(shape.iter().product());
    for_each_in_box(&lo, &shape, |_, idx| {
        let mut v = w.amplitude;
        for k in 0..d {
            v *= factors[k][idx[k] - lo[k]];
        }
        data.push(if v == 0.0 { Complex64::new(0.0, 0.0) } else { f.get(idx) * v });
    });
    Ok(f.with_box(lo, shape, data))
}
