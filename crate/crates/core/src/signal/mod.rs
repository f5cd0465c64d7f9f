//! Sampled, compactly supported signals on uniform grids.

mod fourier;
pub mod io;
mod window;

pub use fourier::{
    fourier_at, fourier_batch, plan_periods, plan_periods_for, stft, FoldPlan, FoldedSpectrum, PeriodicSynthesis,
};
pub use window::{make_cutoff, multiply, BumpWindow, Smoothness, WindowKind};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::AxisBox;

pub const DEFAULT_GUARD: f64 = 0.9;

/// Complex samples `f(origin + n h)` on a grid of `shape` nodes. Only the
/// sub-box `[sup_lo, sup_lo + sup_shape)` is stored; every other node is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSignal {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    sup_lo: Vec<usize>,
    sup_shape: Vec<usize>,
    data: Vec<Complex64>,
    guard: f64,
}

/// Calls `f(flat, idx)` for every index of the row-major box `lo..lo+shape`.
pub(crate) fn for_each_in_box(lo: &[usize], shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    if shape.iter().any(|&n| n == 0) {
        return;
    }
    let d = shape.len();
    let mut idx = lo.to_vec();
    let mut flat = 0usize;
    loop {
        f(flat, &idx);
        flat += 1;
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if idx[k] + 1 < lo[k] + shape[k] {
                idx[k] += 1;
                break;
            }
            idx[k] = lo[k];
        }
    }
}

fn validate_geometry(origin: &[f64], spacing: &[f64], shape: &[usize]) -> Result<()> {
    let d = shape.len();
    if d == 0 {
        return Err(Error::invalid("grid must have at least one axis"));
    }
    if origin.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: origin.len() });
    }
    if spacing.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: spacing.len() });
    }
    if spacing.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(Error::invalid("grid spacing must be positive and finite"));
    }
    if origin.iter().any(|o| !o.is_finite()) {
        return Err(Error::invalid("grid origin must be finite"));
    }
    if shape.iter().any(|&n| n == 0) {
        return Err(Error::invalid("grid shape must be positive on every axis"));
    }
    Ok(())
}

impl GridSignal {
    /// From a full row-major sample array; the stored box is the tight
    /// bounding box of the nonzero samples.
    pub fn new(
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        validate_geometry(&origin, &spacing, &shape)?;
        let total: usize = shape.iter().product();
        if samples.len() != total {
            return Err(Error::DimensionMismatch { expected: total, got: samples.len() });
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("samples must be finite"));
        }
        let lo = vec![0; shape.len()];
        let s = Self {
            sup_lo: lo,
            sup_shape: shape.clone(),
            origin,
            spacing,
            shape,
            data: samples,
            guard: DEFAULT_GUARD,
        };
        Ok(s.trimmed())
    }

    pub fn zeros(origin: Vec<f64>, spacing: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        validate_geometry(&origin, &spacing, &shape)?;
        let d = shape.len();
        Ok(Self {
            origin,
            spacing,
            shape,
            sup_lo: vec![0; d],
            sup_shape: vec![0; d],
            data: Vec::new(),
            guard: DEFAULT_GUARD,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self> {
        validate_geometry(&origin, &spacing, &shape)?;
        let mut data = Vec::with_capacity(shape.iter().product());
        let mut x = origin.clone();
        let lo = vec![0; shape.len()];
        for_each_in_box(&lo, &shape, |_, idx| {
            for k in 0..idx.len() {
                x[k] = origin[k] + idx[k] as f64 * spacing[k];
            }
            data.push(f(&x));
        });
        Self::new(origin, spacing, shape, data)
    }

    /// `n` nodes per axis covering `[lo, hi)`, spacing `(hi - lo) / n`.
    pub fn on_cube(lo: f64, hi: f64, n: usize, d: usize, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let h = (hi - lo) / n as f64;
        Self::from_fn(vec![lo; d], vec![h; d], vec![n; d], f)
    }

    /// Same grid, stored box and samples replaced.
    pub(crate) fn with_box(&self, sup_lo: Vec<usize>, sup_shape: Vec<usize>, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), sup_shape.iter().product::<usize>());
        Self {
            origin: self.origin.clone(),
            spacing: self.spacing.clone(),
            shape: self.shape.clone(),
            sup_lo,
            sup_shape,
            data,
            guard: self.guard,
        }
    }

    /// Shrinks the stored box to the nonzero samples.
    pub fn trimmed(&self) -> Self {
        let d = self.dim();
        let mut lo = vec![usize::MAX; d];
        let mut hi = vec![0usize; d];
        let mut any = false;
        for_each_in_box(&self.sup_lo, &self.sup_shape, |flat, idx| {
            if self.data[flat] != Complex64::new(0.0, 0.0) {
                any = true;
                for k in 0..d {
                    lo[k] = lo[k].min(idx[k]);
                    hi[k] = hi[k].max(idx[k] + 1);
                }
            }
        });
        if !any {
            return self.with_box(vec![0; d], vec![0; d], Vec::new());
        }
        if lo == self.sup_lo && hi.iter().zip(&lo).map(|(h, l)| h - l).eq(self.sup_shape.iter().copied()) {
            return self.clone();
        }
        let shape: Vec<usize> = hi.iter().zip(&lo).map(|(h, l)| h - l).collect();
        let mut data = Vec::with_capacity(shape.iter().product());
        for_each_in_box(&lo, &shape, |_, idx| data.push(self.get(idx)));
        self.with_box(lo, shape, data)
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn support_lo(&self) -> &[usize] {
        &self.sup_lo
    }

    pub fn support_shape(&self) -> &[usize] {
        &self.sup_shape
    }

    /// Stored samples, row-major over the support box.
    pub fn support_data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn h_max(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    /// Largest admissible `|ξ|`: `guard · π / h_max`.
    pub fn nyquist_guard(&self) -> f64 {
        self.guard * std::f64::consts::PI / self.h_max()
    }

    pub fn node(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(self.origin.iter().zip(&self.spacing))
            .map(|(n, (o, h))| o + *n as f64 * h)
            .collect()
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        let mut flat = 0usize;
        for k in 0..self.dim() {
            if idx[k] < self.sup_lo[k] || idx[k] >= self.sup_lo[k] + self.sup_shape[k] {
                return Complex64::new(0.0, 0.0);
            }
            flat = flat * self.sup_shape[k] + (idx[k] - self.sup_lo[k]);
        }
        self.data[flat]
    }

    /// Full row-major sample array.
    pub fn samples(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.shape.iter().product());
        let lo = vec![0; self.dim()];
        for_each_in_box(&lo, &self.shape, |_, idx| out.push(self.get(idx)));
        out
    }

    /// Physical extent of all grid nodes.
    pub fn domain(&self) -> AxisBox {
        AxisBox {
            lo: self.origin.clone(),
            hi: (0..self.dim())
                .map(|k| self.origin[k] + (self.shape[k] - 1) as f64 * self.spacing[k])
                .collect(),
        }
    }

    /// Physical extent of the stored box, `None` for an empty box.
    pub fn support_box(&self) -> Option<AxisBox> {
        if self.sup_shape.iter().any(|&n| n == 0) {
            return None;
        }
        let last: Vec<usize> = self.sup_lo.iter().zip(&self.sup_shape).map(|(l, n)| l + n - 1).collect();
        Some(AxisBox { lo: self.node(&self.sup_lo), hi: self.node(&last) })
    }

    /// `(2π)^{-d/2} h^d Σ |f|`, a bound on `sup |f̂|`.
    pub fn l1_norm(&self) -> f64 {
        let s: f64 = self.data.iter().map(|z| z.norm()).sum();
        s * self.cell_measure() * std::f64::consts::TAU.powf(-0.5 * self.dim() as f64)
    }

    /// `(h^d Σ |f|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_measure()).sqrt()
    }

    pub fn same_grid(&self, other: &GridSignal) -> bool {
        self.origin == other.origin && self.spacing == other.spacing && self.shape == other.shape
    }

    pub fn map(&self, f: impl Fn(&[f64], Complex64) -> Complex64) -> GridSignal {
        let mut data = Vec::with_capacity(self.data.len());
        let mut x = vec![0.0; self.dim()];
        for_each_in_box(&self.sup_lo, &self.sup_shape, |flat, idx| {
            for k in 0..idx.len() {
                x[k] = self.origin[k] + idx[k] as f64 * self.spacing[k];
            }
            data.push(f(&x, self.data[flat]));
        });
        self.with_box(self.sup_lo.clone(), self.sup_shape.clone(), data)
    }

    pub fn scale(&self, a: Complex64) -> GridSignal {
        self.map(|_, z| a * z)
    }

    /// `f · e^{i⟨·,η⟩}`.
    pub fn modulate(&self, eta: &[f64]) -> GridSignal {
        self.map(|x, z| {
            let ph: f64 = x.iter().zip(eta).map(|(a, b)| a * b).sum();
            z * Complex64::from_polar(1.0, ph)
        })
    }

    /// `a f + b g` on a common grid.
    pub fn lin_comb(&self, a: Complex64, other: &GridSignal, b: Complex64) -> Result<GridSignal> {
        if !self.same_grid(other) {
            return Err(Error::invalid("signals live on different grids"));
        }
        let d = self.dim();
        let mut lo = vec![0; d];
        let mut shape = vec![0; d];
        let empty = |s: &GridSignal| s.sup_shape.iter().any(|&n| n == 0);
        match (empty(self), empty(other)) {
            (true, true) => return Ok(self.with_box(lo, shape, Vec::new())),
            (true, false) => return Ok(other.scale(b)),
            (false, true) => return Ok(self.scale(a)),
            _ => {}
        }
        for k in 0..d {
            lo[k] = self.sup_lo[k].min(other.sup_lo[k]);
            let hi = (self.sup_lo[k] + self.sup_shape[k]).max(other.sup_lo[k] + other.sup_shape[k]);
            shape[k] = hi - lo[k];
        }
        let mut data = Vec::with_capacity(shape.iter().product());
        for_each_in_box(&lo, &shape, |_, idx| data.push(a * self.get(idx) + b * other.get(idx)));
        Ok(self.with_box(lo, shape, data))
    }

    /// Index range `(lo, shape)` of nodes inside the closed box `b`, clipped
    /// to the stored box.
    pub(crate) fn index_range_in(&self, b: &AxisBox) -> Option<(Vec<usize>, Vec<usize>)> {
        self.index_range(b, &self.sup_lo, &self.sup_shape)
    }

    /// As `index_range_in`, clipped to the whole grid.
    pub(crate) fn grid_range_in(&self, b: &AxisBox) -> Option<(Vec<usize>, Vec<usize>)> {
        self.index_range(b, &vec![0; self.dim()], &self.shape)
    }

    fn index_range(&self, b: &AxisBox, clip_lo: &[usize], clip_shape: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
        let d = self.dim();
        let mut lo = vec![0; d];
        let mut shape = vec![0; d];
        for k in 0..d {
            let h = self.spacing[k];
            let a = ((b.lo[k] - self.origin[k]) / h - 1e-9).ceil().max(0.0);
            let z = ((b.hi[k] - self.origin[k]) / h + 1e-9).floor();
            let s0 = clip_lo[k] as f64;
            let s1 = (clip_lo[k] + clip_shape[k]) as f64 - 1.0;
            let a = a.max(s0);
            let z = z.min(s1);
            if z < a {
                return None;
            }
            lo[k] = a as usize;
            shape[k] = (z - a) as usize + 1;
        }
        Some((lo, shape))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn trims_to_nonzero_box() {
        let s = GridSignal::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![5, 6], |x| {
            if x[0] >= 1.0 && x[0] <= 2.0 && x[1] == 4.0 { c(1.0) } else { c(0.0) }
        })
        .unwrap();
        assert_eq!(s.support_lo(), &[1, 4]);
        assert_eq!(s.support_shape(), &[2, 1]);
        assert_eq!(s.get(&[0, 0]), c(0.0));
        assert_eq!(s.get(&[2, 4]), c(1.0));
        assert_eq!(s.samples().iter().filter(|z| z.re != 0.0).count(), 2);
        let b = s.support_box().unwrap();
        assert_eq!(b.lo, vec![1.0, 4.0]);
        assert_eq!(b.hi, vec![2.0, 4.0]);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(GridSignal::zeros(vec![0.0], vec![0.0], vec![4]).is_err());
        assert!(GridSignal::zeros(vec![0.0], vec![1.0, 1.0], vec![4]).is_err());
        assert!(GridSignal::new(vec![0.0], vec![1.0], vec![3], vec![c(1.0); 2]).is_err());
        assert!(GridSignal::new(vec![0.0], vec![1.0], vec![1], vec![c(f64::NAN)]).is_err());
    }

    #[test]
    fn zero_signal_has_empty_box() {
        let s = GridSignal::new(vec![0.0], vec![1.0], vec![3], vec![c(0.0); 3]).unwrap();
        assert!(s.support_box().is_none());
        assert!(s.is_zero());
        assert_eq!(s.l1_norm(), 0.0);
    }

    #[test]
    fn lin_comb_unions_boxes() {
        let g = |k: usize| {
            GridSignal::from_fn(vec![0.0], vec![1.0], vec![10], move |x| {
                if x[0] as usize == k { c(1.0) } else { c(0.0) }
            })
            .unwrap()
        };
        let s = g(2).lin_comb(c(2.0), &g(7), c(-1.0)).unwrap();
        assert_eq!(s.support_lo(), &[2]);
        assert_eq!(s.support_shape(), &[6]);
        assert_eq!(s.get(&[2]), c(2.0));
        assert_eq!(s.get(&[7]), c(-1.0));
    }

    #[test]
    fn index_range_is_closed() {
        let s = GridSignal::on_cube(-1.0, 1.0, 8, 1, |_| c(1.0)).unwrap();
        let (lo, n) = s.index_range_in(&AxisBox::new(vec![-0.5], vec![0.5]).unwrap()).unwrap();
        assert_eq!((lo[0], n[0]), (2, 5));
        assert!(s.index_range_in(&AxisBox::new(vec![3.0], vec![4.0]).unwrap()).is_none());
    }
}
