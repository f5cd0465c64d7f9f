use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use super::window::{multiply, BumpWindow};
use super::{for_each_in_box, GridSignal};
use crate::error::{Error, Result};
use crate::geometry::norm;

/// Largest folded transform the fast path will allocate.
const MAX_FOLD: usize = 1 << 22;

fn near_int(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= 64.0 * f64::EPSILON * x.abs().max(1.0) + 1e-12 {
        Some(r as i64)
    } else {
        None
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn norm_const(f: &GridSignal) -> f64 {
    f.cell_measure() * TAU.powf(-0.5 * f.dim() as f64)
}

fn check_freq(f: &GridSignal, xi: &[f64]) -> Result<()> {
    if xi.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: xi.len() });
    }
    let n = norm(xi);
    let limit = f.nyquist_guard();
    if !(n <= limit) {
        return Err(Error::FrequencyOutOfRange { norm: n, limit });
    }
    Ok(())
}

fn contract(data: &[Complex64], shape: &[usize], phases: &[Vec<Complex64>], axis: usize, base: usize) -> Complex64 {
    let n = shape[axis];
    if axis + 1 == shape.len() {
        let mut s = Complex64::new(0.0, 0.0);
        for (z, p) in data[base..base + n].iter().zip(&phases[axis]) {
            s += z * p;
        }
        return s;
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let mut s = Complex64::new(0.0, 0.0);
    for (i, p) in phases[axis].iter().enumerate() {
        s += p * contract(data, shape, phases, axis + 1, base + i * stride);
    }
    s
}

fn direct(f: &GridSignal, xi: &[f64]) -> Complex64 {
    if f.support_shape().iter().any(|&n| n == 0) {
        return Complex64::new(0.0, 0.0);
    }
    let (lo, sh) = (f.support_lo(), f.support_shape());
    let phases: Vec<Vec<Complex64>> = (0..f.dim())
        .map(|k| {
            (0..sh[k])
                .map(|n| {
                    let x = f.origin()[k] + (lo[k] + n) as f64 * f.spacing()[k];
                    Complex64::from_polar(1.0, -x * xi[k])
                })
                .collect()
        })
        .collect();
    contract(f.support_data(), sh, &phases, 0, 0) * norm_const(f)
}

/// `(2π)^{-d/2} h^d Σ_n f(x_n) e^{-i⟨x_n, ξ⟩}`.
pub fn fourier_at(f: &GridSignal, xi: &[f64]) -> Result<Complex64> {
    check_freq(f, xi)?;
    Ok(direct(f, xi))
}

fn axis_period(h: f64, n_grid: usize, comps: &[f64]) -> Option<usize> {
    let rs: Vec<f64> = comps.iter().map(|x| h * x / TAU).collect();
    let fits = |p: usize| rs.iter().all(|r| near_int(r * p as f64).is_some());
    let s = rs.iter().map(|r| r.abs()).filter(|r| *r > 1e-14).fold(f64::INFINITY, f64::min);
    if !s.is_finite() {
        return Some(1);
    }
    let mut cands = vec![n_grid];
    for m0 in 1..=16 {
        if let Some(p) = near_int(m0 as f64 / s) {
            if p >= 1 && (p as usize) <= MAX_FOLD {
                cands.push(p as usize);
            }
        }
    }
    let p = cands.into_iter().find(|&p| fits(p))?;
    let mut g = p;
    for r in &rs {
        let m = near_int(r * p as f64)?.rem_euclid(p as i64) as usize;
        g = gcd(g, m);
    }
    Some(p / g)
}

/// Fold periods `P` per axis such that every `P_k h_k ξ_k / 2π` is an integer,
/// or `None` when the list is not commensurate with the grid.
pub fn plan_periods(f: &GridSignal, freqs: &[Vec<f64>]) -> Option<Vec<usize>> {
    plan_periods_for(f.spacing(), f.shape(), freqs)
}

pub fn plan_periods_for(spacing: &[f64], shape: &[usize], freqs: &[Vec<f64>]) -> Option<Vec<usize>> {
    let d = spacing.len();
    let mut periods = Vec::with_capacity(d);
    for k in 0..d {
        let comps: Vec<f64> = freqs.iter().map(|x| x[k]).collect();
        periods.push(axis_period(spacing[k], shape[k], &comps)?);
    }
    if periods.iter().product::<usize>() > MAX_FOLD {
        return None;
    }
    Some(periods)
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Columns gathered per pass along strided axes.
const BLOCK: usize = 16;

/// In-place unnormalized FFT along every axis. Lines that are identically
/// zero are skipped.
fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = dims.iter().product();
    for axis in 0..dims.len() {
        let n = dims[axis];
        if n == 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        let stride: usize = dims[axis + 1..].iter().product();
        if stride == 1 {
            for line in data.chunks_exact_mut(n) {
                if line.iter().any(|v| *v != ZERO) {
                    fft.process_with_scratch(line, &mut scratch);
                }
            }
            continue;
        }
        let mut buf = vec![ZERO; n * BLOCK];
        let block = n * stride;
        for outer in (0..total).step_by(block) {
            for inner in (0..stride).step_by(BLOCK) {
                let w = BLOCK.min(stride - inner);
                for i in 0..n {
                    let row = outer + inner + i * stride;
                    for c in 0..w {
                        buf[c * n + i] = data[row + c];
                    }
                }
                for c in 0..w {
                    let line = &mut buf[c * n..(c + 1) * n];
                    if line.iter().any(|v| *v != ZERO) {
                        fft.process_with_scratch(line, &mut scratch);
                    }
                }
                for i in 0..n {
                    let row = outer + inner + i * stride;
                    for c in 0..w {
                        data[row + c] = buf[c * n + i];
                    }
                }
            }
        }
    }
}

fn fold_index(periods: &[usize], spacing: &[f64], xi: &[f64]) -> Option<usize> {
    let mut flat = 0usize;
    for k in 0..periods.len() {
        let p = periods[k];
        let m = near_int(p as f64 * spacing[k] * xi[k] / TAU)?.rem_euclid(p as i64) as usize;
        flat = flat * p + m;
    }
    Some(flat)
}

/// Transform of `f` on every frequency commensurate with the fold periods,
/// from one FFT of the periodically folded samples.
#[derive(Clone, Debug)]
pub struct FoldedSpectrum {
    periods: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    scale: f64,
    guard: f64,
    data: Vec<Complex64>,
}

impl FoldedSpectrum {
    pub fn new(f: &GridSignal, periods: &[usize]) -> Self {
        let total: usize = periods.iter().product();
        let mut data = vec![Complex64::new(0.0, 0.0); total];
        let d = f.dim();
        let src = f.support_data();
        for_each_in_box(f.support_lo(), f.support_shape(), |flat, idx| {
            let mut t = 0usize;
            for k in 0..d {
                t = t * periods[k] + idx[k] % periods[k];
            }
            data[t] += src[flat];
        });
        fft_nd(&mut data, periods, false);
        Self {
            periods: periods.to_vec(),
            spacing: f.spacing().to_vec(),
            origin: f.origin().to_vec(),
            scale: norm_const(f),
            guard: f.nyquist_guard(),
            data,
        }
    }

    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    /// `None` when `ξ` is not on the fold lattice.
    pub fn value(&self, xi: &[f64]) -> Option<Complex64> {
        let i = fold_index(&self.periods, &self.spacing, xi)?;
        let ph: f64 = self.origin.iter().zip(xi).map(|(o, x)| o * x).sum();
        Some(self.data[i] * Complex64::from_polar(self.scale, -ph))
    }

    pub fn try_value(&self, xi: &[f64]) -> Result<Complex64> {
        let n = norm(xi);
        if !(n <= self.guard) {
            return Err(Error::FrequencyOutOfRange { norm: n, limit: self.guard });
        }
        self.value(xi).ok_or_else(|| Error::invalid("frequency is not commensurate with the fold"))
    }
}

/// `fourier_at` over a list, through the folded FFT when the list is
/// commensurate with the grid and by direct summation otherwise.
pub fn fourier_batch(f: &GridSignal, freqs: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    for xi in freqs {
        check_freq(f, xi)?;
    }
    if freqs.len() >= 2 && !f.is_zero() {
        if let Some(periods) = plan_periods(f, freqs) {
            let spec = FoldedSpectrum::new(f, &periods);
            return Ok(freqs.iter().map(|xi| spec.value(xi).expect("planned frequency")).collect());
        }
    }
    Ok(freqs.par_iter().map(|xi| direct(f, xi)).collect())
}

/// `Σ_k c_k e^{i⟨x_n, ξ_k⟩}` on grid nodes, from one inverse FFT. The result
/// is periodic in the node index with the fold periods.
#[derive(Clone, Debug)]
pub struct PeriodicSynthesis {
    periods: Vec<usize>,
    data: Vec<Complex64>,
}

impl PeriodicSynthesis {
    pub fn new(
        origin: &[f64],
        spacing: &[f64],
        periods: &[usize],
        freqs: &[Vec<f64>],
        coeffs: &[Complex64],
    ) -> Option<Self> {
        let total: usize = periods.iter().product();
        let mut data = vec![Complex64::new(0.0, 0.0); total];
        for (xi, c) in freqs.iter().zip(coeffs) {
            let i = fold_index(periods, spacing, xi)?;
            let ph: f64 = origin.iter().zip(xi).map(|(o, x)| o * x).sum();
            data[i] += c * Complex64::from_polar(1.0, ph);
        }
        fft_nd(&mut data, periods, true);
        Some(Self { periods: periods.to_vec(), data })
    }

    pub fn at(&self, idx: &[usize]) -> Complex64 {
        let mut flat = 0usize;
        for (k, p) in self.periods.iter().enumerate() {
            flat = flat * p + idx[k] % p;
        }
        self.data[flat]
    }
}

/// Fold indices and origin phases of a fixed frequency list on a fixed grid,
/// shared by every signal living on that grid.
#[derive(Clone, Debug)]
pub struct FoldPlan {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    periods: Vec<usize>,
    index: Vec<usize>,
    /// `e^{-i⟨o, ξ⟩}` per frequency.
    phase: Vec<Complex64>,
}

impl FoldPlan {
    pub fn new(origin: &[f64], spacing: &[f64], shape: &[usize], freqs: &[Vec<f64>]) -> Option<Self> {
        let periods = plan_periods_for(spacing, shape, freqs)?;
        let index = freqs.iter().map(|xi| fold_index(&periods, spacing, xi)).collect::<Option<Vec<_>>>()?;
        let phase = freqs
            .iter()
            .map(|xi| Complex64::from_polar(1.0, -origin.iter().zip(xi).map(|(o, x)| o * x).sum::<f64>()))
            .collect();
        Some(Self { origin: origin.to_vec(), spacing: spacing.to_vec(), periods, index, phase })
    }

    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    fn same_grid(&self, f: &GridSignal) -> bool {
        f.origin() == self.origin.as_slice() && f.spacing() == self.spacing.as_slice()
    }

    /// `fourier_at` on every planned frequency; `None` if `f` is on another grid.
    pub fn transform(&self, f: &GridSignal) -> Option<Vec<Complex64>> {
        if !self.same_grid(f) {
            return None;
        }
        if f.is_zero() {
            return Some(vec![ZERO; self.index.len()]);
        }
        let spec = FoldedSpectrum::new(f, &self.periods);
        let c = spec.scale;
        Some(self.index.iter().zip(&self.phase).map(|(&i, ph)| spec.data[i] * ph * c).collect())
    }

    /// `Σ_k c_k e^{i⟨x_n, ξ_k⟩}` on the nodes of the planned grid.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> PeriodicSynthesis {
        let total: usize = self.periods.iter().product();
        let mut data = vec![ZERO; total];
        for ((&i, ph), c) in self.index.iter().zip(&self.phase).zip(coeffs) {
            data[i] += c * ph.conj();
        }
        fft_nd(&mut data, &self.periods, true);
        PeriodicSynthesis { periods: self.periods.clone(), data }
    }
}

/// `(2π)^{-d/2} ∫ f(y) conj(φ(y - x)) e^{-i⟨y, ξ⟩} dy` on the grid.
pub fn stft(f: &GridSignal, phi: &BumpWindow, x: &[f64], xi: &[f64]) -> Result<Complex64> {
    check_freq(f, xi)?;
    let w = phi.translated(x);
    if w.support().intersect(&f.domain()).is_none() {
        return Err(Error::invalid("shifted window does not meet the signal grid"));
    }
    Ok(direct(&multiply(f, &w)?, xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AxisBox;
    use crate::signal::make_cutoff;
    use crate::signal::Smoothness;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bump1d(n: usize) -> GridSignal {
        GridSignal::on_cube(-8.0, 8.0, n, 1, |x| {
            let t = x[0] / 3.0;
            if t.abs() < 1.0 { c((-1.0 / (1.0 - t * t)).exp() * (1.0 + 0.3 * x[0])) } else { c(0.0) }
        })
        .unwrap()
    }

    #[test]
    fn triangle_matches_closed_form() {
        let f = GridSignal::on_cube(-8.0, 8.0, 1 << 14, 1, |x| c((1.0 - x[0].abs()).max(0.0))).unwrap();
        let v = fourier_at(&f, &[2.0]).unwrap();
        let expect = TAU.powf(-0.5) * 1f64.sin().powi(2);
        assert!((v - c(expect)).norm() < 1e-6);
    }

    #[test]
    fn gaussian_fixed_point() {
        let f = GridSignal::on_cube(-12.0, 12.0, 24 * 64, 1, |x| c((-0.5 * x[0] * x[0]).exp())).unwrap();
        let v = fourier_at(&f, &[1.0]).unwrap();
        assert!((v - c((-0.5f64).exp())).norm() < 1e-8);
    }

    #[test]
    fn zero_signal_and_guard() {
        let z = GridSignal::zeros(vec![0.0], vec![0.1], vec![50]).unwrap();
        assert_eq!(fourier_at(&z, &[3.0]).unwrap(), c(0.0));
        let e = fourier_at(&z, &[0.95 * PI / 0.1]).unwrap_err();
        assert!(matches!(e, Error::FrequencyOutOfRange { .. }));
        assert!(fourier_at(&z, &[1.0, 1.0]).is_err());
        assert!(fourier_batch(&z, &[]).unwrap().is_empty());
    }

    #[test]
    fn fast_path_agrees_1d() {
        let f = bump1d(1 << 12);
        let beta = PI;
        let freqs: Vec<Vec<f64>> = (-200..200).map(|k| vec![beta * k as f64]).collect();
        assert_eq!(plan_periods(&f, &freqs).unwrap(), vec![512]);
        let fast = fourier_batch(&f, &freqs).unwrap();
        let scale = f.l1_norm();
        for (xi, v) in freqs.iter().zip(&fast) {
            assert!((v - fourier_at(&f, xi).unwrap()).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn fast_path_agrees_2d_with_padding() {
        // 3 x 5 nodes with spacing 0.25: the lattice period 2π/(hβ) = 16 exceeds the grid
        let f = GridSignal::from_fn(vec![-0.3, 0.1], vec![0.25, 0.25], vec![3, 5], |x| {
            Complex64::new(x[0] + 1.0, x[1] * x[0])
        })
        .unwrap();
        let beta = PI / 2.0;
        let mut freqs = Vec::new();
        for a in -5..=5 {
            for b in -5..=5 {
                freqs.push(vec![beta * a as f64, beta * b as f64]);
            }
        }
        assert_eq!(plan_periods(&f, &freqs).unwrap(), vec![16, 16]);
        let fast = fourier_batch(&f, &freqs).unwrap();
        for (xi, v) in freqs.iter().zip(&fast) {
            let d = fourier_at(&f, xi).unwrap();
            assert!((v - d).norm() <= 1e-12 * d.norm().max(1.0), "{xi:?}");
        }
    }

    #[test]
    fn fold_plan_matches_batch_and_synthesis() {
        let f = GridSignal::from_fn(vec![-0.3, 0.1], vec![0.25, 0.25], vec![6, 5], |x| {
            Complex64::new(x[0] + 1.0, x[1] * x[0])
        })
        .unwrap();
        let beta = PI / 2.0;
        let mut freqs = Vec::new();
        for a in -5..=5 {
            for b in -4..=4 {
                freqs.push(vec![beta * a as f64, beta * b as f64]);
            }
        }
        let plan = FoldPlan::new(f.origin(), f.spacing(), f.shape(), &freqs).unwrap();
        assert_eq!(plan.periods(), &[16, 16]);
        let v = plan.transform(&f).unwrap();
        for (a, b) in v.iter().zip(fourier_batch(&f, &freqs).unwrap()) {
            assert!((a - b).norm() < 1e-15);
        }
        let moved = GridSignal::from_fn(vec![0.0, 0.1], vec![0.25, 0.25], vec![6, 5], |_| c(1.0)).unwrap();
        assert!(plan.transform(&moved).is_none());
        let coeffs: Vec<Complex64> = (0..freqs.len()).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let a = plan.synthesize(&coeffs);
        let b = PeriodicSynthesis::new(f.origin(), f.spacing(), plan.periods(), &freqs, &coeffs).unwrap();
        for i in 0..6 {
            for j in 0..5 {
                assert!((a.at(&[i, j]) - b.at(&[i, j])).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn incommensurate_falls_back() {
        let f = bump1d(1 << 10);
        let freqs = vec![vec![1.0], vec![2.0_f64.sqrt()], vec![PI * 0.777]];
        assert!(plan_periods(&f, &freqs).is_none());
        let v = fourier_batch(&f, &freqs).unwrap();
        for (xi, z) in freqs.iter().zip(&v) {
            assert_eq!(*z, fourier_at(&f, xi).unwrap());
        }
        let one = fourier_batch(&f, &freqs[..1]).unwrap();
        assert_eq!(one[0], fourier_at(&f, &freqs[0]).unwrap());
    }

    #[test]
    fn synthesis_matches_direct_sum() {
        let origin = [-1.0];
        let h = [1.0 / 64.0];
        let beta = PI;
        let freqs: Vec<Vec<f64>> = (-20..=20).map(|k| vec![beta * k as f64]).collect();
        let coeffs: Vec<Complex64> = (0..freqs.len()).map(|i| Complex64::new(i as f64, 1.0 / (1.0 + i as f64))).collect();
        let syn = PeriodicSynthesis::new(&origin, &h, &[128], &freqs, &coeffs).unwrap();
        for n in [0usize, 5, 77, 200] {
            let x = origin[0] + n as f64 * h[0];
            let mut s = c(0.0);
            for (xi, cc) in freqs.iter().zip(&coeffs) {
                s += cc * Complex64::from_polar(1.0, x * xi[0]);
            }
            assert!((syn.at(&[n]) - s).norm() < 1e-10);
        }
    }

    #[test]
    fn stft_identity() {
        let f = bump1d(1 << 12);
        let w = make_cutoff(
            AxisBox::new(vec![-0.2], vec![0.2]).unwrap(),
            AxisBox::new(vec![-0.7], vec![0.7]).unwrap(),
            Smoothness::Exp,
        )
        .unwrap();
        let x = [0.4];
        let xi = [17.0];
        let a = stft(&f, &w, &x, &xi).unwrap();
        let b = fourier_at(&multiply(&f, &w.translated(&x)).unwrap(), &xi).unwrap();
        assert!((a - b).norm() < 1e-12);
        let r = stft(&f, &w, &x, &[0.0]).unwrap();
        assert_eq!(r.im, 0.0);
        assert!(stft(&f, &w, &[40.0], &xi).is_err());
    }

    #[test]
    fn smooth_cutoff_decays_fast() {
        let f = GridSignal::on_cube(-8.0, 8.0, 1 << 14, 1, |_| c(1.0)).unwrap();
        let chi = make_cutoff(
            AxisBox::new(vec![-1.0], vec![1.0]).unwrap(),
            AxisBox::new(vec![-3.0], vec![3.0]).unwrap(),
            Smoothness::Exp,
        )
        .unwrap();
        let g = multiply(&f, &chi).unwrap();
        let guard = g.nyquist_guard();
        // shell maxima on doubling shells from 1 up to the guard
        let mut r = 1.0;
        let mut maxima = Vec::new();
        while 2.0 * r <= 256.0_f64.min(guard) {
            let m = (0..200)
                .map(|i| r + r * i as f64 / 200.0)
                .map(|x| fourier_at(&g, &[x]).unwrap().norm())
                .fold(0.0, f64::max);
            maxima.push((r, m));
            r *= 2.0;
        }
        let last = maxima.len() - 1;
        let slope = (maxima[last].1.ln() - maxima[last - 1].1.ln()) / 2f64.ln();
        assert!(slope < -6.0, "slope {slope}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn linearity(a in -3.0..3.0f64, b in -3.0..3.0f64, xi in -200.0..200.0f64) {
            let f = bump1d(1 << 11);
            let g = f.modulate(&[5.0]).scale(Complex64::new(0.0, 1.0));
            let h = f.lin_comb(c(a), &g, c(b)).unwrap();
            let lhs = fourier_at(&h, &[xi]).unwrap();
            let rhs = c(a) * fourier_at(&f, &[xi]).unwrap() + c(b) * fourier_at(&g, &[xi]).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn modulation_law(eta in -100.0..100.0f64, xi in -100.0..100.0f64, e2 in -50.0..50.0f64) {
            let f = GridSignal::on_cube(-2.0, 2.0, 512, 2, |x| {
                let r2 = x[0] * x[0] + 2.0 * x[1] * x[1];
                if r2 < 1.0 { c((-1.0 / (1.0 - r2)).exp()) } else { c(0.0) }
            }).unwrap();
            let g = f.modulate(&[eta, e2]);
            let lhs = fourier_at(&g, &[xi, 10.0]).unwrap();
            let rhs = fourier_at(&f, &[xi - eta, 10.0 - e2]).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-10);
        }
    }
}
