//! Admissible Gabor pairs on cubic lattices: analysis, synthesis and the
//! discrete modulation norm.
//!
//! Coefficients are `c_jk(ε) = ∫ f(x) ψ(x/ε - x_j) e^{-i⟨x, ξ_k⟩} dx` and the
//! synthesis `f = Σ_j φ(·/ε - x_j) Σ_k c_jk e^{i⟨·, ξ_k⟩}` carries no extra
//! constant: the normalisation lives in ψ.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{norm, AxisBox, Weight};
use crate::lattice::{classify_pair, points_in_ball, points_in_box, Lattice, LatticePair, DEFAULT_BUDGET};
use crate::signal::{
    fourier_batch, multiply, BumpWindow, FoldPlan, GridSignal, Smoothness, WindowKind,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaborSystem {
    pub phi: BumpWindow,
    pub psi: BumpWindow,
    pub pair: LatticePair,
    pub alpha: f64,
    pub beta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub epsilon: f64,
    /// Optional budget on `max_i |j_i|`.
    pub index_bound: Option<i64>,
}

/// Λ₁ = αℤ^d, Λ₂ = βℤ^d, ψ = (β/2π)^d g/Σg on a cube of side α₁, φ = 1 on
/// supp ψ and 0 outside the cube of side 2π/β.
pub fn build_agp(alpha: f64, beta: f64, d: usize, smoothness: Smoothness) -> Result<GaborSystem> {
    build_agp_with(alpha, beta, d, smoothness, None)
}

pub fn build_agp_with(
    alpha: f64,
    beta: f64,
    d: usize,
    smoothness: Smoothness,
    alpha1: Option<f64>,
) -> Result<GaborSystem> {
    if !(alpha > 0.0 && beta > 0.0) || !(alpha * beta < TAU) {
        return Err(Error::InadmissibleParameters { alpha, beta });
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let alpha2 = TAU / beta;
    let alpha1 = alpha1.unwrap_or(0.5 * (alpha + alpha2));
    if !(alpha < alpha1 && alpha1 < alpha2) {
        return Err(Error::invalid(format!("need alpha < alpha1 < 2*pi/beta, got alpha1 = {alpha1}")));
    }
    let pair = classify_pair(&Lattice::cubic(d, alpha)?, &Lattice::cubic(d, beta)?)?;
    let psi = BumpWindow::from_kind(WindowKind::Partition { d, alpha, alpha1, beta });
    let zero = vec![0.0; d];
    let phi = BumpWindow::from_kind(WindowKind::Cutoff {
        inner: AxisBox::cube(&zero, 0.5 * alpha1),
        outer: AxisBox::cube(&zero, 0.5 * alpha2),
        smoothness,
    });
    Ok(GaborSystem { phi, psi, pair, alpha, beta, alpha1, alpha2, epsilon: 1.0, index_bound: None })
}

impl GaborSystem {
    pub fn dim(&self) -> usize {
        self.pair.lambda1.dim()
    }

    pub fn with_epsilon(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {eps}")));
        }
        let mut s = self.clone();
        s.epsilon = eps;
        Ok(s)
    }

    pub fn with_index_bound(&self, bound: Option<i64>) -> Self {
        let mut s = self.clone();
        s.index_bound = bound;
        s
    }

    pub fn lambda1(&self) -> &Lattice {
        &self.pair.lambda1
    }

    pub fn lambda2(&self) -> &Lattice {
        &self.pair.lambda2
    }

    /// `(2π)^{-d} ‖Λ₂‖`.
    pub fn partition_constant(&self) -> f64 {
        self.lambda2().cell_volume() / TAU.powi(self.dim() as i32)
    }

    pub fn phi_j(&self, j: &[i64]) -> BumpWindow {
        self.phi.translated(&self.lambda1().point(j)).dilated(self.epsilon)
    }

    pub fn psi_j(&self, j: &[i64]) -> BumpWindow {
        self.psi.translated(&self.lambda1().point(j)).dilated(self.epsilon)
    }

    fn within_bound(&self, j: &[i64]) -> bool {
        self.index_bound.map_or(true, |b| j.iter().all(|v| v.abs() <= b))
    }

    /// Indices `j` whose dilated window `w_j` meets the closed box `b`.
    fn js_meeting(&self, w: &BumpWindow, b: &AxisBox, slack: f64) -> Result<Vec<Vec<i64>>> {
        let s = w.support();
        let eps = self.epsilon;
        let lo: Vec<f64> = (0..self.dim()).map(|k| b.lo[k] / eps - s.hi[k] - slack).collect();
        let hi: Vec<f64> = (0..self.dim()).map(|k| b.hi[k] / eps - s.lo[k] + slack).collect();
        Ok(points_in_box(self.lambda1(), &lo, &hi, DEFAULT_BUDGET)?
            .into_iter()
            .map(|p| p.index)
            .filter(|j| self.within_bound(j))
            .collect())
    }
}

/// `max_x |Σ_j φ(x - x_j) ψ(x - x_j) - c|` over `n` points per axis of `[-α, α]^d`.
pub fn check_partition_windows(phi: &BumpWindow, psi: &BumpWindow, l1: &Lattice, c: f64, n: usize) -> Result<f64> {
    let d = l1.dim();
    let a = l1.basis().iter().map(|v| norm(v)).fold(0.0, f64::max);
    let s = phi.support().intersect(&psi.support());
    let mut worst = 0.0f64;
    let n = n.max(2);
    let mut idx = vec![0usize; d];
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| -a + 2.0 * a * i as f64 / (n - 1) as f64).collect();
        let mut sum = 0.0;
        if let Some(s) = &s {
            let lo: Vec<f64> = (0..d).map(|k| x[k] - s.hi[k]).collect();
            let hi: Vec<f64> = (0..d).map(|k| x[k] - s.lo[k]).collect();
            for p in points_in_box(l1, &lo, &hi, DEFAULT_BUDGET)? {
                let y: Vec<f64> = x.iter().zip(&p.point).map(|(u, v)| u - v).collect();
                sum += phi.eval(&y) * psi.eval(&y);
            }
        }
        worst = worst.max((sum - c).abs());
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(worst);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub fn check_partition(sys: &GaborSystem, n: usize) -> Result<f64> {
    check_partition_windows(&sys.phi, &sys.psi, sys.lambda1(), sys.partition_constant(), n)
}

/// `c_jk(ε)` for the listed `j` and every `ξ_k ∈ Λ₂` with `|ξ_k| <= radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    pub epsilon: f64,
    pub radius: f64,
    pub js: Vec<Vec<i64>>,
    pub ks: Vec<Vec<i64>>,
    pub freqs: Vec<Vec<f64>>,
    /// Row-major `js.len() x ks.len()`.
    pub values: Vec<Complex64>,
    /// `∫ |f ψ_j|` per row, for round-off floors.
    pub l1: Vec<f64>,
    /// Distance of the farthest support corner of `f ψ_j`, per row.
    pub extent: Vec<f64>,
    j_index: HashMap<Vec<i64>, usize>,
    k_index: HashMap<Vec<i64>, usize>,
}

impl CoefficientTable {
    fn assemble(
        epsilon: f64,
        radius: f64,
        js: Vec<Vec<i64>>,
        ks: Vec<Vec<i64>>,
        freqs: Vec<Vec<f64>>,
        rows: Vec<(Vec<Complex64>, f64, f64)>,
    ) -> Self {
        let mut values = Vec::with_capacity(js.len() * ks.len());
        let mut l1 = Vec::with_capacity(js.len());
        let mut extent = Vec::with_capacity(js.len());
        for (v, a, s) in rows {
            values.extend(v);
            l1.push(a);
            extent.push(s);
        }
        let j_index = js.iter().enumerate().map(|(i, j)| (j.clone(), i)).collect();
        let k_index = ks.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        Self { epsilon, radius, js, ks, freqs, values, l1, extent, j_index, k_index }
    }

    pub fn zeros_like(&self) -> Self {
        let mut t = self.clone();
        t.values.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        t
    }

    pub fn row_of(&self, j: &[i64]) -> Option<usize> {
        self.j_index.get(j).copied()
    }

    pub fn col_of(&self, k: &[i64]) -> Option<usize> {
        self.k_index.get(k).copied()
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.ks.len() + col]
    }

    pub fn get(&self, j: &[i64], k: &[i64]) -> Option<Complex64> {
        Some(self.at(self.row_of(j)?, self.col_of(k)?))
    }

    pub fn set(&mut self, j: &[i64], k: &[i64], v: Complex64) -> Result<()> {
        let (r, c) = match (self.row_of(j), self.col_of(k)) {
            (Some(r), Some(c)) => (r, c),
            _ => return Err(Error::MissingCoefficients { j: j.to_vec(), k: k.to_vec() }),
        };
        let n = self.ks.len();
        self.values[r * n + c] = v;
        Ok(())
    }

    /// Rows `j_1, ..., j_d, k_1, ..., k_d, re, im`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let d = self.ks.first().map_or(0, |k| k.len());
        let mut header: Vec<String> = (1..=d).map(|i| format!("j{i}")).collect();
        header.extend((1..=d).map(|i| format!("k{i}")));
        header.push("re".into());
        header.push("im".into());
        writeln!(out, "{}", header.join(","))?;
        for (r, j) in self.js.iter().enumerate() {
            for (c, k) in self.ks.iter().enumerate() {
                let v = self.at(r, c);
                let idx: Vec<String> = j.iter().chain(k).map(|t| t.to_string()).collect();
                writeln!(out, "{},{:e},{:e}", idx.join(","), v.re, v.im)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn check_radius(f: &GridSignal, radius: f64) -> Result<()> {
    let limit = f.nyquist_guard();
    if !(radius >= 0.0 && radius <= limit) {
        return Err(Error::FrequencyOutOfRange { norm: radius, limit });
    }
    Ok(())
}

/// Coefficients for every `j` whose ψ-window meets the support of `f`.
pub fn coefficients(f: &GridSignal, sys: &GaborSystem, radius: f64) -> Result<CoefficientTable> {
    check_radius(f, radius)?;
    let js = match f.support_box() {
        Some(b) => sys.js_meeting(&sys.psi, &b, 0.0)?,
        None => Vec::new(),
    };
    coefficients_at(f, sys, radius, &js)
}

fn lattice_ball(sys: &GaborSystem, radius: f64) -> Result<(Vec<Vec<i64>>, Vec<Vec<f64>>)> {
    let pts = points_in_ball(sys.lambda2(), radius, DEFAULT_BUDGET)?;
    let ks = pts.iter().map(|p| p.index.clone()).collect();
    let freqs = pts.into_iter().map(|p| p.point).collect();
    Ok((ks, freqs))
}

fn coefficient_rows(
    f: &GridSignal,
    sys: &GaborSystem,
    freqs: &[Vec<f64>],
    plan: Option<&FoldPlan>,
    js: &[Vec<i64>],
) -> Result<Vec<(Vec<Complex64>, f64, f64)>> {
    let scale = TAU.powf(0.5 * f.dim() as f64);
    js.par_iter()
        .map(|j| {
            let g = multiply(f, &sys.psi_j(j))?;
            let raw = match plan.and_then(|p| p.transform(&g)) {
                Some(v) => v,
                None => fourier_batch(&g, freqs)?,
            };
            let vals = raw.into_iter().map(|v| v * scale).collect();
            let extent = g.support_box().map_or(0.0, |b| b.corner_extent());
            Ok((vals, g.l1_norm() * scale, extent))
        })
        .collect()
}

/// Coefficients for the given rows only.
pub fn coefficients_at(f: &GridSignal, sys: &GaborSystem, radius: f64, js: &[Vec<i64>]) -> Result<CoefficientTable> {
    if f.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: f.dim() });
    }
    check_radius(f, radius)?;
    let (ks, freqs) = lattice_ball(sys, radius)?;
    let plan = FoldPlan::new(f.origin(), f.spacing(), f.shape(), &freqs);
    let rows = coefficient_rows(f, sys, &freqs, plan.as_ref(), js)?;
    Ok(CoefficientTable::assemble(sys.epsilon, radius, js.to_vec(), ks, freqs, rows))
}

/// Adds `φ_j Σ_k c_k e^{i⟨·, ξ_k⟩}` to `full`, laid out like `like`.
fn add_window_synthesis(
    full: &mut [Complex64],
    like: &GridSignal,
    w: &BumpWindow,
    freqs: &[Vec<f64>],
    coeffs: &[Complex64],
    plan: Option<&FoldPlan>,
) {
    let Some((lo, shape)) = like.grid_range_in(&w.support()) else {
        return;
    };
    let syn = plan.map(|p| p.synthesize(coeffs));
    let d = like.dim();
    let strides: Vec<usize> = (0..d).map(|k| like.shape()[k + 1..].iter().product()).collect();
    crate::signal::for_each_in_box(&lo, &shape, |_, idx| {
        let x = like.node(idx);
        let wv = w.eval(&x);
        if wv == 0.0 {
            return;
        }
        let s = match &syn {
            Some(s) => s.at(idx),
            None => freqs
                .iter()
                .zip(coeffs)
                .map(|(xi, c)| c * Complex64::from_polar(1.0, x.iter().zip(xi).map(|(a, b)| a * b).sum()))
                .sum(),
        };
        let g: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        full[g] += s * wv;
    });
}

/// Partial synthesis `Σ_j φ_j Σ_k c_jk e^{i⟨·, ξ_k⟩}` on the grid of `like`.
pub fn reconstruct(table: &CoefficientTable, sys: &GaborSystem, like: &GridSignal) -> Result<GridSignal> {
    let d = like.dim();
    if d != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: d });
    }
    let sys = sys.with_epsilon(table.epsilon)?;
    let plan = FoldPlan::new(like.origin(), like.spacing(), like.shape(), &table.freqs);
    let nk = table.ks.len();
    let full = table
        .js
        .par_iter()
        .enumerate()
        .fold(
            || vec![Complex64::new(0.0, 0.0); like.shape().iter().product()],
            |mut acc, (r, j)| {
                let coeffs = &table.values[r * nk..(r + 1) * nk];
                add_window_synthesis(&mut acc, like, &sys.phi_j(j), &table.freqs, coeffs, plan.as_ref());
                acc
            },
        )
        .reduce_with(|mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        })
        .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); like.shape().iter().product()]);
    GridSignal::new(like.origin().to_vec(), like.spacing().to_vec(), like.shape().to_vec(), full)
}

/// Relative L² error of `reconstruct(coefficients(f))`. Rows are analysed and
/// resynthesized one at a time, so the full table is never held.
pub fn round_trip_error(f: &GridSignal, sys: &GaborSystem, radius: f64) -> Result<f64> {
    if f.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: f.dim() });
    }
    check_radius(f, radius)?;
    let js = match f.support_box() {
        Some(b) => sys.js_meeting(&sys.psi, &b, 0.0)?,
        None => Vec::new(),
    };
    let (_, freqs) = lattice_ball(sys, radius)?;
    let plan = FoldPlan::new(f.origin(), f.spacing(), f.shape(), &freqs);
    let zero = || vec![Complex64::new(0.0, 0.0); f.shape().iter().product()];
    let full = js
        .par_iter()
        .try_fold(zero, |mut acc, j| -> Result<Vec<Complex64>> {
            let (coeffs, _, _) = coefficient_rows(f, sys, &freqs, plan.as_ref(), std::slice::from_ref(j))?
                .pop()
                .expect("one row");
            add_window_synthesis(&mut acc, f, &sys.phi_j(j), &freqs, &coeffs, plan.as_ref());
            Ok(acc)
        })
        .try_reduce(zero, |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            Ok(a)
        })?;
    let g = GridSignal::new(f.origin().to_vec(), f.spacing().to_vec(), f.shape().to_vec(), full)?;
    let diff = g.lin_comb(Complex64::new(1.0, 0.0), f, Complex64::new(-1.0, 0.0))?;
    let n = f.l2_norm();
    Ok(if n == 0.0 { diff.l2_norm() } else { diff.l2_norm() / n })
}

/// `J_{x0}(ε)`: every `j` with `x0` in the closed support of `φ_j` or `ψ_j`.
pub fn support_index_set(sys: &GaborSystem, x0: &[f64]) -> Result<Vec<Vec<i64>>> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: x0.len() });
    }
    let pt = AxisBox::cube(x0, 0.0);
    let tol = 1e-12 * (1.0 + norm(x0) / sys.epsilon);
    let mut js = sys.js_meeting(&sys.phi, &pt, tol)?;
    for j in sys.js_meeting(&sys.psi, &pt, tol)? {
        if !js.contains(&j) {
            js.push(j);
        }
    }
    js.sort();
    Ok(js)
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("exponent {name} must lie in [1, inf], got {p}")));
    }
    Ok(())
}

/// Mixed `ℓ^p` (over j) / `ℓ^q` (over k) norm with weight `ω(ξ_k)`.
pub fn discrete_mod_norm(table: &CoefficientTable, w: &Weight, p: f64, q: f64) -> Result<f64> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let nk = table.ks.len();
    let mut outer = 0.0f64;
    for (c, xi) in table.freqs.iter().enumerate() {
        let wk = w.eval(xi);
        let mut inner = 0.0f64;
        for r in 0..table.js.len() {
            let a = table.values[r * nk + c].norm() * wk;
            if p.is_infinite() {
                inner = inner.max(a);
            } else {
                inner += a.powf(p);
            }
        }
        if !p.is_infinite() {
            inner = inner.powf(1.0 / p);
        }
        if q.is_infinite() {
            outer = outer.max(inner);
        } else {
            outer += inner.powf(q);
        }
    }
    Ok(if q.is_infinite() { outer } else { outer.powf(1.0 / q) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::plan_periods_for;
    use std::f64::consts::PI;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn smooth(n: usize) -> GridSignal {
        GridSignal::on_cube(-4.0, 4.0, n, 1, |x| {
            let t = x[0] / 2.5;
            if t.abs() < 1.0 {
                Complex64::new((-1.0 / (1.0 - t * t)).exp() * (3.0 * x[0]).cos(), 0.2 * x[0] * (-1.0 / (1.0 - t * t)).exp())
            } else {
                c(0.0)
            }
        })
        .unwrap()
    }

    #[test]
    fn partition_constants() {
        let s = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        assert!((s.partition_constant() - 0.5).abs() < 1e-15);
        assert!(check_partition(&s, 400).unwrap() <= 1e-10);
        let s2 = build_agp(0.5, PI, 2, Smoothness::Exp).unwrap();
        assert!((s2.partition_constant() - 0.25).abs() < 1e-15);
        assert!(check_partition(&s2, 60).unwrap() <= 1e-10);
        assert_eq!(s.pair.class, crate::lattice::PairClass::Strong);
    }

    #[test]
    fn inadmissible() {
        let e = build_agp(1.0, TAU, 1, Smoothness::Exp).unwrap_err();
        assert!(matches!(e, Error::InadmissibleParameters { .. }));
        assert!(build_agp(-1.0, 1.0, 1, Smoothness::Exp).is_err());
        assert!(build_agp_with(1.0, PI, 1, Smoothness::Exp, Some(2.5)).is_err());
    }

    #[test]
    fn partition_deviation_scales_with_windows() {
        let s = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        let k = s.partition_constant();
        let dev = check_partition_windows(&s.phi.scaled(2.0), &s.psi, s.lambda1(), k, 300).unwrap();
        assert!((dev - k).abs() < 1e-10);
        let dev = check_partition_windows(&s.phi, &BumpWindow::zero(1), s.lambda1(), k, 300).unwrap();
        assert!((dev - k).abs() < 1e-15);
    }

    #[test]
    fn random_systems_satisfy_partition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let alpha = rng.gen_range(0.2..3.0);
            let beta = rng.gen_range(0.05..0.98) * TAU / alpha;
            let d = rng.gen_range(1..=2);
            let s = build_agp(alpha, beta, d, Smoothness::Exp).unwrap();
            let n = if d == 1 { 200 } else { 25 };
            assert!(check_partition(&s, n).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn zero_signal_zero_table() {
        let s = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        let f = GridSignal::zeros(vec![-4.0], vec![1.0 / 128.0], vec![1024]).unwrap();
        let t = coefficients(&f, &s, 100.0).unwrap();
        assert!(t.values.iter().all(|v| *v == c(0.0)));
        assert_eq!(discrete_mod_norm(&t, &Weight::unit(), 2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn round_trip_across_epsilon() {
        let f = smooth(4096);
        let s = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        let radius = 0.8 * f.nyquist_guard();
        for eps in [1.0, 0.5, 0.25] {
            let e = round_trip_error(&f, &s.with_epsilon(eps).unwrap(), radius).unwrap();
            assert!(e < 1e-6, "eps {eps}: {e}");
        }
    }

    #[test]
    fn round_trip_2d() {
        let f = GridSignal::on_cube(-2.0, 2.0, 512, 2, |x| {
            let r2 = (x[0] * x[0] + x[1] * x[1]) / 2.0;
            if r2 < 1.0 { Complex64::new((-1.0 / (1.0 - r2)).exp(), 0.0) * Complex64::from_polar(1.0, 2.0 * x[0]) } else { c(0.0) }
        })
        .unwrap();
        let s = build_agp(0.5, PI, 2, Smoothness::Exp).unwrap();
        let e = round_trip_error(&f, &s, 0.8 * f.nyquist_guard()).unwrap();
        assert!(e < 1e-6, "{e}");
    }

    #[test]
    fn synthesis_without_fast_path() {
        // spacing 0.01 is not commensurate with β = 3
        let f = GridSignal::from_fn(vec![-3.0], vec![0.01], vec![600], |x| {
            let t = x[0] / 2.0;
            if t.abs() < 1.0 { c((-1.0 / (1.0 - t * t)).exp()) } else { c(0.0) }
        })
        .unwrap();
        let s = build_agp(1.0, 3.0, 1, Smoothness::Exp).unwrap();
        let t = coefficients(&f, &s, 0.8 * f.nyquist_guard()).unwrap();
        assert!(plan_periods_for(f.spacing(), f.shape(), &t.freqs).is_none());
        let g = reconstruct(&t, &s, &f).unwrap();
        let diff = g.lin_comb(c(1.0), &f, c(-1.0)).unwrap();
        assert!(diff.l2_norm() / f.l2_norm() < 1e-3);
    }

    #[test]
    fn single_window_coefficient() {
        // windows far apart: α large relative to the support
        let s = build_agp(3.0, 1.0, 1, Smoothness::Exp).unwrap();
        let f = multiply(&GridSignal::on_cube(-8.0, 8.0, 1 << 12, 1, |_| c(1.0)).unwrap(), &s.psi_j(&[0])).unwrap();
        let t = coefficients(&f, &s, 50.0).unwrap();
        let h = f.spacing()[0];
        let expect: f64 = f.support_data().iter().map(|z| z.norm_sqr()).sum::<f64>() * h;
        let v = t.get(&[0], &[0]).unwrap();
        assert!((v - c(expect)).norm() < 1e-12);
        // neighbouring translates overlap, the next ones do not
        for (r, j) in t.js.iter().enumerate() {
            if j[0].abs() >= 2 {
                assert!(t.values[r * t.ks.len()..(r + 1) * t.ks.len()].iter().all(|z| z.norm() < 1e-12));
            }
        }
    }

    #[test]
    fn modulation_shifts_k() {
        let s = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        let f = smooth(2048);
        let m = 3i64;
        let g = f.modulate(&[PI * m as f64]);
        let r = 200.0;
        let tf = coefficients(&f, &s, r).unwrap();
        let tg = coefficients(&g, &s, r).unwrap();
        for (ri, j) in tg.js.iter().enumerate() {
            for (ci, k) in tg.ks.iter().enumerate() {
                let src = [k[0] - m];
                if let Some(v) = tf.get(j, &src) {
                    assert!((tg.at(ri, ci) - v).norm() < 1e-10, "{j:?} {k:?}");
                }
            }
        }
    }

    #[test]
    fn coefficients_match_stft() {
        let s = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap().with_epsilon(0.5).unwrap();
        let f = smooth(2048);
        let t = coefficients(&f, &s, 100.0).unwrap();
        let psi_eps = s.psi.dilated(0.5);
        for (r, j) in t.js.iter().enumerate().step_by(3) {
            for (col, xi) in t.freqs.iter().enumerate().step_by(7) {
                let xj = s.lambda1().point(j)[0] * 0.5;
                let v = crate::signal::stft(&f, &psi_eps, &[xj], xi).unwrap() * TAU.sqrt();
                assert!((t.at(r, col) - v).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn support_sets() {
        let s = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        assert_eq!(support_index_set(&s, &[0.0]).unwrap(), vec![vec![-1], vec![0], vec![1]]);
        let b = s.with_index_bound(Some(5));
        assert!(support_index_set(&b, &[100.0]).unwrap().is_empty());
        for eps in [1.0, 0.5, 0.25] {
            let se = s.with_epsilon(eps).unwrap();
            let js = support_index_set(&se, &[0.3 * eps]).unwrap();
            assert_eq!(js.len(), 2, "{eps}");
            for j in &js {
                let w = se.phi_j(j);
                let sb = w.support();
                assert!(sb.contains(&[0.3 * eps]));
            }
        }
    }

    #[test]
    fn mod_norm_examples() {
        let s = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        let f = smooth(1024);
        let mut t = coefficients(&f, &s, 30.0).unwrap().zeros_like();
        let (j, k) = (t.js[1].clone(), t.ks[2].clone());
        t.set(&j, &k, Complex64::new(3.0, 4.0)).unwrap();
        for (p, q) in [(1.0, 1.0), (2.0, 1.0), (f64::INFINITY, 2.0), (1.0, f64::INFINITY)] {
            assert!((discrete_mod_norm(&t, &Weight::unit(), p, q).unwrap() - 5.0).abs() < 1e-14);
        }
        assert!(t.set(&[99], &k, c(1.0)).is_err());
        let full = coefficients(&f, &s, 30.0).unwrap();
        let direct: f64 = full.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((discrete_mod_norm(&full, &Weight::unit(), 2.0, 2.0).unwrap() - direct).abs() < 1e-12 * direct);
        assert!(discrete_mod_norm(&full, &Weight::unit(), 0.5, 2.0).is_err());
    }

    #[test]
    fn csv_export() {
        let s = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        let t = coefficients(&smooth(512), &s, 20.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        t.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("j1,k1,re,im\n"));
        assert_eq!(text.lines().count(), 1 + t.js.len() * t.ks.len());
    }
}
