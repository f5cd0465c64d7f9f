//! Cone-restricted seminorms as shell series, and the finite/divergent
//! classifier.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gabor::CoefficientTable;
use crate::geometry::{norm, Cone, Weight};
use crate::lattice::{points_in_ball, points_in_cone_shell, Lattice, DEFAULT_BUDGET};
use crate::signal::{fourier_batch, GridSignal};

/// Serialises exponents with `"inf"` for ∞.
pub mod exponent {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => parse(&t).map_err(de::Error::custom),
        }
    }

    pub fn parse(t: &str) -> Result<f64, String> {
        match t.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
            other => other.parse::<f64>().map_err(|_| format!("not an exponent: {t}")),
        }
    }
}

/// Rounding floor for a transform value at `ξ`: sums of `n` terms with phases
/// accurate to `ε|x||ξ|` carry an absolute error of about this size.
pub fn noise_floor(l1: f64, extent: f64, xi_norm: f64) -> f64 {
    1e-15 * l1 * (100.0 + 2.0 * extent * xi_norm)
}

/// Geometric shell radii `R_0 < R_1 < ... <= r_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    pub r0: f64,
    pub ratio: f64,
    pub r_max: f64,
}

impl ShellSpec {
    /// `R_0 = 4 · min |basis of Λ₂|`, ratio 2.
    pub fn for_lattice(l2: &Lattice, r_max: f64) -> Self {
        Self { r0: 4.0 * l2.min_basis_norm(), ratio: 2.0, r_max }
    }

    pub fn radii(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if !(self.r0 > 0.0 && self.ratio > 1.0) {
            return out;
        }
        let mut r = self.r0;
        while r <= self.r_max * (1.0 + 1e-12) {
            out.push(r);
            r *= self.ratio;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub kind: String,
    #[serde(with = "exponent")]
    pub q: f64,
    pub d: usize,
    pub cone: Cone,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

/// Per-shell aggregates of a cone seminorm. `aggregates[m]` covers
/// `(radii[m], radii[m+1]]`; `core` covers `(0, radii[0]]`;
/// `partial[m]` is the running sum (or maximum for q = ∞) through `radii[m]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSumSeries {
    pub radii: Vec<f64>,
    pub core: f64,
    pub aggregates: Vec<f64>,
    pub partial: Vec<f64>,
    pub counts: Vec<usize>,
    pub meta: SeriesMeta,
}

impl ConeSumSeries {
    pub fn q(&self) -> f64 {
        self.meta.q
    }

    /// Rows `R_m, a_m, S_m` (the core as the first row).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "R_m,a_m,S_m")?;
        for (i, r) in self.radii.iter().enumerate() {
            let a = if i == 0 { self.core } else { self.aggregates[i - 1] };
            writeln!(out, "{r:e},{a:e},{:e}", self.partial[i])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) struct SeriesBuilder {
    radii: Vec<f64>,
    q: f64,
    core: f64,
    agg: Vec<f64>,
    counts: Vec<usize>,
}

impl SeriesBuilder {
    pub(crate) fn new(radii: Vec<f64>, q: f64) -> Self {
        let n = radii.len().saturating_sub(1);
        Self { radii, q, core: 0.0, agg: vec![0.0; n], counts: vec![0; n] }
    }

    pub(crate) fn r_top(&self) -> f64 {
        self.radii.last().copied().unwrap_or(0.0)
    }

    /// Adds `w · v^q` (or `max v` for q = ∞) at radius `r`.
    pub(crate) fn add(&mut self, r: f64, v: f64, w: f64) {
        if !(r > 0.0) || r > self.r_top() {
            return;
        }
        let bin = if r <= self.radii[0] { None } else { Some(self.radii.partition_point(|x| *x < r) - 1) };
        let slot = match bin {
            None => &mut self.core,
            Some(m) => {
                self.counts[m] += 1;
                &mut self.agg[m]
            }
        };
        if self.q.is_infinite() {
            *slot = slot.max(v);
        } else if v > 0.0 {
            *slot += w * v.powf(self.q);
        }
    }

    pub(crate) fn finish(self, meta: SeriesMeta) -> ConeSumSeries {
        let mut partial = Vec::with_capacity(self.radii.len());
        let mut s = self.core;
        partial.push(s);
        for a in &self.agg {
            s = if self.q.is_infinite() { s.max(*a) } else { s + a };
            partial.push(s);
        }
        ConeSumSeries {
            radii: self.radii,
            core: self.core,
            aggregates: self.agg,
            partial,
            counts: self.counts,
            meta,
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0) {
        return Err(Error::invalid(format!("exponent q must lie in [1, inf], got {q}")));
    }
    Ok(())
}

fn check_rmax(f: &GridSignal, r_max: f64) -> Result<()> {
    let limit = f.nyquist_guard();
    if !(r_max > 0.0 && r_max <= limit) {
        return Err(Error::FrequencyOutOfRange { norm: r_max, limit });
    }
    Ok(())
}

/// `f̂` on all points of `Λ₂` up to a radius, reusable across cones, weights
/// and exponents.
#[derive(Clone, Debug)]
pub struct LatticeSpectrum {
    pub lattice: Lattice,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
    pub floor_l1: f64,
    pub floor_extent: f64,
    pub d: usize,
}

impl LatticeSpectrum {
    /// Every lattice point with `|ξ| <= r`, or only those in `cone` when given.
    pub fn compute(f: &GridSignal, l2: &Lattice, r: f64, cone: Option<&Cone>) -> Result<Self> {
        if l2.dim() != f.dim() {
            return Err(Error::DimensionMismatch { expected: f.dim(), got: l2.dim() });
        }
        let pts = match cone {
            Some(c) => points_in_cone_shell(l2, c, 0.0, r, DEFAULT_BUDGET)?,
            None => points_in_ball(l2, r, DEFAULT_BUDGET)?,
        };
        let points: Vec<Vec<f64>> = pts.into_iter().map(|p| p.point).collect();
        let values = fourier_batch(f, &points)?;
        Ok(Self {
            lattice: l2.clone(),
            points,
            values,
            floor_l1: f.l1_norm(),
            floor_extent: f.support_box().map_or(0.0, |b| b.corner_extent()),
            d: f.dim(),
        })
    }

    pub fn series(&self, w: &Weight, q: f64, cone: &Cone, shells: &ShellSpec) -> Result<ConeSumSeries> {
        check_q(q)?;
        let mut b = SeriesBuilder::new(shells.radii(), q);
        if b.radii.len() >= 1 {
            for (xi, v) in self.points.iter().zip(&self.values) {
                if !cone.contains(xi) {
                    continue;
                }
                let r = norm(xi);
                let mut a = v.norm();
                if a < noise_floor(self.floor_l1, self.floor_extent, r) {
                    a = 0.0;
                }
                b.add(r, a * w.eval(xi), 1.0);
            }
        }
        Ok(b.finish(SeriesMeta {
            kind: "discrete_fl".into(),
            q,
            d: self.d,
            cone: cone.clone(),
            lattice: Some(self.lattice.clone()),
            density: None,
        }))
    }
}

/// Shells of `Σ_{ξ_k ∈ Γ∩Λ₂} |f̂(ξ_k) ω(ξ_k)|^q`.
pub fn discrete_fl_series(
    f: &GridSignal,
    w: &Weight,
    q: f64,
    cone: &Cone,
    l2: &Lattice,
    r_max: f64,
) -> Result<ConeSumSeries> {
    discrete_fl_series_with(f, w, q, cone, l2, &ShellSpec::for_lattice(l2, r_max))
}

pub fn discrete_fl_series_with(
    f: &GridSignal,
    w: &Weight,
    q: f64,
    cone: &Cone,
    l2: &Lattice,
    shells: &ShellSpec,
) -> Result<ConeSumSeries> {
    check_q(q)?;
    check_rmax(f, shells.r_max)?;
    let top = shells.radii().last().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(SeriesBuilder::new(Vec::new(), q).finish(SeriesMeta {
            kind: "discrete_fl".into(),
            q,
            d: f.dim(),
            cone: cone.clone(),
            lattice: Some(l2.clone()),
            density: None,
        }));
    }
    LatticeSpectrum::compute(f, l2, top, Some(cone))?.series(w, q, cone, shells)
}

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Composite 5-point Gauss-Legendre nodes and weights on `[a, b]`.
fn gauss_panels(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(5 * panels);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (x, w) in GL5_X.iter().zip(&GL5_W) {
            out.push((c + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Shells of `∫_Γ |f̂(ξ) ω(ξ)|^q dξ` by a polar product rule with roughly
/// `density` nodes per unit volume (d = 1 or 2).
pub fn continuous_fl_series(
    f: &GridSignal,
    w: &Weight,
    q: f64,
    cone: &Cone,
    density: f64,
    shells: &ShellSpec,
) -> Result<ConeSumSeries> {
    check_q(q)?;
    ConeQuadrature::compute(f, cone, density, shells)?.series(w, q)
}

/// Quadrature nodes over `Γ ∩ {|ξ| <= R_M}` with the transform at each node.
#[derive(Clone, Debug)]
pub struct ConeQuadrature {
    pub cone: Cone,
    pub density: f64,
    pub radii: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
    l1: f64,
    extent: f64,
}

impl ConeQuadrature {
    pub fn compute(f: &GridSignal, cone: &Cone, density: f64, shells: &ShellSpec) -> Result<Self> {
        check_rmax(f, shells.r_max)?;
        if !(density > 0.0) {
            return Err(Error::invalid("quadrature density must be positive"));
        }
        let d = f.dim();
        if cone.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: cone.dim() });
        }
        let radii = shells.radii();
        let mut edges = vec![0.0];
        edges.extend(radii.iter().copied());
        let delta = density.powf(-1.0 / d as f64);
        let mut nodes: Vec<Vec<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for win in edges.windows(2) {
            let (a, b) = (win[0], win[1]);
            let radial = gauss_panels(a, b, ((b - a) / (5.0 * delta)).ceil() as usize);
            match d {
                1 => {
                    let s = cone.axis()[0].signum();
                    for (r, wr) in radial {
                        nodes.push(vec![s * r]);
                        weights.push(wr);
                    }
                }
                2 => {
                    let ap = cone.aperture();
                    let base = cone.axis()[1].atan2(cone.axis()[0]);
                    let arc = 0.5 * (a + b) * 2.0 * ap;
                    let angular = gauss_panels(-ap, ap, (arc / (5.0 * delta)).ceil() as usize);
                    for (r, wr) in &radial {
                        for (t, wt) in &angular {
                            let th = base + t;
                            nodes.push(vec![r * th.cos(), r * th.sin()]);
                            weights.push(wr * wt * r);
                        }
                    }
                }
                _ => return Err(Error::invalid("continuous series supports d = 1 or 2")),
            }
        }
        let values = fourier_batch(f, &nodes)?;
        Ok(Self {
            cone: cone.clone(),
            density,
            radii,
            nodes,
            weights,
            values,
            l1: f.l1_norm(),
            extent: f.support_box().map_or(0.0, |b| b.corner_extent()),
        })
    }

    pub fn series(&self, w: &Weight, q: f64) -> Result<ConeSumSeries> {
        check_q(q)?;
        let mut builder = SeriesBuilder::new(self.radii.clone(), q);
        for ((xi, v), wt) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            let r = norm(xi);
            let mut a = v.norm();
            if a < noise_floor(self.l1, self.extent, r) {
                a = 0.0;
            }
            builder.add(r, a * w.eval(xi), *wt);
        }
        Ok(builder.finish(SeriesMeta {
            kind: "continuous_fl".into(),
            q,
            d: self.cone.dim(),
            cone: self.cone.clone(),
            lattice: None,
            density: Some(self.density),
        }))
    }
}

/// Shells of `Σ_{ξ_k ∈ Γ∩Λ₂} (Σ_{j ∈ J} |c_jk ω(ξ_k)|^p)^{q/p}`.
pub fn discrete_mod_series(
    table: &CoefficientTable,
    w: &Weight,
    p: f64,
    q: f64,
    cone: &Cone,
    l2: &Lattice,
    jset: &[Vec<i64>],
    shells: &ShellSpec,
) -> Result<ConeSumSeries> {
    check_q(q)?;
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("exponent p must lie in [1, inf], got {p}")));
    }
    let radii = shells.radii();
    let top = radii.last().copied().unwrap_or(0.0);
    let mut rows = Vec::with_capacity(jset.len());
    for j in jset {
        match table.row_of(j) {
            Some(r) => rows.push(r),
            None => {
                return Err(Error::MissingCoefficients {
                    j: j.clone(),
                    k: vec![0; l2.dim()],
                })
            }
        }
    }
    let mut builder = SeriesBuilder::new(radii, q);
    if top > 0.0 {
        let pts = points_in_cone_shell(l2, cone, 0.0, top, DEFAULT_BUDGET)?;
        let nk = table.ks.len();
        for pt in pts {
            let col = match table.col_of(&pt.index) {
                Some(c) => c,
                None => {
                    return Err(Error::MissingCoefficients {
                        j: jset.first().cloned().unwrap_or_default(),
                        k: pt.index.clone(),
                    })
                }
            };
            let r = norm(&pt.point);
            let wk = w.eval(&pt.point);
            let mut inner = 0.0f64;
            for &row in &rows {
                let mut a = table.values[row * nk + col].norm();
                if a < noise_floor(table.l1[row], table.extent[row], r) {
                    a = 0.0;
                }
                let a = a * wk;
                if p.is_infinite() {
                    inner = inner.max(a);
                } else if a > 0.0 {
                    inner += a.powf(p);
                }
            }
            if !p.is_infinite() {
                inner = inner.powf(1.0 / p);
            }
            builder.add(r, inner, 1.0);
        }
    }
    Ok(builder.finish(SeriesMeta {
        kind: "discrete_mod".into(),
        q,
        d: l2.dim(),
        cone: cone.clone(),
        lattice: Some(l2.clone()),
        density: None,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Shells used by the regression, counted from the outermost.
    pub window: usize,
    pub min_shells: usize,
    pub margin: f64,
    pub cauchy_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { window: 6, min_shells: 4, margin: 0.15, cauchy_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Outcome {
    Finite { estimate: f64 },
    Divergent { tau: f64 },
    Inconclusive { tau: f64, margin: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Log-log slope of the shell aggregates.
    pub sigma: Option<f64>,
    /// Per-point decay exponent.
    pub tau: Option<f64>,
    pub threshold: Option<f64>,
    /// Weighted RMS residual of the fit.
    pub residual: Option<f64>,
    pub shells_used: usize,
    /// Last increment `S_M - S_{M-1}` relative to `S_M`.
    pub cauchy_ratio: Option<f64>,
    /// Why a conclusive regression was downgraded, if it was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Finite,
    Divergent,
    Inconclusive,
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self.outcome {
            Outcome::Finite { .. } => VerdictKind::Finite,
            Outcome::Divergent { .. } => VerdictKind::Divergent,
            Outcome::Inconclusive { .. } => VerdictKind::Inconclusive,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.kind() == VerdictKind::Finite
    }

    pub fn is_divergent(&self) -> bool {
        self.kind() == VerdictKind::Divergent
    }

    pub fn is_conclusive(&self) -> bool {
        self.kind() != VerdictKind::Inconclusive
    }

    pub fn tau(&self) -> Option<f64> {
        self.diagnostics.tau
    }

    /// 1 for Divergent, 0 for Inconclusive, -1 for Finite.
    pub fn code(&self) -> i32 {
        match self.kind() {
            VerdictKind::Divergent => 1,
            VerdictKind::Inconclusive => 0,
            VerdictKind::Finite => -1,
        }
    }
}

fn estimate(series: &ConeSumSeries) -> f64 {
    let s = series.partial.last().copied().unwrap_or(0.0);
    if series.q().is_infinite() {
        s
    } else {
        s.powf(1.0 / series.q())
    }
}

/// Weighted least squares `y = a + σ x`; returns `(σ, weighted RMS residual)`.
fn wls_slope(xs: &[f64], ys: &[f64], ws: &[f64]) -> (f64, f64) {
    let sw: f64 = ws.iter().sum();
    let xm = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).zip(ws).map(|((x, y), w)| w * (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (y - ym - slope * (x - xm)).powi(2))
        .sum();
    (slope, (ss / sw).sqrt())
}

pub fn classify(series: &ConeSumSeries) -> Result<Verdict> {
    classify_with(series, &ClassifyOptions::default())
}

/// Decides convergence from the log-log slope σ of the outermost shells.
/// With `a_m ~ R_m^σ` on doubling shells the per-point exponent is
/// `τ = (σ - d)/q` and the series converges iff `τ < -d/q`.
pub fn classify_with(series: &ConeSumSeries, opts: &ClassifyOptions) -> Result<Verdict> {
    let a = &series.aggregates;
    let m = a.len();
    if m < opts.min_shells {
        return Err(Error::TooFewShells { got: m, need: opts.min_shells });
    }
    let q = series.q();
    let d = series.meta.d as f64;
    let (threshold, to_tau): (f64, Box<dyn Fn(f64) -> f64>) = if q.is_infinite() {
        (0.0, Box::new(|s| s))
    } else {
        (-d / q, Box::new(move |s| (s - d) / q))
    };
    let mut diag = Diagnostics { threshold: Some(threshold), ..Default::default() };
    let s_m = series.partial.last().copied().unwrap_or(0.0);
    if s_m == 0.0 {
        return Ok(Verdict { outcome: Outcome::Finite { estimate: 0.0 }, diagnostics: diag });
    }
    if a[m - 1] == 0.0 {
        diag.note = Some("outermost shell below the rounding floor".into());
        diag.cauchy_ratio = Some(0.0);
        return Ok(Verdict { outcome: Outcome::Finite { estimate: estimate(series) }, diagnostics: diag });
    }
    let k = opts.window.min(m);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for (i, idx) in (m - k..m).enumerate() {
        if a[idx] > 0.0 {
            xs.push(series.radii[idx + 1].ln());
            ys.push(a[idx].ln());
            ws.push((i + 1) as f64);
        }
    }
    diag.shells_used = xs.len();
    let incr = if q.is_infinite() { s_m - series.partial[m - 1] } else { a[m - 1] };
    let ratio = incr / s_m;
    diag.cauchy_ratio = Some(ratio);
    if xs.len() < 3 {
        diag.note = Some("too few nonzero shells for a slope".into());
        return Ok(Verdict { outcome: Outcome::Inconclusive { tau: threshold, margin: opts.margin }, diagnostics: diag });
    }
    let (sigma, resid) = wls_slope(&xs, &ys, &ws);
    let tau = to_tau(sigma);
    diag.sigma = Some(sigma);
    diag.tau = Some(tau);
    diag.residual = Some(resid);
    let outcome = if tau < threshold - opts.margin {
        Outcome::Finite { estimate: estimate(series) }
    } else if tau > threshold + opts.margin {
        if ratio < opts.cauchy_tol {
            diag.note = Some("partial sums have stalled although the slope says divergent".into());
            Outcome::Inconclusive { tau, margin: opts.margin }
        } else {
            Outcome::Divergent { tau }
        }
    } else {
        Outcome::Inconclusive { tau, margin: opts.margin }
    };
    Ok(Verdict { outcome, diagnostics: diag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn meta(q: f64, d: usize) -> SeriesMeta {
        SeriesMeta {
            kind: "test".into(),
            q,
            d,
            cone: Cone::from_degrees(&vec![1.0; d], 20.0).unwrap(),
            lattice: None,
            density: None,
        }
    }

    /// Series of `Σ k^{τ q}` over integer points (d = 1) on doubling shells.
    fn power_series(tau: f64, q: f64) -> ConeSumSeries {
        let radii: Vec<f64> = (0..9).map(|i| 4.0 * 2f64.powi(i)).collect();
        let mut b = SeriesBuilder::new(radii, q);
        for k in 1..=1024 {
            b.add(k as f64, (k as f64).powf(tau), 1.0);
        }
        b.finish(meta(q, 1))
    }

    fn lattice1() -> Lattice {
        Lattice::cubic(1, PI).unwrap()
    }

    fn jump() -> GridSignal {
        GridSignal::on_cube(-8.0, 8.0, 1 << 14, 1, |x| {
            let b = if x[0].abs() < 4.0 {
                1.0
            } else if x[0].abs() < 6.0 {
                let t = (6.0 - x[0].abs()) / 2.0;
                let e = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
                e(t) / (e(t) + e(1.0 - t))
            } else {
                0.0
            };
            let h = if x[0] > 0.0 { 1.0 } else if x[0] == 0.0 { 0.5 } else { 0.0 };
            c(h * b)
        })
        .unwrap()
    }

    fn bump() -> GridSignal {
        GridSignal::on_cube(-8.0, 8.0, 1 << 14, 1, |x| {
            let t = x[0] / 3.0;
            if t.abs() < 1.0 { c((-1.0 / (1.0 - t * t)).exp()) } else { c(0.0) }
        })
        .unwrap()
    }

    #[test]
    fn shell_radii() {
        let s = ShellSpec::for_lattice(&lattice1(), 0.5 * PI * 1024.0);
        let r = s.radii();
        assert_eq!(r.len(), 8);
        assert!((r[0] - 4.0 * PI).abs() < 1e-12);
        assert!(r.windows(2).all(|w| (w[1] / w[0] - 2.0).abs() < 1e-12));
    }

    #[test]
    fn classifier_on_model_series() {
        // τ q against the threshold -1 for q = 1, d = 1
        let v = classify(&power_series(-2.0, 1.0)).unwrap();
        assert!(v.is_finite(), "{v:?}");
        assert!((v.tau().unwrap() + 2.0).abs() < 0.05);
        let v = classify(&power_series(0.0, 1.0)).unwrap();
        assert!(v.is_divergent(), "{v:?}");
        let v = classify(&power_series(-1.0, 1.0)).unwrap();
        assert_eq!(v.kind(), VerdictKind::Inconclusive);
        let v = classify(&power_series(-1.0, 2.0)).unwrap();
        assert!(v.is_finite());
        let v = classify(&power_series(0.5, f64::INFINITY)).unwrap();
        assert!(v.is_divergent());
        let v = classify(&power_series(-0.5, f64::INFINITY)).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn zero_and_short_series() {
        let mut b = SeriesBuilder::new(vec![1.0, 2.0, 4.0, 8.0, 16.0], 2.0);
        b.add(3.0, 0.0, 1.0);
        let v = classify(&b.finish(meta(2.0, 1))).unwrap();
        assert_eq!(v.outcome, Outcome::Finite { estimate: 0.0 });
        let b = SeriesBuilder::new(vec![1.0, 2.0, 4.0], 2.0);
        assert!(matches!(classify(&b.finish(meta(2.0, 1))), Err(Error::TooFewShells { got: 2, need: 4 })));
    }

    #[test]
    fn stalled_partial_sums_block_divergence() {
        // rising slope but a last increment that is negligible next to the core
        let radii: Vec<f64> = (0..7).map(|i| 2f64.powi(i)).collect();
        let mut b = SeriesBuilder::new(radii, 1.0);
        b.add(0.5, 1e9, 1.0);
        for i in 1..7 {
            b.add(1.5 * 2f64.powi(i - 1), 2f64.powi(3 * i), 1.0);
        }
        let v = classify(&b.finish(meta(1.0, 1))).unwrap();
        assert_eq!(v.kind(), VerdictKind::Inconclusive);
        assert!(v.diagnostics.note.is_some());
    }

    #[test]
    fn partial_sums_monotone() {
        let s = power_series(-0.7, 1.5);
        assert!(s.partial.windows(2).all(|w| w[1] >= w[0]));
        assert!(s.aggregates.iter().all(|a| *a >= 0.0));
    }

    #[test]
    fn smooth_bump_decays_fast() {
        let f = bump();
        let r = 0.5 * PI * 1024.0;
        let cone = Cone::from_degrees(&[1.0], 20.0).unwrap();
        let s = discrete_fl_series(&f, &Weight::unit(), 2.0, &cone, &lattice1(), r).unwrap();
        let nz: Vec<f64> = s.aggregates.iter().copied().take_while(|a| *a > 0.0).collect();
        assert!(nz.len() >= 2);
        let slope = (nz[nz.len() - 1] / nz[nz.len() - 2]).ln() / 2f64.ln();
        assert!(slope <= -6.0, "{slope}");
        assert!(classify(&s).unwrap().is_finite());
        let z = GridSignal::zeros(vec![-8.0], vec![1.0 / 1024.0], vec![1 << 14]).unwrap();
        let s = discrete_fl_series(&z, &Weight::unit(), 2.0, &cone, &lattice1(), r).unwrap();
        assert!(s.aggregates.iter().all(|a| *a == 0.0));
        assert_eq!(classify(&s).unwrap().outcome, Outcome::Finite { estimate: 0.0 });
    }

    #[test]
    fn jump_follows_inverse_frequency() {
        let f = jump();
        let r = 0.5 * PI * 1024.0;
        let cone = Cone::from_degrees(&[1.0], 20.0).unwrap();
        let s = discrete_fl_series(&f, &Weight::unit(), 2.0, &cone, &lattice1(), r).unwrap();
        // sampled step with value 1/2 at the jump: |f̂(ξ)| = (2π)^{-1/2} (h/2) cot(hξ/2)
        let h = f.spacing()[0];
        for (m, a) in s.aggregates.iter().enumerate().skip(2) {
            let lo = s.radii[m];
            let hi = s.radii[m + 1];
            let model: f64 = (1..)
                .map(|k| PI * k as f64)
                .skip_while(|x| *x <= lo)
                .take_while(|x| *x <= hi)
                .map(|x| (0.5 * h / (0.5 * h * x).tan()).powi(2) / TAU_)
                .sum();
            assert!((a / model - 1.0).abs() < 0.1, "shell {m}: {a} vs {model}");
        }
        let v = classify(&s).unwrap();
        assert!(v.is_finite());
        assert!((v.tau().unwrap() + 1.0).abs() < 0.1);
        let s1 = discrete_fl_series(&f, &Weight::bracket_power(1.0), 1.0, &cone, &lattice1(), r).unwrap();
        assert!(classify(&s1).unwrap().is_divergent());
    }

    const TAU_: f64 = std::f64::consts::TAU;

    #[test]
    fn weight_shift_moves_tau() {
        let f = jump();
        let r = 0.5 * PI * 1024.0;
        let cone = Cone::from_degrees(&[1.0], 20.0).unwrap();
        let spec = LatticeSpectrum::compute(&f, &lattice1(), r, None).unwrap();
        let shells = ShellSpec::for_lattice(&lattice1(), r);
        for q in [1.0, 2.0] {
            let base = classify(&spec.series(&Weight::bracket_power(0.0), q, &cone, &shells).unwrap()).unwrap();
            for t in [1.0, 2.0] {
                let v = classify(&spec.series(&Weight::bracket_power(t), q, &cone, &shells).unwrap()).unwrap();
                assert!((v.tau().unwrap() - base.tau().unwrap() - t).abs() < 0.05);
            }
        }
    }

    #[test]
    fn wider_cones_never_shrink_sums() {
        let f = GridSignal::on_cube(-2.0, 2.0, 256, 2, |x| {
            if x[0] > 0.0 && x[0] < 1.0 && x[1].abs() < 0.5 { c(1.0) } else { c(0.0) }
        })
        .unwrap();
        let l2 = Lattice::cubic(2, PI / 2.0).unwrap();
        let r = 0.5 * PI * 64.0;
        let spec = LatticeSpectrum::compute(&f, &l2, r, None).unwrap();
        let shells = ShellSpec::for_lattice(&l2, r);
        let mut prev: Option<ConeSumSeries> = None;
        for ap in [10.0, 20.0, 40.0, 80.0] {
            let cone = Cone::from_degrees(&[1.0, 0.3], ap).unwrap();
            let s = spec.series(&Weight::unit(), 1.5, &cone, &shells).unwrap();
            if let Some(p) = &prev {
                assert!(s.partial.iter().zip(&p.partial).all(|(a, b)| a >= b));
            }
            prev = Some(s);
        }
    }

    #[test]
    fn continuous_matches_discrete_on_jump() {
        let f = jump();
        let r = 0.5 * PI * 1024.0;
        let cone = Cone::from_degrees(&[1.0], 20.0).unwrap();
        let shells = ShellSpec::for_lattice(&lattice1(), r);
        for (q, s) in [(1.0, 1.0), (2.0, 0.0)] {
            let w = Weight::bracket_power(s);
            let cs = continuous_fl_series(&f, &w, q, &cone, 4.0 / PI, &shells).unwrap();
            let ds = discrete_fl_series(&f, &w, q, &cone, &lattice1(), r).unwrap();
            assert_eq!(classify(&cs).unwrap().kind(), classify(&ds).unwrap().kind());
        }
        let z = GridSignal::zeros(vec![-8.0], vec![1.0 / 1024.0], vec![1 << 14]).unwrap();
        let cs = continuous_fl_series(&z, &Weight::unit(), 2.0, &cone, 1.0, &shells).unwrap();
        assert!(cs.partial.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn continuous_2d_integrates_area() {
        // |f̂| is nearly constant for a single-sample spike: the integral of 1 over the sector
        let f = GridSignal::from_fn(vec![-1.0, -1.0], vec![1.0 / 64.0; 2], vec![128, 128], |x| {
            if x[0] == 0.0 && x[1] == 0.0 { c(1.0) } else { c(0.0) }
        })
        .unwrap();
        let cone = Cone::from_degrees(&[0.0, 1.0], 30.0).unwrap();
        let shells = ShellSpec { r0: 4.0, ratio: 2.0, r_max: 64.0 };
        let s = continuous_fl_series(&f, &Weight::unit(), 1.0, &cone, 1.0, &shells).unwrap();
        let amp = f.l1_norm();
        let expect = amp * 0.5 * (2.0 * 30f64.to_radians()) * 64.0 * 64.0;
        assert!((s.partial.last().unwrap() / expect - 1.0).abs() < 1e-10);
    }

    #[test]
    fn series_serialises() {
        let s = power_series(-1.0, f64::INFINITY);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"q\":\"inf\""));
        let back: ConeSumSeries = serde_json::from_str(&text).unwrap();
        assert!(back.q().is_infinite());
        let v = classify(&power_series(0.0, 1.0)).unwrap();
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["verdict"], "divergent");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        power_series(-1.0, 2.0).write_csv(&p).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("R_m,a_m,S_m\n"));
    }
}
