//! Point verdicts and scans for the discrete wave-front sets, from localized
//! Fourier cone sums (FL) and from localized Gabor coefficients (M), plus the
//! comparison of both.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gabor::{build_agp, coefficients_at, support_index_set, CoefficientTable, GaborSystem};
use crate::geometry::{norm, AxisBox, Cone, Weight};
use crate::lattice::{parallelepiped_centered, parallelepiped_containing, Lattice, LatticePair};
use crate::seminorm::{
    classify_with, discrete_mod_series, exponent, ClassifyOptions, LatticeSpectrum, ShellSpec, Verdict,
    VerdictKind,
};
use crate::signal::{make_cutoff, multiply, GridSignal, Smoothness};

pub const DEFAULT_APERTURE_DEG: f64 = 20.0;

/// How the Λ₁-cell around `x0` is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellPlacement {
    /// Λ₁ translated so that `x0` is the centre of its cell.
    #[default]
    Centered,
    /// Λ₁ as given; fails when `x0` lies on a cell face.
    Lattice,
}

/// Cutoff `χ`: 1 on the cube of half-width `inner·r` about `x0`, 0 outside
/// `outer·r`, where `r` is the largest cube half-width inside `D ∩ X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub inner: f64,
    pub outer: f64,
    pub smoothness: Smoothness,
    pub placement: CellPlacement,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self { inner: 0.3, outer: 0.8, smoothness: Smoothness::Exp, placement: CellPlacement::Centered }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavefrontQuery {
    pub x0: Vec<f64>,
    pub direction: Vec<f64>,
    pub aperture_deg: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    #[serde(with = "exponent")]
    pub p: f64,
    pub weight: Weight,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub cutoff: CutoffSpec,
    #[serde(default)]
    pub classify: ClassifyOptions,
}

impl WavefrontQuery {
    /// Aperture 20°, `q = 1`, `p = 2`, unit weight.
    pub fn new(x0: Vec<f64>, direction: Vec<f64>) -> Self {
        Self {
            x0,
            direction,
            aperture_deg: DEFAULT_APERTURE_DEG,
            q: 1.0,
            p: 2.0,
            weight: Weight::unit(),
            epsilon: None,
            r_max: None,
            cutoff: CutoffSpec::default(),
            classify: ClassifyOptions::default(),
        }
    }

    pub fn with_exponents(mut self, p: f64, q: f64, s: f64) -> Self {
        self.p = p;
        self.q = q;
        self.weight = Weight::bracket_power(s);
        self
    }

    pub fn with_aperture(mut self, deg: f64) -> Self {
        self.aperture_deg = deg;
        self
    }

    pub fn cone(&self) -> Result<Cone> {
        if !(self.aperture_deg > 0.0 && self.aperture_deg < 90.0) {
            return Err(Error::invalid(format!("aperture must lie in (0, 90) degrees, got {}", self.aperture_deg)));
        }
        Cone::from_degrees(&self.direction, self.aperture_deg)
    }

    fn validate(&self, f: &GridSignal) -> Result<Cone> {
        let d = f.dim();
        for (got, what) in [(self.x0.len(), "x0"), (self.direction.len(), "direction")] {
            if got != d {
                return Err(Error::invalid(format!("{what} has {got} coordinates, signal has d = {d}")));
            }
        }
        if !f.domain().contains(&self.x0) {
            return Err(Error::DomainClipped { x0: self.x0.clone(), reason: "x0 lies outside the signal domain".into() });
        }
        if !(self.cutoff.inner > 0.0 && self.cutoff.inner < self.cutoff.outer && self.cutoff.outer <= 1.0) {
            return Err(Error::invalid("cutoff fractions need 0 < inner < outer <= 1"));
        }
        self.cone()
    }

    fn shells(&self, f: &GridSignal, l2: &Lattice) -> ShellSpec {
        ShellSpec::for_lattice(l2, self.r_max.unwrap_or_else(|| default_r_max(f)))
    }
}

/// Half the grid Nyquist frequency.
pub fn default_r_max(f: &GridSignal) -> f64 {
    0.5 * PI / f.h_max()
}

/// Largest `2^{-n}` with `ε · (2π/β) <= α`.
pub fn default_epsilon(sys: &GaborSystem) -> f64 {
    let mut e = 1.0;
    while e * sys.alpha2 > sys.alpha * (1.0 + 1e-12) {
        e *= 0.5;
    }
    e
}

/// The cutoff `χ` of a query: `χ(x0) = 1`, `supp χ ⊂ D ∩ X`.
pub fn localizing_cutoff(f: &GridSignal, query: &WavefrontQuery, l1: &Lattice) -> Result<crate::signal::BumpWindow> {
    let x0 = &query.x0;
    let cell = match query.cutoff.placement {
        CellPlacement::Centered => parallelepiped_centered(l1, x0),
        CellPlacement::Lattice => parallelepiped_containing(l1, x0),
    };
    let dom = f.domain();
    let r_dom = (0..f.dim()).map(|k| (x0[k] - dom.lo[k]).min(dom.hi[k] - x0[k])).fold(f64::INFINITY, f64::min);
    let r_cell = cell.inscribed_cube_halfwidth(x0);
    let r = r_dom.min(r_cell);
    let clipped = |reason: String| Error::DomainClipped { x0: x0.clone(), reason };
    if !(r > 0.0) {
        let why = if r_cell <= 0.0 { "x0 lies on a face of its lattice cell" } else { "x0 lies on the domain boundary" };
        return Err(clipped(why.into()));
    }
    let ramp = (query.cutoff.outer - query.cutoff.inner) * r;
    if ramp < 4.0 * f.h_max() {
        return Err(clipped(format!("cutoff ramp {ramp:e} spans fewer than 4 grid steps")));
    }
    make_cutoff(
        AxisBox::cube(x0, query.cutoff.inner * r),
        AxisBox::cube(x0, query.cutoff.outer * r),
        query.cutoff.smoothness,
    )
}

fn require_strong(pair: &LatticePair) -> Result<()> {
    if !pair.is_strong() {
        return Err(Error::invalid(format!(
            "the lattice pair must be strongly admissible (coupling {} < 2π)",
            pair.coupling
        )));
    }
    Ok(())
}

/// Spectrum of `χ f` over the whole ball, reusable across cones and weights.
pub fn localized_spectrum(f: &GridSignal, query: &WavefrontQuery, pair: &LatticePair) -> Result<LatticeSpectrum> {
    require_strong(pair)?;
    query.validate(f)?;
    let chi = localizing_cutoff(f, query, &pair.lambda1)?;
    let g = multiply(f, &chi)?;
    let shells = query.shells(f, &pair.lambda2);
    check_guard(f, shells.r_max)?;
    let top = shells.radii().last().copied().unwrap_or(0.0);
    LatticeSpectrum::compute(&g, &pair.lambda2, top, None)
}

fn check_guard(f: &GridSignal, r_max: f64) -> Result<()> {
    let limit = f.nyquist_guard();
    if !(r_max > 0.0 && r_max <= limit) {
        return Err(Error::FrequencyOutOfRange { norm: r_max, limit });
    }
    Ok(())
}

fn fl_from_spectrum(spec: &LatticeSpectrum, f: &GridSignal, query: &WavefrontQuery) -> Result<Verdict> {
    let cone = query.cone()?;
    let series = spec.series(&query.weight, query.q, &cone, &query.shells(f, &spec.lattice))?;
    classify_with(&series, &query.classify)
}

/// Divergent means `(x0, direction)` belongs to the FL wave-front set at this
/// aperture.
pub fn df_fl_point(f: &GridSignal, query: &WavefrontQuery, pair: &LatticePair) -> Result<Verdict> {
    let spec = localized_spectrum(f, query, pair)?;
    fl_from_spectrum(&spec, f, query)
}

/// FL verdicts for shrinking apertures around the same axis.
pub fn refine_fl(
    f: &GridSignal,
    query: &WavefrontQuery,
    pair: &LatticePair,
    apertures_deg: &[f64],
) -> Result<Vec<(f64, Verdict)>> {
    let spec = localized_spectrum(f, query, pair)?;
    apertures_deg
        .iter()
        .map(|a| Ok((*a, fl_from_spectrum(&spec, f, &query.clone().with_aperture(*a))?)))
        .collect()
}

/// Gabor coefficients of the windows whose support contains `x0`.
#[derive(Clone, Debug)]
pub struct LocalCoefficients {
    pub table: CoefficientTable,
    pub jset: Vec<Vec<i64>>,
    pub epsilon: f64,
}

pub fn local_coefficients(f: &GridSignal, query: &WavefrontQuery, sys: &GaborSystem) -> Result<LocalCoefficients> {
    query.validate(f)?;
    if sys.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: sys.dim() });
    }
    let eps = query.epsilon.unwrap_or_else(|| default_epsilon(sys));
    let sys = sys.with_epsilon(eps)?;
    let jset = support_index_set(&sys, &query.x0)?;
    let dom = f.domain();
    for j in &jset {
        for w in [sys.phi_j(j), sys.psi_j(j)] {
            let s = w.support();
            let inside = (0..f.dim()).all(|k| s.lo[k] >= dom.lo[k] && s.hi[k] <= dom.hi[k]);
            if !inside {
                return Err(Error::EpsilonTooLarge { epsilon: eps });
            }
        }
    }
    let shells = query.shells(f, sys.lambda2());
    check_guard(f, shells.r_max)?;
    let top = shells.radii().last().copied().unwrap_or(0.0);
    let table = coefficients_at(f, &sys, top, &jset)?;
    Ok(LocalCoefficients { table, jset, epsilon: eps })
}

fn m_from_coefficients(
    local: &LocalCoefficients,
    f: &GridSignal,
    query: &WavefrontQuery,
    sys: &GaborSystem,
) -> Result<Verdict> {
    let cone = query.cone()?;
    let l2 = sys.lambda2();
    let series =
        discrete_mod_series(&local.table, &query.weight, query.p, query.q, &cone, l2, &local.jset, &query.shells(f, l2))?;
    classify_with(&series, &query.classify)
}

pub fn df_mod_point(f: &GridSignal, query: &WavefrontQuery, sys: &GaborSystem) -> Result<Verdict> {
    let local = local_coefficients(f, query, sys)?;
    m_from_coefficients(&local, f, query, sys)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub s: f64,
}

/// `(p, q, s) ∈ {(1,1,1), (2,2,1), (2,1,0)}`.
pub fn standard_exponents() -> Vec<Exponents> {
    vec![
        Exponents { p: 1.0, q: 1.0, s: 1.0 },
        Exponents { p: 2.0, q: 2.0, s: 1.0 },
        Exponents { p: 2.0, q: 1.0, s: 0.0 },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub alpha: f64,
    pub beta: f64,
    pub aperture_deg: f64,
    pub exponents: Vec<Exponents>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub cutoff: CutoffSpec,
    #[serde(default)]
    pub classify: ClassifyOptions,
}

impl ScanConfig {
    /// α = 1 with β = π in 1D and β = π/2 in 2D.
    pub fn default_for(d: usize) -> Self {
        Self {
            alpha: 1.0,
            beta: if d == 1 { PI } else { PI / 2.0 },
            aperture_deg: DEFAULT_APERTURE_DEG,
            exponents: standard_exponents(),
            epsilon: None,
            r_max: None,
            cutoff: CutoffSpec::default(),
            classify: ClassifyOptions::default(),
        }
    }

    pub fn query(&self, x0: &[f64], direction: &[f64], e: &Exponents) -> WavefrontQuery {
        WavefrontQuery {
            x0: x0.to_vec(),
            direction: direction.to_vec(),
            aperture_deg: self.aperture_deg,
            q: e.q,
            p: e.p,
            weight: Weight::bracket_power(e.s),
            epsilon: self.epsilon,
            r_max: self.r_max,
            cutoff: self.cutoff.clone(),
            classify: self.classify.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub x0: Vec<f64>,
    pub direction: Vec<f64>,
    /// Polar angle of the direction in degrees (0 or 180 in 1D).
    pub theta_deg: f64,
    #[serde(flatten)]
    pub exponents: Exponents,
    pub fl: Option<Verdict>,
    pub m: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fl_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_error: Option<String>,
}

impl ScanRecord {
    pub fn tau_fl(&self) -> Option<f64> {
        self.fl.as_ref().and_then(Verdict::tau)
    }

    pub fn tau_m(&self) -> Option<f64> {
        self.m.as_ref().and_then(Verdict::tau)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavefrontEstimate {
    pub records: Vec<ScanRecord>,
    pub config: ScanConfig,
}

pub fn theta_deg(direction: &[f64]) -> f64 {
    match direction.len() {
        1 => {
            if direction[0] < 0.0 {
                180.0
            } else {
                0.0
            }
        }
        _ => direction[1].atan2(direction[0]).to_degrees(),
    }
}

fn split<T>(r: Result<T>) -> (Option<T>, Option<String>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Both point verdicts over `x_grid × directions × cfg.exponents`, in that
/// nesting order. Per-record failures are kept in the record.
pub fn scan(f: &GridSignal, x_grid: &[Vec<f64>], directions: &[Vec<f64>], cfg: &ScanConfig) -> Result<WavefrontEstimate> {
    let d = f.dim();
    let sys = build_agp(cfg.alpha, cfg.beta, d, Smoothness::Exp)?;
    let pair = sys.pair.clone();
    for v in directions {
        if v.len() != d || !(norm(v) > 0.0) {
            return Err(Error::invalid(format!("direction {v:?} is not a nonzero vector in dimension {d}")));
        }
    }
    let empty = Exponents { p: 1.0, q: 1.0, s: 0.0 };
    let records: Vec<Vec<ScanRecord>> = x_grid
        .par_iter()
        .map(|x0| {
            if directions.is_empty() || cfg.exponents.is_empty() {
                return Vec::new();
            }
            let probe = cfg.query(x0, &directions[0], cfg.exponents.first().unwrap_or(&empty));
            let spec = localized_spectrum(f, &probe, &pair).map_err(|e| e.to_string());
            let local = local_coefficients(f, &probe, &sys).map_err(|e| e.to_string());
            let mut out = Vec::with_capacity(directions.len() * cfg.exponents.len());
            for dir in directions {
                for e in &cfg.exponents {
                    let q = cfg.query(x0, dir, e);
                    let (fl, fl_error) = match &spec {
                        Ok(s) => split(fl_from_spectrum(s, f, &q)),
                        Err(msg) => (None, Some(msg.clone())),
                    };
                    let (m, m_error) = match &local {
                        Ok(t) => split(m_from_coefficients(t, f, &q, &sys)),
                        Err(msg) => (None, Some(msg.clone())),
                    };
                    out.push(ScanRecord {
                        x0: x0.clone(),
                        direction: dir.clone(),
                        theta_deg: theta_deg(dir),
                        exponents: *e,
                        fl,
                        m,
                        fl_error,
                        m_error,
                    });
                }
            }
            out
        })
        .collect();
    Ok(WavefrontEstimate { records: records.into_iter().flatten().collect(), config: cfg.clone() })
}

impl WavefrontEstimate {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// One row per record; verdict codes 1 (divergent), 0 (inconclusive),
    /// -1 (finite), empty on error.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let d = self.records.first().map_or(1, |r| r.x0.len());
        let mut header: Vec<String> = (1..=d).map(|i| format!("x0_{i}")).collect();
        header.extend(["theta_deg", "p", "q", "s", "tau_fl", "tau_m", "code_fl", "code_m"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |t| format!("{t}"));
        let code = |v: &Option<Verdict>| v.as_ref().map_or(String::new(), |v| v.code().to_string());
        let exp = |v: f64| if v.is_infinite() { "inf".to_string() } else { format!("{v}") };
        for r in &self.records {
            let mut row: Vec<String> = r.x0.iter().map(|v| format!("{v}")).collect();
            row.push(format!("{}", r.theta_deg));
            row.push(exp(r.exponents.p));
            row.push(exp(r.exponents.q));
            row.push(format!("{}", r.exponents.s));
            row.push(opt(r.tau_fl()));
            row.push(opt(r.tau_m()));
            row.push(code(&r.fl));
            row.push(code(&r.m));
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub x0: Vec<f64>,
    pub direction: Vec<f64>,
    #[serde(flatten)]
    pub exponents: Exponents,
    pub fl: VerdictKind,
    pub m: VerdictKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub records: usize,
    /// Records where both verdicts are conclusive.
    pub compared: usize,
    pub excluded_inconclusive: usize,
    pub excluded_errors: usize,
    pub disagreements: Vec<Disagreement>,
    /// No record could be compared.
    pub empty: bool,
    pub holds: bool,
}

/// Lists conclusive records where the FL and M verdicts differ.
pub fn check_equivalence(est: &WavefrontEstimate) -> EquivalenceReport {
    let mut rep = EquivalenceReport {
        records: est.records.len(),
        compared: 0,
        excluded_inconclusive: 0,
        excluded_errors: 0,
        disagreements: Vec::new(),
        empty: true,
        holds: true,
    };
    for r in &est.records {
        let (Some(fl), Some(m)) = (&r.fl, &r.m) else {
            rep.excluded_errors += 1;
            continue;
        };
        if !fl.is_conclusive() || !m.is_conclusive() {
            rep.excluded_inconclusive += 1;
            continue;
        }
        rep.compared += 1;
        if fl.kind() != m.kind() {
            rep.disagreements.push(Disagreement {
                x0: r.x0.clone(),
                direction: r.direction.clone(),
                exponents: r.exponents,
                fl: fl.kind(),
                m: m.kind(),
            });
        }
    }
    rep.empty = rep.compared == 0;
    rep.holds = rep.disagreements.is_empty();
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{jump_1d, smooth_bump_1d};

    fn pair_1d() -> LatticePair {
        build_agp(1.0, PI, 1, Smoothness::Exp).unwrap().pair
    }

    #[test]
    fn default_epsilon_fits_cells() {
        let sys = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        assert_eq!(default_epsilon(&sys), 0.5);
        let sys = build_agp(1.0, PI / 2.0, 2, Smoothness::Exp).unwrap();
        assert_eq!(default_epsilon(&sys), 0.25);
        let sys = build_agp(0.5, 6.0, 1, Smoothness::Exp).unwrap();
        assert_eq!(default_epsilon(&sys), 0.25);
    }

    #[test]
    fn cutoff_is_one_at_x0_and_inside_cell() {
        let f = jump_1d();
        let q = WavefrontQuery::new(vec![0.0], vec![1.0]);
        let chi = localizing_cutoff(&f, &q, &pair_1d().lambda1).unwrap();
        assert_eq!(chi.eval(&[0.0]), 1.0);
        let s = chi.support();
        assert!(s.lo[0] >= -0.5 && s.hi[0] <= 0.5);
        let mut q2 = q.clone();
        q2.cutoff.placement = CellPlacement::Lattice;
        assert!(matches!(localizing_cutoff(&f, &q2, &pair_1d().lambda1), Err(Error::DomainClipped { .. })));
        q2.x0 = vec![0.25];
        let chi = localizing_cutoff(&f, &q2, &pair_1d().lambda1).unwrap();
        assert_eq!(chi.eval(&[0.25]), 1.0);
    }

    #[test]
    fn point_verdicts_on_jump() {
        let f = jump_1d();
        let sys = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        let at0 = WavefrontQuery::new(vec![0.0], vec![1.0]).with_exponents(2.0, 1.0, 1.0);
        assert!(df_fl_point(&f, &at0, &sys.pair).unwrap().is_divergent());
        assert!(df_mod_point(&f, &at0, &sys).unwrap().is_divergent());
        let at3 = WavefrontQuery::new(vec![3.0], vec![1.0]).with_exponents(2.0, 1.0, 1.0);
        assert!(df_fl_point(&f, &at3, &sys.pair).unwrap().is_finite());
        assert!(df_mod_point(&f, &at3, &sys).unwrap().is_finite());
        let bump = smooth_bump_1d();
        let q = WavefrontQuery::new(vec![1.0], vec![-1.0]).with_exponents(2.0, 2.0, 0.0);
        assert!(df_fl_point(&bump, &q, &sys.pair).unwrap().is_finite());
    }

    #[test]
    fn query_validation() {
        let f = jump_1d();
        let sys = build_agp(1.0, PI, 1, Smoothness::Exp).unwrap();
        let bad = WavefrontQuery::new(vec![20.0], vec![1.0]);
        assert!(matches!(df_fl_point(&f, &bad, &sys.pair), Err(Error::DomainClipped { .. })));
        let bad = WavefrontQuery::new(vec![0.0], vec![1.0]).with_aperture(90.0);
        assert!(df_fl_point(&f, &bad, &sys.pair).is_err());
        let mut big = WavefrontQuery::new(vec![7.5], vec![1.0]);
        big.epsilon = Some(1.0);
        assert!(matches!(df_mod_point(&f, &big, &sys), Err(Error::EpsilonTooLarge { .. })));
        let weak = build_agp(1.0, 6.0, 1, Smoothness::Exp).unwrap();
        let mut p = weak.pair.clone();
        p.class = crate::lattice::PairClass::Weak;
        assert!(df_fl_point(&f, &WavefrontQuery::new(vec![0.0], vec![1.0]), &p).is_err());
    }

    #[test]
    fn refinement_keeps_finite() {
        let f = jump_1d();
        let q = WavefrontQuery::new(vec![1.5], vec![1.0]).with_exponents(1.0, 1.0, 1.0);
        let v = refine_fl(&f, &q, &pair_1d(), &[20.0, 10.0, 5.0]).unwrap();
        assert!(v.iter().all(|(_, v)| v.is_finite()));
    }

    #[test]
    fn scan_shapes_and_equivalence() {
        let f = jump_1d();
        let cfg = ScanConfig::default_for(1);
        let est = scan(&f, &[vec![0.0], vec![3.0]], &[vec![1.0], vec![-2.0]], &cfg).unwrap();
        assert_eq!(est.records.len(), 2 * 2 * 3);
        let one = scan(&f, &[vec![0.0]], &[vec![1.0]], &cfg).unwrap();
        let q = cfg.query(&[0.0], &[1.0], &cfg.exponents[0]);
        assert_eq!(one.records[0].fl.as_ref().unwrap(), &df_fl_point(&f, &q, &pair_1d()).unwrap());
        let rep = check_equivalence(&est);
        assert!(rep.holds, "{rep:?}");
        assert!(rep.compared > 0);
        let none = scan(&f, &[vec![0.0]], &[], &cfg).unwrap();
        assert!(none.records.is_empty());
        assert!(check_equivalence(&none).empty);
        let bad = scan(&f, &[vec![20.0]], &[vec![1.0]], &cfg).unwrap();
        assert!(bad.records[0].fl_error.is_some());
        let dir = tempfile::tempdir().unwrap();
        est.write_csv(&dir.path().join("h.csv")).unwrap();
        est.write_json(&dir.path().join("h.json")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
        assert!(text.starts_with("x0_1,theta_deg,p,q,s,tau_fl,tau_m,code_fl,code_m\n"));
        assert_eq!(text.lines().count(), 13);
    }

    #[test]
    fn direction_scale_is_irrelevant() {
        let f = jump_1d();
        let a = WavefrontQuery::new(vec![0.0], vec![1.0]).with_exponents(2.0, 2.0, 1.0);
        let mut b = a.clone();
        b.direction = vec![2.0];
        assert_eq!(df_fl_point(&f, &a, &pair_1d()).unwrap(), df_fl_point(&f, &b, &pair_1d()).unwrap());
    }
}
