use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use dwf_core::fixtures;
use dwf_core::gabor::{build_agp, check_partition, round_trip_error};
use dwf_core::seminorm::{ClassifyOptions, Verdict};
use dwf_core::signal::{io, GridSignal, Smoothness};
use dwf_core::suite;
use dwf_core::wavefront::{
    check_equivalence, df_fl_point, df_mod_point, standard_exponents, Exponents, ScanConfig, WavefrontQuery,
};

use crate::config::{Method, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;

fn load_signal(cfg: &RunConfig) -> Result<GridSignal> {
    let path = cfg.signal.as_ref().ok_or_else(|| anyhow!("--signal is required"))?;
    let grid = match (cfg.csv_origin, cfg.csv_spacing) {
        (Some(o), Some(h)) => Some((o, h)),
        _ => None,
    };
    io::load(path, grid).with_context(|| format!("loading signal {}", path.display()))
}

fn meta() -> Value {
    json!({ "tool": "dwf", "version": env!("CARGO_PKG_VERSION") })
}

/// Pretty JSON with a trailing newline, to stdout and optionally a file.
fn emit(report: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    if let Some(p) = out {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    print!("{text}");
    Ok(())
}

fn default_beta(d: usize) -> f64 {
    if d == 1 {
        PI
    } else {
        PI / 2.0
    }
}

fn classify_options(cfg: &RunConfig) -> ClassifyOptions {
    let mut o = ClassifyOptions::default();
    if let Some(k) = cfg.shells {
        o.window = k;
    }
    if let Some(m) = cfg.margin {
        o.margin = m;
    }
    o
}

fn check_dim(what: &str, v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        bail!("{what} {v:?} has {} coordinates but the signal has d = {d}", v.len());
    }
    Ok(())
}

fn unit(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v
}

fn query_for(cfg: &RunConfig, d: usize) -> Result<WavefrontQuery> {
    let one = |v: &Option<Vec<Vec<f64>>>, what: &str| -> Result<Option<Vec<f64>>> {
        match v.as_deref() {
            None => Ok(None),
            Some([x]) => Ok(Some(x.clone())),
            Some(_) => bail!("analyze takes a single {what}"),
        }
    };
    let x0 = one(&cfg.points, "--x0")?.unwrap_or_else(|| vec![0.0; d]);
    let direction = one(&cfg.directions, "--direction")?.unwrap_or_else(|| unit(d));
    check_dim("x0", &x0, d)?;
    check_dim("direction", &direction, d)?;
    let mut q = WavefrontQuery::new(x0, direction).with_exponents(
        cfg.p.unwrap_or(2.0),
        cfg.q.unwrap_or(1.0),
        cfg.s.unwrap_or(0.0),
    );
    if let Some(a) = cfg.aperture_deg {
        q.aperture_deg = a;
    }
    q.epsilon = cfg.epsilon;
    q.r_max = cfg.rmax;
    q.classify = classify_options(cfg);
    Ok(q)
}

fn verdict_json(r: &dwf_core::Result<Verdict>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn analyze(cfg: &RunConfig) -> Result<u8> {
    let f = load_signal(cfg)?;
    let d = f.dim();
    let query = query_for(cfg, d)?;
    let alpha = cfg.alpha.unwrap_or(1.0);
    let beta = cfg.beta.unwrap_or_else(|| default_beta(d));
    let sys = build_agp(alpha, beta, d, Smoothness::Exp)?;
    let method = cfg.method.unwrap_or(Method::Both);
    let fl = matches!(method, Method::Fl | Method::Both).then(|| df_fl_point(&f, &query, &sys.pair));
    let m = matches!(method, Method::Mod | Method::Both).then(|| df_mod_point(&f, &query, &sys));
    let results: Vec<&dwf_core::Result<Verdict>> = fl.iter().chain(m.iter()).collect();
    let mut resolved = cfg.clone();
    resolved.alpha = Some(alpha);
    resolved.beta = Some(beta);
    resolved.method = Some(method);
    let report = json!({
        "command": "analyze",
        "config": resolved,
        "query": query,
        "fl": fl.as_ref().map(verdict_json),
        "m": m.as_ref().map(verdict_json),
        "meta": meta(),
    });
    emit(&report, cfg.out.as_deref())?;
    if let Some(Err(e)) = results.iter().find(|r| r.is_err()) {
        bail!("{e}");
    }
    let conclusive = results.iter().all(|r| r.as_ref().is_ok_and(|v| v.is_conclusive()));
    Ok(if conclusive { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

fn default_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..8).map(|i| PI / 4.0 * i as f64).map(|t| vec![t.cos(), t.sin()]).collect(),
        _ => (0..d).flat_map(|k| [1.0, -1.0].map(|s| { let mut v = vec![0.0; d]; v[k] = s; v })).collect(),
    }
}

pub fn scan(cfg: &RunConfig) -> Result<u8> {
    let f = load_signal(cfg)?;
    let d = f.dim();
    let points = cfg.points.clone().ok_or_else(|| anyhow!("scan needs at least one --x0"))?;
    if points.is_empty() {
        bail!("the point list is empty");
    }
    let directions = cfg.directions.clone().unwrap_or_else(|| default_directions(d));
    if directions.is_empty() {
        bail!("the direction list is empty");
    }
    for p in &points {
        check_dim("x0", p, d)?;
    }
    for v in &directions {
        check_dim("direction", v, d)?;
    }
    let mut sc = ScanConfig::default_for(d);
    if let Some(a) = cfg.alpha {
        sc.alpha = a;
    }
    if let Some(b) = cfg.beta {
        sc.beta = b;
    }
    if let Some(a) = cfg.aperture_deg {
        sc.aperture_deg = a;
    }
    if cfg.p.is_some() || cfg.q.is_some() || cfg.s.is_some() {
        sc.exponents =
            vec![Exponents { p: cfg.p.unwrap_or(2.0), q: cfg.q.unwrap_or(1.0), s: cfg.s.unwrap_or(0.0) }];
    } else {
        sc.exponents = standard_exponents();
    }
    sc.epsilon = cfg.epsilon;
    sc.r_max = cfg.rmax;
    sc.classify = classify_options(cfg);
    let est = dwf_core::wavefront::scan(&f, &points, &directions, &sc)?;
    let rep = check_equivalence(&est);
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
        est.write_json(&dir.join("estimate.json"))?;
        est.write_csv(&dir.join("heatmap.csv"))?;
    }
    let errors: Vec<Value> = est
        .records
        .iter()
        .filter_map(|r| {
            let e = r.fl_error.as_ref().or(r.m_error.as_ref())?;
            Some(json!({ "x0": r.x0, "direction": r.direction, "error": e }))
        })
        .collect();
    let report = json!({
        "command": "scan",
        "config": cfg,
        "scan": sc,
        "equivalence": rep,
        "errors": errors,
        "meta": meta(),
    });
    emit(&report, cfg.out.as_ref().map(|d| d.join("equivalence.json")).as_deref())?;
    Ok(if rep.holds { EXIT_OK } else { EXIT_FAIL })
}

fn check_signal(d: usize) -> Result<GridSignal> {
    let f = match d {
        1 => GridSignal::on_cube(-4.0, 4.0, 4096, 1, |x| {
            let e = fixtures::bump(x[0], 2.5);
            num_complex(e * (3.0 * x[0]).cos(), 0.2 * x[0] * e)
        })?,
        2 => GridSignal::on_cube(-1.0, 1.0, 1024, 2, |x| {
            let e = fixtures::bump((x[0] * x[0] + x[1] * x[1]).sqrt(), 0.7);
            num_complex(e * (2.0 * x[0]).cos(), e * (2.0 * x[0]).sin())
        })?,
        _ => GridSignal::on_cube(-1.0, 1.0, 64, d, |x| {
            num_complex(fixtures::bump(x.iter().map(|v| v * v).sum::<f64>().sqrt(), 0.9), 0.0)
        })?,
    };
    Ok(f)
}

fn num_complex(re: f64, im: f64) -> dwf_core::Complex64 {
    dwf_core::Complex64::new(re, im)
}

pub fn gabor_check(cfg: &RunConfig) -> Result<u8> {
    let signal = match &cfg.signal {
        Some(_) => Some(load_signal(cfg)?),
        None => None,
    };
    let d = signal.as_ref().map(GridSignal::dim).or(cfg.dim).unwrap_or(1);
    let alpha = cfg.alpha.unwrap_or(1.0);
    let beta = cfg.beta.unwrap_or(PI);
    let sys = build_agp(alpha, beta, d, Smoothness::Exp)?;
    let n = match d {
        1 => 400,
        2 => 60,
        _ => 16,
    };
    let deviation = check_partition(&sys, n)?;
    let f = match signal {
        Some(f) => f,
        None => check_signal(d)?,
    };
    let radius = cfg.rmax.unwrap_or(0.8 * f.nyquist_guard());
    let eps: Vec<f64> = match cfg.epsilon {
        Some(e) => vec![e],
        None => vec![1.0, 0.5, 0.25],
    };
    let mut trips = Vec::new();
    let mut worst: f64 = 0.0;
    for e in eps {
        let err = round_trip_error(&f, &sys.with_epsilon(e)?, radius)?;
        worst = worst.max(err);
        trips.push(json!({ "epsilon": e, "relative_l2_error": err }));
    }
    let passed = deviation <= 1e-10 && worst <= 1e-6;
    let report = json!({
        "command": "gabor-check",
        "alpha": alpha,
        "beta": beta,
        "d": d,
        "pair_class": sys.pair.class,
        "coupling": sys.pair.coupling,
        "partition_constant": sys.partition_constant(),
        "partition_deviation": deviation,
        "round_trip": trips,
        "radius": radius,
        "passed": passed,
        "meta": meta(),
    });
    emit(&report, cfg.out.as_deref())?;
    Ok(if passed { EXIT_OK } else { EXIT_FAIL })
}

pub fn make_fixtures(cfg: &RunConfig) -> Result<u8> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("fixtures"));
    let written = fixtures::write_fixtures(&dir)?;
    for p in &written {
        println!("{}", p.display());
    }
    Ok(EXIT_OK)
}

const FIXTURE_SUITE: &str = "fixtures";

fn suite_names() -> Vec<&'static str> {
    let mut v = vec![FIXTURE_SUITE];
    v.extend(suite::CRITERIA);
    v
}

/// Loads each fixture from `dir` (or a fresh temporary copy) and compares it
/// with the regenerated signal.
fn fixture_suite(dir: Option<&Path>) -> suite::CriterionResult {
    let run = || -> Result<Vec<String>> {
        let scratch = dir.is_none().then(|| std::env::temp_dir().join(format!("dwf-selftest-{}", std::process::id())));
        let dir = match (dir, &scratch) {
            (Some(d), _) => d.to_path_buf(),
            (None, Some(t)) => {
                fixtures::write_fixtures(t)?;
                t.clone()
            }
            (None, None) => unreachable!(),
        };
        let mut bad = Vec::new();
        for name in fixtures::NAMES {
            let p = dir.join(format!("{name}.json"));
            let ok = match io::read_signal(&p) {
                Ok(g) => {
                    let f = fixtures::fixture(name)?;
                    f.origin() == g.origin() && f.spacing() == g.spacing() && f.shape() == g.shape() && f.samples() == g.samples()
                }
                Err(_) => false,
            };
            if !ok {
                bad.push(name.to_string());
            }
        }
        if let Some(t) = scratch {
            let _ = std::fs::remove_dir_all(t);
        }
        Ok(bad)
    };
    match run() {
        Ok(bad) => suite::CriterionResult {
            name: FIXTURE_SUITE.into(),
            passed: bad.is_empty(),
            summary: if bad.is_empty() {
                format!("{} fixtures match their generators", fixtures::NAMES.len())
            } else {
                format!("missing or corrupted: {}", bad.join(", "))
            },
            metrics: json!({ "bad": bad }),
        },
        Err(e) => suite::CriterionResult {
            name: FIXTURE_SUITE.into(),
            passed: false,
            summary: format!("error: {e:#}"),
            metrics: json!({ "error": format!("{e:#}") }),
        },
    }
}

pub fn selftest(cfg: &RunConfig, list: bool, only: &[String], fixture_dir: Option<&Path>) -> Result<u8> {
    let names = suite_names();
    if list {
        for n in &names {
            println!("{n}");
        }
        return Ok(EXIT_OK);
    }
    for n in only {
        if !names.contains(&n.as_str()) {
            bail!("unknown suite {n:?}; known: {}", names.join(", "));
        }
    }
    let seed = cfg.seed.unwrap_or(suite::DEFAULT_SEED);
    let mut results = Vec::new();
    for n in names {
        if !only.is_empty() && !only.iter().any(|o| o == n) {
            continue;
        }
        let r = if n == FIXTURE_SUITE {
            fixture_suite(fixture_dir)
        } else {
            suite::run(n, seed).expect("known criterion")
        };
        eprintln!("{}", r.line());
        results.push(r);
    }
    let passed = results.iter().all(|r| r.passed);
    let report = json!({
        "command": "selftest",
        "seed": seed,
        "suites": results,
        "passed": passed,
        "meta": meta(),
    });
    emit(&report, cfg.out.as_deref())?;
    Ok(if passed { EXIT_OK } else { EXIT_FAIL })
}
