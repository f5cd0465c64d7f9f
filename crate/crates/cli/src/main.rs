//! `dwf`: discrete wave-front set analysis of sampled signals.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::{parse_exponent, parse_vector, Method, RunConfig};

#[derive(Parser)]
#[command(name = "dwf", version, about = "Discrete wave-front sets of sampled signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// FL and modulation verdicts at one point and direction
    Analyze(Common),
    /// Verdicts over a grid of points and directions, with the FL/M comparison
    Scan(Common),
    /// Partition and round-trip checks of an admissible Gabor pair
    GaborCheck(Common),
    /// Write the reference signals
    MakeFixtures(Common),
    /// Run the acceptance suites
    Selftest {
        #[command(flatten)]
        common: Common,
        /// Print suite names and exit
        #[arg(long)]
        list: bool,
        /// Run only these suites
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Fixture directory to verify against regenerated signals
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// Signal file: JSON header with .bin payload, or 1D .csv
    #[arg(long)]
    signal: Option<PathBuf>,
    /// JSON run configuration; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_exponent)]
    q: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    p: Option<f64>,
    /// Weight exponent of <ξ>^s
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long)]
    aperture_deg: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Point, comma separated; repeat for scans
    #[arg(long, allow_hyphen_values = true)]
    x0: Vec<String>,
    /// Cone axis, comma separated; repeat for scans
    #[arg(long, allow_hyphen_values = true)]
    direction: Vec<String>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    csv_origin: Option<f64>,
    #[arg(long)]
    csv_spacing: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            signal: self.signal.clone(),
            csv_origin: self.csv_origin,
            csv_spacing: self.csv_spacing,
            q: self.q,
            p: self.p,
            s: self.s,
            aperture_deg: self.aperture_deg,
            alpha: self.alpha,
            beta: self.beta,
            epsilon: self.epsilon,
            rmax: self.rmax,
            shells: None,
            margin: None,
            dim: self.dim,
            points: vectors(&self.x0)?,
            directions: vectors(&self.direction)?,
            method: self.method,
            out: self.out.clone(),
            seed: self.seed,
        };
        let cfg = base.overlay(&flags);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn vectors(args: &[String]) -> anyhow::Result<Option<Vec<Vec<f64>>>> {
    if args.is_empty() {
        return Ok(None);
    }
    let v: Result<Vec<_>, String> = args.iter().map(|a| parse_vector(a)).collect();
    Ok(Some(v.map_err(anyhow::Error::msg)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(c) => c.resolve().and_then(|cfg| commands::analyze(&cfg)),
        Command::Scan(c) => c.resolve().and_then(|cfg| commands::scan(&cfg)),
        Command::GaborCheck(c) => c.resolve().and_then(|cfg| commands::gabor_check(&cfg)),
        Command::MakeFixtures(c) => c.resolve().and_then(|cfg| commands::make_fixtures(&cfg)),
        Command::Selftest { common, list, suites, fixtures } => {
            common.resolve().and_then(|cfg| commands::selftest(&cfg, *list, suites, fixtures.as_deref()))
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
