use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use dwf_core::seminorm::exponent;

mod opt_exponent {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => dwf_core::seminorm::exponent::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "dwf_core::seminorm::exponent")] f64);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

/// Every tunable of every command. Fields left `None` take command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub signal: Option<PathBuf>,
    /// Grid origin and spacing for `.csv` signals.
    pub csv_origin: Option<f64>,
    pub csv_spacing: Option<f64>,
    #[serde(default, with = "opt_exponent", skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, with = "opt_exponent", skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub s: Option<f64>,
    pub aperture_deg: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub rmax: Option<f64>,
    /// Regression window, in shells.
    pub shells: Option<usize>,
    pub margin: Option<f64>,
    pub dim: Option<usize>,
    /// Points `x0`; `analyze` takes a single one.
    pub points: Option<Vec<Vec<f64>>>,
    pub directions: Option<Vec<Vec<f64>>>,
    pub method: Option<Method>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fl,
    Mod,
    Both,
}

pub fn parse_exponent(t: &str) -> std::result::Result<f64, String> {
    exponent::parse(t)
}

pub fn parse_vector(t: &str) -> std::result::Result<Vec<f64>, String> {
    t.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("not a number list: {t:?}")))
        .collect()
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // relative signal paths are relative to the config file
        if let (Some(sig), Some(dir)) = (&cfg.signal, path.parent()) {
            if sig.is_relative() {
                cfg.signal = Some(dir.join(sig));
            }
        }
        Ok(cfg)
    }

    /// Fields set in `top` win.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        overlay!(
            self, top, signal, csv_origin, csv_spacing, q, p, s, aperture_deg, alpha, beta, epsilon, rmax, shells,
            margin, dim, points, directions, method, out, seed
        );
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("q", self.q), ("p", self.p)] {
            if let Some(v) = v {
                if !(v >= 1.0) {
                    bail!("--{name} must lie in [1, inf], got {v}");
                }
            }
        }
        if let Some(a) = self.aperture_deg {
            if !(a > 0.0 && a < 90.0) {
                bail!("--aperture-deg must lie in (0, 90), got {a}");
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("rmax", self.rmax)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("--{name} must be positive, got {v}");
                }
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e <= 1.0) {
                bail!("--epsilon must lie in (0, 1], got {e}");
            }
        }
        if let Some(m) = self.margin {
            if !(m >= 0.0) {
                bail!("margin must be nonnegative, got {m}");
            }
        }
        if let Some(k) = self.shells {
            if k < 3 {
                bail!("the regression window needs at least 3 shells, got {k}");
            }
        }
        if let Some(d) = self.dim {
            if !(1..=3).contains(&d) {
                bail!("--dim must be 1, 2 or 3, got {d}");
            }
        }
        if let Some(s) = self.s {
            if !s.is_finite() {
                bail!("--s must be finite");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: RunConfig = serde_json::from_str(r#"{"q": "inf", "s": 1.5, "alpha": 2.0}"#).unwrap();
        assert!(file.q.unwrap().is_infinite());
        let flags = RunConfig { s: Some(0.5), ..Default::default() };
        let c = file.overlay(&flags);
        assert_eq!(c.s, Some(0.5));
        assert_eq!(c.alpha, Some(2.0));
        assert!(serde_json::from_str::<RunConfig>(r#"{"qq": 1}"#).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let c = RunConfig { aperture_deg: Some(95.0), ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("aperture"));
        let c = RunConfig { q: Some(0.5), ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("--q"));
        assert_eq!(parse_vector("1, -2.5").unwrap(), vec![1.0, -2.5]);
        assert!(parse_exponent("inf").unwrap().is_infinite());
    }
}
