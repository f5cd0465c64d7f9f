//! Reference signals: smooth bumps, a 1D jump and a 2D line singularity.

use num_complex::Complex64;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::AxisBox;
use crate::signal::{io, make_cutoff, BumpWindow, GridSignal, Smoothness};

pub const NAMES: [&str; 4] = ["smooth_bump", "jump", "smooth_bump_2d", "line_singularity"];

/// Nodes per axis and half-width of the default domains.
pub const GRID_1D: (usize, f64) = (1 << 14, 8.0);
pub const GRID_2D: (usize, f64) = (1024, 4.0);

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `exp(-1/(1 - (t/r)^2))` on `|t| < r`.
pub fn bump(t: f64, r: f64) -> f64 {
    let u = t / r;
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// Heaviside step with the midpoint value at 0.
pub fn heaviside(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// 1 on `|t| <= a`, smoothly 0 from `|t| >= b`.
pub fn taper(a: f64, b: f64) -> BumpWindow {
    make_cutoff(AxisBox::cube(&[0.0], a), AxisBox::cube(&[0.0], b), Smoothness::Exp).expect("a < b")
}

pub fn smooth_bump_1d() -> GridSignal {
    let (n, l) = GRID_1D;
    GridSignal::on_cube(-l, l, n, 1, |x| re(bump(x[0], 3.0))).expect("valid grid")
}

/// `H(x) · taper(|x|)`: the only singularity is the jump at 0.
pub fn jump_1d() -> GridSignal {
    let (n, l) = GRID_1D;
    let t = taper(4.0, 6.0);
    GridSignal::on_cube(-l, l, n, 1, |x| re(heaviside(x[0]) * t.eval(x))).expect("valid grid")
}

pub fn smooth_bump_2d() -> GridSignal {
    let (n, l) = GRID_2D;
    GridSignal::on_cube(-l, l, n, 2, |x| re(bump(x[0], 2.5) * bump(x[1], 2.5))).expect("valid grid")
}

/// `H(x₁) · taper(|x₁|) · bump(x₂)`: singular along `x₁ = 0`, normal `(±1, 0)`.
pub fn line_singularity_2d() -> GridSignal {
    let (n, l) = GRID_2D;
    let t = taper(2.0, 3.5);
    GridSignal::on_cube(-l, l, n, 2, |x| re(heaviside(x[0]) * t.eval(&x[..1]) * bump(x[1], 2.5)))
        .expect("valid grid")
}

pub fn fixture(name: &str) -> Result<GridSignal> {
    match name {
        "smooth_bump" => Ok(smooth_bump_1d()),
        "jump" => Ok(jump_1d()),
        "smooth_bump_2d" => Ok(smooth_bump_2d()),
        "line_singularity" => Ok(line_singularity_2d()),
        other => Err(Error::invalid(format!("unknown fixture {other:?}; known: {}", NAMES.join(", ")))),
    }
}

/// Writes every fixture as `<name>.json` + `<name>.bin` under `dir`.
pub fn write_fixtures(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for name in NAMES {
        let p = dir.join(format!("{name}.json"));
        io::write_signal(&fixture(name)?, &p)?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jump_has_midpoint_value() {
        let f = jump_1d();
        let (n, _) = GRID_1D;
        assert_eq!(f.get(&[n / 2]).re, 0.5);
        assert_eq!(f.get(&[n / 2 + 1]).re, 1.0);
        assert_eq!(f.get(&[n / 2 - 1]).re, 0.0);
        assert!(f.get(&[n / 2 + 13 * n / 32]).re.abs() < 1e-12);
        assert!(fixture("nope").is_err());
    }

    #[test]
    fn line_fixture_is_separable() {
        let f = line_singularity_2d();
        let (n, _) = GRID_2D;
        let a = f.get(&[n / 2 + 64, n / 2]).re;
        let b = f.get(&[n / 2 + 64, n / 2 + 128]).re;
        assert!((a - bump(0.0, 2.5)).abs() < 1e-15);
        assert!((b - bump(1.0, 2.5)).abs() < 1e-15);
        assert_eq!(f.get(&[n / 2 - 64, n / 2]).re, 0.0);
    }
}
