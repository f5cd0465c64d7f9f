//! Signal files: a JSON header next to a raw little-endian `c128` payload,
//! and a 1D `index,re,im` CSV convenience format.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::GridSignal;
use crate::error::{Error, Result};

pub const DTYPE: &str = "c128-le";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalHeader {
    pub d: usize,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub shape: Vec<usize>,
    pub dtype: String,
    /// Payload file, relative to the header. Defaults to the header path with `.bin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
}

impl SignalHeader {
    pub fn validate(&self) -> Result<()> {
        if self.dtype != DTYPE {
            return Err(Error::invalid(format!("header dtype must be \"{DTYPE}\", got \"{}\"", self.dtype)));
        }
        for (name, n) in [("origin", self.origin.len()), ("spacing", self.spacing.len()), ("shape", self.shape.len())] {
            if n != self.d {
                return Err(Error::invalid(format!("header {name} has {n} entries but d = {}", self.d)));
            }
        }
        Ok(())
    }

    fn payload_path(&self, header: &Path) -> PathBuf {
        match &self.data {
            Some(name) => header.parent().unwrap_or(Path::new("")).join(name),
            None => header.with_extension("bin"),
        }
    }
}

/// Writes `path` (JSON header) and the `.bin` payload next to it.
pub fn write_signal(f: &GridSignal, path: &Path) -> Result<()> {
    let bin = path.with_extension("bin");
    let header = SignalHeader {
        d: f.dim(),
        origin: f.origin().to_vec(),
        spacing: f.spacing().to_vec(),
        shape: f.shape().to_vec(),
        dtype: DTYPE.to_string(),
        data: bin.file_name().map(|s| s.to_string_lossy().into_owned()),
    };
    let mut bytes = Vec::with_capacity(16 * f.shape().iter().product::<usize>());
    for z in f.samples() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_header(path: &Path) -> Result<SignalHeader> {
    let text = fs::read_to_string(path)?;
    let h: SignalHeader = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("malformed signal header {}: {e}", path.display())))?;
    h.validate()?;
    Ok(h)
}

pub fn read_signal(path: &Path) -> Result<GridSignal> {
    let h = read_header(path)?;
    let bytes = fs::read(h.payload_path(path))?;
    let n: usize = h.shape.iter().product();
    if bytes.len() != 16 * n {
        return Err(Error::invalid(format!(
            "payload has {} bytes, header shape needs {}",
            bytes.len(),
            16 * n
        )));
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    GridSignal::new(h.origin, h.spacing, h.shape, samples)
}

pub fn write_csv_1d(f: &GridSignal, path: &Path) -> Result<()> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.dim() });
    }
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "index,re,im")?;
    for (i, z) in f.samples().iter().enumerate() {
        writeln!(out, "{i},{:e},{:e}", z.re, z.im)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `index,re,im` rows; indices must run 0, 1, 2, ... The grid geometry
/// is not part of the format and is supplied by the caller.
pub fn read_csv_1d(path: &Path, origin: f64, spacing: f64) -> Result<GridSignal> {
    let file = BufReader::new(fs::File::open(path)?);
    let mut samples = Vec::new();
    for (lineno, line) in file.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || (lineno == 0 && t.starts_with("index")) {
            continue;
        }
        let parts: Vec<&str> = t.split(',').map(str::trim).collect();
        let bad = || Error::invalid(format!("{}:{}: expected index,re,im", path.display(), lineno + 1));
        if parts.len() != 3 {
            return Err(bad());
        }
        let i: usize = parts[0].parse().map_err(|_| bad())?;
        if i != samples.len() {
            return Err(Error::invalid(format!(
                "{}:{}: index {i} out of sequence",
                path.display(),
                lineno + 1
            )));
        }
        let re: f64 = parts[1].parse().map_err(|_| bad())?;
        let im: f64 = parts[2].parse().map_err(|_| bad())?;
        samples.push(Complex64::new(re, im));
    }
    if samples.is_empty() {
        return Err(Error::invalid(format!("{} holds no samples", path.display())));
    }
    let n = samples.len();
    GridSignal::new(vec![origin], vec![spacing], vec![n], samples)
}

/// Dispatches on the extension: `.csv` needs the caller's grid geometry.
pub fn load(path: &Path, csv_grid: Option<(f64, f64)>) -> Result<GridSignal> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let (o, h) = csv_grid.ok_or_else(|| Error::invalid("CSV signals need an origin and spacing"))?;
            read_csv_1d(path, o, h)
        }
        _ => read_signal(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridSignal {
        GridSignal::from_fn(vec![-1.0, 0.5], vec![0.25, 0.5], vec![6, 4], |x| Complex64::new(x[0], -x[1] * x[0]))
            .unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        let f = sample();
        write_signal(&f, &p).unwrap();
        assert!(dir.path().join("s.bin").exists());
        let g = read_signal(&p).unwrap();
        assert_eq!(g.samples(), f.samples());
        assert_eq!(g.origin(), f.origin());
        assert_eq!(g.spacing(), f.spacing());
    }

    #[test]
    fn malformed_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        write_signal(&sample(), &p).unwrap();
        fs::write(&p, "{\"d\": 2, \"origin\": [0]").unwrap();
        assert!(read_signal(&p).is_err());
        fs::write(&p, r#"{"d":2,"origin":[0,0],"spacing":[1,1],"shape":[6,4],"dtype":"f32"}"#).unwrap();
        assert!(read_signal(&p).unwrap_err().to_string().contains("dtype"));
        fs::write(&p, r#"{"d":2,"origin":[0],"spacing":[1,1],"shape":[6,4],"dtype":"c128-le"}"#).unwrap();
        assert!(read_signal(&p).unwrap_err().to_string().contains("origin"));
        fs::write(&p, r#"{"d":2,"origin":[0,0],"spacing":[1,1],"shape":[6,5],"dtype":"c128-le"}"#).unwrap();
        assert!(read_signal(&p).unwrap_err().to_string().contains("payload"));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let f = GridSignal::from_fn(vec![-2.0], vec![0.5], vec![9], |x| Complex64::new(x[0].sin(), 0.25)).unwrap();
        write_csv_1d(&f, &p).unwrap();
        let g = load(&p, Some((-2.0, 0.5))).unwrap();
        assert_eq!(g.samples(), f.samples());
        assert!(load(&p, None).is_err());
        fs::write(&p, "index,re,im\n0,1,0\n2,1,0\n").unwrap();
        assert!(read_csv_1d(&p, 0.0, 1.0).is_err());
    }
}
