//! Root and synchronization logit tensors and their text file format.
//!
//! The file starts with a JSON header line `{"T":..,"K":..,"R":..,"E":..}`,
//! followed by `T*K` CSV rows of `R` root logits (step-major) and `T` CSV
//! rows of `E` synchronization logits.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Dead label plus one per BS block.
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "E")]
    pub e: usize,
}

impl Dims {
    pub fn root_len(&self) -> usize {
        self.t * self.k * self.r
    }

    pub fn sync_len(&self) -> usize {
        self.t * self.e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logits {
    pub dims: Dims,
    /// Indexed `[t][k][r]`, flattened.
    pub root: Vec<f64>,
    /// Indexed `[t][e]`, flattened.
    pub sync: Vec<f64>,
}

impl Logits {
    pub fn zeros(dims: Dims) -> Self {
        Logits { dims, root: vec![0.0; dims.root_len()], sync: vec![0.0; dims.sync_len()] }
    }

    pub fn new(dims: Dims, root: Vec<f64>, sync: Vec<f64>) -> Result<Self> {
        let l = Logits { dims, root, sync };
        l.check()?;
        Ok(l)
    }

    pub fn check(&self) -> Result<()> {
        if self.root.len() != self.dims.root_len() || self.sync.len() != self.dims.sync_len() {
            return Err(Error::Dimension(format!(
                "logits hold {} root and {} sync values, shape {:?} needs {} and {}",
                self.root.len(),
                self.sync.len(),
                self.dims,
                self.dims.root_len(),
                self.dims.sync_len()
            )));
        }
        if self.dims.r == 0 {
            return Err(Error::Dimension("root axis must include the dead label".into()));
        }
        if let Some(i) = self.root.iter().chain(&self.sync).position(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite logit at flat position {i}")));
        }
        Ok(())
    }

    pub fn root_at(&self, t: usize, k: usize) -> &[f64] {
        let r = self.dims.r;
        let at = (t * self.dims.k + k) * r;
        &self.root[at..at + r]
    }

    pub fn root_at_mut(&mut self, t: usize, k: usize) -> &mut [f64] {
        let r = self.dims.r;
        let at = (t * self.dims.k + k) * r;
        &mut self.root[at..at + r]
    }

    pub fn sync_at(&self, t: usize) -> &[f64] {
        &self.sync[t * self.dims.e..(t + 1) * self.dims.e]
    }

    pub fn sync_at_mut(&mut self, t: usize) -> &mut [f64] {
        let e = self.dims.e;
        &mut self.sync[t * e..(t + 1) * e]
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", serde_json::to_string(&self.dims)?)?;
        let row = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        for t in 0..self.dims.t {
            for k in 0..self.dims.k {
                writeln!(w, "{}", row(self.root_at(t, k)))?;
            }
        }
        for t in 0..self.dims.t {
            writeln!(w, "{}", row(self.sync_at(t)))?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty logit file".into()))??;
        let dims: Dims = serde_json::from_str(header.trim())
            .map_err(|e| Error::Format(format!("bad logit header: {e}")))?;
        let mut parse_row = |what: &str, n: usize, out: &mut Vec<f64>| -> Result<()> {
            let line = lines.next().ok_or_else(|| Error::Format(format!("missing {what} row")))??;
            let before = out.len();
            if n > 0 {
                for cell in line.split(',') {
                    let x = cell
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("bad {what} value '{}': {e}", cell.trim())))?;
                    out.push(x);
                }
            }
            if out.len() - before != n {
                return Err(Error::Format(format!("{what} row has {} values, expected {n}", out.len() - before)));
            }
            Ok(())
        };
        let mut root = Vec::with_capacity(dims.root_len());
        for _ in 0..dims.t * dims.k {
            parse_row("root", dims.r, &mut root)?;
        }
        let mut sync = Vec::with_capacity(dims.sync_len());
        for _ in 0..dims.t {
            parse_row("sync", dims.e, &mut sync)?;
        }
        Logits::new(dims, root, sync)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path.as_ref())
            .map_err(|e| Error::File { path: path.as_ref().display().to_string(), source: e })?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::File { path: path.as_ref().display().to_string(), source: e })?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return vec![0.0; z.len()];
    }
    let e: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip() {
        let dims = Dims { t: 2, k: 3, r: 2, e: 1 };
        let root: Vec<f64> = (0..12).map(|i| i as f64 * 0.25 - 1.0).collect();
        let l = Logits::new(dims, root, vec![0.5, -1e-3]).unwrap();
        let mut buf = Vec::new();
        l.write_to(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("{\"T\":2,\"K\":3,\"R\":2,\"E\":1}"));
        assert_eq!(Logits::read_from(&buf[..]).unwrap(), l);
    }

    #[test]
    fn short_file_is_a_format_error() {
        let text = "{\"T\":1,\"K\":1,\"R\":2,\"E\":1}\n0.1,0.2\n";
        assert!(matches!(Logits::read_from(text.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0, 2.0, 3.0, f64::NEG_INFINITY]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(p[3], 0.0);
    }
}
