//! Observed sample paths and the plain-text sample format.
//!
//! The file format is UTF-8, one decimal number per line. Lines whose first
//! non-blank character is `#` are comments; blank lines are skipped.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::cell_of;

/// A finite observation sequence with every value in `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SamplePath {
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        validate_sample(values, false)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Level-`level` cell of each of the first `len` observations.
    pub fn cells(&self, level: u32, len: usize) -> Vec<u32> {
        self.values[..len.min(self.values.len())]
            .iter()
            .map(|&v| cell_of(v, level))
            .collect()
    }

    pub fn ensure_len(&self, required: u128) -> Result<()> {
        if (self.values.len() as u128) < required {
            return Err(Error::InsufficientSample {
                required,
                available: self.values.len(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for SamplePath {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<SamplePath> for Vec<f64> {
    fn from(p: SamplePath) -> Self {
        p.values
    }
}

/// Checks a raw sequence, optionally mapping `[min, max]` affinely onto
/// `[0, 1]`. A constant sequence rescales to all `0.5`.
pub fn validate_sample(raw: Vec<f64>, rescale: bool) -> Result<SamplePath> {
    if raw.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if rescale {
        let (lo, hi) = raw
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let values = if hi > lo {
            let span = hi - lo;
            raw.iter()
                .map(|&v| ((v - lo) / span).clamp(0.0, 1.0))
                .collect()
        } else {
            vec![0.5; raw.len()]
        };
        return Ok(SamplePath { values });
    }
    if let Some((index, &value)) = raw
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::OutOfRange { index, value });
    }
    Ok(SamplePath { values: raw })
}

/// Parses the sample text format without range validation.
pub fn parse_values<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("not a decimal number: {trimmed:?}"),
        })?;
        values.push(v);
    }
    Ok(values)
}

pub fn read_sample(path: &Path, rescale: bool) -> Result<SamplePath> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let values = parse_values(std::io::BufReader::new(file))?;
    validate_sample(values, rescale)
}

/// Renders a sample in the text format. Each header line is emitted as a
/// `#` comment. Values use the shortest representation that parses back to
/// the same `f64`.
pub fn format_sample(sample: &SamplePath, header: &[String]) -> String {
    let mut out = String::with_capacity(sample.len() * 20);
    for h in header {
        for line in h.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    for v in sample.values() {
        let _ = writeln!(out, "{v}");
    }
    out
}
