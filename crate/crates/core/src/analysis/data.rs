//! Coincidence histograms on a uniform delay grid and their tabular format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SPACING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// Accumulated acquisition time, in s.
    pub acquisition_time: Option<f64>,
    pub label: Option<String>,
    /// Fraction of white-noise power passed by the Fourier filters applied so
    /// far, `Σ w_k² / N`. `None` for unfiltered data.
    pub noise_fraction: Option<f64>,
}

/// Coincidence counts `N(τ)` on a uniform delay grid (ps).
///
/// Raw data is non-negative. Fourier-filtered data may ring slightly below
/// zero in empty regions, so [`CoincidenceData::filtered`] skips that check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceData {
    tau: Vec<f64>,
    counts: Vec<f64>,
    pub metadata: Metadata,
}

impl CoincidenceData {
    pub fn new(tau: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if let Some(c) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::invalid(format!("counts must be finite and non-negative, got {c}")));
        }
        Self::filtered(tau, counts)
    }

    /// Builds data without the sign check on counts; the grid is still validated.
    pub fn filtered(tau: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if tau.len() != counts.len() {
            return Err(Error::invalid(format!("{} delays but {} counts", tau.len(), counts.len())));
        }
        if tau.len() < 3 {
            return Err(Error::invalid("coincidence data needs at least 3 bins"));
        }
        if counts.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("counts must be finite"));
        }
        let step = (tau[tau.len() - 1] - tau[0]) / (tau.len() - 1) as f64;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("delays must be increasing"));
        }
        for (i, w) in tau.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > SPACING_TOLERANCE * step {
                return Err(Error::invalid(format!("non-uniform delay grid at row {}", i + 1)));
            }
        }
        Ok(Self { tau, counts, metadata: Metadata::default() })
    }

    /// Grid `start + k·bin` for `k = 0..counts.len()`.
    pub fn from_counts(start: f64, bin: f64, counts: Vec<f64>) -> Result<Self> {
        let tau = (0..counts.len()).map(|k| start + k as f64 * bin).collect();
        Self::new(tau, counts)
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Bin spacing in ps.
    pub fn bin(&self) -> f64 {
        (self.tau[self.len() - 1] - self.tau[0]) / (self.len() - 1) as f64
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .tau
                .iter()
                .zip(&other.tau)
                .all(|(a, b)| (a - b).abs() <= SPACING_TOLERANCE * self.bin())
    }

    /// Bin-wise sum of datasets recorded on the same grid.
    pub fn sum(datasets: &[CoincidenceData]) -> Result<Self> {
        let first = datasets.first().ok_or_else(|| Error::invalid("nothing to sum"))?;
        let mut counts = vec![0.0; first.len()];
        for d in datasets {
            if !first.same_grid(d) {
                return Err(Error::invalid("datasets are on different delay grids"));
            }
            counts.iter_mut().zip(&d.counts).for_each(|(a, b)| *a += b);
        }
        let mut out = Self::filtered(first.tau.clone(), counts)?;
        out.metadata.label = Some("sum".into());
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let counts = self.counts.iter().map(|c| c * factor).collect();
        let mut out = Self::filtered(self.tau.clone(), counts)?;
        out.metadata = self.metadata.clone();
        Ok(out)
    }

    /// Parses two columns `tau_ps, counts` separated by commas, tabs, semicolons
    /// or spaces. A non-numeric first line is taken as a header; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut tau = Vec::new();
        let mut counts = Vec::new();
        let mut first = true;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
            match parsed {
                Some(v) if v.len() == 2 => {
                    tau.push(v[0]);
                    counts.push(v[1]);
                }
                Some(v) => {
                    return Err(Error::Parse(format!(
                        "line {}: expected 2 columns, found {}",
                        lineno + 1,
                        v.len()
                    )))
                }
                None if first => {}
                None => return Err(Error::Parse(format!("line {}: not numeric: {line:?}", lineno + 1))),
            }
            first = false;
        }
        Self::new(tau, counts).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Parse(m),
            other => other,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau_ps,counts\n");
        for (t, c) in self.tau.iter().zip(&self.counts) {
            out.push_str(&format!("{t},{c}\n"));
        }
        out
    }
}
