//! Per-level transmission through a Gaussian spectral filter.
//!
//! A photon from the `n → n-1` transition has a Lorentzian spectrum of FWHM
//! `γ` centered at `ω_n` (plus any reservoir shift). Its transmission is the
//! Voigt overlap with the filter's Gaussian passband, normalized so that a line
//! sitting on the filter center is transmitted with `peak_transmission`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::LadderModel;
use crate::numerics::voigt_overlap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Filter center in μeV, on the same axis as `omega_LP`.
    #[serde(rename = "omega_F")]
    pub omega_f: f64,
    /// Gaussian FWHM in μeV.
    #[serde(rename = "fwhm_F")]
    pub fwhm_f: f64,
    #[serde(default = "unit")]
    pub peak_transmission: f64,
}

fn unit() -> f64 {
    1.0
}

impl FilterSpec {
    pub fn new(omega_f: f64, fwhm_f: f64) -> Result<Self> {
        let spec = Self { omega_f, fwhm_f, peak_transmission: 1.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_f > 0.0 && self.fwhm_f.is_finite()) {
            return Err(Error::invalid(format!("filter FWHM must be positive, got {}", self.fwhm_f)));
        }
        if !(self.peak_transmission > 0.0 && self.peak_transmission <= 1.0) {
            return Err(Error::invalid(format!(
                "peak transmission must lie in (0, 1], got {}",
                self.peak_transmission
            )));
        }
        if !self.omega_f.is_finite() {
            return Err(Error::invalid("filter center must be finite"));
        }
        Ok(())
    }

    pub fn with_center(mut self, omega_f: f64) -> Self {
        self.omega_f = omega_f;
        self
    }
}

fn relative_transmission(delta: f64, gamma: f64, filter: &FilterSpec) -> Result<f64> {
    let peak = voigt_overlap(0.0, gamma, filter.fwhm_f)?;
    Ok(filter.peak_transmission * voigt_overlap(delta, gamma, filter.fwhm_f)? / peak)
}

/// Transmission probability of a photon from level `n`, with the whole ladder
/// shifted by `reservoir_shift` (μeV). A shift `s` is equivalent to moving the
/// filter by `-s`.
pub fn transmission_prob(
    ladder: &LadderModel,
    filter: &FilterSpec,
    n: usize,
    reservoir_shift: f64,
) -> Result<f64> {
    filter.validate()?;
    let omega_n = ladder.transition_frequency(n)?;
    let delta = omega_n - (filter.omega_f - reservoir_shift);
    relative_transmission(delta, ladder.gamma, filter)
}

/// Transmissions indexed by level, `P[0..=n_max]`. `P[0]` is zero: the vacuum emits nothing.
pub fn transmission_vector(
    ladder: &LadderModel,
    filter: &FilterSpec,
    reservoir_shift: f64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; ladder.n_max + 1];
    for (n, p) in out.iter_mut().enumerate().skip(1) {
        *p = transmission_prob(ladder, filter, n, reservoir_shift)?;
    }
    Ok(out)
}

/// Memoized table `P[n][n_r]` for a ladder shifted by `g_r·n_r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionTable {
    n_max: usize,
    nr_max: usize,
    values: Vec<f64>,
}

impl TransmissionTable {
    pub fn new(
        ladder: &LadderModel,
        filter: &FilterSpec,
        n_max: usize,
        nr_max: usize,
        g_r: f64,
    ) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::invalid("transmission table needs n_max >= 1"));
        }
        let ladder = ladder.with_n_max(n_max.max(2));
        let mut values = vec![0.0; (n_max + 1) * (nr_max + 1)];
        for nr in 0..=nr_max {
            let column = transmission_vector(&ladder, filter, g_r * nr as f64)?;
            for n in 1..=n_max {
                values[n * (nr_max + 1) + nr] = column[n];
            }
        }
        Ok(Self { n_max, nr_max, values })
    }

    /// Builds a table from explicit rows `rows[n][n_r]`; row 0 is ignored and stored as zero.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_max = rows
            .len()
            .checked_sub(1)
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::invalid("need rows for n = 0..=n_max with n_max >= 1"))?;
        let width = rows[0].len();
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("all rows must have the same non-zero length"));
        }
        let mut values = Vec::with_capacity(rows.len() * width);
        for (n, row) in rows.iter().enumerate() {
            for &v in row {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("transmission {v} outside [0, 1]")));
                }
                values.push(if n == 0 { 0.0 } else { v });
            }
        }
        Ok(Self { n_max, nr_max: width - 1, values })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn nr_max(&self) -> usize {
        self.nr_max
    }

    #[inline]
    pub fn get(&self, n: usize, nr: usize) -> f64 {
        self.values[n * (self.nr_max + 1) + nr]
    }

    /// Transmissions of every level for a fixed reservoir occupation.
    pub fn column(&self, nr: usize) -> Vec<f64> {
        (0..=self.n_max).map(|n| self.get(n, nr)).collect()
    }

    /// Multiplies every entry by `c`; entries must stay within `[0, 1]`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::invalid("scale factor must be positive"));
        }
        let values: Vec<f64> = self.values.iter().map(|v| v * c).collect();
        if values.iter().any(|&v| v > 1.0) {
            return Err(Error::invalid("scaled transmissions exceed 1"));
        }
        Ok(Self { n_max: self.n_max, nr_max: self.nr_max, values })
    }
}
