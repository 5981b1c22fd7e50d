//! Synthetic coincidence histograms with Poisson counting noise.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::data::{CoincidenceData, Metadata};
use crate::error::{Error, Result};
use crate::numerics::RandomStream;

/// Expected counts `Y0·[1 + (g2(0) - 1)·exp(-(τ - t0)²/2σ²)]` on `[-half_span, half_span]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPeak {
    pub t0_ps: f64,
    /// Standard deviation of the peak.
    pub sigma_ps: f64,
    /// Mean background counts per bin.
    pub background: f64,
    pub g2_zero: f64,
    pub bin_ps: f64,
    pub half_span_ps: f64,
}

impl SyntheticPeak {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.sigma_ps, self.bin_ps, self.half_span_ps];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("sigma, bin and span must be positive"));
        }
        if !(self.background >= 0.0 && self.g2_zero >= 0.0 && self.t0_ps.is_finite()) {
            return Err(Error::invalid("background and g2(0) must be non-negative"));
        }
        if self.half_span_ps < self.bin_ps {
            return Err(Error::invalid("span must cover at least one bin"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let half = (self.half_span_ps / self.bin_ps).floor() as i64;
        (-half..=half).map(|k| k as f64 * self.bin_ps).collect()
    }

    pub fn mean_counts(&self, tau: f64) -> f64 {
        let u = (tau - self.t0_ps) / self.sigma_ps;
        self.background * (1.0 + (self.g2_zero - 1.0) * (-0.5 * u * u).exp())
    }

    pub fn expected(&self) -> Result<CoincidenceData> {
        self.validate()?;
        let tau = self.grid();
        let counts = tau.iter().map(|&t| self.mean_counts(t)).collect();
        CoincidenceData::new(tau, counts)
    }

    /// One Poisson realisation of [`Self::expected`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CoincidenceData> {
        self.validate()?;
        let tau = self.grid();
        let counts = tau.iter().map(|&t| poisson(self.mean_counts(t), rng)).collect::<Result<_>>()?;
        CoincidenceData::new(tau, counts)
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<f64> {
    if mean <= 0.0 {
        return Ok(0.0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::invalid(format!("Poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng))
}

/// Cumulative snapshots: snapshot `k` holds the sum of Poisson draws from
/// `increments[0..=k]`, each increment lasting `interval_s` seconds.
pub fn synthetic_snapshots(increments: &[SyntheticPeak], interval_s: f64, seed: u64) -> Result<Vec<CoincidenceData>> {
    let first = increments.first().ok_or_else(|| Error::invalid("no increments"))?;
    let grid = first.grid();
    let mut rng = RandomStream::new(seed, 0).rng();
    let mut total = vec![0.0; grid.len()];
    let mut out = Vec::with_capacity(increments.len());
    for (k, inc) in increments.iter().enumerate() {
        inc.validate()?;
        if inc.grid() != grid {
            return Err(Error::invalid("all increments must share a grid"));
        }
        for (acc, &t) in total.iter_mut().zip(&grid) {
            *acc += poisson(inc.mean_counts(t), &mut rng)?;
        }
        let meta = Metadata { acquisition_time: Some((k + 1) as f64 * interval_s), label: Some(format!("snapshot {k}")), noise_fraction: None };
        out.push(CoincidenceData::new(grid.clone(), total.clone())?.with_metadata(meta));
    }
    Ok(out)
}
