//! Fourier-domain noise filtering with an erf-pair low-pass window.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erf;
use std::f64::consts::PI;

use super::data::CoincidenceData;
use crate::error::{Error, Result};
use crate::numerics::{dft_real, fft_frequencies, Direction};

/// Edge width of each error function in the window.
pub const WINDOW_EDGE_GHZ: f64 = 1.25;

/// Fraction of the calibrated peak's spectral weight kept on each side of zero frequency.
pub const PASSBAND_QUANTILE: f64 = 0.995;

const IMAGINARY_TOLERANCE: f64 = 1e-8;

/// `w(ν) = ¼·[1 + erf((ν + ν_c)/e)]·[1 + erf((ν_c - ν)/e)]`, with cutoff `ν_c`
/// and edge width `e` in GHz. An infinite cutoff passes everything.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub cutoff_ghz: f64,
    pub edge_width_ghz: f64,
}

impl WindowSpec {
    pub fn new(cutoff_ghz: f64, edge_width_ghz: f64) -> Result<Self> {
        let w = Self { cutoff_ghz, edge_width_ghz };
        w.validate()?;
        Ok(w)
    }

    pub fn all_pass() -> Self {
        Self { cutoff_ghz: f64::INFINITY, edge_width_ghz: WINDOW_EDGE_GHZ }
    }

    /// Cutoff at the frequency where the Fourier transform of a Gaussian with
    /// standard deviation `sigma_ps` reaches [`PASSBAND_QUANTILE`] of its weight per side.
    pub fn from_peak_width(sigma_ps: f64, edge_width_ghz: f64) -> Result<Self> {
        if !(sigma_ps > 0.0 && sigma_ps.is_finite()) {
            return Err(Error::invalid(format!("peak width must be positive, got {sigma_ps}")));
        }
        let z = Normal::standard().inverse_cdf(PASSBAND_QUANTILE);
        // |F[exp(-τ²/2σ²)](ν)| ∝ exp(-ν²/2σ_ν²) with σ_ν = 1/(2πσ); THz -> GHz.
        let sigma_nu_ghz = 1e3 / (2.0 * PI * sigma_ps);
        Self::new(z * sigma_nu_ghz, edge_width_ghz)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_ghz > 0.0) {
            return Err(Error::invalid(format!("window cutoff must be positive, got {}", self.cutoff_ghz)));
        }
        if !(self.edge_width_ghz > 0.0 && self.edge_width_ghz.is_finite()) {
            return Err(Error::invalid(format!(
                "window edge width must be positive, got {}",
                self.edge_width_ghz
            )));
        }
        Ok(())
    }

    pub fn weight(&self, nu_ghz: f64) -> f64 {
        if self.cutoff_ghz.is_infinite() {
            return 1.0;
        }
        let e = self.edge_width_ghz;
        0.25 * (1.0 + erf((nu_ghz + self.cutoff_ghz) / e)) * (1.0 + erf((self.cutoff_ghz - nu_ghz) / e))
    }
}

/// `IDFT[w(ν)·DFT[N]]`. The window is even in ν, so the result is real up to
/// rounding; a larger imaginary residue is reported as a symmetry error.
pub fn fourier_noise_filter(data: &CoincidenceData, window: &WindowSpec) -> Result<CoincidenceData> {
    window.validate()?;
    let spectrum = dft_real(data.counts(), Direction::Forward)?;
    let nu = fft_frequencies(data.len(), data.bin());
    let weights: Vec<f64> = nu.iter().map(|&f| window.weight(f * 1e3)).collect();
    let weighted: Vec<_> = spectrum.iter().zip(&weights).map(|(s, w)| s * w).collect();
    let back = crate::numerics::dft(&weighted, Direction::Inverse)?;
    let norm = data.counts().iter().map(|c| c * c).sum::<f64>().sqrt();
    let residue = back.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    if residue > IMAGINARY_TOLERANCE * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Symmetry(format!("imaginary residue {residue:.3e} after filtering")));
    }
    let mut out = CoincidenceData::filtered(data.tau().to_vec(), back.iter().map(|v| v.re).collect())?;
    out.metadata = data.metadata.clone();
    let passed = weights.iter().map(|w| w * w).sum::<f64>() / weights.len() as f64;
    out.metadata.noise_fraction = Some(passed * data.metadata.noise_fraction.unwrap_or(1.0));
    Ok(out)
}
