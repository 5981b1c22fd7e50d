//! Detector-response arithmetic. Widths add in quadrature for convolved Gaussians.

use serde::{Deserialize, Serialize};

use super::peak::G2ZeroEstimate;
use crate::error::{Error, Result};

/// Total detection-system response, standard deviation in ps.
pub const DETECTOR_SIGMA_PS: f64 = 9.75;

fn quadrature_difference(total: f64, part: f64, what: &str) -> Result<f64> {
    if !(part >= 0.0 && part.is_finite() && total.is_finite()) {
        return Err(Error::invalid(format!("{what}: widths must be finite and non-negative")));
    }
    if !(total > part) {
        return Err(Error::invalid(format!("{what}: total width {total} must exceed {part}")));
    }
    Ok((total * total - part * part).sqrt())
}

/// `σ_dec = sqrt(σ² - σ_det²)`. Both widths in the same convention.
pub fn deconvolve_detector(sigma: f64, sigma_det: f64) -> Result<f64> {
    quadrature_difference(sigma, sigma_det, "deconvolve_detector")
}

/// Detector response from a pulsed-laser g2 trace: `sqrt(σ_g2² - σ_pulse²)`, FWHM in and out.
pub fn detector_response_from_pulse(fwhm_g2: f64, fwhm_pulse: f64) -> Result<f64> {
    quadrature_difference(fwhm_g2, fwhm_pulse, "detector_response_from_pulse")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeconvolvedG2 {
    pub g2_zero: f64,
    pub err: f64,
    /// Deconvolved standard deviation of the peak.
    pub sigma_dec_ps: f64,
    /// `(g2_dec - g2) / g2`.
    pub relative_change: f64,
}

/// Removes the detector jitter from a fitted peak. The jitter broadens the
/// peak at constant area, so the deconvolved amplitude is `N0·σ/σ_dec`.
pub fn deconvolved_g2(estimate: &G2ZeroEstimate, sigma_det: f64) -> Result<DeconvolvedG2> {
    let sigma_dec = deconvolve_detector(estimate.sigma_ps, sigma_det)?;
    let stretch = estimate.sigma_ps / sigma_dec;
    let g2 = 1.0 + (estimate.g2_zero - 1.0) * stretch;
    Ok(DeconvolvedG2 {
        g2_zero: g2,
        err: estimate.err * stretch,
        sigma_dec_ps: sigma_dec,
        relative_change: (g2 - estimate.g2_zero) / estimate.g2_zero,
    })
}
