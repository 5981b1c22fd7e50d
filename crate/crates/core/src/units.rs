//! Unit system: energies in μeV (meV where stated), times in ps.

/// Reduced Planck constant in μeV·ps.
pub const HBAR_UEV_PS: f64 = 658.211_956_9;

/// Planck constant times the speed of light in meV·μm.
pub const HC_MEV_UM: f64 = 1_239.841_984;

/// FWHM of a Gaussian divided by its standard deviation, 2·sqrt(2 ln 2).
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

pub const UEV_PER_MEV: f64 = 1_000.0;

/// Converts an energy-valued rate (μeV) into a probability rate in 1/ps.
#[inline]
pub fn rate_per_ps(energy_uev: f64) -> f64 {
    energy_uev / HBAR_UEV_PS
}

/// Converts a lifetime in ps into the corresponding energy width in μeV.
#[inline]
pub fn energy_from_lifetime(tau_ps: f64) -> f64 {
    HBAR_UEV_PS / tau_ps
}

#[inline]
pub fn gaussian_sigma_from_fwhm(fwhm: f64) -> f64 {
    fwhm / GAUSSIAN_FWHM_PER_SIGMA
}

#[inline]
pub fn gaussian_fwhm_from_sigma(sigma: f64) -> f64 {
    sigma * GAUSSIAN_FWHM_PER_SIGMA
}
