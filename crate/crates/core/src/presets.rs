//! Parameters of the measured device and of the figure scenarios built on it.
//! Energies in μeV unless the name says meV.

use crate::ladder::{CoupledOscillator, DinizParams, FeshbachConfig};
use crate::statistics::{DetuningScanConfig, ReservoirModel};
use crate::units::energy_from_lifetime;

/// Spontaneous-emission linewidth of the lower polariton.
pub const GAMMA_LP: f64 = 66.6;
/// Spectral filter FWHM, about `γ_LP/3`.
pub const FILTER_FWHM: f64 = 23.0;
/// Reservoir relaxation time, ps.
pub const RESERVOIR_LIFETIME_PS: f64 = 350.0;
/// Interaction constant of the Fig. 2(d) scan.
pub const FIG2D_G: f64 = 2.7;
/// Reservoir-polariton interaction used with the joint model.
pub const RESERVOIR_G_R: f64 = 10.0;
/// Reservoir pump rate of the Fig. 2(d) noise model, 1/ps.
pub const FIG2D_PUMP: f64 = 0.006;
/// Reservoir pump rate of the noise washout study, 1/ps.
pub const WASHOUT_PUMP: f64 = 0.03;
/// Experimental resolution of g2(0) used to judge whether a modulation is visible.
pub const G2_RESOLUTION: f64 = 0.05;
/// Filter detunings span `±FILTER_SCAN_SPAN·γ` in the experiment.
pub const FILTER_SCAN_SPAN: f64 = 0.6;
/// Filter offset of the cavity-detuning scan, in units of `γ`.
pub const DETUNING_SCAN_FILTER_OFFSET: f64 = 0.6;

/// Zero-delay peak width of the summed data, standard deviation in ps.
pub const PEAK_SIGMA_PS: f64 = 57.64;
/// Pulsed-laser g2 width, FWHM in ps.
pub const PULSE_G2_FWHM_PS: f64 = 23.54;
/// Streak-camera pulse duration, FWHM in ps.
pub const PULSE_FWHM_PS: f64 = 5.01;
/// Quoted detector response, FWHM in ps.
pub const DETECTOR_FWHM_PS: f64 = 22.97;

/// `γ_r = ħ/τ_r`.
pub fn reservoir_gamma_r() -> f64 {
    energy_from_lifetime(RESERVOIR_LIFETIME_PS)
}

/// Joint reservoir model with dark decay equal to `γ_r`.
pub fn reservoir_model(pump: f64, g_r: f64) -> ReservoirModel {
    let gamma_r = reservoir_gamma_r();
    ReservoirModel { f: pump, gamma_r, gamma_d: gamma_r, g_r }
}

/// Global anticrossing fit of the device.
pub fn coupled_oscillator() -> CoupledOscillator {
    CoupledOscillator { e_x: 1452.08, omega: 1.52, l0: 20.308, r: 21.0, phi: 6.25, q: 6.319, s1: 2.09e-3, s2: -1.3e-6 }
}

/// Inhomogeneous cavity-transmission model (κ = 64 μeV, σ = 435 μeV, γ_X = 40 μeV).
pub fn diniz() -> DinizParams {
    let osc = coupled_oscillator();
    DinizParams { kappa: 64.0, sigma: 435.0, gamma_x: 40.0, omega: osc.omega, omega_x: osc.e_x }
}

/// Biexciton and triexciton resonance parameters of the cavity-detuning scan.
pub fn feshbach() -> FeshbachConfig {
    FeshbachConfig { g_t: 6.1, g_s: 0.0, g_pb: 0.07, g_pt: 0.23, e_b: 2.2, e_t: 2.4 * 2.2, gamma_b: 0.34, gamma_t: 0.34 }
}

pub fn detuning_scan() -> DetuningScanConfig {
    let osc = coupled_oscillator();
    DetuningScanConfig {
        e_x: osc.e_x,
        omega: osc.omega,
        gamma: GAMMA_LP,
        filter_fwhm: FILTER_FWHM,
        filter_offset: DETUNING_SCAN_FILTER_OFFSET,
        gamma_r: reservoir_gamma_r(),
        n_r: 1.0,
    }
}

/// Evenly spaced grid of `n ≥ 2` points on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs two points");
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Cavity-exciton detunings of the interaction scan, meV.
pub fn detuning_grid() -> Vec<f64> {
    grid(-6.0, 2.0, 161)
}

/// Filter detunings `±0.6γ`, μeV.
pub fn filter_grid(gamma: f64, points: usize) -> Vec<f64> {
    grid(-FILTER_SCAN_SPAN * gamma, FILTER_SCAN_SPAN * gamma, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants() {
        assert!((reservoir_gamma_r() - 1.8806).abs() < 1e-3);
        assert!((coupled_oscillator().rabi_splitting() - 3.04).abs() < 1e-9);
        assert!((diniz().omega - 1.52).abs() < 1e-12);
        let g = grid(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(detuning_grid().len(), 161);
        assert!((filter_grid(GAMMA_LP, 13)[12] - 0.6 * GAMMA_LP).abs() < 1e-12);
        assert!(feshbach().to_params(1452.08).is_ok());
    }
}
