//! Polariton physics: the anharmonic ladder and the parameters that feed it.

mod diniz;
mod feshbach;
mod polariton;

pub use diniz::{
    diniz_transmission, figure_of_merit, lp_linewidth_at, lp_lorentzian_characterize,
    DinizParams, LorentzianFit, LpLine,
};
pub use feshbach::{
    feshbach_g, resonance_detuning, triexciton_gprime, FeshbachConfig, FeshbachInteraction,
    FeshbachParams,
};
pub use polariton::{
    fit_anticrossing, hopfield, penetration_depth, AnticrossingFit, AnticrossingModel, AnticrossingPoint, Branch,
    CoupledOscillator, Polariton, ANTICROSSING_PARAMS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anharmonic ladder `ω_n = ω_LP + g(n-1) + g'(n-1)(n-2)` for the `n → n-1`
/// transition, with emission FWHM `gamma`. All energies in μeV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderModel {
    #[serde(rename = "omega_LP", default)]
    pub omega_lp: f64,
    pub g: f64,
    #[serde(default)]
    pub g_prime: f64,
    pub gamma: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_n_max() -> usize {
    12
}

impl LadderModel {
    pub fn new(omega_lp: f64, g: f64, g_prime: f64, gamma: f64, n_max: usize) -> Result<Self> {
        let model = Self { omega_lp, g, g_prime, gamma, n_max };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.n_max < 2 {
            return Err(Error::invalid(format!("n_max must be at least 2, got {}", self.n_max)));
        }
        if ![self.omega_lp, self.g, self.g_prime].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("ladder energies must be finite"));
        }
        Ok(())
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn transition_frequency(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.n_max {
            return Err(Error::invalid(format!("level {n} outside 1..={}", self.n_max)));
        }
        Ok(self.frequency_unchecked(n))
    }

    pub(crate) fn frequency_unchecked(&self, n: usize) -> f64 {
        let k = n as f64 - 1.0;
        self.omega_lp + self.g * k + self.g_prime * k * (k - 1.0)
    }
}

pub fn transition_frequency(model: &LadderModel, n: usize) -> Result<f64> {
    model.transition_frequency(n)
}
