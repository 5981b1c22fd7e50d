//! Interaction constants renormalized by biexciton and triexciton resonances.
//!
//! Resonance energies and couplings are in meV, the exchange constants `g_t`,
//! `g_s` and every returned interaction are in μeV.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::UEV_PER_MEV;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeshbachParams {
    pub g_t: f64,
    pub g_s: f64,
    #[serde(rename = "g_PB")]
    pub g_pb: f64,
    #[serde(rename = "g_PT")]
    pub g_pt: f64,
    /// Biexciton energy `2E_X - E_B`.
    #[serde(rename = "eps_B")]
    pub eps_b: f64,
    /// Triexciton energy `3E_X - E_T`.
    #[serde(rename = "eps_T")]
    pub eps_t: f64,
    #[serde(rename = "gamma_B")]
    pub gamma_b: f64,
    #[serde(rename = "gamma_T")]
    pub gamma_t: f64,
}

/// Configuration form of [`FeshbachParams`], quoting binding energies instead
/// of complex energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeshbachConfig {
    pub g_t: f64,
    pub g_s: f64,
    #[serde(rename = "g_PB")]
    pub g_pb: f64,
    #[serde(rename = "g_PT")]
    pub g_pt: f64,
    #[serde(rename = "E_B")]
    pub e_b: f64,
    #[serde(rename = "E_T")]
    pub e_t: f64,
    #[serde(rename = "gamma_B")]
    pub gamma_b: f64,
    #[serde(rename = "gamma_T")]
    pub gamma_t: f64,
}

impl FeshbachConfig {
    pub fn to_params(&self, e_x: f64) -> Result<FeshbachParams> {
        if !(self.e_b > 0.0) || !(self.e_t > 0.0) {
            return Err(Error::invalid("binding energies E_B and E_T must be positive"));
        }
        let p = FeshbachParams {
            g_t: self.g_t,
            g_s: self.g_s,
            g_pb: self.g_pb,
            g_pt: self.g_pt,
            eps_b: 2.0 * e_x - self.e_b,
            eps_t: 3.0 * e_x - self.e_t,
            gamma_b: self.gamma_b,
            gamma_t: self.gamma_t,
        };
        p.validate()?;
        Ok(p)
    }
}

impl FeshbachParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_b > 0.0) || !(self.gamma_t > 0.0) {
            return Err(Error::invalid("gamma_B and gamma_T must be positive"));
        }
        let all = [self.g_t, self.g_s, self.g_pb, self.g_pt, self.eps_b, self.eps_t];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("Feshbach parameters must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeshbachInteraction {
    /// Effective two-body constant `(α₁ + α₂)/2` for a linearly polarized mode.
    pub g: f64,
    /// Triplet channel.
    pub alpha1: f64,
    /// Singlet channel including the biexciton resonance.
    pub alpha2: f64,
}

fn check_cx2(cx2: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&cx2) {
        return Err(Error::invalid(format!("exciton weight must lie in [0, 1], got {cx2}")));
    }
    Ok(())
}

/// Two-body interaction at lower-polariton energy `e_lp` (meV) and exciton weight `cx2`.
pub fn feshbach_g(e_lp: f64, cx2: f64, p: &FeshbachParams) -> Result<FeshbachInteraction> {
    check_cx2(cx2)?;
    p.validate()?;
    let c4 = cx2 * cx2;
    let detuning = 2.0 * e_lp - p.eps_b;
    let resonant = 2.0 * p.g_pb * p.g_pb * c4 * detuning / (detuning * detuning + p.gamma_b * p.gamma_b);
    let alpha1 = p.g_t * c4;
    let alpha2 = p.g_s * c4 + resonant * UEV_PER_MEV;
    Ok(FeshbachInteraction { g: 0.5 * (alpha1 + alpha2), alpha1, alpha2 })
}

/// Three-body constant `g'` (μeV) from the dominant triexciton term.
pub fn triexciton_gprime(e_lp: f64, cx2: f64, p: &FeshbachParams) -> Result<f64> {
    check_cx2(cx2)?;
    p.validate()?;
    let detuning = 3.0 * e_lp - p.eps_t;
    let c6 = cx2 * cx2 * cx2;
    Ok(2.0 * p.g_pt * p.g_pt * c6 * detuning / (detuning * detuning + p.gamma_t * p.gamma_t) * UEV_PER_MEV)
}

/// Cavity-exciton detuning `E_c - E_X` (meV) at which the lower polariton sits
/// `depth` below the exciton, e.g. `E_B/2` for the biexciton resonance.
pub fn resonance_detuning(omega: f64, depth: f64) -> Result<f64> {
    if !(depth > 0.0) || !(omega > 0.0) {
        return Err(Error::invalid("resonance depth and Omega must be positive"));
    }
    Ok((omega * omega - depth * depth) / depth)
}
