//! Coupled-oscillator polariton model and the cavity-length dispersion of a
//! fiber microcavity. Energies in meV, lengths in μm, voltages in V.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fit_least_squares, DataPoint, FitResult, Model};
use crate::units::HC_MEV_UM;

/// Lower/upper polariton eigenenergies and the lower branch's exciton weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Polariton {
    pub e_lp: f64,
    pub e_up: f64,
    /// Exciton weight `|c_X|²` of the lower polariton; its photon weight is `1 - cx2`.
    pub cx2: f64,
}

/// Diagonalizes the two-mode Hamiltonian with coupling `omega` (half the vacuum
/// Rabi splitting). The detuning is `E_c - E_X`, so the lower polariton becomes
/// photon-like (`cx2 → 0`) for a red-detuned cavity.
pub fn hopfield(e_c: f64, e_x: f64, omega: f64) -> Result<Polariton> {
    if !(omega > 0.0) {
        return Err(Error::invalid(format!("Omega must be positive, got {omega}")));
    }
    if !e_c.is_finite() || !e_x.is_finite() {
        return Err(Error::invalid("hopfield energies must be finite"));
    }
    let delta = e_c - e_x;
    let root = (omega * omega + 0.25 * delta * delta).sqrt();
    let mean = 0.5 * (e_c + e_x);
    Ok(Polariton {
        e_lp: mean - root,
        e_up: mean + root,
        cx2: 0.5 * (1.0 + delta / (2.0 * root)),
    })
}

/// Total mirror penetration depth (μm) equivalent to an extra round-trip phase `phi` at `lambda_um`.
pub fn penetration_depth(phi: f64, lambda_um: f64) -> f64 {
    phi * lambda_um / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledOscillator {
    #[serde(rename = "E_X")]
    pub e_x: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    #[serde(rename = "L0")]
    pub l0: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub phi: f64,
    pub q: f64,
    pub s1: f64,
    pub s2: f64,
}

/// Parameter order used by [`CoupledOscillator::to_params`] and the anticrossing fit.
pub const ANTICROSSING_PARAMS: [&str; 8] = ["E_X", "Omega", "L0", "R", "phi", "q", "s1", "s2"];

impl CoupledOscillator {
    pub fn to_params(&self) -> [f64; 8] {
        [self.e_x, self.omega, self.l0, self.r, self.phi, self.q, self.s1, self.s2]
    }

    pub fn from_params(p: &[f64]) -> Self {
        Self { e_x: p[0], omega: p[1], l0: p[2], r: p[3], phi: p[4], q: p[5], s1: p[6], s2: p[7] }
    }

    pub fn cavity_length(&self, voltage: f64) -> f64 {
        self.l0 - self.s1 * voltage - self.s2 * voltage * voltage
    }

    /// Bare cavity energy (meV) of the fundamental transverse mode at piezo voltage `voltage`.
    pub fn cavity_energy(&self, voltage: f64) -> Result<f64> {
        let length = self.cavity_length(voltage);
        if !(length > 0.0) {
            return Err(Error::invalid(format!("cavity length {length} μm is not positive")));
        }
        if !(length < self.r) {
            return Err(Error::invalid(format!(
                "cavity length {length} μm must stay below the mirror radius {} μm",
                self.r
            )));
        }
        let gouy = (1.0 - length / self.r).sqrt().acos();
        Ok(HC_MEV_UM / (2.0 * length) * (2.0 * PI * self.q + gouy + self.phi))
    }

    pub fn polariton(&self, voltage: f64) -> Result<Polariton> {
        hopfield(self.cavity_energy(voltage)?, self.e_x, self.omega)
    }

    pub fn rabi_splitting(&self) -> f64 {
        2.0 * self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnticrossingPoint {
    pub voltage: f64,
    pub branch: Branch,
    /// Peak energy in meV.
    pub energy: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
}

/// Branch energy versus piezo voltage as a [`Model`] over the eight
/// [`ANTICROSSING_PARAMS`], with an analytic gradient.
pub struct AnticrossingModel;

impl Model for AnticrossingModel {
    type Input = (f64, Branch);

    fn arity(&self) -> usize {
        8
    }

    fn eval(&self, (voltage, branch): (f64, Branch), params: &[f64]) -> f64 {
        match CoupledOscillator::from_params(params).polariton(voltage) {
            Ok(p) => match branch {
                Branch::Lower => p.e_lp,
                Branch::Upper => p.e_up,
            },
            Err(_) => f64::NAN,
        }
    }

    fn gradient(&self, (voltage, branch): (f64, Branch), params: &[f64], out: &mut [f64]) {
        let osc = CoupledOscillator::from_params(params);
        let Ok(e_c) = osc.cavity_energy(voltage) else {
            out.iter_mut().for_each(|v| *v = f64::NAN);
            return;
        };
        let length = osc.cavity_length(voltage);
        let prefactor = HC_MEV_UM / (2.0 * length);
        let u = (1.0 - length / osc.r).sqrt();
        let ratio_root = (length / osc.r).sqrt();
        let dtheta_dl = 1.0 / (2.0 * u * osc.r * ratio_root);
        let dtheta_dr = -length / (2.0 * u * osc.r * osc.r * ratio_root);
        let dec_dl = -e_c / length + prefactor * dtheta_dl;

        let detuning = e_c - osc.e_x;
        let root = (osc.omega * osc.omega + 0.25 * detuning * detuning).sqrt();
        let sign = match branch {
            Branch::Lower => -1.0,
            Branch::Upper => 1.0,
        };
        let de_dec = 0.5 + sign * detuning / (4.0 * root);
        out[0] = 0.5 - sign * detuning / (4.0 * root);
        out[1] = sign * osc.omega / root;
        out[2] = de_dec * dec_dl;
        out[3] = de_dec * prefactor * dtheta_dr;
        out[4] = de_dec * prefactor;
        out[5] = de_dec * prefactor * 2.0 * PI;
        out[6] = -de_dec * dec_dl * voltage;
        out[7] = -de_dec * dec_dl * voltage * voltage;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnticrossingFit {
    pub oscillator: CoupledOscillator,
    /// Standard errors in [`ANTICROSSING_PARAMS`] order (zero for frozen parameters).
    pub std_errors: [f64; 8],
    /// `2Ω` in meV.
    pub rabi_splitting: f64,
    pub rabi_splitting_err: f64,
    pub fit: FitResult,
}

/// Global fit of lower/upper branch peak energies versus piezo voltage.
///
/// `fixed` freezes parameters in [`ANTICROSSING_PARAMS`] order. Note that `q`
/// and `phi` only enter through `2πq + φ`, so leaving both free makes the
/// problem rank deficient.
pub fn fit_anticrossing(
    data: &[AnticrossingPoint],
    init: &CoupledOscillator,
    fixed: &[bool; 8],
) -> Result<AnticrossingFit> {
    let points: Vec<DataPoint<(f64, Branch)>> = data
        .iter()
        .map(|d| DataPoint::new((d.voltage, d.branch), d.energy, d.sigma))
        .collect();
    let fit = fit_least_squares(&AnticrossingModel, &points, &init.to_params(), fixed)?;
    let oscillator = CoupledOscillator::from_params(&fit.params);
    let mut std_errors = [0.0; 8];
    std_errors.copy_from_slice(&fit.std_errors);
    Ok(AnticrossingFit {
        oscillator,
        std_errors,
        rabi_splitting: oscillator.rabi_splitting(),
        rabi_splitting_err: 2.0 * std_errors[1],
        fit,
    })
}
