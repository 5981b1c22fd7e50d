//! Cavity transmission through an inhomogeneously broadened exciton ensemble
//! and Lorentzian characterization of the resulting lower-polariton line.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::hopfield;
use crate::numerics::{faddeeva, fit_least_squares, DataPoint, FitResult, Model};
use crate::units::UEV_PER_MEV;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DinizParams {
    /// Cavity loss FWHM, μeV.
    pub kappa: f64,
    /// Exciton inhomogeneous half width at half maximum, μeV.
    pub sigma: f64,
    /// Homogeneous exciton damping, μeV.
    #[serde(rename = "gamma_X")]
    pub gamma_x: f64,
    /// Half vacuum Rabi splitting, meV.
    #[serde(rename = "Omega")]
    pub omega: f64,
    /// Exciton energy, meV.
    #[serde(rename = "omega_X")]
    pub omega_x: f64,
}

impl DinizParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.sigma > 0.0 && self.gamma_x > 0.0) {
            return Err(Error::invalid("kappa, sigma and gamma_X must be positive"));
        }
        if !(self.omega >= 0.0) || !self.omega_x.is_finite() {
            return Err(Error::invalid("Omega must be non-negative and omega_X finite"));
        }
        Ok(())
    }
}

/// Complex amplitude transmission at probe energy `omega` (meV) for a bare
/// cavity mode at `cavity` (meV).
pub fn diniz_transmission(omega: f64, cavity: f64, p: &DinizParams) -> Result<Complex64> {
    p.validate()?;
    let kappa = p.kappa / UEV_PER_MEV;
    let sigma = p.sigma / UEV_PER_MEV;
    let gamma_x = p.gamma_x / UEV_PER_MEV;
    let ln2_sqrt = std::f64::consts::LN_2.sqrt();
    let u = Complex64::new(omega - p.omega_x, gamma_x / 2.0) / (sigma / ln2_sqrt);
    let w = faddeeva(u)?;
    let self_energy = Complex64::new(0.0, -ln2_sqrt * p.omega * p.omega / sigma * std::f64::consts::PI.sqrt()) * w;
    let numerator = Complex64::new(0.0, -kappa / 2.0);
    Ok(numerator / (Complex64::new(omega - cavity, kappa / 2.0) - self_energy))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    /// `amplitude·π·fwhm/2`, in spectrum units times abscissa units.
    pub area: f64,
    pub converged: bool,
    pub fit: FitResult,
}

struct Lorentzian;

impl Model for Lorentzian {
    type Input = f64;
    fn arity(&self) -> usize {
        3
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let hw = 0.5 * p[2];
        p[0] * hw * hw / ((x - p[1]).powi(2) + hw * hw)
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let hw = 0.5 * p[2];
        let d = x - p[1];
        let denom = d * d + hw * hw;
        let shape = hw * hw / denom;
        out[0] = shape;
        out[1] = p[0] * shape * 2.0 * d / denom;
        out[2] = p[0] * hw * d * d / (denom * denom);
    }
}

/// Fits `A·(Γ/2)²/((x-x₀)² + (Γ/2)²)` to `(x, y)` samples.
pub fn lp_lorentzian_characterize(spectrum: &[(f64, f64)]) -> Result<LorentzianFit> {
    if spectrum.len() < 4 {
        return Err(Error::invalid("need at least four spectrum samples"));
    }
    let (imax, &(x0, ymax)) = spectrum
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    if !(ymax > 0.0) {
        return Err(Error::Degenerate("spectrum has no positive peak".into()));
    }
    let half = ymax / 2.0;
    let left = spectrum[..imax].iter().rev().find(|s| s.1 < half).map(|s| s.0);
    let right = spectrum[imax..].iter().find(|s| s.1 < half).map(|s| s.0);
    let span = spectrum.last().expect("non-empty").0 - spectrum[0].0;
    let width = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (x0 - l),
        (None, Some(r)) => 2.0 * (r - x0),
        (None, None) => span / 4.0,
    };
    let data: Vec<_> = spectrum.iter().map(|&(x, y)| DataPoint::new(x, y, None)).collect();
    let fit = fit_least_squares(&Lorentzian, &data, &[ymax, x0, width.abs()], &[false; 3])?;
    let (amplitude, center, fwhm) = (fit.params[0], fit.params[1], fit.params[2].abs());
    Ok(LorentzianFit {
        center,
        fwhm,
        amplitude,
        area: amplitude * std::f64::consts::PI * fwhm / 2.0,
        converged: fit.converged,
        fit,
    })
}

/// `|c_X|⁴/Γ_LP`, proportional to the exciton-exciton contribution to the interaction.
pub fn figure_of_merit(cx2: f64, gamma_lp: f64) -> f64 {
    cx2 * cx2 / gamma_lp
}

/// Lower-polariton transmission line at one cavity-exciton detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpLine {
    pub detuning: f64,
    pub cx2: f64,
    /// Peak energy of the fitted line, meV.
    pub center: f64,
    /// FWHM, μeV.
    pub fwhm: f64,
    /// Area of `|t|²` in μeV.
    pub area: f64,
    pub figure_of_merit: f64,
    pub converged: bool,
}

/// Simulates `|t|²` around the lower polariton at detuning `E_c - E_X` (meV)
/// and characterizes it with a Lorentzian fit.
pub fn lp_linewidth_at(detuning: f64, p: &DinizParams) -> Result<LpLine> {
    p.validate()?;
    let cavity = p.omega_x + detuning;
    let pol = hopfield(cavity, p.omega_x, p.omega.max(1e-12))?;
    let power = |e: f64| diniz_transmission(e, cavity, p).map(|t| t.norm_sqr());
    // Locate the peak on a coarse grid, then sample ±0.4 meV around it.
    let mut peak = pol.e_lp;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=2000 {
        let e = pol.e_lp - 1.0 + 1.5 * i as f64 / 2000.0;
        let v = power(e)?;
        if v > best {
            best = v;
            peak = e;
        }
    }
    let samples = 4001;
    let half_window = 0.4;
    let mut spectrum = Vec::with_capacity(samples);
    for i in 0..samples {
        let e = peak - half_window + 2.0 * half_window * i as f64 / (samples - 1) as f64;
        spectrum.push(((e - peak) * UEV_PER_MEV, power(e)?));
    }
    let fit = lp_lorentzian_characterize(&spectrum)?;
    Ok(LpLine {
        detuning,
        cx2: pol.cx2,
        center: peak + fit.center / UEV_PER_MEV,
        fwhm: fit.fwhm,
        area: fit.area,
        figure_of_merit: figure_of_merit(pol.cx2, fit.fwhm),
        converged: fit.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset() -> DinizParams {
        DinizParams { kappa: 64.0, sigma: 435.0, gamma_x: 40.0, omega: 1.52, omega_x: 1452.08 }
    }

    #[test]
    fn uncoupled_cavity_is_lorentzian() {
        let p = DinizParams { omega: 0.0, ..preset() };
        let cavity = 1445.0;
        let t0 = diniz_transmission(cavity, cavity, &p).unwrap();
        assert!((t0.norm() - 1.0).abs() < 1e-12);
        let half = diniz_transmission(cavity + 0.032, cavity, &p).unwrap();
        assert!((half.norm_sqr() - 0.5).abs() < 1e-9);
        let line = lp_linewidth_at(-8.0, &DinizParams { omega: 1e-6, ..preset() }).unwrap();
        assert!((line.fwhm - 64.0).abs() < 1e-3, "{}", line.fwhm);
    }

    #[test]
    fn narrow_ensemble_peaks_at_eigenenergies() {
        let p = DinizParams { sigma: 1e-3, gamma_x: 1e-3, ..preset() };
        for detuning in [-1.0, 0.0, 0.7] {
            let cavity = p.omega_x + detuning;
            let pol = hopfield(cavity, p.omega_x, p.omega).unwrap();
            for target in [pol.e_lp, pol.e_up] {
                let (mut best, mut at) = (0.0, 0.0);
                for i in 0..=4000 {
                    let e = target - 0.2 + 0.4 * i as f64 / 4000.0;
                    let v = diniz_transmission(e, cavity, &p).unwrap().norm_sqr();
                    if v > best {
                        best = v;
                        at = e;
                    }
                }
                assert!((at - target).abs() < 2e-3, "{detuning}: {at} vs {target}");
            }
        }
    }

    #[test]
    fn transmission_bounded_and_decays_inversely() {
        let p = preset();
        let cavity = p.omega_x - 1.0;
        for i in 0..2000 {
            let e = p.omega_x - 10.0 + 0.01 * i as f64;
            assert!(diniz_transmission(e, cavity, &p).unwrap().norm() <= 1.0 + 1e-9);
        }
        let far = |d: f64| diniz_transmission(cavity + d, cavity, &p).unwrap().norm();
        assert!((far(400.0) / far(200.0) - 0.5).abs() < 1e-3);
        assert!((far(-400.0) / far(-200.0) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn noiseless_lorentzian_recovered() {
        let spectrum: Vec<_> = (0..801)
            .map(|i| {
                let x = -200.0 + 0.5 * i as f64;
                (x, Lorentzian.eval(x, &[0.8, 3.5, 55.0]))
            })
            .collect();
        let fit = lp_lorentzian_characterize(&spectrum).unwrap();
        assert!((fit.amplitude - 0.8).abs() < 1e-9);
        assert!((fit.center - 3.5).abs() < 1e-9);
        assert!((fit.fwhm - 55.0).abs() < 1e-8);
        assert!((fit.area - 0.8 * std::f64::consts::PI * 27.5).abs() < 1e-7);
    }

    #[test]
    fn linewidth_dips_then_broadens() {
        let p = preset();
        let far = lp_linewidth_at(-4.0, &p).unwrap();
        assert!((far.fwhm - 64.0).abs() < 4.0, "{}", far.fwhm);
        let scan: Vec<_> = (0..=24).map(|i| lp_linewidth_at(-4.0 + 0.25 * i as f64, &p).unwrap()).collect();
        let min = scan.iter().map(|l| l.fwhm).fold(f64::INFINITY, f64::min);
        assert!(min > 48.0 && min < 55.0, "{min}");
        assert!(scan.last().unwrap().fwhm > min + 10.0);
        let best = scan.iter().max_by(|a, b| a.figure_of_merit.total_cmp(&b.figure_of_merit)).unwrap();
        assert!(best.cx2 > 0.55 && best.cx2 < 0.8, "{}", best.cx2);
    }
}
