//! Gaussian peak fits: zero-delay calibration and fixed-center g2(0) extraction.

use serde::{Deserialize, Serialize};

use super::data::CoincidenceData;
use crate::error::{Error, Result};
use crate::numerics::{fit_least_squares, DataPoint, FitResult, Model};

/// Smallest max/median ratio that counts as a visible bunching peak.
pub const PEAK_VISIBILITY: f64 = 1.2;

/// Background extent needed outside ±3σ of the peak, in units of σ.
pub const MIN_BACKGROUND_SIGMAS: f64 = 5.0;

/// `Y0 + N0·exp(-(τ - t0)² / 2σ²)` with parameters `[Y0, N0, t0, σ]`.
pub struct GaussianPeak;

impl Model for GaussianPeak {
    type Input = f64;

    fn arity(&self) -> usize {
        4
    }

    fn eval(&self, tau: f64, p: &[f64]) -> f64 {
        let u = (tau - p[2]) / p[3];
        p[0] + p[1] * (-0.5 * u * u).exp()
    }

    fn gradient(&self, tau: f64, p: &[f64], out: &mut [f64]) {
        let u = (tau - p[2]) / p[3];
        let e = (-0.5 * u * u).exp();
        out[0] = 1.0;
        out[1] = e;
        out[2] = p[1] * e * u / p[3];
        out[3] = p[1] * e * u * u / p[3];
    }
}

/// Zero-delay calibration from the summed histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub t0_ps: f64,
    pub t0_err_ps: f64,
    /// Standard deviation of the peak.
    pub sigma_ps: f64,
    pub sigma_err_ps: f64,
    pub amplitude: f64,
    pub background: f64,
}

impl Calibration {
    pub fn sigma_fwhm_ps(&self) -> f64 {
        crate::units::gaussian_fwhm_from_sigma(self.sigma_ps)
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

struct PeakGuess {
    index: usize,
    background: f64,
    amplitude: f64,
    sigma: f64,
}

fn guess_peak(data: &CoincidenceData) -> Result<PeakGuess> {
    let counts = data.counts();
    let background = median(counts);
    let (index, &max) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("validated data is non-empty");
    if !(max > PEAK_VISIBILITY * background) || max <= 0.0 {
        return Err(Error::PeakNotFound(format!(
            "max/median = {:.3} does not exceed {PEAK_VISIBILITY}",
            max / background
        )));
    }
    let half = background + 0.5 * (max - background);
    let mut lo = index;
    while lo > 0 && counts[lo - 1] > half {
        lo -= 1;
    }
    let mut hi = index;
    while hi + 1 < counts.len() && counts[hi + 1] > half {
        hi += 1;
    }
    let fwhm = (hi - lo + 1) as f64 * data.bin();
    Ok(PeakGuess {
        index,
        background,
        amplitude: max - background,
        sigma: crate::units::gaussian_sigma_from_fwhm(fwhm).max(data.bin()),
    })
}

fn points(data: &CoincidenceData) -> Vec<DataPoint<f64>> {
    data.tau().iter().zip(data.counts()).map(|(&t, &c)| DataPoint::new(t, c, None)).collect()
}

fn converged(fit: FitResult) -> Result<FitResult> {
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::NumericFailure {
            message: format!("Gaussian fit did not converge in {} iterations", fit.iterations),
            partial: fit.params[1],
        })
    }
}

/// Fits a free Gaussian on a flat background to the summed histogram.
pub fn calibrate_zero_delay(summed: &CoincidenceData) -> Result<Calibration> {
    let guess = guess_peak(summed)?;
    let init = [guess.background, guess.amplitude, summed.tau()[guess.index], guess.sigma];
    let fit = converged(fit_least_squares(&GaussianPeak, &points(summed), &init, &[false; 4])?)?;
    let p = &fit.params;
    Ok(Calibration {
        t0_ps: p[2],
        t0_err_ps: fit.std_errors[2],
        sigma_ps: p[3].abs(),
        sigma_err_ps: fit.std_errors[3],
        amplitude: p[1],
        background: p[0],
    })
}

/// Refits with counting-noise weights taken from `fit`. Returns the new fit and
/// the factor that turns its covariance into a residual-scaled one.
fn poisson_refit(data: &[DataPoint<f64>], fit: FitResult, mask: &[bool; 4]) -> Result<(FitResult, f64)> {
    let model: Vec<f64> = data.iter().map(|d| GaussianPeak.eval(d.x, &fit.params)).collect();
    if model.iter().any(|m| !(*m > 0.0)) {
        return Ok((fit, 1.0));
    }
    let weighted: Vec<_> = data.iter().zip(&model).map(|(d, m)| DataPoint::new(d.x, d.y, Some(m.sqrt()))).collect();
    let refit = converged(fit_least_squares(&GaussianPeak, &weighted, &fit.params, mask)?)?;
    let scale = if refit.dof == 0 { 1.0 } else { refit.chi_square / refit.dof as f64 };
    Ok((refit, scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2ZeroEstimate {
    pub g2_zero: f64,
    pub err: f64,
    /// Peak amplitude above background.
    pub n0: f64,
    pub n0_err: f64,
    /// Background coincidence level.
    pub y0: f64,
    pub y0_err: f64,
    pub t0_ps: f64,
    /// Fitted standard deviation.
    pub sigma_ps: f64,
    pub sigma_err_ps: f64,
    /// True when the width could not be resolved (no visible peak) and was
    /// held at the starting value.
    pub width_fixed: bool,
}

/// Fits a Gaussian centered at `t0` with free amplitude, width and background,
/// and returns `g2(0) = 1 + N0/Y0` with first-order error propagation.
///
/// `sigma_guess` (standard deviation, ps) seeds the width and sets the
/// background requirement. When the peak is too weak to resolve a width, the
/// width is held at `sigma_guess`.
///
/// Counting noise grows with the counts, so the fit is repeated with weights
/// `1/sqrt(model)` from the first pass; errors are scaled by the reduced
/// chi-square, which keeps g2(0) and its relative error invariant under a
/// rescaling of the counts.
///
/// Low-pass filtering leaves the noise inside the signal band untouched but
/// shrinks the residuals, so the residual-scaled fit errors are divided by
/// `sqrt(noise_fraction)` when the data records one.
pub fn extract_g2_zero(filtered: &CoincidenceData, t0: f64, sigma_guess: f64) -> Result<G2ZeroEstimate> {
    if !(sigma_guess > 0.0 && sigma_guess.is_finite()) || !t0.is_finite() {
        return Err(Error::invalid("t0 must be finite and sigma_guess positive"));
    }
    let outside = filtered.tau().iter().filter(|&&t| (t - t0).abs() > 3.0 * sigma_guess).count();
    let background_span = outside as f64 * filtered.bin();
    if background_span < MIN_BACKGROUND_SIGMAS * sigma_guess {
        return Err(Error::invalid(format!(
            "background region {background_span:.1} ps is shorter than {MIN_BACKGROUND_SIGMAS}σ = {:.1} ps",
            MIN_BACKGROUND_SIGMAS * sigma_guess
        )));
    }
    let data = points(filtered);
    let counts = filtered.counts();
    let background: Vec<f64> = filtered
        .tau()
        .iter()
        .zip(counts)
        .filter(|(&t, _)| (t - t0).abs() > 3.0 * sigma_guess)
        .map(|(_, &c)| c)
        .collect();
    let y_guess = background.iter().sum::<f64>() / background.len() as f64;
    let at_t0 = filtered
        .tau()
        .iter()
        .zip(counts)
        .min_by(|a, b| (a.0 - t0).abs().total_cmp(&(b.0 - t0).abs()))
        .map(|(_, &c)| c)
        .unwrap_or(y_guess);
    let init = [y_guess, at_t0 - y_guess, t0, sigma_guess];

    let free_width = fit_least_squares(&GaussianPeak, &data, &init, &[false, false, true, false])
        .and_then(converged)
        .ok()
        .filter(|f| {
            let s = f.params[3].abs();
            s > 0.25 * sigma_guess && s < 4.0 * sigma_guess && f.std_errors[3] < s
        });
    let width_fixed = free_width.is_none();
    let mask = [false, false, true, width_fixed];
    let fit = match free_width {
        Some(f) => f,
        None => converged(fit_least_squares(&GaussianPeak, &data, &init, &mask)?)?,
    };
    let (fit, mut scale) = poisson_refit(&data, fit, &mask)?;
    let (y0, n0) = (fit.params[0], fit.params[1]);
    if !(y0 > 0.0) {
        return Err(Error::Degenerate(format!("background level Y0 = {y0} is not positive")));
    }
    scale /= filtered.metadata.noise_fraction.unwrap_or(1.0).clamp(f64::MIN_POSITIVE, 1.0);
    let (sy, sn) = (fit.std_errors[0] * scale.sqrt(), fit.std_errors[1] * scale.sqrt());
    let cov = fit.covariance[0][1] * scale;
    let ratio = n0 / y0;
    let var = (sn / y0).powi(2) + (ratio * sy / y0).powi(2) - 2.0 * ratio / (y0 * y0) * cov;
    Ok(G2ZeroEstimate {
        g2_zero: 1.0 + ratio,
        err: var.max(0.0).sqrt(),
        n0,
        n0_err: sn,
        y0,
        y0_err: sy,
        t0_ps: t0,
        sigma_ps: fit.params[3].abs(),
        sigma_err_ps: fit.std_errors[3] * scale.sqrt(),
        width_fixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_difference_gradient;

    fn peak(t0: f64, sigma: f64, y0: f64, n0: f64) -> CoincidenceData {
        let counts = (0..801)
            .map(|k| {
                let t = -1600.0 + 4.0 * k as f64;
                y0 + n0 * (-0.5 * ((t - t0) / sigma).powi(2)).exp()
            })
            .collect();
        CoincidenceData::from_counts(-1600.0, 4.0, counts).unwrap()
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let p = [20.0, 17.0, 3.0, 57.6];
        for tau in [-200.0, -30.0, 0.0, 12.0, 150.0] {
            let mut a = [0.0; 4];
            let mut b = [0.0; 4];
            GaussianPeak.gradient(tau, &p, &mut a);
            finite_difference_gradient(&GaussianPeak, tau, &p, &mut b);
            for j in 0..4 {
                assert!((a[j] - b[j]).abs() <= 1e-6 * a[j].abs().max(1.0), "{j}: {} vs {}", a[j], b[j]);
            }
        }
    }

    #[test]
    fn calibration_recovers_center_and_width() {
        let c = calibrate_zero_delay(&peak(0.0, 57.64, 20.0, 20.0)).unwrap();
        assert!(c.t0_ps.abs() < 1e-6);
        assert!((c.sigma_ps - 57.64).abs() < 1e-6);
        let c = calibrate_zero_delay(&peak(37.0, 30.0, 5.0, 40.0)).unwrap();
        assert!((c.t0_ps - 37.0).abs() < 1e-6);
        assert!((c.sigma_ps - 30.0).abs() < 1e-6);
        assert!((c.sigma_fwhm_ps() - 30.0 * 2.354_820_045).abs() < 1e-6);
    }

    #[test]
    fn flat_data_has_no_peak() {
        let err = calibrate_zero_delay(&peak(0.0, 50.0, 20.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::PeakNotFound(_)));
        let zero = CoincidenceData::from_counts(0.0, 1.0, vec![0.0; 10]).unwrap();
        assert!(matches!(calibrate_zero_delay(&zero), Err(Error::PeakNotFound(_))));
    }

    #[test]
    fn trivial_ratios() {
        let e = extract_g2_zero(&peak(0.0, 57.64, 20.0, 20.0), 0.0, 50.0).unwrap();
        assert!((e.g2_zero - 2.0).abs() < 1e-9);
        assert!(!e.width_fixed);
        let e = extract_g2_zero(&peak(0.0, 57.64, 20.0, 0.0), 0.0, 57.64).unwrap();
        assert!((e.g2_zero - 1.0).abs() < 1e-9);
        assert!(e.width_fixed);
    }

    #[test]
    fn background_requirements() {
        let d = peak(0.0, 57.64, 20.0, 20.0);
        assert!(matches!(extract_g2_zero(&d, 0.0, 300.0), Err(Error::InvalidArgument(_))));
        let negative = CoincidenceData::filtered(
            d.tau().to_vec(),
            d.counts().iter().map(|c| c - 40.0).collect(),
        )
        .unwrap();
        assert!(matches!(extract_g2_zero(&negative, 0.0, 57.64), Err(Error::Degenerate(_))));
    }
}
