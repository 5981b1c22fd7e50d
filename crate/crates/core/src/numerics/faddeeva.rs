//! Faddeeva function `w(z) = exp(-z²)·erfc(-iz)` and the Voigt overlap built on it.
//!
//! Inside `|z| < 10` the upper half-plane is covered by Weideman's rational
//! expansion in `Z = (L + iz)/(L - iz)` with 32 terms; outside, the Laplace
//! continued fraction converges quickly. The lower half-plane is reached
//! through `w(z) = 2·exp(-z²) - w(-z)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::gaussian_sigma_from_fwhm;

pub type ComplexValue = Complex64;

const TERMS: usize = 32;
const CONTINUED_FRACTION_RADIUS: f64 = 10.0;
const CONTINUED_FRACTION_DEPTH: usize = 24;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

struct Weideman {
    scale: f64,
    coeffs: [f64; TERMS],
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let m = 2 * TERMS;
        let m2 = 2 * m;
        let scale = (TERMS as f64 / std::f64::consts::SQRT_2).sqrt();
        // Samples of exp(-t²)(L² + t²) on t = L·tan(θ/2), θ = kπ/M, laid out in
        // FFT order (k = 0..M-1, then -M..-1). The k = -M sample is zero.
        let sample = |k: i64| -> f64 {
            if k.unsigned_abs() as usize == m {
                return 0.0;
            }
            let theta = k as f64 * PI / m as f64;
            let t = scale * (theta / 2.0).tan();
            (-t * t).exp() * (scale * scale + t * t)
        };
        // The sample sequence is even in k, so its DFT is a real cosine sum.
        let mut coeffs = [0.0; TERMS];
        for (n, c) in coeffs.iter_mut().enumerate() {
            let freq = (n + 1) as f64;
            let mut acc = 0.0;
            for i in 0..m2 {
                let k = if i < m { i as i64 } else { i as i64 - m2 as i64 };
                acc += sample(k) * (2.0 * PI * k as f64 * freq / m2 as f64).cos();
            }
            *c = acc / m2 as f64;
        }
        Weideman { scale, coeffs }
    })
}

fn rational_upper(z: Complex64) -> Complex64 {
    let table = weideman();
    let iz = Complex64::i() * z;
    let denom = table.scale - iz;
    let big_z = (table.scale + iz) / denom;
    let mut poly = Complex64::new(0.0, 0.0);
    for &c in table.coeffs.iter().rev() {
        poly = poly * big_z + c;
    }
    2.0 * poly / (denom * denom) + FRAC_1_SQRT_PI / denom
}

fn continued_fraction_upper(z: Complex64) -> Complex64 {
    let mut tail = Complex64::new(0.0, 0.0);
    for k in (1..=CONTINUED_FRACTION_DEPTH).rev() {
        tail = (k as f64 / 2.0) / (z - tail);
    }
    Complex64::new(0.0, FRAC_1_SQRT_PI) / (z - tail)
}

fn upper_half_plane(z: Complex64) -> Complex64 {
    if z.norm() >= CONTINUED_FRACTION_RADIUS {
        continued_fraction_upper(z)
    } else {
        rational_upper(z)
    }
}

/// Faddeeva function `w(z) = exp(-z²)·erfc(-iz)` to at least 1e-6 relative accuracy.
pub fn faddeeva(z: ComplexValue) -> Result<ComplexValue> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::invalid(format!("faddeeva argument must be finite, got {z}")));
    }
    if z.im >= 0.0 {
        Ok(upper_half_plane(z))
    } else {
        Ok(2.0 * (-z * z).exp() - upper_half_plane(-z))
    }
}

/// Overlap `∫ L(ω - δ)·G(ω) dω` of a unit-area Lorentzian and a unit-area
/// Gaussian whose centers are `delta` apart, i.e. the Voigt profile at `delta`.
///
/// Both widths are FWHM (same unit as `delta`); the result is per unit of that
/// energy. Either width may be zero, but not both.
pub fn voigt_overlap(delta: f64, lorentz_fwhm: f64, gauss_fwhm: f64) -> Result<f64> {
    if !delta.is_finite() || !lorentz_fwhm.is_finite() || !gauss_fwhm.is_finite() {
        return Err(Error::invalid("voigt_overlap arguments must be finite"));
    }
    if lorentz_fwhm < 0.0 || gauss_fwhm < 0.0 {
        return Err(Error::invalid("voigt_overlap widths must be non-negative"));
    }
    let half_width = lorentz_fwhm / 2.0;
    match (lorentz_fwhm > 0.0, gauss_fwhm > 0.0) {
        (false, false) => Err(Error::invalid("voigt_overlap needs at least one positive width")),
        (true, false) => Ok(half_width / PI / (delta * delta + half_width * half_width)),
        (false, true) => {
            let sigma = gaussian_sigma_from_fwhm(gauss_fwhm);
            Ok((-0.5 * (delta / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt()))
        }
        (true, true) => {
            let sigma = gaussian_sigma_from_fwhm(gauss_fwhm);
            let norm = sigma * std::f64::consts::SQRT_2;
            let w = faddeeva(Complex64::new(delta.abs() / norm, half_width / norm))?;
            Ok(w.re / (sigma * (2.0 * PI).sqrt()))
        }
    }
}
