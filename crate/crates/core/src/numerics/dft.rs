//! Discrete Fourier transform. The forward transform is unnormalized and the
//! inverse carries the 1/N factor, so `inverse(forward(x)) == x`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

pub fn dft(samples: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    if samples.is_empty() {
        return Err(Error::invalid("dft needs at least one sample"));
    }
    let mut buffer = samples.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    match direction {
        Direction::Forward => planner.plan_fft_forward(buffer.len()).process(&mut buffer),
        Direction::Inverse => {
            planner.plan_fft_inverse(buffer.len()).process(&mut buffer);
            let scale = 1.0 / buffer.len() as f64;
            buffer.iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok(buffer)
}

/// Real-input convenience wrapper for [`dft`].
pub fn dft_real(samples: &[f64], direction: Direction) -> Result<Vec<Complex64>> {
    let complex: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dft(&complex, direction)
}

/// Frequencies of the DFT bins for sample spacing `dt`, in FFT order
/// (0, 1/(N dt), ..., then the negative half). With `dt` in ps this is THz.
pub fn fft_frequencies(n: usize, dt: f64) -> Vec<f64> {
    let span = n as f64 * dt;
    (0..n)
        .map(|k| {
            let signed = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
            signed / span
        })
        .collect()
}
