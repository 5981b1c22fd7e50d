//! Quantum-cascade correlation spectroscopy of an anharmonic bosonic mode.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: Faddeeva function, Voigt overlap, adaptive quadrature, DFT,
//!   Levenberg-Marquardt fitting and seeded random streams.
//! - [`ladder`]: the anharmonic ladder, coupled-oscillator polariton model,
//!   Feshbach-resonance interaction constants and the inhomogeneous
//!   transmission model.
//! - [`filter`]: per-level transmission through a Gaussian spectral filter.
//! - [`statistics`]: steady-state occupation statistics and analytic g2(0).
//! - [`trajectories`]: fixed-step Kraus-probability Monte Carlo, coincidence
//!   histograms and g2(tau) extraction.
//! - [`analysis`]: the coincidence-data pipeline (zero-delay calibration,
//!   Fourier noise filtering, fixed-center Gaussian fits).
//!
//! Energies are in μeV unless a name or doc comment says meV, times are in ps.
//! Every public linewidth is a FWHM.

pub mod analysis;
pub mod error;
pub mod filter;
pub mod ladder;
pub mod numerics;
pub mod presets;
pub mod statistics;
pub mod trajectories;
pub mod units;

pub use error::{Error, Result};
