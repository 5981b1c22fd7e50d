//! Coincidence-data pipeline: zero-delay calibration on the summed histogram,
//! Fourier noise filtering with an erf-pair window, fixed-center Gaussian fits
//! for `g2(0) = 1 + N0/Y0`, detector deconvolution and convergence tracking.
//!
//! Widths named `sigma` are standard deviations; `fwhm` names are full widths.

pub mod data;
pub mod detector;
pub mod peak;
pub mod pipeline;
pub mod synthetic;
pub mod window;

pub use data::{CoincidenceData, Metadata};
pub use detector::{
    deconvolve_detector, deconvolved_g2, detector_response_from_pulse, DeconvolvedG2, DETECTOR_SIGMA_PS,
};
pub use peak::{calibrate_zero_delay, extract_g2_zero, Calibration, G2ZeroEstimate, GaussianPeak};
pub use pipeline::{
    analyze, convergence_track, AnalysisOptions, AnalysisOutput, AnalysisReport, ConvergencePoint,
    ConvergenceTrack, DatasetReport, CONVERGED_BACKGROUND,
};
pub use synthetic::{synthetic_snapshots, SyntheticPeak};
pub use window::{fourier_noise_filter, WindowSpec, PASSBAND_QUANTILE, WINDOW_EDGE_GHZ};
