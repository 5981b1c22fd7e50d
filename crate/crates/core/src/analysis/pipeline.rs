//! The full pipeline: calibrate on the summed data, filter each dataset,
//! extract g2(0), deconvolve, and track convergence over cumulative snapshots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::CoincidenceData;
use super::detector::{deconvolved_g2, DeconvolvedG2, DETECTOR_SIGMA_PS};
use super::peak::{calibrate_zero_delay, extract_g2_zero, Calibration, G2ZeroEstimate};
use super::window::{fourier_noise_filter, WindowSpec, WINDOW_EDGE_GHZ};
use crate::error::{Error, Result};

/// Background level (coincidences per bin) at which a run has usually converged.
pub const CONVERGED_BACKGROUND: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    /// Acquisition time in s, or the snapshot index when the data carries none.
    pub acquisition_time: f64,
    pub g2_zero: f64,
    pub err: f64,
    pub y0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrack {
    pub points: Vec<ConvergencePoint>,
    /// The spread of g2(0) over the last quarter of the snapshots is below the
    /// combined error of its two extreme points.
    pub converged: bool,
    /// The final background level reached [`CONVERGED_BACKGROUND`].
    pub background_reached: bool,
}

fn check_cumulative(snapshots: &[CoincidenceData]) -> Result<()> {
    for (k, w) in snapshots.windows(2).enumerate() {
        if !w[0].same_grid(&w[1]) {
            return Err(Error::invalid(format!("snapshot {} is on a different grid", k + 1)));
        }
        if w[0].counts().iter().zip(w[1].counts()).any(|(a, b)| b < a) {
            return Err(Error::invalid(format!("snapshot {} is not cumulative", k + 1)));
        }
    }
    Ok(())
}

fn track(times: &[f64], estimates: &[G2ZeroEstimate]) -> ConvergenceTrack {
    let points: Vec<ConvergencePoint> = times
        .iter()
        .zip(estimates)
        .map(|(&t, e)| ConvergencePoint { acquisition_time: t, g2_zero: e.g2_zero, err: e.err, y0: e.y0 })
        .collect();
    let converged = if points.len() < 4 {
        false
    } else {
        let tail = &points[points.len() - points.len().div_ceil(4).max(2)..];
        let hi = tail.iter().max_by(|a, b| a.g2_zero.total_cmp(&b.g2_zero)).unwrap();
        let lo = tail.iter().min_by(|a, b| a.g2_zero.total_cmp(&b.g2_zero)).unwrap();
        hi.g2_zero - lo.g2_zero < (hi.err * hi.err + lo.err * lo.err).sqrt()
    };
    let background_reached = points.last().is_some_and(|p| p.y0 >= CONVERGED_BACKGROUND);
    ConvergenceTrack { points, converged, background_reached }
}

fn times_of(snapshots: &[CoincidenceData]) -> Vec<f64> {
    snapshots
        .iter()
        .enumerate()
        .map(|(k, s)| s.metadata.acquisition_time.unwrap_or(k as f64))
        .collect()
}

/// g2(0) versus acquisition time for cumulative snapshots of one measurement.
pub fn convergence_track(
    snapshots: &[CoincidenceData],
    t0: f64,
    sigma: f64,
    window: &WindowSpec,
) -> Result<ConvergenceTrack> {
    if snapshots.is_empty() {
        return Err(Error::invalid("no snapshots"));
    }
    check_cumulative(snapshots)?;
    let estimates = snapshots
        .par_iter()
        .map(|s| extract_g2_zero(&fourier_noise_filter(s, window)?, t0, sigma))
        .collect::<Result<Vec<_>>>()?;
    Ok(track(&times_of(snapshots), &estimates))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    /// Skip the calibration fit and use this zero delay (needs `sigma_ps` too).
    pub t0_ps: Option<f64>,
    /// Peak standard deviation used instead of the calibrated one.
    pub sigma_ps: Option<f64>,
    /// Explicit window; otherwise derived from the calibrated width.
    pub window: Option<WindowSpec>,
    pub edge_width_ghz: f64,
    /// Detector response, standard deviation. Zero disables deconvolution.
    pub sigma_det_ps: f64,
    /// Treat the datasets as cumulative snapshots of one acquisition.
    pub snapshots: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            t0_ps: None,
            sigma_ps: None,
            window: None,
            edge_width_ghz: WINDOW_EDGE_GHZ,
            sigma_det_ps: DETECTOR_SIGMA_PS,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub label: Option<String>,
    pub acquisition_time: Option<f64>,
    pub estimate: G2ZeroEstimate,
    pub deconvolved: DeconvolvedG2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// g2(0) of the last dataset (the full acquisition in snapshot mode).
    pub g2_zero: f64,
    pub err: f64,
    /// Calibrated standard deviation of the summed peak.
    pub sigma_ps: f64,
    pub sigma_fwhm_ps: f64,
    pub t0_ps: f64,
    pub convergence_flag: Option<bool>,
    pub calibration: Calibration,
    pub window: WindowSpec,
    pub sigma_det_ps: f64,
    pub datasets: Vec<DatasetReport>,
    pub convergence: Option<ConvergenceTrack>,
}

#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub report: AnalysisReport,
    pub filtered: Vec<CoincidenceData>,
}

pub fn analyze(datasets: &[CoincidenceData], opts: &AnalysisOptions) -> Result<AnalysisOutput> {
    if datasets.is_empty() {
        return Err(Error::invalid("no datasets to analyze"));
    }
    let reference = if opts.snapshots {
        check_cumulative(datasets)?;
        datasets[datasets.len() - 1].clone()
    } else {
        CoincidenceData::sum(datasets)?
    };
    let mut calibration = match (opts.t0_ps, opts.sigma_ps) {
        (Some(t0), Some(sigma)) => Calibration {
            t0_ps: t0,
            t0_err_ps: 0.0,
            sigma_ps: sigma,
            sigma_err_ps: 0.0,
            amplitude: f64::NAN,
            background: f64::NAN,
        },
        _ => calibrate_zero_delay(&reference)?,
    };
    if let Some(t0) = opts.t0_ps {
        calibration.t0_ps = t0;
    }
    if let Some(sigma) = opts.sigma_ps {
        calibration.sigma_ps = sigma;
    }
    let window = match opts.window {
        Some(w) => {
            w.validate()?;
            w
        }
        None => WindowSpec::from_peak_width(calibration.sigma_ps, opts.edge_width_ghz)?,
    };
    let results = datasets
        .par_iter()
        .map(|d| {
            let filtered = fourier_noise_filter(d, &window)?;
            let estimate = extract_g2_zero(&filtered, calibration.t0_ps, calibration.sigma_ps)?;
            let deconvolved = deconvolved_g2(&estimate, opts.sigma_det_ps)?;
            let report = DatasetReport {
                label: d.metadata.label.clone(),
                acquisition_time: d.metadata.acquisition_time,
                estimate,
                deconvolved,
            };
            Ok((report, filtered))
        })
        .collect::<Result<Vec<_>>>()?;
    let (reports, filtered): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let convergence = opts.snapshots.then(|| {
        let estimates: Vec<_> = reports.iter().map(|r| r.estimate).collect();
        track(&times_of(datasets), &estimates)
    });
    let last = reports.last().expect("at least one dataset").estimate;
    Ok(AnalysisOutput {
        report: AnalysisReport {
            g2_zero: last.g2_zero,
            err: last.err,
            sigma_ps: calibration.sigma_ps,
            sigma_fwhm_ps: calibration.sigma_fwhm_ps(),
            t0_ps: calibration.t0_ps,
            convergence_flag: convergence.as_ref().map(|c| c.converged),
            calibration,
            window,
            sigma_det_ps: opts.sigma_det_ps,
            datasets: reports,
            convergence,
        },
        filtered,
    })
}
