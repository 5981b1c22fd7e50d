//! Stochastic unraveling of the pumped anharmonic ladder and photon-correlation estimates.

mod config;
mod histogram;
mod run;

pub use config::{step_probabilities, ReservoirMode, StepProbabilities, Stepping, TrajectoryConfig, MAX_STEP_PROBABILITY};
pub use histogram::{
    clicks_from_text, clicks_to_text, coincidence_histograms, ensemble_histograms, g2_from_histograms,
    CoincidencePair, G2Estimate,
};
pub use run::{gillespie_oracle, poisson_clicks, run_ensemble, run_trajectory, ClickRecord, RunMeta, TRUNCATION_WARNING_RATE};
