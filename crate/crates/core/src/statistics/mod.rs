//! Closed-form steady-state statistics and zero-delay correlations.

mod joint;
mod occupation;
mod scan;
mod spectrum;

pub use joint::{
    g2_zero_reservoir_averaged, g2_zero_with_reservoir, joint_generator, joint_steady_state,
    joint_steady_state_power, JointDistribution, JointStats, ReservoirModel,
};
pub use occupation::{g2_zero_analytic, thermal_occupation, OccupationDist};
pub use scan::{
    scan_detuning, scan_filter, Curve, DetuningPoint, DetuningScan, DetuningScanConfig,
    InteractionMode, LinewidthSource, LinewidthTable, ReservoirEstimator, ScanStatistics,
};
pub use spectrum::emission_spectrum;
