use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{FilterSpec, TransmissionTable};
use crate::ladder::LadderModel;
use crate::statistics::ReservoirModel;
use crate::units::{rate_per_ps, HBAR_UEV_PS};

/// Largest per-step event probability accepted.
pub const MAX_STEP_PROBABILITY: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReservoirMode {
    /// Reservoir occupation frozen at `n_r`; polariton gain `γ_r·n_r·(n+1)`.
    Fixed { gamma_r: f64, n_r: f64 },
    /// Integer reservoir occupation evolving with the joint rate equations.
    Dynamic { reservoir: ReservoirModel, nr_max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stepping {
    /// One uniform draw per `dt`.
    PerStep,
    /// Runs of no-jump steps drawn from their geometric distribution; same
    /// process as `PerStep`, far fewer draws.
    #[default]
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    /// Time step, ps.
    pub dt: f64,
    /// Recorded time after burn-in, ps.
    pub duration: f64,
    /// Discarded relaxation time before recording, ps.
    pub burn_in: f64,
    /// Detector quantum efficiency.
    pub eta: f64,
    #[serde(rename = "reservoir_mode")]
    pub reservoir: ReservoirMode,
    pub ladder: LadderModel,
    pub filter: FilterSpec,
    pub seed: u64,
    /// Fock-space ceiling; the pump is suppressed at `n_max`.
    pub n_max: usize,
    #[serde(default)]
    pub stepping: Stepping,
    /// Spacing of recorded `(t, n)` samples, ps.
    #[serde(default)]
    pub sample_interval: Option<f64>,
}

impl TrajectoryConfig {
    /// Config with the default step, a burn-in of 20 correlation times and
    /// `n_max` taken from the ladder.
    pub fn new(
        ladder: LadderModel,
        filter: FilterSpec,
        reservoir: ReservoirMode,
        eta: f64,
        duration: f64,
        seed: u64,
    ) -> Result<Self> {
        let n_max = ladder.n_max;
        let mut cfg = Self {
            dt: 0.0,
            duration,
            burn_in: 0.0,
            eta,
            reservoir,
            ladder,
            filter,
            seed,
            n_max,
            stepping: Stepping::Skip,
            sample_interval: None,
        };
        cfg.dt = cfg.default_dt();
        cfg.burn_in = 20.0 * cfg.relaxation_time()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `min(0.01/(γ·n_max), 0.01/(γ_r·nr_max·(n_max+1)))` in ps, with the
    /// reservoir pump and dark decay also kept below `0.01`. Shrunk by 0.1% so
    /// the bound holds strictly.
    pub fn default_dt(&self) -> f64 {
        let n = self.n_max as f64;
        let mut rate = rate_per_ps(self.ladder.gamma) * n;
        match self.reservoir {
            ReservoirMode::Fixed { gamma_r, n_r } => {
                rate = rate.max(rate_per_ps(gamma_r) * n_r * (n + 1.0));
            }
            ReservoirMode::Dynamic { reservoir, nr_max } => {
                let m = nr_max as f64;
                rate = rate
                    .max(rate_per_ps(reservoir.gamma_r) * m * (n + 1.0))
                    .max(reservoir.f)
                    .max(rate_per_ps(reservoir.gamma_d) * m);
            }
        }
        0.999 * MAX_STEP_PROBABILITY / rate
    }

    /// Slowest relaxation time of the polariton and reservoir populations, ps.
    pub fn relaxation_time(&self) -> Result<f64> {
        match self.reservoir {
            ReservoirMode::Fixed { .. } => self.correlation_time(),
            ReservoirMode::Dynamic { reservoir, .. } => {
                let res = reservoir.gamma_d + reservoir.gamma_r;
                if !(res > 0.0) {
                    return Err(Error::invalid("dynamic reservoir needs gamma_D + gamma_r > 0"));
                }
                Ok(self.correlation_time()?.max(HBAR_UEV_PS / res))
            }
        }
    }

    /// Polariton lifetime with gain, `ħ/(γ - γ_r·n_r)`, used as `τ_LP` when
    /// fitting `g²(τ)`. The dynamic mode uses the mean reservoir occupation
    /// implied by the rate equations at `n = 0`, `F/(γ_r + γ_D)`.
    pub fn correlation_time(&self) -> Result<f64> {
        let gain = match self.reservoir {
            ReservoirMode::Fixed { gamma_r, n_r } => gamma_r * n_r,
            ReservoirMode::Dynamic { reservoir, .. } => {
                let res = rate_per_ps(reservoir.gamma_d + reservoir.gamma_r);
                if !(res > 0.0) {
                    return Err(Error::invalid("dynamic reservoir needs gamma_D + gamma_r > 0"));
                }
                reservoir.gamma_r * reservoir.f / res
            }
        };
        let width = self.ladder.gamma - gain;
        if !(width > 0.0) {
            return Err(Error::Regime(format!("gamma - gamma_r*n_r = {width} is not positive")));
        }
        Ok(HBAR_UEV_PS / width)
    }

    pub fn validate(&self) -> Result<()> {
        self.ladder.validate()?;
        self.filter.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration must be positive"));
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            return Err(Error::invalid("burn-in must be non-negative"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if self.n_max < 2 {
            return Err(Error::invalid("n_max must be at least 2"));
        }
        if let Some(s) = self.sample_interval {
            if !(s > 0.0) {
                return Err(Error::invalid("sample interval must be positive"));
            }
        }
        match self.reservoir {
            ReservoirMode::Fixed { gamma_r, n_r } => {
                if !(gamma_r >= 0.0 && n_r >= 0.0) {
                    return Err(Error::invalid("gamma_r and n_r must be non-negative"));
                }
            }
            ReservoirMode::Dynamic { reservoir, nr_max } => {
                reservoir.validate(self.ladder.gamma)?;
                if nr_max == 0 {
                    return Err(Error::invalid("nr_max must be positive"));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn transmissions(&self) -> Result<TransmissionTable> {
        let ladder = self.ladder.with_n_max(self.n_max);
        match self.reservoir {
            ReservoirMode::Fixed { .. } => TransmissionTable::new(&ladder, &self.filter, self.n_max, 0, 0.0),
            ReservoirMode::Dynamic { reservoir, nr_max } => {
                TransmissionTable::new(&ladder, &self.filter, self.n_max, nr_max, reservoir.g_r)
            }
        }
    }
}

/// Per-step event probabilities in the canonical order used for event selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepProbabilities {
    pub det: f64,
    pub nd: f64,
    pub pump: f64,
    pub reservoir_pump: f64,
    pub reservoir_decay: f64,
    pub no_jump: f64,
}

impl StepProbabilities {
    pub fn as_array(&self) -> [f64; 5] {
        [self.det, self.nd, self.pump, self.reservoir_pump, self.reservoir_decay]
    }

    /// Probability that some event happens in the step.
    pub fn any_event(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

pub(crate) const EVENT_NAMES: [&str; 5] = ["det", "nd", "pump", "reservoir-pump", "reservoir-decay"];

/// Event probabilities for one step of length `cfg.dt` in state `(n, n_r)`.
/// `transmission` is `P[n]` for the current reservoir shift. The pump is
/// suppressed at `n_max` and the reservoir pump at `nr_max`.
pub fn step_probabilities(
    n: usize,
    n_r: f64,
    cfg: &TrajectoryConfig,
    transmission: f64,
) -> Result<StepProbabilities> {
    if n > cfg.n_max {
        return Err(Error::invalid(format!("n = {n} exceeds n_max = {}", cfg.n_max)));
    }
    if !(0.0..=1.0).contains(&transmission) {
        return Err(Error::invalid("transmission must lie in [0, 1]"));
    }
    let probs = raw_probabilities(n, n_r, cfg, transmission);
    for (p, name) in probs.as_array().iter().zip(EVENT_NAMES) {
        if *p >= MAX_STEP_PROBABILITY {
            return Err(Error::StepSize { event: name, probability: *p });
        }
    }
    Ok(probs)
}

/// Event rates (1/ps) in the canonical order det, nd, pump, reservoir-pump, reservoir-decay.
#[inline]
pub(crate) fn event_rates(n: usize, n_r: f64, cfg: &TrajectoryConfig, transmission: f64) -> [f64; 5] {
    let emit = rate_per_ps(cfg.ladder.gamma) * n as f64;
    let detected = cfg.eta * transmission;
    let (gamma_r, reservoir_pump, reservoir_decay) = match cfg.reservoir {
        ReservoirMode::Fixed { gamma_r, .. } => (gamma_r, 0.0, 0.0),
        ReservoirMode::Dynamic { reservoir, nr_max } => (
            reservoir.gamma_r,
            if (n_r as usize) < nr_max { reservoir.f } else { 0.0 },
            rate_per_ps(reservoir.gamma_d) * n_r,
        ),
    };
    let pump = if n < cfg.n_max { rate_per_ps(gamma_r) * n_r * (n as f64 + 1.0) } else { 0.0 };
    [emit * detected, emit * (1.0 - detected), pump, reservoir_pump, reservoir_decay]
}

#[inline]
pub(crate) fn raw_probabilities(n: usize, n_r: f64, cfg: &TrajectoryConfig, transmission: f64) -> StepProbabilities {
    let [det, nd, pump, reservoir_pump, reservoir_decay] =
        event_rates(n, n_r, cfg, transmission).map(|r| r * cfg.dt);
    let no_jump = 1.0 - (det + nd + pump + reservoir_pump + reservoir_decay);
    StepProbabilities { det, nd, pump, reservoir_pump, reservoir_decay, no_jump }
}
