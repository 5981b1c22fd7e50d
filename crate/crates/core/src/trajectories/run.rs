use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::TransmissionTable;
use crate::numerics::{open_unit, RandomStream};
use crate::trajectories::config::{
    event_rates, raw_probabilities, ReservoirMode, Stepping, TrajectoryConfig, EVENT_NAMES,
    MAX_STEP_PROBABILITY,
};

/// Truncation events per step above which a run carries a warning.
pub const TRUNCATION_WARNING_RATE: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    /// Time steps simulated, burn-in included; zero for the continuous-time oracle.
    pub steps: u64,
    /// Jumps of any kind, burn-in included.
    pub events: u64,
    /// Photons emitted during the recorded window, detected or not.
    pub emitted: u64,
    /// Steps (or ps for the oracle) spent at a ceiling with the pump switched off.
    pub truncation_events: f64,
    /// Recorded time spent at each polariton number, ps.
    pub occupation_time: Vec<f64>,
    pub warning: Option<String>,
}

/// Detection times of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub trajectory_id: u64,
    /// Strictly increasing, within `[0, duration]`, ps.
    pub times: Vec<f64>,
    /// Polariton number sampled every `sample_interval`, if requested.
    pub occupation_trace: Option<Vec<(f64, usize)>>,
    pub meta: RunMeta,
}

/// Occupation bookkeeping over the recorded window.
struct Recorder {
    burn_in: f64,
    duration: f64,
    interval: Option<f64>,
    next_sample: u64,
    trace: Vec<(f64, usize)>,
    occupation: Vec<f64>,
}

impl Recorder {
    fn new(cfg: &TrajectoryConfig) -> Self {
        Self {
            burn_in: cfg.burn_in,
            duration: cfg.duration,
            interval: cfg.sample_interval,
            next_sample: 0,
            trace: Vec::new(),
            occupation: vec![0.0; cfg.n_max + 1],
        }
    }

    /// Samples left at the very end of the window take the final state.
    fn flush(&mut self, n: usize) {
        if let Some(step) = self.interval {
            while self.next_sample as f64 * step <= self.duration {
                self.trace.push((self.next_sample as f64 * step, n));
                self.next_sample += 1;
            }
        }
    }

    /// State `n` held over absolute times `[start, end)`.
    fn hold(&mut self, n: usize, start: f64, end: f64) {
        let lo = (start - self.burn_in).max(0.0);
        let hi = (end - self.burn_in).min(self.duration);
        if hi <= lo {
            return;
        }
        self.occupation[n] += hi - lo;
        if let Some(step) = self.interval {
            loop {
                let t = self.next_sample as f64 * step;
                if t >= hi || t > self.duration {
                    break;
                }
                if t >= lo {
                    self.trace.push((t, n));
                }
                self.next_sample += 1;
            }
        }
    }
}

struct State {
    n: usize,
    nr: usize,
    n_r: f64,
}

impl State {
    fn initial(cfg: &TrajectoryConfig) -> Self {
        match cfg.reservoir {
            ReservoirMode::Fixed { n_r, .. } => Self { n: 0, nr: 0, n_r },
            ReservoirMode::Dynamic { .. } => Self { n: 0, nr: 0, n_r: 0.0 },
        }
    }

    fn transmission(&self, table: &TransmissionTable) -> f64 {
        table.get(self.n, self.nr)
    }

    /// Applies event `k` in canonical order; returns true for a detected photon.
    fn apply(&mut self, k: usize, dynamic: bool) -> bool {
        match k {
            0 | 1 => self.n -= 1,
            2 => {
                self.n += 1;
                if dynamic {
                    self.nr -= 1;
                }
            }
            3 => self.nr += 1,
            4 => self.nr -= 1,
            _ => unreachable!(),
        }
        if dynamic {
            self.n_r = self.nr as f64;
        }
        k == 0
    }

    fn at_ceiling(&self, cfg: &TrajectoryConfig) -> bool {
        let pump_blocked = self.n == cfg.n_max && self.n_r > 0.0;
        let reservoir_blocked = match cfg.reservoir {
            ReservoirMode::Dynamic { reservoir, nr_max } => self.nr == nr_max && reservoir.f > 0.0,
            ReservoirMode::Fixed { .. } => false,
        };
        pump_blocked || reservoir_blocked
    }
}

fn select(probs: &[f64; 5], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            acc += p;
            last = k;
            if target < acc {
                return k;
            }
        }
    }
    last
}

fn checked(probs: [f64; 5]) -> Result<[f64; 5]> {
    for (p, name) in probs.iter().zip(EVENT_NAMES) {
        if *p >= MAX_STEP_PROBABILITY {
            return Err(Error::StepSize { event: name, probability: *p });
        }
    }
    Ok(probs)
}

fn finish(
    cfg: &TrajectoryConfig,
    stream: RandomStream,
    times: Vec<f64>,
    mut recorder: Recorder,
    final_n: usize,
    mut meta: RunMeta,
) -> ClickRecord {
    recorder.flush(final_n);
    meta.occupation_time = recorder.occupation;
    if meta.steps > 0 && meta.truncation_events > TRUNCATION_WARNING_RATE * meta.steps as f64 {
        meta.warning = Some(format!(
            "truncation ceiling hit in {} of {} steps; raise n_max or nr_max",
            meta.truncation_events, meta.steps
        ));
    }
    ClickRecord {
        trajectory_id: stream.stream_id,
        times,
        occupation_trace: cfg.sample_interval.map(|_| recorder.trace),
        meta,
    }
}

/// Simulates one trajectory with at most one jump per `dt`. Deterministic in
/// `(cfg, stream)`. Steps are indexed from the start of burn-in; a jump drawn in
/// step `s` is stamped at the end of the step, `(s+1)·dt - burn_in`.
pub fn run_trajectory(cfg: &TrajectoryConfig, stream: RandomStream) -> Result<ClickRecord> {
    cfg.validate()?;
    let table = cfg.transmissions()?;
    run_with_table(cfg, &table, stream)
}

pub(crate) fn run_with_table(
    cfg: &TrajectoryConfig,
    table: &TransmissionTable,
    stream: RandomStream,
) -> Result<ClickRecord> {
    let mut rng = stream.rng();
    let dynamic = matches!(cfg.reservoir, ReservoirMode::Dynamic { .. });
    let burn_steps = (cfg.burn_in / cfg.dt).ceil() as u64;
    let total = burn_steps + (cfg.duration / cfg.dt).floor() as u64;
    let time_of = |s: u64| s as f64 * cfg.dt;
    let mut state = State::initial(cfg);
    let mut recorder = Recorder::new(cfg);
    recorder.burn_in = time_of(burn_steps);
    let mut meta = RunMeta::default();
    let mut times = Vec::new();
    let mut s: u64 = 0;
    while s < total {
        let p = raw_probabilities(state.n, state.n_r, cfg, state.transmission(table));
        let probs = checked(p.as_array())?;
        let q = p.any_event();
        let ceiling = state.at_ceiling(cfg);
        // Steps [s, end) are spent in the current state; the last one may carry a jump.
        let (end, jump) = match cfg.stepping {
            Stepping::PerStep => {
                let u: f64 = rng.random();
                (s + 1, (u < q).then_some(u))
            }
            Stepping::Skip => {
                if q <= 0.0 {
                    (total, None)
                } else {
                    let k = geometric(&mut rng, q);
                    match s.checked_add(k).filter(|&e| e < total) {
                        Some(e) => (e + 1, Some(q * open_unit(&mut rng))),
                        None => (total, None),
                    }
                }
            }
        };
        recorder.hold(state.n, time_of(s), time_of(end));
        if ceiling {
            meta.truncation_events += (end - s) as f64;
        }
        if let Some(u) = jump {
            let k = select(&probs, u);
            meta.events += 1;
            let recorded = end > burn_steps;
            if recorded && k <= 1 {
                meta.emitted += 1;
            }
            if state.apply(k, dynamic) && recorded {
                times.push(time_of(end - burn_steps));
            }
        }
        s = end;
    }
    meta.steps = total;
    Ok(finish(cfg, stream, times, recorder, state.n, meta))
}

/// Number of failures before the first success, success probability `q`.
fn geometric(rng: &mut ChaCha8Rng, q: f64) -> u64 {
    let k = (open_unit(rng).ln() / (-q).ln_1p()).floor();
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}

/// Exact continuous-time simulation of the same jump process (exponential
/// waiting times, no step). Used to cross-check the fixed-step scheme.
pub fn gillespie_oracle(cfg: &TrajectoryConfig, stream: RandomStream) -> Result<ClickRecord> {
    cfg.validate()?;
    let table = cfg.transmissions()?;
    let mut rng = stream.rng();
    let dynamic = matches!(cfg.reservoir, ReservoirMode::Dynamic { .. });
    let end_time = cfg.burn_in + cfg.duration;
    let mut state = State::initial(cfg);
    let mut recorder = Recorder::new(cfg);
    let mut meta = RunMeta::default();
    let mut times = Vec::new();
    let mut t = 0.0;
    while t < end_time {
        let rates = event_rates(state.n, state.n_r, cfg, state.transmission(&table));
        let total: f64 = rates.iter().sum();
        let next = if total > 0.0 { t - open_unit(&mut rng).ln() / total } else { f64::INFINITY };
        let stop = next.min(end_time);
        recorder.hold(state.n, t, stop);
        if state.at_ceiling(cfg) {
            meta.truncation_events += (stop - cfg.burn_in).max(0.0) - (t - cfg.burn_in).max(0.0);
        }
        if next >= end_time {
            break;
        }
        let k = select(&rates, total * open_unit(&mut rng));
        meta.events += 1;
        let recorded = next >= cfg.burn_in;
        if recorded && k <= 1 {
            meta.emitted += 1;
        }
        if state.apply(k, dynamic) && recorded {
            times.push(next - cfg.burn_in);
        }
        t = next;
    }
    Ok(finish(cfg, stream, times, recorder, state.n, meta))
}

/// Runs trajectories `first_id..first_id+count`, trajectory `i` on stream `(cfg.seed, i)`.
/// The result is ordered by trajectory id whatever the schedule.
pub fn run_ensemble(cfg: &TrajectoryConfig, first_id: u64, count: usize) -> Result<Vec<ClickRecord>> {
    cfg.validate()?;
    let table = cfg.transmissions()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| run_with_table(cfg, &table, RandomStream::new(cfg.seed, first_id + i)))
        .collect()
}

/// Homogeneous Poisson clicks at `rate` (1/ps) over `[0, duration]`, the
/// uncorrelated reference for [`crate::trajectories::g2_from_histograms`].
pub fn poisson_clicks(rate: f64, duration: f64, stream: RandomStream) -> Result<ClickRecord> {
    if !(rate > 0.0 && rate.is_finite()) || !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("Poisson rate and duration must be positive"));
    }
    let mut rng = stream.rng();
    let mut t = 0.0;
    let mut times = Vec::new();
    loop {
        t -= open_unit(&mut rng).ln() / rate;
        if t > duration {
            break;
        }
        times.push(t);
    }
    let meta = RunMeta { emitted: times.len() as u64, ..RunMeta::default() };
    Ok(ClickRecord { trajectory_id: stream.stream_id, times, occupation_trace: None, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterSpec;
    use crate::ladder::LadderModel;
    use crate::statistics::{thermal_occupation, ReservoirModel};
    use crate::units::rate_per_ps;

    fn fixed(x: f64, n_max: usize, duration: f64) -> TrajectoryConfig {
        let ladder = LadderModel::new(0.0, 2.7, 0.0, 66.6, n_max).unwrap();
        let filter = FilterSpec::new(20.0, 23.0).unwrap();
        let reservoir = ReservoirMode::Fixed { gamma_r: 1.88, n_r: x * 66.6 / 1.88 };
        TrajectoryConfig::new(ladder, filter, reservoir, 0.8, duration, 11).unwrap()
    }

    #[test]
    fn no_gain_no_clicks() {
        let mut cfg = fixed(0.0, 12, 5000.0);
        cfg.reservoir = ReservoirMode::Fixed { gamma_r: 0.0, n_r: 1.0 };
        for stepping in [Stepping::PerStep, Stepping::Skip] {
            cfg.stepping = stepping;
            let r = run_trajectory(&cfg, RandomStream::new(1, 0)).unwrap();
            assert!(r.times.is_empty());
            assert_eq!(r.meta.events, 0);
        }
    }

    #[test]
    fn replay_is_identical() {
        for stepping in [Stepping::PerStep, Stepping::Skip] {
            let mut cfg = fixed(0.2, 12, 20_000.0);
            cfg.stepping = stepping;
            let a = run_trajectory(&cfg, RandomStream::new(5, 3)).unwrap();
            let b = run_trajectory(&cfg, RandomStream::new(5, 3)).unwrap();
            assert_eq!(a, b);
            assert!(!a.times.is_empty());
            let c = run_trajectory(&cfg, RandomStream::new(5, 4)).unwrap();
            assert_ne!(a.times, c.times);
        }
        let cfg = fixed(0.2, 12, 20_000.0);
        let a = gillespie_oracle(&cfg, RandomStream::new(5, 3)).unwrap();
        assert_eq!(a, gillespie_oracle(&cfg, RandomStream::new(5, 3)).unwrap());
    }

    #[test]
    fn clicks_sorted_and_in_window() {
        for stepping in [Stepping::PerStep, Stepping::Skip] {
            let mut cfg = fixed(0.3, 20, 30_000.0);
            cfg.stepping = stepping;
            let r = run_trajectory(&cfg, RandomStream::new(9, 0)).unwrap();
            assert!(r.times.windows(2).all(|w| w[1] > w[0]));
            assert!(r.times.iter().all(|&t| t > 0.0 && t <= cfg.duration));
            let total: f64 = r.meta.occupation_time.iter().sum();
            assert!((total - cfg.duration).abs() < 2.0 * cfg.dt, "{total}");
        }
    }

    #[test]
    fn ceiling_is_enforced_and_reported() {
        let cfg = fixed(0.6, 3, 20_000.0);
        let r = run_trajectory(&cfg, RandomStream::new(2, 0)).unwrap();
        assert!(r.meta.occupation_time.len() == 4);
        assert!(r.meta.truncation_events > 0.0);
        assert!(r.meta.warning.is_some());
        let ok = run_trajectory(&fixed(0.05, 12, 20_000.0), RandomStream::new(2, 0)).unwrap();
        assert!(ok.meta.warning.is_none());
    }

    #[test]
    fn occupation_trace_sampled_on_grid() {
        let mut cfg = fixed(0.3, 20, 1000.0);
        cfg.sample_interval = Some(10.0);
        let r = run_trajectory(&cfg, RandomStream::new(3, 0)).unwrap();
        let trace = r.occupation_trace.unwrap();
        assert_eq!(trace.len(), 101);
        for (k, (t, _)) in trace.iter().enumerate() {
            assert_eq!(*t, 10.0 * k as f64);
        }
    }

    fn mean_rate(records: &[ClickRecord], duration: f64) -> (f64, f64) {
        let counts: Vec<f64> = records.iter().map(|r| r.times.len() as f64).collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean / duration, (var / n).sqrt() / duration)
    }

    #[test]
    fn stepping_modes_and_oracle_agree_on_click_rate() {
        let mut cfg = fixed(0.2, 16, 20_000.0);
        let n = 200;
        let skip = run_ensemble(&cfg, 0, n).unwrap();
        cfg.stepping = Stepping::PerStep;
        let per = run_ensemble(&cfg, 1000, n).unwrap();
        let oracle: Vec<_> = (0..n as u64).map(|i| gillespie_oracle(&cfg, RandomStream::new(7, i)).unwrap()).collect();
        let total: usize = oracle.iter().map(|r| r.times.len()).sum();
        assert!(total > 10_000, "{total}");
        let (a, ea) = mean_rate(&skip, cfg.duration);
        let (b, eb) = mean_rate(&per, cfg.duration);
        let (c, ec) = mean_rate(&oracle, cfg.duration);
        assert!((a - c).abs() < 3.0 * (ea * ea + ec * ec).sqrt(), "{a} {c}");
        assert!((b - c).abs() < 3.0 * (eb * eb + ec * ec).sqrt(), "{b} {c}");
        // Expected detection rate from the stationary distribution.
        let dist = thermal_occupation(0.2, 16).unwrap();
        let table = cfg.transmissions().unwrap();
        let expected: f64 = (1..=16)
            .map(|k| rate_per_ps(66.6) * k as f64 * 0.8 * table.get(k, 0) * dist.p[k])
            .sum();
        assert!((c - expected).abs() < 3.0 * ec, "{c} {expected}");
    }

    #[test]
    fn oracle_occupation_is_geometric() {
        let cfg = fixed(0.3, 30, 2_000_000.0);
        let r = gillespie_oracle(&cfg, RandomStream::new(1, 0)).unwrap();
        let dist = thermal_occupation(0.3, 30).unwrap();
        for k in 0..4 {
            let frac = r.meta.occupation_time[k] / cfg.duration;
            assert!((frac - dist.p[k]).abs() < 0.02 * dist.p[k].max(0.05), "{k}: {frac} vs {}", dist.p[k]);
        }
    }

    #[test]
    fn dynamic_reservoir_matches_joint_means() {
        let ladder = LadderModel::new(0.0, 2.7, 0.0, 66.6, 12).unwrap();
        let filter = FilterSpec::new(0.0, 23.0).unwrap();
        let res = ReservoirModel { f: 0.03, gamma_r: 1.88, gamma_d: 1.88, g_r: 10.0 };
        let cfg = TrajectoryConfig::new(ladder, filter, ReservoirMode::Dynamic { reservoir: res, nr_max: 30 }, 1.0, 1_000_000.0, 4).unwrap();
        let r = run_trajectory(&cfg, RandomStream::new(4, 0)).unwrap();
        let mean_n: f64 = r.meta.occupation_time.iter().enumerate().map(|(k, t)| k as f64 * t).sum::<f64>() / cfg.duration;
        let joint = crate::statistics::joint_steady_state(&res, 66.6, 12, 30).unwrap().stats();
        assert!((mean_n / joint.mean_n - 1.0).abs() < 0.1, "{mean_n} {}", joint.mean_n);
    }

    #[test]
    fn ensemble_order_is_schedule_independent() {
        let cfg = fixed(0.2, 12, 5000.0);
        let all = run_ensemble(&cfg, 10, 8).unwrap();
        let ids: Vec<u64> = all.iter().map(|r| r.trajectory_id).collect();
        assert_eq!(ids, (10..18).collect::<Vec<_>>());
        let single = run_trajectory(&cfg, RandomStream::new(cfg.seed, 13)).unwrap();
        assert_eq!(all[3], single);
    }
}
