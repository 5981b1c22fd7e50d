//! Trajectory ensembles: `g²(τ)` histograms, occupation statistics and the
//! Poisson null test.

use serde::{Deserialize, Serialize};
use serde_json::json;

use qcascade::filter::{transmission_vector, FilterSpec};
use qcascade::ladder::LadderModel;
use qcascade::numerics::RandomStream;
use qcascade::presets::{self, FILTER_FWHM, GAMMA_LP};
use qcascade::statistics::{g2_zero_analytic, thermal_occupation};
use qcascade::trajectories::{
    clicks_to_text, coincidence_histograms, ensemble_histograms, g2_from_histograms, poisson_clicks, run_ensemble,
    CoincidencePair, ReservoirMode, Stepping, TrajectoryConfig,
};

use super::{Context, Outcome};
use crate::error::{CliError, CliResult};
use crate::output::Table;

pub const PRESETS: [(&str, &str); 3] = [
    ("figS12", "Monte Carlo g2(0) at n_r = 5, g = 0.1 gamma, gamma_F = 0.35 gamma"),
    ("figS11", "occupation histogram of the non-interacting mode at A/C = 0.3"),
    ("poisson", "uncorrelated clicks, g2 = 1"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    G2,
    Occupation,
    Poisson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub kind: Kind,
    pub ladder: LadderModel,
    /// Filter center relative to `omega_LP`, μeV.
    pub filter_detuning: f64,
    pub filter_fwhm: f64,
    pub reservoir: ReservoirMode,
    pub eta: f64,
    pub trajectories: usize,
    pub duration_ps: f64,
    /// Overrides the automatic step.
    #[serde(default)]
    pub dt_ps: Option<f64>,
    #[serde(default)]
    pub stepping: Stepping,
    pub tau_max_ps: f64,
    pub bin_ps: f64,
    /// Occupation sampling interval in correlation times.
    pub sample_every_tau_c: f64,
    /// Click rate of the Poisson source, 1/ps.
    pub rate_per_ps: f64,
    /// Also write every click as `trajectory_id<TAB>time_ps`.
    #[serde(default)]
    pub write_clicks: bool,
}

fn base(kind: Kind) -> CliResult<Section> {
    Ok(Section {
        kind,
        ladder: LadderModel::new(0.0, 0.1 * GAMMA_LP, 0.0, GAMMA_LP, 14)?,
        filter_detuning: 0.0,
        filter_fwhm: 0.35 * GAMMA_LP,
        reservoir: ReservoirMode::Fixed { gamma_r: presets::reservoir_gamma_r(), n_r: 5.0 },
        eta: 1.0,
        trajectories: 4000,
        duration_ps: 5.0e5,
        dt_ps: None,
        stepping: Stepping::Skip,
        tau_max_ps: 100.0,
        bin_ps: 1.0,
        sample_every_tau_c: 5.0,
        rate_per_ps: 0.01,
        write_clicks: false,
    })
}

pub fn preset(name: &str) -> CliResult<Option<Section>> {
    Ok(Some(match name {
        "figS12" => base(Kind::G2)?,
        "figS11" => Section {
            ladder: LadderModel::new(0.0, 0.0, 0.0, GAMMA_LP, 40)?,
            filter_fwhm: FILTER_FWHM,
            reservoir: ReservoirMode::Fixed { gamma_r: 0.3 * GAMMA_LP, n_r: 1.0 },
            trajectories: 1,
            duration_ps: 2.0e6,
            ..base(Kind::Occupation)?
        },
        "poisson" => Section { trajectories: 200, duration_ps: 1.0e5, ..base(Kind::Poisson)? },
        _ => return Ok(None),
    }))
}

fn trajectory_config(s: &Section, seed: u64) -> CliResult<TrajectoryConfig> {
    s.ladder.validate()?;
    let filter = FilterSpec::new(s.ladder.omega_lp + s.filter_detuning, s.filter_fwhm)?;
    let mut cfg = TrajectoryConfig::new(s.ladder, filter, s.reservoir, s.eta, s.duration_ps, seed)?;
    if let Some(dt) = s.dt_ps {
        cfg.dt = dt;
    }
    cfg.stepping = s.stepping;
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(s: &Section, ctx: &mut Context) -> CliResult<Outcome> {
    if s.trajectories == 0 {
        return Err(CliError::Config("simulate.trajectories: need at least one".into()));
    }
    match s.kind {
        Kind::G2 => g2(s, ctx),
        Kind::Occupation => occupation(s, ctx),
        Kind::Poisson => poisson(s, ctx),
    }
}

fn histogram_table(pair: &CoincidencePair) -> Table {
    let mut table = Table::new(&["tau_ps", "h_c", "h_u", "g2"]);
    for (i, (t, g)) in pair.tau().into_iter().zip(pair.ratio()).enumerate() {
        table.push(vec![t.into(), pair.h_c[i].into(), pair.h_u[i].into(), g.into()]);
    }
    table
}

fn g2(s: &Section, ctx: &mut Context) -> CliResult<Outcome> {
    if s.trajectories % 2 != 0 {
        return Err(CliError::Config("simulate.trajectories: must be even for the pairwise h_u".into()));
    }
    let cfg = trajectory_config(s, ctx.seed)?;
    let (pair, meta) = if s.write_clicks {
        let records = run_ensemble(&cfg, 0, s.trajectories)?;
        ctx.writer.file("clicks.tsv", &clicks_to_text(&records))?;
        let pair = coincidence_histograms(&records, s.tau_max_ps, s.bin_ps)?;
        let mut meta = records[0].meta.clone();
        meta.steps = records.iter().map(|r| r.meta.steps).sum();
        meta.emitted = records.iter().map(|r| r.meta.emitted).sum();
        meta.truncation_events = records.iter().map(|r| r.meta.truncation_events).sum();
        meta.warning = records.iter().find_map(|r| r.meta.warning.clone());
        (pair, meta)
    } else {
        ensemble_histograms(&cfg, 0, s.trajectories, s.tau_max_ps, s.bin_ps)?
    };
    ctx.writer.table("histogram", &histogram_table(&pair))?;
    let tau_lp = cfg.correlation_time()?;
    let est = g2_from_histograms(&pair, tau_lp)?;
    let analytic = match s.reservoir {
        ReservoirMode::Fixed { gamma_r, n_r } => {
            let dist = thermal_occupation(gamma_r * n_r / s.ladder.gamma, s.ladder.n_max)?;
            Some(g2_zero_analytic(&dist, &transmission_vector(&s.ladder, &cfg.filter, 0.0)?)?)
        }
        ReservoirMode::Dynamic { .. } => None,
    };
    let mut out = Outcome::ok(json!({
        "g2_zero": est.g2_zero,
        "stderr": est.stderr,
        "reduced_chi_square": est.reduced_chi_square,
        "tau_lp_ps": tau_lp,
        "analytic_g2_zero": analytic,
        "z": analytic.map(|a| (est.g2_zero - a) / est.stderr),
        "clicks": pair.h_c.iter().sum::<u64>(),
        "steps": meta.steps,
        "dt_ps": cfg.dt,
    }));
    if let Some(w) = meta.warning {
        out.warnings.push(w);
    }
    Ok(out)
}

fn occupation(s: &Section, ctx: &mut Context) -> CliResult<Outcome> {
    let mut cfg = trajectory_config(s, ctx.seed)?;
    cfg.sample_interval = Some(s.sample_every_tau_c * cfg.correlation_time()?);
    let records = run_ensemble(&cfg, 0, s.trajectories)?;
    let mut counts = vec![0u64; cfg.n_max + 1];
    let mut time = vec![0.0; cfg.n_max + 1];
    for r in &records {
        for &(_, n) in r.occupation_trace.as_deref().unwrap_or_default() {
            counts[n] += 1;
        }
        for (t, v) in time.iter_mut().zip(&r.meta.occupation_time) {
            *t += v;
        }
    }
    let samples: u64 = counts.iter().sum();
    let total_time: f64 = time.iter().sum();
    let thermal = match s.reservoir {
        ReservoirMode::Fixed { gamma_r, n_r } => Some(thermal_occupation(gamma_r * n_r / s.ladder.gamma, cfg.n_max)?),
        ReservoirMode::Dynamic { .. } => None,
    };
    let mut table = Table::new(&["n", "samples", "sample_fraction", "time_fraction", "black_body"]);
    for n in 0..=cfg.n_max {
        let expected = thermal.as_ref().map_or(f64::NAN, |d| d.p.get(n).copied().unwrap_or(0.0));
        table.push(vec![
            n.into(),
            counts[n].into(),
            (counts[n] as f64 / samples.max(1) as f64).into(),
            (time[n] / total_time).into(),
            expected.into(),
        ]);
    }
    ctx.writer.table("occupation", &table)?;
    let mut trace = Table::new(&["t_ps", "n"]);
    for &(t, n) in records[0].occupation_trace.as_deref().unwrap_or_default().iter().take(20_000) {
        trace.push(vec![t.into(), n.into()]);
    }
    ctx.writer.table("trace", &trace)?;
    let mean_n = time.iter().enumerate().map(|(n, t)| n as f64 * t).sum::<f64>() / total_time;
    let mut out = Outcome::ok(json!({
        "samples": samples,
        "mean_n": mean_n,
        "thermal_mean_n": thermal.as_ref().map(|d| d.p.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>()),
        "steps": records.iter().map(|r| r.meta.steps).sum::<u64>(),
        "sample_interval_ps": cfg.sample_interval,
    }));
    out.warnings.extend(records.iter().filter_map(|r| r.meta.warning.clone()).take(1));
    Ok(out)
}

fn poisson(s: &Section, ctx: &mut Context) -> CliResult<Outcome> {
    if s.trajectories % 2 != 0 {
        return Err(CliError::Config("simulate.trajectories: must be even for the pairwise h_u".into()));
    }
    let records = (0..s.trajectories as u64)
        .map(|id| poisson_clicks(s.rate_per_ps, s.duration_ps, RandomStream::new(ctx.seed, id)))
        .collect::<qcascade::Result<Vec<_>>>()?;
    if s.write_clicks {
        ctx.writer.file("clicks.tsv", &clicks_to_text(&records))?;
    }
    let pair = coincidence_histograms(&records, s.tau_max_ps, s.bin_ps)?;
    ctx.writer.table("histogram", &histogram_table(&pair))?;
    let half = pair.half_bins;
    let (c, u): (u64, u64) = (half + 1..pair.h_c.len()).fold((0, 0), |(c, u), i| (c + pair.h_c[i], u + pair.h_u[i]));
    if u == 0 {
        return Err(qcascade::Error::Degenerate("no uncorrelated pairs at positive delay".into()).into());
    }
    let g2 = c as f64 / u as f64;
    let stderr = g2 * (1.0 / c.max(1) as f64 + 1.0 / u as f64).sqrt();
    Ok(Outcome::ok(json!({
        "g2_mean_positive_delay": g2,
        "stderr": stderr,
        "z_vs_one": (g2 - 1.0) / stderr,
        "correlated_pairs": c,
        "uncorrelated_pairs": u,
    })))
}
