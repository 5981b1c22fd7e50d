//! Coincidence-data pipeline on tabular files, or on generated data when no
//! inputs are given.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;

use qcascade::analysis::{analyze, synthetic_snapshots, AnalysisOptions, CoincidenceData, Metadata, SyntheticPeak};
use qcascade::numerics::RandomStream;
use qcascade::presets::PEAK_SIGMA_PS;

use super::{Context, Outcome, Status};
use crate::error::{CliError, CliResult};
use crate::output::Table;

pub const PRESETS: [(&str, &str); 3] = [
    ("synthetic", "four Poisson datasets of a thermal source, g2(0) = 2"),
    ("background", "flat background only, zero delay and width given"),
    ("convergence", "cumulative snapshots of one acquisition"),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    /// Two-column files `tau_ps, counts`. When empty, `generate` supplies the data.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    pub options: AnalysisOptions,
    #[serde(default)]
    pub generate: Option<Generate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generate {
    pub peak: SyntheticPeak,
    /// Independent datasets, or cumulative snapshots when `options.snapshots` is set.
    pub count: usize,
    /// Use the expected counts instead of Poisson draws.
    #[serde(default)]
    pub noise_free: bool,
    /// Acquisition time per snapshot, s.
    #[serde(default = "default_interval")]
    pub interval_s: f64,
}

fn default_interval() -> f64 {
    60.0
}

fn peak(g2_zero: f64, background: f64) -> SyntheticPeak {
    SyntheticPeak { t0_ps: 0.0, sigma_ps: PEAK_SIGMA_PS, background, g2_zero, bin_ps: 4.0, half_span_ps: 2048.0 }
}

pub fn preset(name: &str) -> CliResult<Option<Section>> {
    let generate = |peak, count| Some(Generate { peak, count, noise_free: false, interval_s: default_interval() });
    Ok(Some(match name {
        "synthetic" => Section { inputs: vec![], options: AnalysisOptions::default(), generate: generate(peak(2.0, 20.0), 4) },
        "background" => Section {
            inputs: vec![],
            options: AnalysisOptions { t0_ps: Some(0.0), sigma_ps: Some(PEAK_SIGMA_PS), ..AnalysisOptions::default() },
            generate: generate(peak(1.0, 20.0), 1),
        },
        "convergence" => Section {
            inputs: vec![],
            options: AnalysisOptions { snapshots: true, ..AnalysisOptions::default() },
            generate: generate(peak(1.77, 1.0), 40),
        },
        _ => return Ok(None),
    }))
}

fn load(path: &PathBuf) -> CliResult<CoincidenceData> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let data = CoincidenceData::from_text(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    Ok(data.with_metadata(Metadata { label, ..Metadata::default() }))
}

fn generated(g: &Generate, snapshots: bool, seed: u64) -> CliResult<Vec<CoincidenceData>> {
    if g.count == 0 {
        return Err(CliError::Config("analyze.generate.count: need at least one dataset".into()));
    }
    if snapshots {
        return Ok(synthetic_snapshots(&vec![g.peak; g.count], g.interval_s, seed)?);
    }
    (0..g.count)
        .map(|k| {
            let data = if g.noise_free { g.peak.expected()? } else { g.peak.sample(&mut RandomStream::new(seed, k as u64).rng())? };
            let meta = Metadata { label: Some(format!("generated {k}")), ..Metadata::default() };
            Ok(data.with_metadata(meta))
        })
        .collect()
}

pub fn run(s: &Section, ctx: &mut Context) -> CliResult<Outcome> {
    let datasets = if !s.inputs.is_empty() {
        s.inputs.iter().map(load).collect::<CliResult<Vec<_>>>()?
    } else if let Some(g) = &s.generate {
        let data = generated(g, s.options.snapshots, ctx.seed)?;
        for (k, d) in data.iter().enumerate() {
            ctx.writer.file(&format!("input_{k}.csv"), &d.to_csv())?;
        }
        data
    } else {
        return Err(CliError::Config("analyze: no inputs and no `generate` block".into()));
    };
    let output = analyze(&datasets, &s.options)?;
    let report = &output.report;
    ctx.writer.document("report.json", serde_json::to_value(report).expect("report serializes"))?;
    let filtered = if s.options.snapshots {
        output.filtered.last().expect("non-empty").clone()
    } else {
        CoincidenceData::sum(&output.filtered)?
    };
    let mut table = Table::new(&["tau_ps", "counts"]);
    for (t, c) in filtered.tau().iter().zip(filtered.counts()) {
        table.push(vec![(*t).into(), (*c).into()]);
    }
    ctx.writer.table("filtered_sum", &table)?;
    if let Some(track) = &report.convergence {
        let mut table = Table::new(&["acquisition_time_s", "g2_zero", "err", "y0"]);
        for p in &track.points {
            table.push(vec![p.acquisition_time.into(), p.g2_zero.into(), p.err.into(), p.y0.into()]);
        }
        ctx.writer.table("convergence", &table)?;
    }
    let datasets: Vec<_> = report
        .datasets
        .iter()
        .map(|d| json!({"label": d.label, "g2_zero": d.estimate.g2_zero, "err": d.estimate.err, "deconvolved": d.deconvolved.g2_zero}))
        .collect();
    let mut out = Outcome::ok(json!({
        "g2_zero": report.g2_zero,
        "err": report.err,
        "t0_ps": report.t0_ps,
        "sigma_ps": report.sigma_ps,
        "cutoff_ghz": report.window.cutoff_ghz,
        "convergence_flag": report.convergence_flag,
        "datasets": datasets,
    }));
    if report.convergence_flag == Some(false) {
        out.status = Status::NotConverged("g2(0) has not settled over the last snapshots".into());
    }
    if let Some(track) = &report.convergence {
        if !track.background_reached {
            out.warnings.push("final background below 20 coincidences per bin".into());
        }
    }
    Ok(out)
}
