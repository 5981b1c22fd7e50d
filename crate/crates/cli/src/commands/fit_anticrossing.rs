//! Global coupled-oscillator fit to lower and upper branch energies.

use std::path::PathBuf;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use qcascade::ladder::{fit_anticrossing, AnticrossingPoint, Branch, CoupledOscillator, ANTICROSSING_PARAMS};
use qcascade::numerics::RandomStream;
use qcascade::presets;

use super::{Context, Outcome, Status};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

pub const PRESETS: [(&str, &str); 2] = [
    ("synthetic", "both branches from the device parameters with 50 ueV noise, q and R fixed"),
    ("degenerate", "lower branch only with every parameter free"),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    /// CSV `voltage, branch, energy[, sigma]` with energies in meV. When absent,
    /// `generate` supplies the data.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub generate: Option<Generate>,
    pub initial: CoupledOscillator,
    /// Names from `E_X, Omega, L0, R, phi, q, s1, s2` held at their initial values.
    #[serde(default)]
    pub fixed: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generate {
    pub truth: CoupledOscillator,
    pub voltage_from: f64,
    pub voltage_to: f64,
    pub voltage_step: f64,
    pub branches: Vec<Branch>,
    /// Gaussian noise on each energy, meV.
    pub noise_mev: f64,
}

pub fn preset(name: &str) -> CliResult<Option<Section>> {
    let truth = presets::coupled_oscillator();
    let initial = CoupledOscillator { e_x: 1452.0, omega: 1.4, l0: 20.31, phi: 6.2, s1: 2.0e-3, s2: -1.0e-6, ..truth };
    let generate = |branches| Generate {
        truth,
        voltage_from: 0.0,
        voltage_to: 76.0,
        voltage_step: 0.5,
        branches,
        noise_mev: 0.05,
    };
    Ok(Some(match name {
        "synthetic" => Section {
            data: None,
            generate: Some(generate(vec![Branch::Lower, Branch::Upper])),
            initial,
            fixed: vec!["R".into(), "q".into()],
        },
        "degenerate" => Section { data: None, generate: Some(generate(vec![Branch::Lower])), initial, fixed: vec![] },
        _ => return Ok(None),
    }))
}

#[derive(Debug, Deserialize)]
struct Row {
    voltage: f64,
    branch: Branch,
    energy: f64,
    #[serde(default)]
    sigma: Option<f64>,
}

fn read(path: &PathBuf) -> CliResult<Vec<AnticrossingPoint>> {
    let bad = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(bad)?;
    reader
        .deserialize::<Row>()
        .map(|r| {
            let r = r.map_err(bad)?;
            Ok(AnticrossingPoint { voltage: r.voltage, branch: r.branch, energy: r.energy, sigma: r.sigma })
        })
        .collect()
}

fn generate(g: &Generate, seed: u64) -> CliResult<Vec<AnticrossingPoint>> {
    if !(g.voltage_step > 0.0) || g.voltage_to < g.voltage_from {
        return Err(CliError::Config("fit_anticrossing.generate: need voltage_step > 0 and voltage_to >= voltage_from".into()));
    }
    let noise = Normal::new(0.0, g.noise_mev)
        .map_err(|e| CliError::Config(format!("fit_anticrossing.generate.noise_mev: {e}")))?;
    let mut rng = RandomStream::new(seed, 0).rng();
    let steps = ((g.voltage_to - g.voltage_from) / g.voltage_step + 1e-9).floor() as usize;
    let sigma = (g.noise_mev > 0.0).then_some(g.noise_mev);
    let mut data = Vec::new();
    for i in 0..=steps {
        let v = g.voltage_from + i as f64 * g.voltage_step;
        let p = g.truth.polariton(v)?;
        for &branch in &g.branches {
            let e = if branch == Branch::Lower { p.e_lp } else { p.e_up };
            data.push(AnticrossingPoint { voltage: v, branch, energy: e + noise.sample(&mut rng), sigma });
        }
    }
    Ok(data)
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Lower => "lower",
        Branch::Upper => "upper",
    }
}

pub fn run(s: &Section, ctx: &mut Context) -> CliResult<Outcome> {
    let mut fixed = [false; 8];
    for name in &s.fixed {
        let j = ANTICROSSING_PARAMS
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| CliError::Config(format!("fit_anticrossing.fixed: unknown parameter `{name}`")))?;
        fixed[j] = true;
    }
    let data = match (&s.data, &s.generate) {
        (Some(path), _) => read(path)?,
        (None, Some(g)) => {
            let data = generate(g, ctx.seed)?;
            let mut table = Table::new(&["voltage", "branch", "energy", "sigma"]);
            for d in &data {
                table.push(vec![d.voltage.into(), branch_name(d.branch).into(), d.energy.into(), d.sigma.unwrap_or(f64::NAN).into()]);
            }
            ctx.writer.table("data", &table)?;
            data
        }
        (None, None) => return Err(CliError::Config("fit_anticrossing: no `data` file and no `generate` block".into())),
    };
    let truth = s.generate.as_ref().map(|g| g.truth.to_params());
    let fit = match fit_anticrossing(&data, &s.initial, &fixed) {
        Ok(fit) => fit,
        Err(e @ qcascade::Error::RankDeficient { .. }) => {
            let mut out = Outcome::ok(json!({ "points": data.len(), "fixed": s.fixed }));
            out.warnings.push(format!("{e}; fix more parameters (q and phi only enter as 2 pi q + phi)"));
            out.status = Status::Numeric(e.to_string());
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    let got = fit.oscillator.to_params();
    let start = s.initial.to_params();
    let mut table = Table::new(&["parameter", "value", "std_error", "initial", "fixed", "truth"]);
    for (j, name) in ANTICROSSING_PARAMS.iter().enumerate() {
        let t = truth.map_or(f64::NAN, |t| t[j]);
        table.push(vec![(*name).into(), got[j].into(), fit.std_errors[j].into(), start[j].into(), fixed[j].into(), t.into()]);
    }
    table.push(vec!["2Omega".into(), fit.rabi_splitting.into(), fit.rabi_splitting_err.into(), Cell::Num(2.0 * start[1]), false.into(), truth.map_or(f64::NAN, |t| 2.0 * t[1]).into()]);
    ctx.writer.table("parameters", &table)?;
    let mut residuals = Table::new(&["voltage", "branch", "energy", "model", "residual"]);
    for d in &data {
        let p = fit.oscillator.polariton(d.voltage)?;
        let model = if d.branch == Branch::Lower { p.e_lp } else { p.e_up };
        residuals.push(vec![d.voltage.into(), branch_name(d.branch).into(), d.energy.into(), model.into(), (d.energy - model).into()]);
    }
    ctx.writer.table("residuals", &residuals)?;
    let params: serde_json::Map<String, serde_json::Value> = ANTICROSSING_PARAMS
        .iter()
        .enumerate()
        .map(|(j, n)| (n.to_string(), json!({"value": got[j], "std_error": fit.std_errors[j]})))
        .collect();
    let mut out = Outcome::ok(json!({
        "parameters": params,
        "rabi_splitting_meV": fit.rabi_splitting,
        "rabi_splitting_err_meV": fit.rabi_splitting_err,
        "reduced_chi_square": fit.fit.reduced_chi_square(),
        "iterations": fit.fit.iterations,
        "converged": fit.fit.converged,
        "points": data.len(),
    }));
    if !fit.fit.converged {
        out.status = Status::NotConverged(format!("no convergence after {} iterations", fit.fit.iterations));
    }
    Ok(out)
}
