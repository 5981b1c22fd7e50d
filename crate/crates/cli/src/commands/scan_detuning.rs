//! `g²(0)` versus cavity-exciton detuning with Feshbach-resonance interactions.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;

use qcascade::ladder::{resonance_detuning, FeshbachConfig};
use qcascade::presets;
use qcascade::statistics::{
    scan_detuning, DetuningScanConfig, InteractionMode, LinewidthSource, LinewidthTable,
};

use super::{Context, Outcome};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

pub const PRESETS: [(&str, &str); 2] = [
    ("fig3", "biexciton and triexciton resonances, simulated linewidth"),
    ("fig3-constant", "as fig3 with a constant linewidth gamma"),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub scan: DetuningScanConfig,
    pub feshbach: FeshbachConfig,
    /// `{"diniz": {...}}`, `{"constant": 66.6}` or `{"table": {"delta": [...], "gamma_lp": [...]}}`.
    pub linewidth: LinewidthSource,
    /// Two-column file (detuning meV, Γ_LP μeV) that replaces `linewidth`.
    #[serde(default)]
    pub linewidth_file: Option<PathBuf>,
    /// Detuning range, meV.
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

pub fn preset(name: &str) -> CliResult<Option<Section>> {
    let linewidth = match name {
        "fig3" => LinewidthSource::Diniz(presets::diniz()),
        "fig3-constant" => LinewidthSource::Constant(presets::GAMMA_LP),
        _ => return Ok(None),
    };
    Ok(Some(Section {
        scan: presets::detuning_scan(),
        feshbach: presets::feshbach(),
        linewidth,
        linewidth_file: None,
        from: -6.0,
        to: 2.0,
        points: 161,
    }))
}

fn read_table(path: &PathBuf) -> CliResult<LinewidthTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let (mut delta, mut gamma) = (Vec::new(), Vec::new());
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let parsed: Option<Vec<f64>> = row.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                delta.push(v[0]);
                gamma.push(v[1]);
            }
            None if i == 0 => {}
            _ => return Err(CliError::Config(format!("{} row {}: expected two numbers", path.display(), i + 1))),
        }
    }
    Ok(LinewidthTable::new(delta, gamma)?)
}

pub fn run(s: &Section, ctx: &mut Context) -> CliResult<Outcome> {
    if s.points < 2 {
        return Err(CliError::Config("scan_detuning.points: need at least 2".into()));
    }
    let linewidth = match &s.linewidth_file {
        Some(path) => LinewidthSource::Table(read_table(path)?),
        None => s.linewidth.clone(),
    };
    let fesh = s.feshbach.to_params(s.scan.e_x)?;
    let detunings = presets::grid(s.from, s.to, s.points);
    let bx = scan_detuning(&s.scan, &fesh, &linewidth, &detunings, InteractionMode::Biexciton)?;
    let full = scan_detuning(&s.scan, &fesh, &linewidth, &detunings, InteractionMode::BiexcitonTriexciton)?;
    let mut table = Table::new(&[
        "delta_meV",
        "e_lp_meV",
        "cx2",
        "gamma_lp_ueV",
        "g_raw_ueV",
        "g_prime_raw_ueV",
        "g_ueV",
        "g_prime_ueV",
        "g2_biexciton",
        "g2_full",
    ]);
    for (b, f) in bx.points.iter().zip(&full.points) {
        let row: Vec<Cell> = vec![
            f.delta.into(),
            f.e_lp.into(),
            f.cx2.into(),
            f.gamma_lp.into(),
            f.g_raw.into(),
            f.g_prime_raw.into(),
            f.g.into(),
            f.g_prime.into(),
            b.g2.into(),
            f.g2.into(),
        ];
        table.push(row);
    }
    ctx.writer.table("detuning_scan", &table)?;
    let biexciton = resonance_detuning(s.scan.omega, s.feshbach.e_b / 2.0)?;
    let triexciton = resonance_detuning(s.scan.omega, s.feshbach.e_t / 3.0)?;
    let minima = |c: &qcascade::statistics::Curve| {
        c.local_minima().into_iter().map(|i| json!({"delta_meV": c.x[i], "g2": c.g2[i]})).collect::<Vec<_>>()
    };
    let (cb, cf) = (bx.curve(), full.curve());
    Ok(Outcome::ok(json!({
        "resonances_meV": {"biexciton_E_B_over_2": biexciton, "triexciton_E_T_over_3": triexciton},
        "g2_full_first": cf.g2[0],
        "local_minima_full": minima(&cf),
        "local_minima_biexciton": minima(&cb),
        "full_is_monotone": cf.is_strictly_increasing() || cf.is_strictly_decreasing(),
    })))
}
