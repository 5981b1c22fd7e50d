//! `g²(0)` versus filter detuning, one column per interaction setting.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qcascade::ladder::LadderModel;
use qcascade::presets::{self, FIG2D_G, FIG2D_PUMP, FILTER_FWHM, GAMMA_LP, RESERVOIR_G_R, WASHOUT_PUMP};
use qcascade::statistics::{
    joint_steady_state, scan_filter, thermal_occupation, Curve, ReservoirEstimator, ReservoirModel, ScanStatistics,
};

use super::{Context, Outcome};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

pub const PRESETS: [(&str, &str); 4] = [
    ("fig2b", "no interaction: flat g2(0) = 2"),
    ("fig2d", "g = 2.7 ueV with and without reservoir noise"),
    ("figS8", "g/gamma from 0 to 1 over +-2 gamma"),
    ("figS14", "noise washout with amplified g_r at F = 0.03/ps"),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    /// Polariton linewidth γ, μeV.
    pub gamma: f64,
    /// Filter FWHM, μeV.
    pub filter_fwhm: f64,
    /// Fock cutoff of the ladder and occupation.
    pub n_max: usize,
    /// Reservoir relaxation γ_r (μeV) and frozen occupation for noise-free curves.
    pub gamma_r: f64,
    pub n_r: f64,
    /// Detuning range in units of γ.
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub curves: Vec<CurveSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub label: String,
    /// Two-body interaction, μeV.
    pub g: f64,
    #[serde(default)]
    pub g_prime: f64,
    /// Fluctuating reservoir; absent for the frozen-reservoir model.
    #[serde(default)]
    pub noise: Option<Noise>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub reservoir: ReservoirModel,
    #[serde(default = "default_nr_max")]
    pub nr_max: usize,
    #[serde(default)]
    pub estimator: ReservoirEstimator,
}

fn default_nr_max() -> usize {
    24
}

fn base(from: f64, to: f64, points: usize, curves: Vec<CurveSpec>) -> Section {
    Section {
        gamma: GAMMA_LP,
        filter_fwhm: FILTER_FWHM,
        n_max: 14,
        gamma_r: presets::reservoir_gamma_r(),
        n_r: 1.0,
        from,
        to,
        points,
        curves,
    }
}

fn clean(label: &str, g: f64) -> CurveSpec {
    CurveSpec { label: label.into(), g, g_prime: 0.0, noise: None }
}

fn noisy(label: &str, g: f64, pump: f64, g_r: f64) -> CurveSpec {
    let noise = Noise { reservoir: presets::reservoir_model(pump, g_r), nr_max: default_nr_max(), estimator: ReservoirEstimator::default() };
    CurveSpec { label: label.into(), g, g_prime: 0.0, noise: Some(noise) }
}

pub fn preset(name: &str) -> CliResult<Option<Section>> {
    Ok(Some(match name {
        "fig2b" => base(-1.0, 1.0, 201, vec![clean("g0", 0.0)]),
        "fig2d" => base(
            -0.6,
            0.6,
            121,
            vec![clean("no_noise", FIG2D_G), noisy("noise", FIG2D_G, FIG2D_PUMP, RESERVOIR_G_R)],
        ),
        "figS8" => base(
            -2.0,
            2.0,
            401,
            [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|r| clean(&format!("g_over_gamma_{r}"), r * GAMMA_LP)).collect(),
        ),
        "figS14" => {
            let res = presets::reservoir_model(WASHOUT_PUMP, 0.0);
            let sigma_r = joint_steady_state(&res, GAMMA_LP, 12, 24)?.stats().sigma_nr;
            let mut curves = vec![clean("no_noise", FIG2D_G)];
            for ratio in [0.5, 1.0, 2.0, 4.0] {
                let g_r = ratio * GAMMA_LP / sigma_r;
                curves.push(noisy(&format!("gr_sigma_over_gamma_{ratio}"), FIG2D_G, WASHOUT_PUMP, g_r));
            }
            base(-0.6, 0.6, 121, curves)
        }
        _ => return Ok(None),
    }))
}

pub fn run(s: &Section, ctx: &mut Context) -> CliResult<Outcome> {
    if s.points < 2 {
        return Err(CliError::Config("scan_filter.points: need at least 2".into()));
    }
    if s.curves.is_empty() {
        return Err(CliError::Config("scan_filter.curves: need at least one curve".into()));
    }
    let detunings = presets::grid(s.from * s.gamma, s.to * s.gamma, s.points);
    let mut curves = Vec::with_capacity(s.curves.len());
    let mut summary = Vec::new();
    for spec in &s.curves {
        let ladder = LadderModel::new(0.0, spec.g, spec.g_prime, s.gamma, s.n_max)?;
        let (curve, stats) = match &spec.noise {
            None => {
                let dist = thermal_occupation(s.gamma_r * s.n_r / s.gamma, s.n_max)?;
                (scan_filter(&ladder, s.filter_fwhm, &detunings, ScanStatistics::Fixed(&dist))?, Value::Null)
            }
            Some(noise) => {
                let joint = joint_steady_state(&noise.reservoir, s.gamma, s.n_max, noise.nr_max)?;
                let stats = ScanStatistics::Reservoir { joint: &joint, g_r: noise.reservoir.g_r, estimator: noise.estimator };
                let st = joint.stats();
                let reported = json!({"mean_n": st.mean_n, "mean_nr": st.mean_nr, "sigma_nr": st.sigma_nr});
                (scan_filter(&ladder, s.filter_fwhm, &detunings, stats)?, reported)
            }
        };
        summary.push(describe(&spec.label, &curve, s.gamma, stats));
        curves.push(curve);
    }
    let mut columns = vec!["delta_F_ueV".to_string(), "delta_F_over_gamma".to_string()];
    columns.extend(s.curves.iter().map(|c| c.label.clone()));
    let mut table = Table::with_columns(columns);
    for (i, d) in detunings.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*d).into(), (d / s.gamma).into()];
        row.extend(curves.iter().map(|c| Cell::Num(c.g2[i])));
        table.push(row);
    }
    ctx.writer.table("curves", &table)?;
    Ok(Outcome::ok(json!({ "curves": summary })))
}

fn describe(label: &str, c: &Curve, gamma: f64, reservoir: Value) -> Value {
    let argmin = (0..c.g2.len()).min_by(|&a, &b| c.g2[a].total_cmp(&c.g2[b])).unwrap_or(0);
    json!({
        "label": label,
        "min": c.min(),
        "min_at_over_gamma": c.x[argmin] / gamma,
        "max": c.max(),
        "modulation": c.modulation(),
        "first": c.g2[0],
        "last": c.g2[c.g2.len() - 1],
        "strictly_increasing": c.is_strictly_increasing(),
        "reservoir": reservoir,
    })
}
