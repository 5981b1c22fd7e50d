use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{transmission_vector, FilterSpec, TransmissionTable};
use crate::ladder::{feshbach_g, hopfield, lp_linewidth_at, triexciton_gprime, DinizParams, FeshbachParams, LadderModel};
use crate::statistics::joint::{g2_zero_reservoir_averaged, g2_zero_with_reservoir, JointDistribution};
use crate::statistics::occupation::{g2_zero_analytic, thermal_occupation, OccupationDist};

/// A sampled `g²(0)` curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub g2: Vec<f64>,
}

impl Curve {
    pub fn min(&self) -> f64 {
        self.g2.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.g2.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Peak-to-peak amplitude `max - min`.
    pub fn modulation(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.g2.windows(2).all(|w| w[1] > w[0])
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.g2.windows(2).all(|w| w[1] < w[0])
    }

    /// Indices of interior local minima (strictly below both neighbours after
    /// merging plateaus).
    pub fn local_minima(&self) -> Vec<usize> {
        let y = &self.g2;
        let mut out = Vec::new();
        let mut i = 1;
        while i + 1 < y.len() {
            let mut j = i;
            while j + 1 < y.len() && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < y.len() && y[i - 1] > y[i] && y[j + 1] > y[i] {
                out.push(i);
            }
            i = j + 1;
        }
        out
    }

    /// CSV with a header line `{x_header},g2_zero`.
    pub fn to_csv(&self, x_header: &str) -> String {
        let mut s = format!("{x_header},g2_zero\n");
        for (x, y) in self.x.iter().zip(&self.g2) {
            s.push_str(&format!("{x},{y}\n"));
        }
        s
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("scan grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("scan grid must be finite"));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::invalid("scan grid must be strictly monotone"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReservoirEstimator {
    /// Double sums over `(n, n_r)` in numerator and denominator.
    Joint,
    /// Reservoir-weighted average of the conditional `g²(0 | n_r)`.
    #[default]
    ConditionalAverage,
}

/// Occupation statistics used by [`scan_filter`].
#[derive(Debug, Clone, Copy)]
pub enum ScanStatistics<'a> {
    /// Reservoir frozen at its mean; the ladder is not shifted.
    Fixed(&'a OccupationDist),
    /// Fluctuating reservoir; each `n_r` shifts the ladder by `g_r·n_r`.
    Reservoir { joint: &'a JointDistribution, g_r: f64, estimator: ReservoirEstimator },
}

/// `g²(0)` versus filter detuning `Δ_F` (μeV). `Δ_F` is measured from `ω_LP`,
/// or from the mean-shifted line `ω_LP + g_r·n̄_r` when the reservoir fluctuates.
pub fn scan_filter(
    ladder: &LadderModel,
    filter_fwhm: f64,
    detunings: &[f64],
    stats: ScanStatistics<'_>,
) -> Result<Curve> {
    check_grid(detunings)?;
    ladder.validate()?;
    FilterSpec::new(ladder.omega_lp, filter_fwhm)?;
    let g2: Result<Vec<f64>> = match stats {
        ScanStatistics::Fixed(dist) => {
            let ladder = ladder.with_n_max(dist.n_max().max(2));
            detunings
                .par_iter()
                .map(|d| {
                    let filter = FilterSpec::new(ladder.omega_lp + d, filter_fwhm)?;
                    g2_zero_analytic(dist, &transmission_vector(&ladder, &filter, 0.0)?)
                })
                .collect()
        }
        ScanStatistics::Reservoir { joint, g_r, estimator } => {
            if !(g_r >= 0.0) {
                return Err(Error::invalid("g_r must be non-negative"));
            }
            let origin = ladder.omega_lp + g_r * joint.stats().mean_nr;
            detunings
                .par_iter()
                .map(|d| {
                    let filter = FilterSpec::new(origin + d, filter_fwhm)?;
                    let table = TransmissionTable::new(ladder, &filter, joint.n_max, joint.nr_max, g_r)?;
                    match estimator {
                        ReservoirEstimator::Joint => g2_zero_with_reservoir(joint, &table),
                        ReservoirEstimator::ConditionalAverage => g2_zero_reservoir_averaged(joint, &table),
                    }
                })
                .collect()
        }
    };
    Ok(Curve { x: detunings.to_vec(), g2: g2? })
}

/// Measured lower-polariton linewidths `Γ_LP` (μeV) on a detuning grid (meV),
/// linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinewidthTable {
    pub delta: Vec<f64>,
    pub gamma_lp: Vec<f64>,
}

impl LinewidthTable {
    pub fn new(delta: Vec<f64>, gamma_lp: Vec<f64>) -> Result<Self> {
        if delta.len() != gamma_lp.len() || delta.len() < 2 {
            return Err(Error::invalid("linewidth table needs at least two matching rows"));
        }
        if !delta.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::invalid("linewidth table detunings must be strictly increasing"));
        }
        if gamma_lp.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::invalid("linewidths must be positive"));
        }
        Ok(Self { delta, gamma_lp })
    }

    pub fn at(&self, delta: f64) -> Result<f64> {
        let (first, last) = (self.delta[0], *self.delta.last().expect("non-empty"));
        if !(delta >= first && delta <= last) {
            return Err(Error::invalid(format!(
                "detuning {delta} meV outside linewidth table [{first}, {last}]"
            )));
        }
        let k = self.delta.partition_point(|&d| d <= delta).clamp(1, self.delta.len() - 1);
        let (x0, x1) = (self.delta[k - 1], self.delta[k]);
        let t = (delta - x0) / (x1 - x0);
        Ok(self.gamma_lp[k - 1] * (1.0 - t) + self.gamma_lp[k] * t)
    }
}

/// Where `Γ_LP(Δ)` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinewidthSource {
    Table(LinewidthTable),
    /// Lorentzian width of the simulated inhomogeneously broadened transmission line.
    Diniz(DinizParams),
    Constant(f64),
}

impl LinewidthSource {
    pub fn at(&self, delta: f64) -> Result<f64> {
        match self {
            Self::Table(t) => t.at(delta),
            Self::Diniz(p) => Ok(lp_linewidth_at(delta, p)?.fwhm),
            Self::Constant(g) if *g > 0.0 => Ok(*g),
            Self::Constant(g) => Err(Error::invalid(format!("linewidth must be positive, got {g}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionMode {
    /// Two-body interaction only, `g' = 0`.
    Biexciton,
    BiexcitonTriexciton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningScanConfig {
    /// Exciton energy, meV.
    #[serde(rename = "E_X")]
    pub e_x: f64,
    /// Half Rabi splitting, meV.
    #[serde(rename = "Omega")]
    pub omega: f64,
    /// Spontaneous-emission linewidth γ used for the ladder, μeV.
    pub gamma: f64,
    /// Filter FWHM, μeV.
    pub filter_fwhm: f64,
    /// Filter position in units of γ.
    pub filter_offset: f64,
    /// Reservoir relaxation γ_r, μeV.
    pub gamma_r: f64,
    /// Frozen reservoir occupation.
    pub n_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetuningPoint {
    pub delta: f64,
    pub e_lp: f64,
    pub cx2: f64,
    pub gamma_lp: f64,
    /// Interaction constants before normalization, μeV.
    pub g_raw: f64,
    pub g_prime_raw: f64,
    /// After rescaling by `γ/Γ_LP`, μeV.
    pub g: f64,
    pub g_prime: f64,
    pub g2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetuningScan {
    pub mode: InteractionMode,
    pub points: Vec<DetuningPoint>,
}

impl DetuningScan {
    pub fn curve(&self) -> Curve {
        Curve {
            x: self.points.iter().map(|p| p.delta).collect(),
            g2: self.points.iter().map(|p| p.g2).collect(),
        }
    }
}

/// `g²(0)` versus cavity-exciton detuning `Δ = E_c - E_X` (meV) with the
/// interactions from the biexciton and triexciton resonances. The constants are
/// divided by `Γ_LP(Δ)` and expressed in units of `γ`, i.e. scaled by `γ/Γ_LP`.
pub fn scan_detuning(
    cfg: &DetuningScanConfig,
    feshbach: &FeshbachParams,
    linewidths: &LinewidthSource,
    detunings: &[f64],
    mode: InteractionMode,
) -> Result<DetuningScan> {
    check_grid(detunings)?;
    feshbach.validate()?;
    if !(cfg.gamma > 0.0 && cfg.filter_fwhm > 0.0 && cfg.omega > 0.0) {
        return Err(Error::invalid("gamma, filter_fwhm and Omega must be positive"));
    }
    let dist = thermal_occupation(cfg.gamma_r * cfg.n_r / cfg.gamma, 12)?;
    let n_max = dist.n_max().max(2);
    let points: Result<Vec<DetuningPoint>> = detunings
        .par_iter()
        .map(|&delta| {
            let pol = hopfield(cfg.e_x + delta, cfg.e_x, cfg.omega)?;
            let gamma_lp = linewidths.at(delta)?;
            let g_raw = feshbach_g(pol.e_lp, pol.cx2, feshbach)?.g;
            let g_prime_raw = match mode {
                InteractionMode::Biexciton => 0.0,
                InteractionMode::BiexcitonTriexciton => triexciton_gprime(pol.e_lp, pol.cx2, feshbach)?,
            };
            let scale = cfg.gamma / gamma_lp;
            let (g, g_prime) = (g_raw * scale, g_prime_raw * scale);
            let ladder = LadderModel::new(0.0, g, g_prime, cfg.gamma, n_max)?;
            let filter = FilterSpec::new(cfg.filter_offset * cfg.gamma, cfg.filter_fwhm)?;
            let g2 = g2_zero_analytic(&dist, &transmission_vector(&ladder, &filter, 0.0)?)?;
            Ok(DetuningPoint { delta, e_lp: pol.e_lp, cx2: pol.cx2, gamma_lp, g_raw, g_prime_raw, g, g_prime, g2 })
        })
        .collect();
    Ok(DetuningScan { mode, points: points? })
}
