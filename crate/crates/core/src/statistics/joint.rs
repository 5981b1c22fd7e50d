use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::TransmissionTable;
use crate::statistics::occupation::{g2_zero_analytic, OccupationDist};
use crate::units::rate_per_ps;

const TAIL_LIMIT: f64 = 1e-8;
const MAX_STATES: usize = 3000;

/// Exciton reservoir feeding the polariton mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirModel {
    /// Pump rate into the reservoir, 1/ps.
    #[serde(rename = "F")]
    pub f: f64,
    /// Reservoir-to-polariton relaxation, μeV.
    pub gamma_r: f64,
    /// Dark decay of reservoir excitons, μeV.
    #[serde(rename = "gamma_D")]
    pub gamma_d: f64,
    /// Blueshift per reservoir exciton, μeV.
    pub g_r: f64,
}

impl ReservoirModel {
    pub fn validate(&self, gamma: f64) -> Result<()> {
        let all = [self.f, self.gamma_r, self.gamma_d, self.g_r];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("reservoir parameters must be finite and non-negative"));
        }
        if !(gamma > 0.0) {
            return Err(Error::invalid("polariton linewidth must be positive"));
        }
        if self.gamma_r >= gamma {
            return Err(Error::invalid(format!(
                "gamma_r = {} must stay below gamma = {gamma} (spontaneous-emission regime)",
                self.gamma_r
            )));
        }
        Ok(())
    }
}

/// Steady-state probabilities `p(n, n_r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub n_max: usize,
    pub nr_max: usize,
    /// Row-major over `n`, each row holding `n_r = 0..=nr_max`.
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointStats {
    pub mean_n: f64,
    pub mean_nr: f64,
    pub sigma_nr: f64,
}

impl JointDistribution {
    #[inline]
    pub fn get(&self, n: usize, nr: usize) -> f64 {
        self.p[n * (self.nr_max + 1) + nr]
    }

    pub fn marginal_n(&self) -> Vec<f64> {
        (0..=self.n_max).map(|n| (0..=self.nr_max).map(|r| self.get(n, r)).sum()).collect()
    }

    pub fn marginal_nr(&self) -> Vec<f64> {
        (0..=self.nr_max).map(|r| (0..=self.n_max).map(|n| self.get(n, r)).sum()).collect()
    }

    pub fn stats(&self) -> JointStats {
        let pn = self.marginal_n();
        let pr = self.marginal_nr();
        let mean_n = pn.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        let mean_nr: f64 = pr.iter().enumerate().map(|(r, p)| r as f64 * p).sum();
        let second: f64 = pr.iter().enumerate().map(|(r, p)| (r * r) as f64 * p).sum();
        JointStats { mean_n, mean_nr, sigma_nr: (second - mean_nr * mean_nr).max(0.0).sqrt() }
    }

    /// Occupation of the polariton mode given `n_r`, or `None` if that column is empty.
    pub fn conditional(&self, nr: usize) -> Option<(f64, OccupationDist)> {
        let column: Vec<f64> = (0..=self.n_max).map(|n| self.get(n, nr)).collect();
        let weight: f64 = column.iter().sum();
        if !(weight > 0.0) {
            return None;
        }
        let p = column.into_iter().map(|v| v / weight).collect();
        Some((weight, OccupationDist { p }))
    }

    /// Distribution of `n` alone.
    pub fn n_marginal(&self) -> OccupationDist {
        OccupationDist { p: self.marginal_n() }
    }
}

#[inline]
fn index(n: usize, nr: usize, nr_max: usize) -> usize {
    n * (nr_max + 1) + nr
}

/// Transition-rate generator (1/ps) of the truncated joint chain, acting on
/// column vectors of probabilities. Polariton gain `γ_r·n_r·(n+1)` is switched
/// off at `n_max`, reservoir pumping at `nr_max`, so columns sum to zero.
pub fn joint_generator(
    res: &ReservoirModel,
    gamma: f64,
    n_max: usize,
    nr_max: usize,
) -> Result<DMatrix<f64>> {
    res.validate(gamma)?;
    let size = (n_max + 1) * (nr_max + 1);
    let (c, a, d) = (rate_per_ps(gamma), rate_per_ps(res.gamma_r), rate_per_ps(res.gamma_d));
    let mut g = DMatrix::zeros(size, size);
    for n in 0..=n_max {
        for r in 0..=nr_max {
            let i = index(n, r, nr_max);
            let mut add = |to: usize, rate: f64| {
                g[(to, i)] += rate;
                g[(i, i)] -= rate;
            };
            if n > 0 {
                add(index(n - 1, r, nr_max), c * n as f64);
            }
            if n < n_max && r > 0 {
                add(index(n + 1, r - 1, nr_max), a * (r * (n + 1)) as f64);
            }
            if r < nr_max {
                add(index(n, r + 1, nr_max), res.f);
            }
            if r > 0 {
                add(index(n, r - 1, nr_max), d * r as f64);
            }
        }
    }
    Ok(g)
}

fn solve_fixed(res: &ReservoirModel, gamma: f64, n_max: usize, nr_max: usize) -> Result<JointDistribution> {
    let mut g = joint_generator(res, gamma, n_max, nr_max)?;
    let size = g.nrows();
    g.row_mut(0).fill(1.0);
    let mut b = DVector::zeros(size);
    b[0] = 1.0;
    let x = g
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Degenerate("joint generator has no unique steady state".into()))?;
    // Clip round-off negatives and renormalize.
    let mut p: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::NumericFailure { message: "steady-state solve failed".into(), partial: f64::NAN });
    }
    p.iter_mut().for_each(|v| *v /= total);
    Ok(JointDistribution { n_max, nr_max, p })
}

/// Steady state of the joint polariton/reservoir rate equations. The bounds
/// are grown until both marginal tails drop below `1e-8`.
pub fn joint_steady_state(
    res: &ReservoirModel,
    gamma: f64,
    n_max: usize,
    nr_max: usize,
) -> Result<JointDistribution> {
    res.validate(gamma)?;
    let (mut n_max, mut nr_max) = (n_max.max(1), nr_max.max(1));
    loop {
        let joint = solve_fixed(res, gamma, n_max, nr_max)?;
        let tail_n = joint.marginal_n()[n_max];
        let tail_r = joint.marginal_nr()[nr_max];
        if tail_n < TAIL_LIMIT && tail_r < TAIL_LIMIT {
            return Ok(joint);
        }
        if tail_n >= TAIL_LIMIT {
            n_max += n_max / 2 + 2;
        }
        if tail_r >= TAIL_LIMIT {
            nr_max += nr_max / 2 + 2;
        }
        if (n_max + 1) * (nr_max + 1) > MAX_STATES {
            return Err(Error::Truncation(format!(
                "joint state space exceeds {MAX_STATES} states; tails p(n_max) = {tail_n:e}, \
                 p(nr_max) = {tail_r:e} at n_max = {}, nr_max = {}",
                joint.n_max, joint.nr_max
            )));
        }
    }
}

/// Power iteration on the uniformized chain; an independent check on the direct solve.
pub fn joint_steady_state_power(
    res: &ReservoirModel,
    gamma: f64,
    n_max: usize,
    nr_max: usize,
    tolerance: f64,
    max_iterations: usize,
) -> Result<JointDistribution> {
    let g = joint_generator(res, gamma, n_max, nr_max)?;
    let size = g.nrows();
    let lambda = (0..size).map(|i| -g[(i, i)]).fold(0.0, f64::max) * 1.05;
    if !(lambda > 0.0) {
        return Err(Error::Degenerate("generator has no transitions".into()));
    }
    let t = DMatrix::identity(size, size) + g / lambda;
    let mut p = DVector::from_element(size, 1.0 / size as f64);
    for _ in 0..max_iterations {
        let next = &t * &p;
        let change = (&next - &p).abs().max();
        p = next;
        if change < tolerance {
            let total = p.sum();
            return Ok(JointDistribution { n_max, nr_max, p: p.iter().map(|v| v / total).collect() });
        }
    }
    Err(Error::NumericFailure {
        message: format!("power iteration did not converge in {max_iterations} steps"),
        partial: f64::NAN,
    })
}

fn check_table(joint: &JointDistribution, table: &TransmissionTable) -> Result<()> {
    if table.n_max() < joint.n_max || table.nr_max() < joint.nr_max {
        return Err(Error::invalid(format!(
            "transmission table ({}x{}) smaller than the distribution ({}x{})",
            table.n_max(),
            table.nr_max(),
            joint.n_max,
            joint.nr_max
        )));
    }
    Ok(())
}

/// Zero-delay correlation with the sums running jointly over `(n, n_r)`:
/// `Σ P[n][n_r]P[n-1][n_r]n(n-1)p(n,n_r) / (Σ P[n][n_r]·n·p(n,n_r))²`.
pub fn g2_zero_with_reservoir(joint: &JointDistribution, table: &TransmissionTable) -> Result<f64> {
    check_table(joint, table)?;
    let mut numerator = 0.0;
    let mut emission = 0.0;
    for n in 1..=joint.n_max {
        let nf = n as f64;
        for r in 0..=joint.nr_max {
            let p = joint.get(n, r);
            let t = table.get(n, r);
            emission += t * nf * p;
            if n >= 2 {
                numerator += t * table.get(n - 1, r) * nf * (nf - 1.0) * p;
            }
        }
    }
    if !(emission > 0.0) {
        return Err(Error::Degenerate("no detectable emission (zero denominator)".into()));
    }
    Ok(numerator / (emission * emission))
}

/// Quasi-static reservoir average `Σ π(n_r)·g²(0 | n_r)`: the correlation is
/// evaluated on the polariton occupation conditioned on each reservoir
/// occupation, with that column of the transmission table, then averaged over
/// the reservoir marginal. Columns without detectable emission are dropped and
/// the remaining weights renormalized.
pub fn g2_zero_reservoir_averaged(joint: &JointDistribution, table: &TransmissionTable) -> Result<f64> {
    check_table(joint, table)?;
    let mut sum = 0.0;
    let mut weight = 0.0;
    for r in 0..=joint.nr_max {
        let Some((w, dist)) = joint.conditional(r) else { continue };
        match g2_zero_analytic(&dist, &table.column(r)) {
            Ok(g2) => {
                sum += w * g2;
                weight += w;
            }
            Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if !(weight > 0.0) {
        return Err(Error::Degenerate("no reservoir occupation yields detectable emission".into()));
    }
    Ok(sum / weight)
}
