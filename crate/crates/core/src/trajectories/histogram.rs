use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RandomStream;
use crate::trajectories::config::TrajectoryConfig;
use crate::trajectories::run::{run_with_table, ClickRecord, RunMeta};

/// Correlated and uncorrelated delay histograms on bins centered at `k·bin`,
/// `k = -K..=K`.
///
/// `h_c` counts ordered click pairs within a trajectory. `h_u` counts pairs with
/// one click from each trajectory of the disjoint pairs `(0,1), (2,3), ...` in
/// ensemble order, in both directions. Both are symmetric in `τ`, and an
/// ensemble of even length merges bin-exactly with any other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidencePair {
    pub bin: f64,
    pub half_bins: usize,
    pub h_c: Vec<u64>,
    pub h_u: Vec<u64>,
    pub trajectories: usize,
    /// Trajectory pairs contributing to `h_u`.
    pub pairs: usize,
}

impl CoincidencePair {
    fn empty(tau_max: f64, bin: f64) -> Result<Self> {
        if !(bin > 0.0 && bin.is_finite()) || !(tau_max >= 0.0 && tau_max.is_finite()) {
            return Err(Error::invalid("bin must be positive and tau_max non-negative"));
        }
        let half_bins = (tau_max / bin).floor() as usize;
        let len = 2 * half_bins + 1;
        Ok(Self { bin, half_bins, h_c: vec![0; len], h_u: vec![0; len], trajectories: 0, pairs: 0 })
    }

    /// Bin centers, ps.
    pub fn tau(&self) -> Vec<f64> {
        let k = self.half_bins as f64;
        (0..self.h_c.len()).map(|i| (i as f64 - k) * self.bin).collect()
    }

    /// Adds another histogram with identical binning.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.bin.to_bits() != other.bin.to_bits() || self.half_bins != other.half_bins {
            return Err(Error::invalid("cannot merge histograms with different binning"));
        }
        for (a, b) in self.h_c.iter_mut().zip(&other.h_c) {
            *a += b;
        }
        for (a, b) in self.h_u.iter_mut().zip(&other.h_u) {
            *a += b;
        }
        self.trajectories += other.trajectories;
        self.pairs += other.pairs;
        Ok(())
    }

    /// `h_c/h_u` per bin, `NaN` where `h_u = 0`.
    pub fn ratio(&self) -> Vec<f64> {
        self.h_c
            .iter()
            .zip(&self.h_u)
            .map(|(&c, &u)| if u > 0 { c as f64 / u as f64 } else { f64::NAN })
            .collect()
    }

    /// CSV with header `tau_ps,h_c,h_u,g2`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau_ps,h_c,h_u,g2\n");
        for ((t, (c, u)), g) in self.tau().iter().zip(self.h_c.iter().zip(&self.h_u)).zip(self.ratio()) {
            s.push_str(&format!("{t},{c},{u},{g}\n"));
        }
        s
    }

    fn window(&self) -> f64 {
        (self.half_bins as f64 + 0.5) * self.bin
    }

    #[inline]
    fn add(hist: &mut [u64], half: usize, bin: f64, window: f64, tau: f64) {
        if tau.abs() < window {
            let k = (tau / bin).round() as i64;
            let h = half as i64;
            if k.abs() <= h {
                hist[(h + k) as usize] += 1;
                hist[(h - k) as usize] += 1;
            }
        }
    }

    fn add_within(&mut self, times: &[f64]) {
        let window = self.window();
        for (i, &a) in times.iter().enumerate() {
            for &b in &times[i + 1..] {
                if b - a >= window {
                    break;
                }
                Self::add(&mut self.h_c, self.half_bins, self.bin, window, b - a);
            }
        }
    }

    fn add_across(&mut self, first: &[f64], second: &[f64]) {
        let window = self.window();
        let mut start = 0;
        for &a in first {
            while start < second.len() && second[start] <= a - window {
                start += 1;
            }
            for &b in &second[start..] {
                if b - a >= window {
                    break;
                }
                Self::add(&mut self.h_u, self.half_bins, self.bin, window, b - a);
            }
        }
    }
}

/// Builds `h_c` and `h_u` out to `|τ| ≤ tau_max` with bins of width `bin` (ps).
pub fn coincidence_histograms(ensemble: &[ClickRecord], tau_max: f64, bin: f64) -> Result<CoincidencePair> {
    if ensemble.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    let mut pair = CoincidencePair::empty(tau_max, bin)?;
    for r in ensemble {
        if !r.times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::invalid(format!("clicks of trajectory {} are not strictly increasing", r.trajectory_id)));
        }
        pair.add_within(&r.times);
    }
    for chunk in ensemble.chunks_exact(2) {
        pair.add_across(&chunk[0].times, &chunk[1].times);
        pair.pairs += 1;
    }
    pair.trajectories = ensemble.len();
    Ok(pair)
}

/// Simulates `count` trajectories (ids `first_id..`) and accumulates their
/// histograms pair by pair without keeping the click records. `count` must be
/// even. Also returns the summed run metadata.
pub fn ensemble_histograms(
    cfg: &TrajectoryConfig,
    first_id: u64,
    count: usize,
    tau_max: f64,
    bin: f64,
) -> Result<(CoincidencePair, RunMeta)> {
    cfg.validate()?;
    if count == 0 || count % 2 != 0 {
        return Err(Error::invalid("ensemble size must be even and positive"));
    }
    let table = cfg.transmissions()?;
    let zero = CoincidencePair::empty(tau_max, bin)?;
    let parts: Result<Vec<(CoincidencePair, RunMeta)>> = (0..count as u64 / 2)
        .into_par_iter()
        .map(|j| {
            let a = run_with_table(cfg, &table, RandomStream::new(cfg.seed, first_id + 2 * j))?;
            let b = run_with_table(cfg, &table, RandomStream::new(cfg.seed, first_id + 2 * j + 1))?;
            let hist = coincidence_histograms(&[a.clone(), b.clone()], tau_max, bin)?;
            let mut meta = a.meta;
            accumulate(&mut meta, &b.meta);
            Ok((hist, meta))
        })
        .collect();
    let mut total = zero;
    let mut meta = RunMeta::default();
    for (h, m) in parts? {
        total.merge(&h)?;
        accumulate(&mut meta, &m);
    }
    Ok((total, meta))
}

fn accumulate(into: &mut RunMeta, other: &RunMeta) {
    into.steps += other.steps;
    into.events += other.events;
    into.emitted += other.emitted;
    into.truncation_events += other.truncation_events;
    if into.occupation_time.len() < other.occupation_time.len() {
        into.occupation_time.resize(other.occupation_time.len(), 0.0);
    }
    for (a, b) in into.occupation_time.iter_mut().zip(&other.occupation_time) {
        *a += b;
    }
    if into.warning.is_none() {
        into.warning.clone_from(&other.warning);
    }
}

/// Result of fitting `1 + y₀·exp(-|τ|/τ_LP)` to `h_c/h_u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G2Estimate {
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    pub y0: f64,
    pub g2_zero: f64,
    pub stderr: f64,
    pub reduced_chi_square: f64,
    pub bins_used: usize,
}

/// Fits `g²(τ) = 1 + y₀·exp(-|τ|/τ_LP)` with `τ_LP` fixed and returns
/// `g²(0) = 1 + y₀`. The zero-delay bin is excluded (two jumps never share a
/// step) and only `τ > 0` is used, since the histograms are mirror images.
/// Bin variances are `f(1+f)/h_u` with `f` the model value, which treats both
/// histograms as Poisson counts; the error is inflated by `sqrt(χ²/dof)` when
/// that exceeds one.
pub fn g2_from_histograms(pair: &CoincidencePair, tau_lp: f64) -> Result<G2Estimate> {
    if !(tau_lp > 0.0) {
        return Err(Error::invalid("tau_LP must be positive"));
    }
    let tau = pair.tau();
    let g2 = pair.ratio();
    let half = pair.half_bins;
    let used: Vec<(f64, f64, f64)> = (half + 1..tau.len())
        .filter(|&i| pair.h_u[i] > 0)
        .map(|i| ((-tau[i] / tau_lp).exp(), g2[i], pair.h_u[i] as f64))
        .collect();
    if used.len() < 2 {
        return Err(Error::Degenerate("fewer than two populated bins at positive delay".into()));
    }
    let mut y0 = 0.0;
    let mut information = 0.0;
    let mut model_first = true;
    for _ in 0..20 {
        let (mut num, mut den) = (0.0, 0.0);
        for &(e, g, hu) in &used {
            let f = if model_first { g.max(0.5) } else { (1.0 + y0 * e).max(1e-3) };
            let w = hu / (f * (1.0 + f));
            num += w * e * (g - 1.0);
            den += w * e * e;
        }
        model_first = false;
        if !(den > 0.0) {
            return Err(Error::Degenerate("no fit information at positive delay".into()));
        }
        let next = num / den;
        information = den;
        let converged = (next - y0).abs() <= 1e-12 * next.abs().max(1.0);
        y0 = next;
        if converged {
            break;
        }
    }
    let chi2: f64 = used
        .iter()
        .map(|&(e, g, hu)| {
            let f = (1.0 + y0 * e).max(1e-3);
            (g - f).powi(2) * hu / (f * (1.0 + f))
        })
        .sum();
    let dof = (used.len() - 1) as f64;
    let reduced = chi2 / dof;
    let stderr = information.recip().sqrt() * reduced.sqrt().max(1.0);
    Ok(G2Estimate {
        tau,
        g2,
        y0,
        g2_zero: 1.0 + y0,
        stderr,
        reduced_chi_square: reduced,
        bins_used: used.len(),
    })
}

/// One line per click, `trajectory_id<TAB>time_ps`.
pub fn clicks_to_text(records: &[ClickRecord]) -> String {
    let mut s = String::new();
    for r in records {
        for t in &r.times {
            s.push_str(&format!("{}\t{}\n", r.trajectory_id, t));
        }
    }
    s
}

/// Parses the click text format. Trajectories appear in order of first
/// occurrence; empty trajectories cannot be represented and are absent.
pub fn clicks_from_text(text: &str) -> Result<Vec<ClickRecord>> {
    let mut out: Vec<ClickRecord> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(id), Some(t), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {}: expected two tab-separated fields", lineno + 1)));
        };
        let id: u64 = id.trim().parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let t: f64 = t.trim().parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        match out.iter_mut().find(|r| r.trajectory_id == id) {
            Some(r) => r.times.push(t),
            None => out.push(ClickRecord { trajectory_id: id, times: vec![t], occupation_trace: None, meta: RunMeta::default() }),
        }
    }
    for r in &out {
        if !r.times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Parse(format!("clicks of trajectory {} are not strictly increasing", r.trajectory_id)));
        }
    }
    Ok(out)
}
