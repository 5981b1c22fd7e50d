//! Acceptance criteria, one PASS/FAIL line each followed by the measured values.
//! Exits non-zero when any criterion fails. `ACCEPTANCE_ONLY=2,6` runs a subset.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use qcascade::analysis::{
    analyze, deconvolve_detector, detector_response_from_pulse, AnalysisOptions, GaussianPeak, SyntheticPeak,
    DETECTOR_SIGMA_PS,
};
use qcascade::filter::{transmission_vector, FilterSpec};
use qcascade::ladder::{
    fit_anticrossing, resonance_detuning, AnticrossingModel, AnticrossingPoint, Branch, CoupledOscillator,
    LadderModel, ANTICROSSING_PARAMS,
};
use qcascade::numerics::{faddeeva, quadrature, voigt_overlap, ComplexValue, Model, RandomStream};
use qcascade::presets::{self, FILTER_FWHM, GAMMA_LP};
use qcascade::statistics::{
    g2_zero_analytic, joint_steady_state, scan_detuning, scan_filter, thermal_occupation, Curve, InteractionMode,
    LinewidthSource, ReservoirEstimator, ScanStatistics,
};
use qcascade::trajectories::{ensemble_histograms, g2_from_histograms, run_trajectory, ReservoirMode, TrajectoryConfig};
use qcascade::units::{GAUSSIAN_FWHM_PER_SIGMA, HBAR_UEV_PS};
use qcascade::Result;

/// Trajectory budget shared by the Monte Carlo criteria.
const TRAJECTORIES: usize = 20_000;
const TRAJECTORY_PS: f64 = 5.0e5;
const TAU_MAX_PS: f64 = 100.0;
const BIN_PS: f64 = 1.0;
const LADDER_LEVELS: usize = 14;
const SEED: u64 = 20_230_301;

struct Check {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Check {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Self { pass, summary: summary.into(), details: Vec::new() }
    }

    fn with(mut self, details: Vec<String>) -> Self {
        self.details = details;
        self
    }
}

type Criterion = fn() -> Result<Check>;

fn main() {
    let criteria: [(&str, &str, Option<f64>, Criterion); 11] = [
        ("1", "flat thermal baseline", Some(1.0), flat_baseline),
        ("2", "repulsive S-curve, analytic vs Monte Carlo", Some(300.0), s_curve),
        ("3", "reservoir noise pull-down", None, noise_pull_down),
        ("4", "single-photon regime at g = gamma", Some(10.0), single_photon),
        ("5", "black-body occupation chi-square", Some(120.0), black_body),
        ("6", "Monte Carlo vs analytic at n_r = 5", Some(600.0), validation_point),
        ("7", "noise washout threshold", None, washout),
        ("8", "Feshbach detuning scan topology", None, feshbach_topology),
        ("9", "anticrossing fit recovery", None, anticrossing),
        ("10", "analysis pipeline detector arithmetic", None, detector_round_trip),
        ("11", "numerical kernels vs oracles", None, numerics),
    ];
    let only: Option<Vec<String>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|s| s == id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let secs = start.elapsed().as_secs_f64();
        let mut check = match outcome {
            Ok(Ok(c)) => c,
            Ok(Err(e)) => Check::new(false, format!("error: {e}")),
            Err(_) => Check::new(false, "panicked"),
        };
        if let Some(limit) = limit {
            if secs > limit {
                check.pass = false;
                check.summary.push_str(&format!("; runtime {secs:.1} s exceeds {limit} s"));
            }
        }
        let status = if check.pass { "PASS" } else { "FAIL" };
        println!("{status} {id:>2} {name}: {} [{secs:.2} s]", check.summary);
        for d in &check.details {
            println!("        {d}");
        }
        if !check.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {}", failed.join(", "));
        std::process::exit(1);
    }
}

fn reservoir_dist(n_r: f64) -> Result<qcascade::statistics::OccupationDist> {
    thermal_occupation(presets::reservoir_gamma_r() * n_r / GAMMA_LP, LADDER_LEVELS)
}

fn no_noise_curve(g: f64, detunings: &[f64]) -> Result<Curve> {
    let ladder = LadderModel::new(0.0, g, 0.0, GAMMA_LP, LADDER_LEVELS)?;
    scan_filter(&ladder, FILTER_FWHM, detunings, ScanStatistics::Fixed(&reservoir_dist(1.0)?))
}

fn flat_baseline() -> Result<Check> {
    let detunings = presets::grid(-GAMMA_LP, GAMMA_LP, 201);
    let curve = no_noise_curve(0.0, &detunings)?;
    let worst = curve.g2.iter().map(|g| (g - 2.0).abs()).fold(0.0, f64::max);
    Ok(Check::new(worst <= 1e-9, format!("max |g2 - 2| = {worst:.2e} over {} detunings in [-gamma, gamma]", detunings.len())))
}

struct MonteCarloPoint {
    detuning: f64,
    mc: f64,
    stderr: f64,
    analytic: f64,
    fit_expectation: f64,
}

impl MonteCarloPoint {
    fn z(&self) -> f64 {
        (self.mc - self.analytic) / self.stderr
    }

    fn line(&self) -> String {
        format!(
            "dF/gamma = {:+.2}: MC {:.4} +- {:.4}, analytic {:.4} (z = {:+.2}); \
             fixed-tau fit of the exact g2(tau) {:.4} (z = {:+.2})",
            self.detuning / GAMMA_LP,
            self.mc,
            self.stderr,
            self.analytic,
            self.z(),
            self.fit_expectation,
            (self.mc - self.fit_expectation) / self.stderr
        )
    }
}

fn monte_carlo_point(g: f64, filter_fwhm: f64, n_r: f64, detuning: f64, seed: u64) -> Result<MonteCarloPoint> {
    let gamma_r = presets::reservoir_gamma_r();
    let ladder = LadderModel::new(0.0, g, 0.0, GAMMA_LP, LADDER_LEVELS)?;
    let filter = FilterSpec::new(detuning, filter_fwhm)?;
    let cfg = TrajectoryConfig::new(ladder, filter, ReservoirMode::Fixed { gamma_r, n_r }, 1.0, TRAJECTORY_PS, seed)?;
    let (pair, _) = ensemble_histograms(&cfg, 0, TRAJECTORIES, TAU_MAX_PS, BIN_PS)?;
    let tau_lp = cfg.correlation_time()?;
    let est = g2_from_histograms(&pair, tau_lp)?;
    let transmissions = transmission_vector(&ladder, &filter, 0.0)?;
    let x = gamma_r * n_r / GAMMA_LP;
    let analytic = g2_zero_analytic(&thermal_occupation(x, LADDER_LEVELS)?, &transmissions)?;
    let fit_expectation = exact_fit_expectation(x, &transmissions, n_r * gamma_r, tau_lp);
    Ok(MonteCarloPoint { detuning, mc: est.g2_zero, stderr: est.stderr, analytic, fit_expectation })
}

/// Value the fixed-`τ_LP` single-exponential fit converges to with unlimited
/// trajectories: the exact `g²(τ)` of the truncated birth-death chain,
/// `⟨I e^{Lτ} I⟩/⟨I⟩²`, averaged over each bin and fitted with the same
/// weights as the estimator.
fn exact_fit_expectation(x: f64, transmissions: &[f64], gain: f64, tau_lp: f64) -> f64 {
    let n_max = transmissions.len() - 1;
    let decay = GAMMA_LP / HBAR_UEV_PS;
    let pump = gain / HBAR_UEV_PS;
    let mut generator = DMatrix::<f64>::zeros(n_max + 1, n_max + 1);
    for n in 0..=n_max {
        let nf = n as f64;
        if n > 0 {
            generator[(n - 1, n)] += decay * nf;
            generator[(n, n)] -= decay * nf;
        }
        if n < n_max {
            generator[(n + 1, n)] += pump * (nf + 1.0);
            generator[(n, n)] -= pump * (nf + 1.0);
        }
    }
    let mut p: Vec<f64> = (0..=n_max).map(|n| x.powi(n as i32)).collect();
    let norm: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= norm);
    let rate: Vec<f64> = (0..=n_max).map(|n| decay * n as f64 * transmissions[n]).collect();
    let intensity: f64 = rate.iter().zip(&p).map(|(r, q)| r * q).sum();
    let mut state = DVector::<f64>::zeros(n_max + 1);
    for n in 1..=n_max {
        state[n - 1] = rate[n] * p[n];
    }
    const SUBSTEPS: usize = 8;
    let h = BIN_PS / SUBSTEPS as f64;
    let step = (&generator * h).exp();
    let g2 = |s: &DVector<f64>| rate.iter().zip(s.iter()).map(|(r, q)| r * q).sum::<f64>() / (intensity * intensity);
    // Advance to the lower edge of the first positive bin, then trapezoid-average each bin.
    for _ in 0..SUBSTEPS / 2 {
        state = &step * state;
    }
    let bins = (TAU_MAX_PS / BIN_PS).floor() as usize;
    let mut samples = Vec::with_capacity(bins);
    let mut left = g2(&state);
    for k in 1..=bins {
        let mut acc = 0.5 * left;
        for j in 1..=SUBSTEPS {
            state = &step * state;
            let v = g2(&state);
            acc += if j == SUBSTEPS { 0.5 * v } else { v };
            if j == SUBSTEPS {
                left = v;
            }
        }
        samples.push(((-(k as f64) * BIN_PS / tau_lp).exp(), acc / SUBSTEPS as f64));
    }
    let mut y0 = 0.0;
    for iteration in 0..50 {
        let (mut num, mut den) = (0.0, 0.0);
        for &(e, g) in &samples {
            let f = if iteration == 0 { g } else { 1.0 + y0 * e };
            let w = 1.0 / (f * (1.0 + f));
            num += w * e * (g - 1.0);
            den += w * e * e;
        }
        y0 = num / den;
    }
    1.0 + y0
}

fn s_curve() -> Result<Check> {
    let detunings = presets::filter_grid(GAMMA_LP, 241);
    let curve = no_noise_curve(presets::FIG2D_G, &detunings)?;
    let (first, last) = (curve.g2[0], curve.g2[curve.g2.len() - 1]);
    let increasing = curve.is_strictly_increasing();
    let shape = increasing && first < 2.0 && 2.0 < last && curve.modulation() >= 0.15;
    let lowest = (0..curve.g2.len()).min_by(|&a, &b| curve.g2[a].total_cmp(&curve.g2[b])).expect("non-empty");
    let mut details = vec![format!(
        "analytic on {} points: strictly increasing {increasing}, g2(-0.6 gamma) = {first:.5}, \
         g2(+0.6 gamma) = {last:.5}, modulation {:.4}, minimum {:.5} at dF/gamma = {:+.3}",
        detunings.len(),
        curve.modulation(),
        curve.min(),
        curve.x[lowest] / GAMMA_LP
    )];
    let mut worst: f64 = 0.0;
    for (i, d) in presets::filter_grid(GAMMA_LP, 5).into_iter().enumerate() {
        let point = monte_carlo_point(presets::FIG2D_G, FILTER_FWHM, 1.0, d, SEED + i as u64)?;
        worst = worst.max(point.z().abs());
        details.push(point.line());
    }
    details.push(format!("{TRAJECTORIES} trajectories of {TRAJECTORY_PS:.0e} ps per detuning"));
    let pass = shape && worst < 3.0;
    Ok(Check::new(pass, format!("S-curve shape {shape}, max |MC - analytic|/SE = {worst:.2} at 5 detunings")).with(details))
}

fn noise_pull_down() -> Result<Check> {
    let res = presets::reservoir_model(presets::FIG2D_PUMP, presets::RESERVOIR_G_R);
    let joint = joint_steady_state(&res, GAMMA_LP, 12, 24)?;
    let stats = joint.stats();
    let ladder = LadderModel::new(0.0, presets::FIG2D_G, 0.0, GAMMA_LP, LADDER_LEVELS)?;
    let detunings = presets::filter_grid(GAMMA_LP, 241);
    let noisy = scan_filter(
        &ladder,
        FILTER_FWHM,
        &detunings,
        ScanStatistics::Reservoir {
            joint: &joint,
            g_r: presets::RESERVOIR_G_R,
            estimator: ReservoirEstimator::ConditionalAverage,
        },
    )?;
    let clean = no_noise_curve(presets::FIG2D_G, &detunings)?;
    let excess = noisy.g2.iter().zip(&clean.g2).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    let in_range = (0.02..=0.05).contains(&stats.mean_n)
        && (0.5..=2.0).contains(&stats.mean_nr)
        && (0.5..=2.0).contains(&stats.sigma_nr);
    let summary = format!(
        "max(noisy - clean) = {excess:.2e} over {} detunings; mean n = {:.4}, mean n_r = {:.3}, sigma_r = {:.3}",
        detunings.len(),
        stats.mean_n,
        stats.mean_nr,
        stats.sigma_nr
    );
    let details = vec![format!(
        "noisy g2 at -0.6/0/+0.6 gamma: {:.4} {:.4} {:.4}; clean {:.4} {:.4} {:.4}",
        noisy.g2[0], noisy.g2[120], noisy.g2[240], clean.g2[0], clean.g2[120], clean.g2[240]
    )];
    Ok(Check::new(excess <= 0.0 && in_range, summary).with(details))
}

fn single_photon() -> Result<Check> {
    let detunings = presets::grid(-2.0 * GAMMA_LP, 2.0 * GAMMA_LP, 401);
    let curve = no_noise_curve(GAMMA_LP, &detunings)?;
    let i = (0..curve.g2.len()).min_by(|&a, &b| curve.g2[a].total_cmp(&curve.g2[b])).expect("non-empty");
    Ok(Check::new(
        curve.min() < 0.5,
        format!("min g2(0) = {:.4} at dF/gamma = {:+.3}", curve.min(), curve.x[i] / GAMMA_LP),
    ))
}

fn black_body() -> Result<Check> {
    let mut pass = true;
    let mut details = Vec::new();
    for (i, &x) in [0.1, 0.3, 0.5].iter().enumerate() {
        let ladder = LadderModel::new(0.0, 0.0, 0.0, GAMMA_LP, 40)?;
        let filter = FilterSpec::new(0.0, FILTER_FWHM)?;
        let mode = ReservoirMode::Fixed { gamma_r: x * GAMMA_LP, n_r: 1.0 };
        let mut cfg = TrajectoryConfig::new(ladder, filter, mode, 1.0, 1.0, SEED + 100 + i as u64)?;
        let interval = 5.0 * cfg.correlation_time()?;
        cfg.sample_interval = Some(interval);
        cfg.duration = 20_000.0 * interval;
        let record = run_trajectory(&cfg, RandomStream::new(cfg.seed, 0))?;
        let trace = record.occupation_trace.unwrap_or_default();
        let mut observed = vec![0.0; cfg.n_max + 1];
        for &(_, n) in &trace {
            observed[n] += 1.0;
        }
        let total = trace.len() as f64;
        let dist = thermal_occupation(x, cfg.n_max)?;
        let expected: Vec<f64> = (0..=cfg.n_max).map(|n| dist.p.get(n).copied().unwrap_or(0.0) * total).collect();
        let (chi2, dof) = chi_square(&observed, &expected);
        let p_value = 1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(chi2);
        let ok = p_value > 0.01 && record.meta.steps >= 1_000_000;
        pass &= ok;
        details.push(format!(
            "A/C = {x}: {} samples, {} steps, chi2 = {chi2:.2} on {dof} dof, p = {p_value:.3}",
            trace.len(),
            record.meta.steps
        ));
    }
    Ok(Check::new(pass, "chi-square p > 0.01 for A/C in {0.1, 0.3, 0.5}").with(details))
}

/// Pearson chi-square after merging tail bins until every expected count reaches 5.
fn chi_square(observed: &[f64], expected: &[f64]) -> (f64, usize) {
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (a, b) in observed.iter().zip(expected) {
        o += a;
        e += b;
        if e >= 5.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    let chi2 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (chi2, bins.len().saturating_sub(1).max(1))
}

fn validation_point() -> Result<Check> {
    let g = 0.1 * GAMMA_LP;
    let filter_fwhm = 0.35 * GAMMA_LP;
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for (i, d) in presets::filter_grid(GAMMA_LP, 7).into_iter().enumerate() {
        let point = monte_carlo_point(g, filter_fwhm, 5.0, d, SEED + 200 + i as u64)?;
        worst = worst.max(point.z().abs());
        details.push(point.line());
    }
    details.push(format!("{TRAJECTORIES} trajectories of {TRAJECTORY_PS:.0e} ps per detuning"));
    Ok(Check::new(worst < 3.0, format!("max |MC - analytic|/SE = {worst:.2} at 7 detunings")).with(details))
}

fn washout() -> Result<Check> {
    let res = presets::reservoir_model(presets::WASHOUT_PUMP, presets::RESERVOIR_G_R);
    let joint = joint_steady_state(&res, GAMMA_LP, 12, 24)?;
    let stats = joint.stats();
    let ladder = LadderModel::new(0.0, presets::FIG2D_G, 0.0, GAMMA_LP, LADDER_LEVELS)?;
    let detunings = presets::filter_grid(GAMMA_LP, 121);
    let visibility = |ratio: f64| -> Result<f64> {
        let g_r = ratio * GAMMA_LP / stats.sigma_nr;
        let stats = ScanStatistics::Reservoir { joint: &joint, g_r, estimator: ReservoirEstimator::ConditionalAverage };
        Ok(scan_filter(&ladder, FILTER_FWHM, &detunings, stats)?.modulation() / presets::G2_RESOLUTION)
    };
    let mut pass = true;
    let decoupled = res.f / (res.gamma_r + res.gamma_d) * HBAR_UEV_PS;
    let mut details = vec![format!(
        "mean n_r = {:.3} (F/(gamma_r + gamma_D) = {decoupled:.3} without polariton feeding), sigma_r = {:.3}",
        stats.mean_nr, stats.sigma_nr
    )];
    for ratio in [0.25, 0.5, 1.0, 1.5] {
        details.push(format!("g_r sigma_r/gamma = {ratio}: modulation/0.05 = {:.3}", visibility(ratio)?));
    }
    let mut largest: f64 = 0.0;
    for ratio in [2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0] {
        let v = visibility(ratio)?;
        largest = largest.max(v);
        pass &= v < 1.0;
        details.push(format!("g_r sigma_r/gamma = {ratio}: modulation/0.05 = {v:.3}"));
    }
    Ok(Check::new(pass, format!("largest modulation/0.05 for g_r sigma_r/gamma >= 2 is {largest:.3}")).with(details))
}

fn feshbach_topology() -> Result<Check> {
    let cfg = presets::detuning_scan();
    let fesh = presets::feshbach().to_params(cfg.e_x)?;
    let detunings = presets::detuning_grid();
    let biexciton_resonance = resonance_detuning(cfg.omega, presets::feshbach().e_b / 2.0)?;
    let triexciton_resonance = resonance_detuning(cfg.omega, presets::feshbach().e_t / 3.0)?;
    let mut pass = true;
    let mut details = vec![format!(
        "biexciton resonance at Delta = {biexciton_resonance:.3} meV, triexciton resonance at {triexciton_resonance:.3} meV"
    )];
    let sources = [
        ("simulated linewidth", LinewidthSource::Diniz(presets::diniz())),
        ("constant linewidth", LinewidthSource::Constant(cfg.gamma)),
    ];
    for (label, width) in sources {
        let full = scan_detuning(&cfg, &fesh, &width, &detunings, InteractionMode::BiexcitonTriexciton)?.curve();
        let bx = scan_detuning(&cfg, &fesh, &width, &detunings, InteractionMode::Biexciton)?.curve();
        let minima = |c: &Curve, lo: f64, hi: f64| -> Vec<usize> {
            c.local_minima().into_iter().filter(|&i| c.x[i] > lo && c.x[i] < hi).collect()
        };
        let dips = |c: &Curve, lo: f64, hi: f64| -> Vec<usize> {
            minima(c, lo, hi).into_iter().filter(|&i| c.g2[i] < 2.0).collect()
        };
        let far = (full.g2[0] - 2.0).abs();
        let monotone = full.is_strictly_increasing() || full.is_strictly_decreasing();
        let attractive = dips(&full, 0.0, biexciton_resonance);
        let attractive_any = minima(&full, 0.0, biexciton_resonance);
        let attractive_bx = dips(&bx, 0.0, biexciton_resonance);
        let near_zero = dips(&full, -1.0, 0.0);
        let near_zero_bx = dips(&bx, -1.0, 0.0);
        let ok = far < 0.01 && !monotone && !attractive.is_empty() && !near_zero.is_empty() && near_zero_bx.is_empty();
        pass &= ok;
        let show = |c: &Curve, v: &[usize]| v.iter().map(|&i| format!("{:.2} ({:.3})", c.x[i], c.g2[i])).collect::<Vec<_>>().join(", ");
        details.push(format!(
            "{label}: |g2(-6 meV) - 2| = {far:.4}; local minima between 0 and the biexciton resonance: [{}] \
             (without g': [{}]); dips below 2 in (-1, 0) meV: [{}], without g': [{}] -> {}",
            show(&full, &attractive_any),
            show(&bx, &attractive_bx),
            show(&full, &near_zero),
            show(&bx, &near_zero_bx),
            if ok { "ok" } else { "topology mismatch" }
        ));
    }
    Ok(Check::new(pass, "g2 -> 2 far red, attractive-side dip, three-body dip near zero detuning").with(details))
}

fn anticrossing() -> Result<Check> {
    let truth = presets::coupled_oscillator();
    let noise = Normal::new(0.0, 0.05).expect("valid noise");
    let mut rng = RandomStream::new(SEED, 900).rng();
    let mut data = Vec::new();
    for i in 0..=152 {
        let v = 0.5 * i as f64;
        let p = truth.polariton(v)?;
        for (branch, energy) in [(Branch::Lower, p.e_lp), (Branch::Upper, p.e_up)] {
            data.push(AnticrossingPoint { voltage: v, branch, energy: energy + noise.sample(&mut rng), sigma: Some(0.05) });
        }
    }
    let start = CoupledOscillator { e_x: 1452.0, omega: 1.4, l0: 20.31, phi: 6.2, s1: 2.0e-3, s2: -1.0e-6, ..truth };
    let mut details = Vec::new();
    let all_free = fit_anticrossing(&data, &start, &[false; 8]);
    let summary = match &all_free {
        Ok(fit) => {
            let recovered = recovered_within(&fit.oscillator.to_params(), &fit.std_errors, &truth.to_params());
            format!("8 free parameters: {recovered}/8 within 3 SE, 2 Omega = {:.4} meV", fit.rabi_splitting)
        }
        Err(e) => format!("8 free parameters: {e}"),
    };
    let pass = match &all_free {
        Ok(fit) => {
            recovered_within(&fit.oscillator.to_params(), &fit.std_errors, &truth.to_params()) == 8
                && (fit.rabi_splitting / 3.0 - 1.0).abs() < 0.05
        }
        Err(_) => false,
    };
    for (label, frozen) in [("q fixed", &[5][..]), ("q and R fixed", &[3, 5][..])] {
        let mut fixed = [false; 8];
        frozen.iter().for_each(|&j| fixed[j] = true);
        match fit_anticrossing(&data, &start, &fixed) {
            Ok(fit) => {
                let got = fit.oscillator.to_params();
                let want = truth.to_params();
                let recovered = recovered_within(&got, &fit.std_errors, &want);
                details.push(format!(
                    "{label} at the true value: {recovered}/{} free parameters within 3 SE, \
                     2 Omega = {:.4} +- {:.4} meV ({:+.2}% from 3.0)",
                    8 - frozen.len(),
                    fit.rabi_splitting,
                    fit.rabi_splitting_err,
                    100.0 * (fit.rabi_splitting / 3.0 - 1.0)
                ));
                for (j, name) in ANTICROSSING_PARAMS.iter().enumerate().filter(|(j, _)| !fixed[*j]) {
                    details.push(format!("  {name}: {:.6e} +- {:.2e} (true {:.6e})", got[j], fit.std_errors[j], want[j]));
                }
            }
            Err(e) => details.push(format!("{label}: {e}")),
        }
    }
    Ok(Check::new(pass, summary).with(details))
}

fn recovered_within(got: &[f64; 8], err: &[f64; 8], want: &[f64; 8]) -> usize {
    (0..8).filter(|&j| err[j] > 0.0 && (got[j] - want[j]).abs() <= 3.0 * err[j]).count()
}

fn detector_round_trip() -> Result<Check> {
    let response = detector_response_from_pulse(presets::PULSE_G2_FWHM_PS, presets::PULSE_FWHM_PS)?;
    let peak = deconvolve_detector(presets::PEAK_SIGMA_PS, DETECTOR_SIGMA_PS)?;
    let a = (response - presets::DETECTOR_FWHM_PS).abs() <= 0.01;
    let b = (peak - 56.81).abs() <= 0.01;
    let synthetic = SyntheticPeak {
        t0_ps: 0.0,
        sigma_ps: presets::PEAK_SIGMA_PS,
        background: 37.0,
        g2_zero: 1.77,
        bin_ps: 4.0,
        half_span_ps: 2048.0,
    };
    let report = analyze(&[synthetic.expected()?], &AnalysisOptions::default())?.report;
    let change = report.datasets[0].deconvolved.relative_change;
    let c = change.abs() < 0.01;
    let details = vec![
        format!(
            "sqrt(23.54^2 - 5.01^2) = {response:.4} ps vs 22.97 quoted: {}",
            if a { "ok" } else { "differs by more than 0.01 ps" }
        ),
        format!("sqrt(57.64^2 - 9.75^2) = {peak:.4} ps vs 56.81: {}", if b { "ok" } else { "mismatch" }),
        format!(
            "g2(0) {:.4} -> {:.4} after deconvolution, relative change {:.3}%",
            report.datasets[0].estimate.g2_zero,
            report.datasets[0].deconvolved.g2_zero,
            100.0 * change
        ),
    ];
    Ok(Check::new(a && b && c, format!("arithmetic {}/2 within 0.01 ps, deconvolution change {:.3}%", a as u8 + b as u8, 100.0 * change)).with(details))
}

/// Taylor series `w(z) = Σ (iz)^k / Γ(k/2 + 1)`, summed until the terms vanish.
/// Cancellation limits it to `|z| ≲ 4`.
fn faddeeva_series(z: ComplexValue) -> ComplexValue {
    let iz = ComplexValue::new(-z.im, z.re);
    let iz2 = iz * iz;
    let mut even = ComplexValue::new(1.0, 0.0);
    let mut odd = iz * (2.0 / PI.sqrt());
    let mut sum = even + odd;
    let mut k = 0.0;
    loop {
        // Γ(k/2 + 2) = (k/2 + 1)·Γ(k/2 + 1).
        even = even * iz2 / (k / 2.0 + 1.0);
        odd = odd * iz2 / (k / 2.0 + 1.5);
        sum += even + odd;
        k += 2.0;
        if (even.norm() + odd.norm()) < 1e-18 * sum.norm() && k > 10.0 {
            return sum;
        }
    }
}

fn numerics() -> Result<Check> {
    let mut details = Vec::new();
    let mut worst_w: f64 = 0.0;
    for i in 0..40 {
        for j in 0..25 {
            let z = ComplexValue::new(-3.0 + 6.0 * i as f64 / 39.0, -1.5 + 4.0 * j as f64 / 24.0);
            let oracle = faddeeva_series(z);
            let w = faddeeva(z)?;
            worst_w = worst_w.max((w - oracle).norm() / oracle.norm());
        }
    }
    details.push(format!("Faddeeva vs Taylor series, 1000 points in [-3, 3] x [-1.5, 2.5]: max rel. error {worst_w:.2e}"));

    let mut worst_v: f64 = 0.0;
    for &(lorentz, gauss) in &[(GAMMA_LP, FILTER_FWHM), (GAMMA_LP, 0.35 * GAMMA_LP), (1.0, 40.0), (40.0, 1.0)] {
        for k in 0..25 {
            let delta = -3.0 * lorentz.max(gauss) + 6.0 * lorentz.max(gauss) * k as f64 / 24.0;
            let direct = voigt_overlap(delta, lorentz, gauss)?;
            let oracle = voigt_by_quadrature(delta, lorentz, gauss)?;
            worst_v = worst_v.max((direct - oracle).abs() / oracle);
        }
    }
    details.push(format!("Voigt overlap vs adaptive quadrature, 100 points: max rel. error {worst_v:.2e}"));

    let mut worst_j: f64 = 0.0;
    let peak_params = [20.0, 15.0, 3.0, 57.64];
    for k in 0..60 {
        let tau = -300.0 + 10.0 * k as f64;
        worst_j = worst_j.max(gradient_error(&GaussianPeak, tau, &peak_params));
    }
    let osc = presets::coupled_oscillator().to_params();
    for k in 0..=76 {
        for branch in [Branch::Lower, Branch::Upper] {
            worst_j = worst_j.max(gradient_error(&AnticrossingModel, (k as f64, branch), &osc));
        }
    }
    details.push(format!(
        "analytic Jacobians (Gaussian peak, anticrossing) vs central differences: max rel. error {worst_j:.2e}"
    ));
    let pass = worst_w <= 1e-6 && worst_v <= 1e-8 && worst_j <= 1e-6;
    Ok(Check::new(pass, format!("Faddeeva {worst_w:.1e}, Voigt {worst_v:.1e}, Jacobian {worst_j:.1e}")).with(details))
}

fn voigt_by_quadrature(delta: f64, lorentz: f64, gauss: f64) -> Result<f64> {
    let hw = lorentz / 2.0;
    let sigma = gauss / GAUSSIAN_FWHM_PER_SIGMA;
    let f = |w: f64| {
        let l = hw / PI / ((w - delta).powi(2) + hw * hw);
        let g = (-0.5 * (w / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
        l * g
    };
    quadrature(f, -12.0 * sigma, 12.0 * sigma, 1e-14)
}

/// Largest component error relative to the gradient's max-norm. The reference
/// is a Richardson-extrapolated central difference. Steps are halved from one
/// that moves the output by about 1% while the change stays above 1e-7 of the
/// output; the estimate where consecutive steps agree best is kept.
fn gradient_error<M: Model>(model: &M, x: M::Input, params: &[f64]) -> f64 {
    let mut analytic = vec![0.0; params.len()];
    model.gradient(x, params, &mut analytic);
    let f0 = model.eval(x, params).abs();
    let central = |j: usize, h: f64| {
        let mut p = params.to_vec();
        p[j] = params[j] + h;
        let hi = p[j];
        let up = model.eval(x, &p);
        p[j] = params[j] - h;
        let lo = p[j];
        (up - model.eval(x, &p)) / (hi - lo)
    };
    let scale = analytic.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (0..params.len())
        .map(|j| {
            let g = analytic[j].abs();
            let width = params[j].abs().max(1.0);
            let h0 = if g != 0.0 { (1e-2 * f0 / g).min(0.1 * width) } else { 1e-3 * width };
            let estimates: Vec<f64> = (0..30)
                .map(|k| h0 / f64::powi(2.0, k))
                .enumerate()
                .filter(|&(k, h)| k < 2 || g == 0.0 || h * g >= 1e-7 * f0)
                .map(|(_, h)| (4.0 * central(j, h / 2.0) - central(j, h)) / 3.0)
                .collect();
            let best = estimates
                .windows(2)
                .min_by(|a, b| (a[0] - a[1]).abs().total_cmp(&(b[0] - b[1]).abs()))
                .map(|w| w[1])
                .expect("several steps");
            (analytic[j] - best).abs() / scale
        })
        .fold(0.0, f64::max)
}
