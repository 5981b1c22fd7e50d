//! Levenberg-Marquardt least squares with frozen parameters.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

const EPS_CBRT: f64 = 6.055_454_452_393_343e-6;
const RANK_TOLERANCE: f64 = 1e-10;

/// A parametric model `y = f(x; p)`.
pub trait Model {
    type Input: Copy;

    fn arity(&self) -> usize;

    fn eval(&self, x: Self::Input, params: &[f64]) -> f64;

    /// Writes `∂f/∂p_j` into `out`. Defaults to central differences.
    fn gradient(&self, x: Self::Input, params: &[f64], out: &mut [f64]) {
        finite_difference_gradient(self, x, params, out);
    }

    /// Step used by the central-difference gradient for parameter `j`.
    fn difference_step(&self, j: usize, params: &[f64]) -> f64 {
        EPS_CBRT * params[j].abs().max(1.0)
    }
}

/// Central-difference gradient of `model` at `params`.
pub fn finite_difference_gradient<M: Model + ?Sized>(
    model: &M,
    x: M::Input,
    params: &[f64],
    out: &mut [f64],
) {
    let mut p = params.to_vec();
    for j in 0..params.len() {
        let h = model.difference_step(j, params);
        p[j] = params[j] + h;
        let up = model.eval(x, &p);
        p[j] = params[j] - h;
        let down = model.eval(x, &p);
        p[j] = params[j];
        out[j] = (up - down) / (2.0 * h);
    }
}

/// Wraps a closure `f(x, p)` as a [`Model`] with numerical gradients.
pub struct FnModel<F> {
    arity: usize,
    f: F,
}

impl<F: Fn(f64, &[f64]) -> f64> FnModel<F> {
    pub fn new(arity: usize, f: F) -> Self {
        Self { arity, f }
    }
}

impl<F: Fn(f64, &[f64]) -> f64> Model for FnModel<F> {
    type Input = f64;
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, x: f64, params: &[f64]) -> f64 {
        (self.f)(x, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint<X> {
    pub x: X,
    pub y: f64,
    /// One-standard-deviation uncertainty of `y`. Either every point carries
    /// one or none does.
    pub sigma: Option<f64>,
}

impl<X> DataPoint<X> {
    pub fn new(x: X, y: f64, sigma: Option<f64>) -> Self {
        Self { x, y, sigma }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative cost reduction below which an accepted step ends the fit.
    pub ftol: f64,
    /// Relative step size below which an accepted step ends the fit.
    pub xtol: f64,
    /// Largest cosine between the residual vector and any Jacobian column at convergence.
    pub gtol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 500, ftol: 1e-14, xtol: 1e-13, gtol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Zero for frozen parameters. Absolute when the data carried uncertainties,
    /// otherwise scaled by the reduced chi-square.
    pub std_errors: Vec<f64>,
    /// Euclidean norm of the (weighted) residual vector.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub chi_square: f64,
    pub dof: usize,
    /// Covariance of the free parameters expanded to full size (zeros for frozen ones).
    pub covariance: Vec<Vec<f64>>,
}

impl FitResult {
    pub fn reduced_chi_square(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi_square / self.dof as f64
        }
    }
}

pub fn fit_least_squares<M: Model>(
    model: &M,
    data: &[DataPoint<M::Input>],
    init: &[f64],
    fixed_mask: &[bool],
) -> Result<FitResult> {
    fit_least_squares_with(model, data, init, fixed_mask, &FitOptions::default())
}

struct Problem<'a, M: Model> {
    model: &'a M,
    data: &'a [DataPoint<M::Input>],
    free: Vec<usize>,
    weights: Vec<f64>,
}

impl<M: Model> Problem<'_, M> {
    fn residuals(&self, params: &[f64]) -> Option<DVector<f64>> {
        let r = DVector::from_iterator(
            self.data.len(),
            self.data
                .iter()
                .zip(&self.weights)
                .map(|(d, w)| (d.y - self.model.eval(d.x, params)) * w),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let mut grad = vec![0.0; params.len()];
        let mut jac = DMatrix::zeros(self.data.len(), self.free.len());
        for (i, (d, w)) in self.data.iter().zip(&self.weights).enumerate() {
            self.model.gradient(d.x, params, &mut grad);
            for (c, &j) in self.free.iter().enumerate() {
                jac[(i, c)] = grad[j] * w;
            }
        }
        jac
    }
}

pub fn fit_least_squares_with<M: Model>(
    model: &M,
    data: &[DataPoint<M::Input>],
    init: &[f64],
    fixed_mask: &[bool],
    options: &FitOptions,
) -> Result<FitResult> {
    let arity = model.arity();
    if init.len() != arity {
        return Err(Error::invalid(format!("expected {arity} initial parameters, got {}", init.len())));
    }
    if fixed_mask.len() != arity {
        return Err(Error::invalid(format!("fixed mask length {} != arity {arity}", fixed_mask.len())));
    }
    if init.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("initial parameters must be finite"));
    }
    let free: Vec<usize> = (0..arity).filter(|&j| !fixed_mask[j]).collect();
    if data.len() < free.len() {
        return Err(Error::invalid(format!(
            "{} data points cannot determine {} free parameters",
            data.len(),
            free.len()
        )));
    }
    let with_sigma = data.iter().filter(|d| d.sigma.is_some()).count();
    if with_sigma != 0 && with_sigma != data.len() {
        return Err(Error::invalid("either all data points carry sigma or none do"));
    }
    let absolute = with_sigma == data.len() && !data.is_empty();
    let mut weights = Vec::with_capacity(data.len());
    for d in data {
        if !d.y.is_finite() {
            return Err(Error::invalid("data values must be finite"));
        }
        match d.sigma {
            Some(s) if !(s > 0.0 && s.is_finite()) => {
                return Err(Error::invalid(format!("sigma must be positive and finite, got {s}")));
            }
            Some(s) => weights.push(1.0 / s),
            None => weights.push(1.0),
        }
    }
    let problem = Problem { model, data, free, weights };
    let m = problem.free.len();

    let mut params = init.to_vec();
    let mut r = problem
        .residuals(&params)
        .ok_or_else(|| Error::invalid("model is not finite at the initial parameters"))?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut scale = DVector::<f64>::zeros(m);
    let mut converged = m == 0;
    let mut iterations = 0;

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&params);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;

        let r_norm = r.norm();
        if r_norm == 0.0 {
            converged = true;
            break;
        }
        let gradient_cosine = (0..m)
            .map(|c| {
                let col = jac.column(c).norm();
                if col == 0.0 { 0.0 } else { grad[c].abs() / (col * r_norm) }
            })
            .fold(0.0, f64::max);
        if gradient_cosine <= options.gtol {
            converged = true;
            break;
        }
        for c in 0..m {
            scale[c] = scale[c].max(jtj[(c, c)]).max(f64::MIN_POSITIVE);
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj.clone();
            for c in 0..m {
                damped[(c, c)] += lambda * scale[c];
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&grad);
            let mut trial = params.clone();
            for (c, &j) in problem.free.iter().enumerate() {
                trial[j] += step[c];
            }
            match problem.residuals(&trial) {
                Some(r_trial) if r_trial.norm_squared() < cost => {
                    let new_cost = r_trial.norm_squared();
                    let reduction = (cost - new_cost) / cost;
                    let p_norm: f64 =
                        problem.free.iter().map(|&j| params[j] * params[j]).sum::<f64>().sqrt();
                    let small_step = step.norm() <= options.xtol * (p_norm + options.xtol);
                    params = trial;
                    r = r_trial;
                    cost = new_cost;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if reduction <= options.ftol || small_step {
                        converged = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            // No descent direction left at machine precision.
            converged = true;
        }
    }

    let jac = problem.jacobian(&params);
    let covariance_free = free_covariance(&jac)?;
    let dof = data.len() - m;
    let chi_square = cost;
    let variance_scale = if absolute || dof == 0 { 1.0 } else { chi_square / dof as f64 };
    let mut covariance = vec![vec![0.0; arity]; arity];
    for (a, &ja) in problem.free.iter().enumerate() {
        for (b, &jb) in problem.free.iter().enumerate() {
            covariance[ja][jb] = covariance_free[(a, b)] * variance_scale;
        }
    }
    let std_errors = (0..arity).map(|j| covariance[j][j].max(0.0).sqrt()).collect();
    Ok(FitResult {
        params,
        std_errors,
        residual_norm: chi_square.sqrt(),
        converged,
        iterations,
        chi_square,
        dof,
        covariance,
    })
}

/// `(JᵀJ)⁻¹` through an SVD of the column-normalized Jacobian, with a rank check.
fn free_covariance(jac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = jac.ncols();
    if m == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norms: Vec<f64> = (0..m).map(|c| jac.column(c).norm()).collect();
    if norms.iter().any(|&n| n == 0.0 || !n.is_finite()) {
        let rank = norms.iter().filter(|&&n| n > 0.0 && n.is_finite()).count();
        return Err(Error::RankDeficient { rank, free: m });
    }
    let mut normalized = jac.clone();
    for (c, n) in norms.iter().enumerate() {
        normalized.column_mut(c).scale_mut(1.0 / n);
    }
    let svd = normalized.svd(false, true);
    let s = &svd.singular_values;
    let s_max = s.max();
    let rank = s.iter().filter(|&&v| v > RANK_TOLERANCE * s_max).count();
    if rank < m {
        return Err(Error::RankDeficient { rank, free: m });
    }
    let v_t = svd.v_t.expect("requested V^T");
    let mut inv = DMatrix::zeros(m, m);
    for k in 0..m {
        let w = 1.0 / (s[k] * s[k]);
        for a in 0..m {
            for b in 0..m {
                inv[(a, b)] += v_t[(k, a)] * v_t[(k, b)] * w;
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            inv[(a, b)] /= norms[a] * norms[b];
        }
    }
    Ok(inv)
}
