//! Damped Gauss-Newton least squares and the two model fits.

mod models;

pub use models::{
    fit_gain_curve, fit_nrf_curve, gain_model, nrf_model, synthetic_gain_points, synthetic_nrf_points, GainFit, NrfFit,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kv::{fmt_f64, KvBlock};

pub const INITIAL_DAMPING: f64 = 1e-3;
pub const STEP_TOLERANCE: f64 = 1e-10;
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;
const MAX_DAMPING: f64 = 1e20;
/// Singular values below this fraction of the largest (after column
/// scaling) mark directions the data does not constrain.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
    /// Inverse variance, 1 when unknown.
    pub weight: f64,
}

impl FitPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, weight: 1.0 }
    }
}

pub type ModelFn<'a> = dyn Fn(f64, &[f64]) -> f64 + Sync + 'a;

pub struct FitProblem<'a> {
    pub name: String,
    pub points: Vec<FitPoint>,
    pub model: Box<ModelFn<'a>>,
    pub bounds: Vec<(f64, f64)>,
    pub initial_guess: Vec<f64>,
}

impl FitProblem<'_> {
    fn validate(&self) -> Result<()> {
        let p = self.initial_guess.len();
        if p == 0 {
            return Err(Error::InvalidProblem("no parameters".into()));
        }
        if self.bounds.len() != p {
            return Err(Error::InvalidProblem(format!("{} bounds for {p} parameters", self.bounds.len())));
        }
        if self.points.len() < p + 2 {
            return Err(Error::InvalidProblem(format!(
                "{} points for {p} parameters; at least {} are needed",
                self.points.len(),
                p + 2
            )));
        }
        for (i, (&x, &(lo, hi))) in self.initial_guess.iter().zip(&self.bounds).enumerate() {
            if !(lo <= x && x <= hi) {
                return Err(Error::InvalidProblem(format!(
                    "initial value {x} of parameter {i} outside bounds [{lo}, {hi}]"
                )));
            }
        }
        if self
            .points
            .iter()
            .any(|pt| !pt.x.is_finite() || !pt.y.is_finite() || !(pt.weight > 0.0 && pt.weight.is_finite()))
        {
            return Err(Error::InvalidProblem("points need finite x, y and a positive weight".into()));
        }
        Ok(())
    }

    fn residuals(&self, params: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.points.len(),
            self.points
                .iter()
                .map(|pt| pt.weight.sqrt() * (pt.y - (self.model)(pt.x, params))),
        )
    }

    /// Forward differences of the weighted model, `J_ij = d(sqrt(w_i) f_i)/dp_j`.
    /// The step is `sqrt(eps) max(|p_j|, 1e-8)`, taken backwards when a
    /// forward step would leave the upper bound.
    pub fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let n = self.points.len();
        let base: Vec<f64> = self.points.iter().map(|pt| (self.model)(pt.x, params)).collect();
        let mut jac = DMatrix::zeros(n, params.len());
        let mut shifted = params.to_vec();
        for j in 0..params.len() {
            let mut h = f64::EPSILON.sqrt() * params[j].abs().max(1e-8);
            if params[j] + h > self.bounds[j].1 {
                h = -h;
            }
            shifted[j] = params[j] + h;
            let h_exact = shifted[j] - params[j];
            for (i, pt) in self.points.iter().enumerate() {
                jac[(i, j)] = pt.weight.sqrt() * ((self.model)(pt.x, &shifted) - base[i]) / h_exact;
            }
            shifted[j] = params[j];
        }
        jac
    }

    fn project(&self, params: &mut [f64]) {
        for (p, &(lo, hi)) in params.iter_mut().zip(&self.bounds) {
            *p = p.clamp(lo, hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameters: Vec<f64>,
    /// Residual-variance scaled pseudo-inverse of `J^T J`. Rows and columns of
    /// unidentifiable parameters carry an infinite variance.
    pub covariance: DMatrix<f64>,
    /// `sqrt(sum w r^2)`.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub unidentifiable: Vec<usize>,
    /// Cost after every accepted step, starting with the initial guess.
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.parameters.len()).map(|i| self.covariance[(i, i)].max(0.0).sqrt()).collect()
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let c = &self.covariance;
        c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt()
    }

    pub fn trace(&self) -> String {
        let tail: Vec<String> = self.cost_history.iter().rev().take(5).rev().map(|c| format!("{c:.6e}")).collect();
        format!("parameters {:?}, last costs [{}]", self.parameters, tail.join(", "))
    }

    /// `key=value` report with parameter values and standard errors.
    pub fn to_kv(&self, names: &[&str]) -> KvBlock {
        let mut b = KvBlock::default();
        let se = self.std_errors();
        for (i, name) in names.iter().enumerate() {
            b.push(format!("fit.{name}"), fmt_f64(self.parameters[i]));
            b.push(format!("fit.{name}_err"), fmt_f64(se[i]));
        }
        b.push("fit.residual_norm", fmt_f64(self.residual_norm));
        b.push("fit.converged", self.converged);
        b.push("fit.iterations", self.iterations);
        let unident: Vec<&str> = self.unidentifiable.iter().map(|&i| names.get(i).copied().unwrap_or("?")).collect();
        b.push("fit.unidentifiable", unident.join(" "));
        b
    }

    pub(crate) fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::FitNotConverged {
                iterations: self.iterations,
                cost: self.cost_history.last().copied().unwrap_or(f64::NAN),
                trace: self.trace(),
            })
        }
    }
}

fn cost_of(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

/// Damped Gauss-Newton (Levenberg-Marquardt) with bounds by projection.
///
/// Each iteration solves `(J^T J + lambda diag(J^T J)) d = J^T r`; a step is
/// accepted only if it lowers the cost, after which `lambda` shrinks tenfold,
/// otherwise it grows tenfold. Convergence is declared when a step is below
/// `STEP_TOLERANCE` relative to the parameters or the scaled gradient
/// `max_j |g_j| max(|p_j|, 1) / max(cost, 1)` is below `GRADIENT_TOLERANCE`.
/// Exhausting the iterations returns `converged = false`.
pub fn solve_least_squares(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let mut params = problem.initial_guess.clone();
    let mut r = problem.residuals(&params);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::InvalidProblem("model is not finite at the initial guess".into()));
    }
    let mut lambda = INITIAL_DAMPING;
    let mut history = vec![cost];
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = problem.jacobian(&params);

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let scaled_grad = g
            .iter()
            .zip(&params)
            .map(|(gj, pj)| gj.abs() * pj.abs().max(1.0))
            .fold(0.0, f64::max)
            / cost.max(1.0);
        if scaled_grad < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }

        // inner loop: raise the damping until a step lowers the cost
        let mut accepted = false;
        while lambda <= MAX_DAMPING {
            let mut a = jtj.clone();
            for j in 0..a.nrows() {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            problem.project(&mut trial);
            let moved = trial.iter().zip(&params).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = params.iter().map(|p| p * p).sum::<f64>().sqrt();
            let tiny = moved <= STEP_TOLERANCE * (scale + STEP_TOLERANCE);
            let r_trial = problem.residuals(&trial);
            let c_trial = cost_of(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                params = trial;
                r = r_trial;
                cost = c_trial;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                converged = tiny;
                break;
            }
            if tiny {
                converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // no damping produced a decrease: numerically stationary
            converged = true;
            break;
        }
        jac = problem.jacobian(&params);
    }

    let dof = problem.points.len().saturating_sub(params.len()).max(1) as f64;
    let (covariance, unidentifiable) = covariance(&problem.jacobian(&params), 2.0 * cost / dof);
    Ok(FitResult {
        parameters: params,
        covariance,
        residual_norm: (2.0 * cost).sqrt(),
        converged,
        iterations,
        unidentifiable,
        cost_history: history,
    })
}

/// `s2 (J^T J)^+` through an SVD of the column-scaled Jacobian.
fn covariance(jac: &DMatrix<f64>, s2: f64) -> (DMatrix<f64>, Vec<usize>) {
    let p = jac.ncols();
    let norms: Vec<f64> = (0..p).map(|j| jac.column(j).norm()).collect();
    let mut scaled = jac.clone();
    for (j, &nj) in norms.iter().enumerate() {
        if nj > 0.0 {
            scaled.column_mut(j).unscale_mut(nj);
        }
    }
    let svd = scaled.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut cov = DMatrix::zeros(p, p);
    let mut unidentifiable = vec![false; p];
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let row = v_t.row(k);
        if s > RANK_TOLERANCE * s_max && s > 0.0 {
            cov += row.transpose() * row / (s * s);
        } else {
            for j in 0..p {
                if row[j].abs() > 1e-3 {
                    unidentifiable[j] = true;
                }
            }
        }
    }
    for j in 0..p {
        if norms[j] == 0.0 {
            unidentifiable[j] = true;
        }
    }
    for i in 0..p {
        for j in 0..p {
            cov[(i, j)] = if unidentifiable[i] || unidentifiable[j] {
                if i == j {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                s2 * cov[(i, j)] / (norms[i] * norms[j])
            };
        }
    }
    let list = (0..p).filter(|&j| unidentifiable[j]).collect();
    (cov, list)
}
