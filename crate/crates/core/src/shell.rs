//! Distinctive-shell fitting.
//!
//! Minimizes
//!
//! ```text
//! J(mu, v) = (1/l) * sum_i (||f_i - mu||^2 - v)^2 + lambda * v^2
//! ```
//!
//! by alternating an exact `v` update, `v = max(0, mean_i x_i / (1 + lambda))`
//! with `x_i = ||f_i - mu||^2`, and one Armijo-backtracking gradient step on
//! `mu` with `grad_mu J = -(4/l) * sum_i (x_i - v)(f_i - mu)`. Both updates are
//! descent steps, so the recorded objective never increases.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{self, DatasetMatrix, Vector};

/// Default shell regularizer.
pub const DEFAULT_LAMBDA: f64 = 1e-3;

const ARMIJO_C: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Stop once the relative objective decrease of an iteration drops below this.
    pub rel_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iters: 500, rel_tol: 1e-8, initial_step: 1.0, shrink: 0.5, max_halvings: 30 }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::invalid("rel_tol", "must be positive"));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::invalid("initial_step", "must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::invalid("shrink", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// A fitted shell `S(center, sqrt(radius_sq))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub center: Vector,
    pub radius_sq: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub final_objective: f64,
}

impl Shell {
    /// A zero-radius shell, as produced by a single training point.
    pub fn is_degenerate(&self) -> bool {
        self.radius_sq == 0.0
    }
}

/// Fitted shell plus the objective after initialization and after every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellFit {
    pub shell: Shell,
    pub objective_trace: Vec<f64>,
}

fn distances_into(data: &DatasetMatrix, mu: &[f64], out: &mut [f64]) {
    for (x, row) in out.iter_mut().zip(data.rows()) {
        *x = geometry::sq_dist(row, mu);
    }
}

fn optimal_v(x: &[f64], lambda: f64) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    (mean / (1.0 + lambda)).max(0.0)
}

fn objective(x: &[f64], v: f64, lambda: f64) -> f64 {
    let fit = x.iter().map(|xi| (xi - v) * (xi - v)).sum::<f64>() / x.len() as f64;
    fit + lambda * v * v
}

pub fn fit_shell(data: &DatasetMatrix, lambda: f64, opts: &FitOptions) -> Result<Shell> {
    fit_shell_traced(data, lambda, opts).map(|f| f.shell)
}

pub fn fit_shell_traced(data: &DatasetMatrix, lambda: f64, opts: &FitOptions) -> Result<ShellFit> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", "must be non-negative and finite"));
    }
    opts.validate()?;
    let l = data.n_rows();
    let k = data.dim();
    let inv_l = 1.0 / l as f64;

    let mut mu = data.mean().into_inner();
    let mut x = alloc::vec![0.0; l];
    distances_into(data, &mu, &mut x);
    let mut v = optimal_v(&x, lambda);
    let mut j = objective(&x, v, lambda);
    let mut trace = alloc::vec![j];

    let mut grad = alloc::vec![0.0; k];
    let mut trial_mu = alloc::vec![0.0; k];
    let mut trial_x = alloc::vec![0.0; l];
    let mut iterations = 0;

    while iterations < opts.max_iters && j > 0.0 {
        iterations += 1;

        grad.iter_mut().for_each(|g| *g = 0.0);
        for (row, &xi) in data.rows().zip(&x) {
            let w = -4.0 * inv_l * (xi - v);
            for ((g, f), m) in grad.iter_mut().zip(row).zip(&mu) {
                *g += w * (f - m);
            }
        }
        let g2 = geometry::dot(&grad, &grad);
        if g2 == 0.0 {
            break;
        }

        let mut step = opts.initial_step;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            for ((t, m), g) in trial_mu.iter_mut().zip(&mu).zip(&grad) {
                *t = m - step * g;
            }
            distances_into(data, &trial_mu, &mut trial_x);
            let jt = objective(&trial_x, v, lambda);
            if jt <= j - ARMIJO_C * step * g2 {
                accepted = Some(jt);
                break;
            }
            step *= opts.shrink;
        }
        if accepted.is_none() {
            // Either the smallest trial step promised less than rounding noise
            // in J, or the gradient is at the rounding floor of its own terms
            // (each `x_i - v` carries an error of about `eps * x_i`): the
            // iterate is stationary to working precision.
            let promised = ARMIJO_C * (step / opts.shrink) * g2;
            let xbar = x.iter().sum::<f64>() * inv_l;
            let grad_floor = 1e3 * 4.0 * f64::EPSILON * xbar * libm::sqrt(xbar);
            if promised <= 1e3 * f64::EPSILON * j || libm::sqrt(g2) <= grad_floor {
                iterations -= 1;
                break;
            }
            return Err(Error::NoDescent { iteration: iterations, grad_norm: libm::sqrt(g2) });
        }
        core::mem::swap(&mut mu, &mut trial_mu);
        core::mem::swap(&mut x, &mut trial_x);

        v = optimal_v(&x, lambda);
        let j_new = objective(&x, v, lambda);
        trace.push(j_new);
        let rel = (j - j_new) / j;
        j = j_new;
        if rel < opts.rel_tol {
            break;
        }
    }

    if v == 0.0 {
        log::warn!("shell fit degenerated to zero radius ({l} training rows)");
    }

    Ok(ShellFit {
        shell: Shell {
            center: Vector::new(mu)?,
            radius_sq: v,
            lambda,
            iterations,
            final_objective: j.max(0.0),
        },
        objective_trace: trace,
    })
}

/// Squared distances `||f_j - center||^2` of every row to the shell center.
pub fn shell_distances(data: &DatasetMatrix, shell: &Shell) -> Result<Vec<f64>> {
    if data.dim() != shell.center.dim() {
        return Err(Error::DimensionMismatch { expected: shell.center.dim(), found: data.dim() });
    }
    let mut out = alloc::vec![0.0; data.n_rows()];
    distances_into(data, &shell.center, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> DatasetMatrix {
        DatasetMatrix::from_rows(&[[2.0, 0.0], [-2.0, 0.0], [0.0, 2.0], [0.0, -2.0]]).unwrap()
    }

    #[test]
    fn symmetric_exact_fit() {
        let s = fit_shell(&square(), 0.0, &FitOptions::default()).unwrap();
        assert_eq!(s.center.as_slice(), &[0.0, 0.0]);
        assert_eq!(s.radius_sq, 4.0);
        assert_eq!(s.final_objective, 0.0);
    }

    #[test]
    fn regularized_symmetric_fit() {
        let s = fit_shell(&square(), 0.25, &FitOptions::default()).unwrap();
        assert_eq!(s.center.as_slice(), &[0.0, 0.0]);
        assert!((s.radius_sq - 3.2).abs() < 1e-12);
    }

    #[test]
    fn single_point_degenerates() {
        let d = DatasetMatrix::from_rows(&[[0.3, -0.4, 1.0]]).unwrap();
        let s = fit_shell(&d, 0.0, &FitOptions::default()).unwrap();
        assert_eq!(s.center.as_slice(), d.row(0));
        assert!(s.is_degenerate());
        assert_eq!(s.final_objective, 0.0);
    }

    #[test]
    fn distances() {
        let shell = Shell { center: Vector::zeros(2), radius_sq: 0.0, lambda: 0.0, iterations: 0, final_objective: 0.0 };
        let d = DatasetMatrix::from_rows(&[[3.0, 4.0], [0.0, 0.0]]).unwrap();
        assert_eq!(shell_distances(&d, &shell).unwrap(), alloc::vec![25.0, 0.0]);
        let fitted = fit_shell(&square(), 0.0, &FitOptions::default()).unwrap();
        assert!(shell_distances(&square(), &fitted).unwrap().iter().all(|&x| x == fitted.radius_sq));
        let wrong = DatasetMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert!(shell_distances(&wrong, &shell).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(fit_shell(&square(), -1.0, &FitOptions::default()).is_err());
        let opts = FitOptions { max_iters: 0, ..FitOptions::default() };
        assert!(fit_shell(&square(), 0.0, &opts).is_err());
        let opts = FitOptions { rel_tol: 0.0, ..FitOptions::default() };
        assert!(fit_shell(&square(), 0.0, &opts).is_err());
    }
}
