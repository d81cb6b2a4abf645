//! Coordinate descent for `||X theta - y||_2^2 + lambda ||theta||_1`.
//!
//! No 1/2 and no 1/n: the zero solution is optimal iff
//! `lambda >= 2 ||X^T y||_inf`.

use nalgebra::{DMatrix, DVector};

use super::ipm::spd_solve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LassoConfig {
    /// Bound on the KKT violation, relative to `max(1, 2 ||X^T y||_inf)`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoOutput {
    pub theta: DVector<f64>,
    pub sweeps: usize,
    pub kkt_violation: f64,
    /// Objective after every sweep (and after every accepted polishing step).
    pub objective_trace: Vec<f64>,
}

pub fn soft_threshold(z: f64, kappa: f64) -> f64 {
    if z > kappa {
        z - kappa
    } else if z < -kappa {
        z + kappa
    } else {
        0.0
    }
}

pub fn lasso_solve(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    lambda: f64,
    cfg: &LassoConfig,
) -> Result<DVector<f64>> {
    let init = DVector::zeros(design.ncols());
    lasso_solve_from(design, target, lambda, &init, cfg).map(|o| o.theta)
}

/// Warm-started solves along a sequence of penalties.
pub fn lasso_path(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    lambdas: &[f64],
    cfg: &LassoConfig,
) -> Vec<Result<LassoOutput>> {
    let problem = Covariance::new(design, target);
    let mut warm = DVector::zeros(design.ncols());
    lambdas
        .iter()
        .map(|&lambda| {
            let out = problem.solve(lambda, &warm, cfg);
            if let Ok(o) = &out {
                warm = o.theta.clone();
            }
            out
        })
        .collect()
}

pub fn lasso_solve_from(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    lambda: f64,
    init: &DVector<f64>,
    cfg: &LassoConfig,
) -> Result<LassoOutput> {
    if design.nrows() != target.len() || init.len() != design.ncols() {
        return Err(Error::Dimension(format!(
            "design {}x{}, target {}, start {}",
            design.nrows(),
            design.ncols(),
            target.len(),
            init.len()
        )));
    }
    Covariance::new(design, target).solve(lambda, init, cfg)
}

/// The problem in covariance form: `Q = X^T X`, `c = X^T y`.
struct Covariance {
    q: DMatrix<f64>,
    c: DVector<f64>,
    yy: f64,
}

impl Covariance {
    fn new(design: &DMatrix<f64>, target: &DVector<f64>) -> Self {
        Self {
            q: design.tr_mul(design),
            c: design.tr_mul(target),
            yy: target.dot(target),
        }
    }

    fn objective(&self, theta: &DVector<f64>, grad: &DVector<f64>, lambda: f64) -> f64 {
        // grad = Q theta - c, so theta^T Q theta = theta^T (grad + c)
        let quad = theta.dot(&(grad + &self.c));
        quad - 2.0 * self.c.dot(theta) + self.yy + lambda * theta.iter().map(|t| t.abs()).sum::<f64>()
    }

    fn kkt_violation(&self, theta: &DVector<f64>, grad: &DVector<f64>, lambda: f64) -> f64 {
        theta
            .iter()
            .zip(grad.iter())
            .map(|(&t, &g)| {
                // subgradient condition: -2 g in lambda * d|t|
                if t != 0.0 {
                    (-2.0 * g - lambda * t.signum()).abs()
                } else {
                    ((2.0 * g).abs() - lambda).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Newton step on the current support and signs. `None` when the
    /// reduced system is singular or the signs do not persist.
    fn polish(&self, theta: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
        let support: Vec<usize> = (0..theta.len()).filter(|&j| theta[j] != 0.0).collect();
        if support.is_empty() {
            return None;
        }
        let q_aa = self.q.select_rows(support.iter()).select_columns(support.iter());
        let rhs = DVector::from_iterator(
            support.len(),
            support.iter().map(|&j| self.c[j] - 0.5 * lambda * theta[j].signum()),
        );
        let sol = spd_solve(q_aa, &rhs)?;
        let mut out = DVector::zeros(theta.len());
        for (&j, v) in support.iter().zip(sol.iter()) {
            if v.signum() != theta[j].signum() || *v == 0.0 {
                return None;
            }
            out[j] = *v;
        }
        Some(out)
    }

    fn solve(&self, lambda: f64, init: &DVector<f64>, cfg: &LassoConfig) -> Result<LassoOutput> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
        }
        let p = self.c.len();
        let tol = cfg.tol * (2.0 * self.c.amax()).max(1.0);
        let mut theta = init.clone();
        let mut grad = &self.q * &theta - &self.c;
        let mut trace = vec![self.objective(&theta, &grad, lambda)];
        let mut last_signs: Vec<i8> = Vec::new();

        for sweep in 0..cfg.max_sweeps {
            let violation = self.kkt_violation(&theta, &grad, lambda);
            if violation <= tol {
                return Ok(LassoOutput {
                    theta,
                    sweeps: sweep,
                    kkt_violation: violation,
                    objective_trace: trace,
                });
            }
            for j in 0..p {
                let qjj = self.q[(j, j)];
                if qjj <= 0.0 {
                    continue;
                }
                let old = theta[j];
                let rho = -grad[j] + qjj * old;
                let new = soft_threshold(rho, 0.5 * lambda) / qjj;
                if new != old {
                    theta[j] = new;
                    grad.axpy(new - old, &self.q.column(j), 1.0);
                }
            }
            let mut objective = self.objective(&theta, &grad, lambda);
            trace.push(objective);

            let signs: Vec<i8> = theta.iter().map(|t| t.signum() as i8 * (*t != 0.0) as i8).collect();
            if signs == last_signs {
                if let Some(candidate) = self.polish(&theta, lambda) {
                    let cand_grad = &self.q * &candidate - &self.c;
                    let cand_obj = self.objective(&candidate, &cand_grad, lambda);
                    if cand_obj <= objective {
                        theta = candidate;
                        grad = cand_grad;
                        objective = cand_obj;
                        trace.push(objective);
                    }
                }
            }
            last_signs = signs;
        }
        let violation = self.kkt_violation(&theta, &grad, lambda);
        if violation <= tol {
            return Ok(LassoOutput {
                theta,
                sweeps: cfg.max_sweeps,
                kkt_violation: violation,
                objective_trace: trace,
            });
        }
        Err(Error::LassoNoConvergence {
            sweeps: cfg.max_sweeps,
            kkt_violation: violation,
            last_iterate: theta.iter().cloned().collect(),
        })
    }
}
