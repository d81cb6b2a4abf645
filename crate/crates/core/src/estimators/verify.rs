//! Checks tying the estimators to their guarantees: Dantzig feasibility of
//! LASSO-TD solutions and the deterministic core of the finite-sample bound.

use super::{dantzig_lstd, lasso_td_system, LarsTdConfig, PenaltyScale};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mrp::{EmpiricalSystem, ModelSystem};
use crate::solvers::SolverConfig;

const PROP2_SLACK: f64 = 1e-7;
const THEOREM1_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop2Check {
    /// `||A~ theta_lasso - b~||_inf <= lambda + 1e-7`
    pub feasible: bool,
    pub inf_residual_lasso: f64,
    pub l1_lasso: f64,
    pub l1_dantzig: f64,
}

impl Prop2Check {
    /// Both halves: feasibility and `l1_dantzig <= l1_lasso + 1e-7`.
    pub fn holds(&self) -> bool {
        self.feasible && self.l1_dantzig <= self.l1_lasso + PROP2_SLACK
    }
}

/// Solve LASSO-TD and D-LSTD at the same lambda (correlation units) and
/// compare. Propagates LASSO-TD failures.
pub fn check_prop2(
    sys: &EmpiricalSystem,
    lambda: f64,
    lars: &LarsTdConfig,
    lp: &SolverConfig,
) -> Result<Prop2Check> {
    let lars = LarsTdConfig {
        scale: PenaltyScale::Correlation,
        ..*lars
    };
    let lasso = lasso_td_system(sys, lambda, &lars)?;
    let dantzig = dantzig_lstd(sys, lambda, lp)?;
    let inf_residual_lasso = lasso.diagnostics.inf_norm_residual;
    Ok(Prop2Check {
        feasible: inf_residual_lasso <= lambda + PROP2_SLACK,
        inf_residual_lasso,
        l1_lasso: lasso.diagnostics.l1_norm_theta,
        l1_dantzig: dantzig.diagnostics.l1_norm_theta,
    })
}

/// `||A - A~||_max ||theta*||_1 + ||b - b~||_inf`: the smallest lambda for
/// which `theta*` satisfies the empirical Dantzig constraint by the triangle
/// inequality.
pub fn certified_lambda(model: &ModelSystem, sys: &EmpiricalSystem) -> Result<f64> {
    let theta_star = model
        .theta_star
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("model system has no theta* (A is singular)".into()))?;
    if model.a.shape() != sys.a.shape() {
        return Err(Error::Dimension("model and empirical systems differ in size".into()));
    }
    let delta_a = linalg::max_norm(&(&model.a - &sys.a));
    let delta_b = linalg::inf_norm(&(&model.b - &sys.b));
    Ok(delta_a * linalg::l1_norm(theta_star) + delta_b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Check {
    pub lambda: f64,
    /// `||A theta_d - b||_inf`
    pub lhs: f64,
    /// `2 lambda`
    pub rhs: f64,
    pub holds: bool,
}

/// Run D-LSTD at the certified lambda and check
/// `||A theta_d - b||_inf <= 2 (Delta_A ||theta*||_1 + Delta_b)`.
pub fn check_theorem1(
    model: &ModelSystem,
    sys: &EmpiricalSystem,
    lp: &SolverConfig,
) -> Result<Theorem1Check> {
    let lambda = certified_lambda(model, sys)?;
    let est = dantzig_lstd(sys, lambda, lp)?;
    let lhs = linalg::inf_norm(&(&model.a * &est.theta - &model.b));
    let rhs = 2.0 * lambda;
    Ok(Theorem1Check {
        lambda,
        lhs,
        rhs,
        holds: lhs <= rhs + THEOREM1_SLACK,
    })
}

/// The high-probability bound
/// `2 (||theta*||_1 (1 + gamma) B + r_max) B sqrt((4/n) ln(8p/delta))`.
pub fn theorem1_bound(
    theta_star_l1: f64,
    gamma: f64,
    b_inf_phi: f64,
    r_max: f64,
    n: usize,
    p: usize,
    delta: f64,
) -> f64 {
    2.0 * (theta_star_l1 * (1.0 + gamma) * b_inf_phi + r_max)
        * b_inf_phi
        * ((4.0 / n as f64) * (8.0 * p as f64 / delta).ln()).sqrt()
}
