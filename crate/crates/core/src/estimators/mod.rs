//! Regularized LSTD estimators working on an [`EmpiricalSystem`]:
//! plain LSTD, ridge, l1-LSTD, LASSO-TD (homotopy) and Dantzig-LSTD (LP).

mod dantzig;
mod lars_td;
mod verify;

pub use dantzig::{
    dantzig_lp, dantzig_lstd, dantzig_path, min_feasible_lambda, DantzigOperator,
};
pub use lars_td::{
    lasso_td, lasso_td_path, lasso_td_path_system, lasso_td_system, LarsTdConfig, PenaltyScale,
};
pub use verify::{
    certified_lambda, check_prop2, check_theorem1, theorem1_bound, Prop2Check, Theorem1Check,
};

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mrp::EmpiricalSystem;
use crate::solvers::{lasso_path, lasso_solve, LassoConfig, SolverConfig};

/// Coefficients with magnitude above this count toward the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Lstd,
    Ridge,
    Dantzig,
    L1Lstd,
    LassoTd,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lstd,
        Method::Ridge,
        Method::Dantzig,
        Method::L1Lstd,
        Method::LassoTd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lstd => "lstd",
            Method::Ridge => "ridge",
            Method::Dantzig => "dantzig",
            Method::L1Lstd => "l1_lstd",
            Method::LassoTd => "lasso_td",
        }
    }

    /// Whether the method has a regularization parameter.
    pub fn is_regularized(self) -> bool {
        self != Method::Lstd
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "lstd" => Ok(Method::Lstd),
            "ridge" | "ridge_lstd" | "l2" => Ok(Method::Ridge),
            "dantzig" | "d_lstd" | "dlstd" | "dantzig_lstd" => Ok(Method::Dantzig),
            "l1_lstd" | "l1lstd" | "l1" => Ok(Method::L1Lstd),
            "lasso_td" | "lassotd" | "lars_td" => Ok(Method::LassoTd),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub inf_norm_residual: f64,
    pub l2_norm_residual: f64,
    pub l1_norm_theta: f64,
    pub support_size: usize,
}

impl Diagnostics {
    pub fn compute(sys: &EmpiricalSystem, theta: &DVector<f64>) -> Self {
        let r = sys.residual(theta);
        Self {
            inf_norm_residual: linalg::inf_norm(&r),
            l2_norm_residual: r.norm(),
            l1_norm_theta: linalg::l1_norm(theta),
            support_size: theta.iter().filter(|t| t.abs() > SUPPORT_THRESHOLD).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub theta: DVector<f64>,
    pub lambda: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl Estimate {
    pub fn new(sys: &EmpiricalSystem, theta: DVector<f64>, lambda: f64, method: Method) -> Self {
        let diagnostics = Diagnostics::compute(sys, &theta);
        Self {
            theta,
            lambda,
            method,
            diagnostics,
        }
    }
}

/// One grid point or homotopy knot. Failures are kept, not fatal.
#[derive(Debug, Clone)]
pub struct PathPoint {
    pub lambda: f64,
    pub outcome: std::result::Result<Estimate, String>,
}

impl PathPoint {
    pub fn estimate(&self) -> Option<&Estimate> {
        self.outcome.as_ref().ok()
    }
}

/// Where a homotopy stopped before reaching `lambda = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFailure {
    pub lambda: f64,
    pub feature: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct RegularizationPath {
    pub method: Method,
    pub points: Vec<PathPoint>,
    /// Homotopy paths: knots are breakpoints and theta is linear in between.
    pub piecewise_linear: bool,
    pub failure: Option<PathFailure>,
    /// Set when a homotopy stopped at its active-set cap.
    pub truncated: bool,
}

impl RegularizationPath {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn estimates(&self) -> impl Iterator<Item = &Estimate> {
        self.points.iter().filter_map(|p| p.estimate())
    }

    /// Linear interpolation between homotopy knots. `None` outside the
    /// computed range or for grid paths.
    pub fn theta_at(&self, lambda: f64) -> Option<DVector<f64>> {
        if !self.piecewise_linear {
            return self
                .points
                .iter()
                .find(|p| p.lambda == lambda)
                .and_then(|p| p.estimate())
                .map(|e| e.theta.clone());
        }
        let knots: Vec<&Estimate> = self.estimates().collect();
        let first = knots.first()?;
        if lambda >= first.lambda {
            return Some(first.theta.clone());
        }
        for pair in knots.windows(2) {
            let (hi, lo) = (pair[0], pair[1]);
            if lambda <= hi.lambda && lambda >= lo.lambda {
                let span = hi.lambda - lo.lambda;
                let w = if span > 0.0 { (hi.lambda - lambda) / span } else { 1.0 };
                return Some(&hi.theta * (1.0 - w) + &lo.theta * w);
            }
        }
        None
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::InvalidInput("lambda grid values must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("lambda grid must be strictly decreasing".into()));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("lambda must be finite and >= 0, got {lambda}")))
    }
}

/// LSTD: solve `A~ theta = b~`.
pub fn lstd(sys: &EmpiricalSystem) -> Result<Estimate> {
    let theta = linalg::solve_checked(&sys.a, &sys.b, "empirical LSTD matrix")?;
    Ok(Estimate::new(sys, theta, 0.0, Method::Lstd))
}

/// Ridge LSTD: solve `(A~ + lambda I) theta = b~`.
pub fn ridge_lstd(sys: &EmpiricalSystem, lambda: f64) -> Result<Estimate> {
    check_lambda(lambda)?;
    let mut m = sys.a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += lambda;
    }
    let theta = linalg::solve_checked(&m, &sys.b, "A~ + lambda I")?;
    Ok(Estimate::new(sys, theta, lambda, Method::Ridge))
}

/// l1-LSTD: `argmin ||A~ theta - b~||^2 + lambda ||theta||_1`.
pub fn l1_lstd(sys: &EmpiricalSystem, lambda: f64, cfg: &LassoConfig) -> Result<Estimate> {
    check_lambda(lambda)?;
    let theta = lasso_solve(&sys.a, &sys.b, lambda, cfg)?;
    Ok(Estimate::new(sys, theta, lambda, Method::L1Lstd))
}

/// l1-LSTD along a decreasing grid with warm starts.
pub fn l1_lstd_path(sys: &EmpiricalSystem, grid: &[f64], cfg: &LassoConfig) -> Result<RegularizationPath> {
    check_grid(grid)?;
    let points = lasso_path(&sys.a, &sys.b, grid, cfg)
        .into_iter()
        .zip(grid)
        .map(|(out, &lambda)| PathPoint {
            lambda,
            outcome: out
                .map(|o| Estimate::new(sys, o.theta, lambda, Method::L1Lstd))
                .map_err(|e| e.to_string()),
        })
        .collect();
    Ok(RegularizationPath {
        method: Method::L1Lstd,
        points,
        piecewise_linear: false,
        failure: None,
        truncated: false,
    })
}

/// Solver settings for every estimator.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitConfig {
    pub lp: SolverConfig,
    pub lasso: LassoConfig,
    pub lars_td: LarsTdConfig,
}

/// Fit one method at one penalty. `lambda` is ignored by plain LSTD.
pub fn fit(method: Method, sys: &EmpiricalSystem, lambda: f64, cfg: &FitConfig) -> Result<Estimate> {
    match method {
        Method::Lstd => lstd(sys),
        Method::Ridge => ridge_lstd(sys, lambda),
        Method::Dantzig => dantzig_lstd(sys, lambda, &cfg.lp),
        Method::L1Lstd => l1_lstd(sys, lambda, &cfg.lasso),
        Method::LassoTd => lasso_td_system(sys, lambda, &cfg.lars_td),
    }
}

/// Fit one method over a decreasing grid. LASSO-TD is evaluated on its
/// homotopy at the grid values.
pub fn fit_grid(method: Method, sys: &EmpiricalSystem, grid: &[f64], cfg: &FitConfig) -> Result<RegularizationPath> {
    check_grid(grid)?;
    match method {
        Method::Dantzig => dantzig_path(sys, grid, &cfg.lp),
        Method::L1Lstd => l1_lstd_path(sys, grid, &cfg.lasso),
        Method::LassoTd => {
            let path = lasso_td_path_system(sys, &cfg.lars_td)?;
            let points = grid
                .iter()
                .map(|&lambda| PathPoint {
                    lambda,
                    outcome: match path.theta_at(lambda) {
                        Some(theta) => Ok(Estimate::new(sys, theta, lambda, Method::LassoTd)),
                        None => Err(path
                            .failure
                            .as_ref()
                            .map(|f| format!("homotopy stopped at lambda={:.6e}: {}", f.lambda, f.reason))
                            .unwrap_or_else(|| "homotopy truncated above this lambda".into())),
                    },
                })
                .collect();
            Ok(RegularizationPath {
                method,
                points,
                piecewise_linear: false,
                failure: path.failure,
                truncated: path.truncated,
            })
        }
        _ => Ok(RegularizationPath {
            method,
            points: grid
                .iter()
                .map(|&lambda| PathPoint {
                    lambda,
                    outcome: fit(method, sys, lambda, cfg).map_err(|e| e.to_string()),
                })
                .collect(),
            piecewise_linear: false,
            failure: None,
            truncated: false,
        }),
    }
}
