//! LASSO-TD by LARS-style homotopy on the correlation vector
//! `c(theta) = b~ - A~ theta = (1/n) Phi~^T (R~ + gamma Phi~' theta - Phi~ theta)`.
//!
//! Along the path `|c_j| <= beta` for every feature, with equality and
//! `sign(theta_j) = sign(c_j)` on the active set. Each segment moves the
//! active coefficients by `A~_AA^{-1} sign(c_A)` per unit decrease of `beta`.
//! The homotopy is well defined when `A~` is a P-matrix; violations are
//! reported as [`Error::PMatrixFailure`].

use nalgebra::DVector;

use super::{check_lambda, Estimate, Method, PathFailure, PathPoint, RegularizationPath};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mrp::{empirical_system, EmpiricalSystem, SampleSet};

/// How a user-facing lambda maps to the correlation bound `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyScale {
    /// `||b~ - A~ theta||_inf <= lambda`: the same units as the Dantzig
    /// constraint, so both estimators are compared at equal lambda.
    #[default]
    Correlation,
    /// `||R~ + gamma Phi~' theta - Phi~ w||^2 + lambda ||w||_1` on the raw
    /// (unnormalized) samples, i.e. `beta = lambda / (2 n)`.
    SquaredLoss,
}

impl PenaltyScale {
    fn to_beta(self, lambda: f64, n: usize) -> f64 {
        match self {
            PenaltyScale::Correlation => lambda,
            PenaltyScale::SquaredLoss => lambda / (2.0 * n as f64),
        }
    }

    fn from_beta(self, beta: f64, n: usize) -> f64 {
        match self {
            PenaltyScale::Correlation => beta,
            PenaltyScale::SquaredLoss => beta * 2.0 * n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LarsTdConfig {
    pub scale: PenaltyScale,
    /// Stop (without failure) once this many features are active.
    pub max_active: Option<usize>,
    pub max_steps: usize,
    /// Relative threshold for a principal pivot to count as positive.
    pub pivot_tol: f64,
}

impl Default for LarsTdConfig {
    fn default() -> Self {
        Self {
            scale: PenaltyScale::Correlation,
            max_active: None,
            max_steps: 10_000,
            pivot_tol: 1e-10,
        }
    }
}

struct Knot {
    beta: f64,
    theta: DVector<f64>,
}

enum Stop {
    Reached,
    Truncated,
    Failed(PathFailure),
}

/// Run the homotopy from `beta_max` down to `beta_target`.
fn homotopy(sys: &EmpiricalSystem, beta_target: f64, cfg: &LarsTdConfig) -> (Vec<Knot>, Stop) {
    let p = sys.dim();
    let cap = cfg.max_active.unwrap_or(p).min(p);
    let mut theta = DVector::zeros(p);
    let mut corr = sys.b.clone();
    let mut beta = linalg::inf_norm(&corr);
    let mut knots = vec![Knot {
        beta,
        theta: theta.clone(),
    }];
    if beta <= beta_target || beta == 0.0 {
        return (knots, Stop::Reached);
    }
    let scale = linalg::max_norm(&sys.a).max(f64::MIN_POSITIVE);

    let first = (0..p)
        .max_by(|&i, &j| corr[i].abs().total_cmp(&corr[j].abs()).then(j.cmp(&i)))
        .expect("p >= 1");
    let mut active: Vec<usize> = vec![first];
    let mut signs: Vec<f64> = vec![corr[first].signum()];
    let mut entering = Some(first);
    let mut last_removed: Option<usize> = None;

    for _ in 0..cfg.max_steps {
        let k = active.len();
        let a_aa = sys.a.select_rows(active.iter()).select_columns(active.iter());
        let fail = |feature: usize, reason: String| {
            Stop::Failed(PathFailure {
                lambda: beta,
                feature,
                reason,
            })
        };

        if let Some(j) = entering {
            // Schur pivot = det(A_{A}) / det(A_{A \ j}) for the newly added j.
            let pos = active.iter().position(|&a| a == j).expect("entering is active");
            let others: Vec<usize> = (0..k).filter(|&i| i != pos).collect();
            let pivot = if others.is_empty() {
                a_aa[(pos, pos)]
            } else {
                let a_oo = a_aa.select_rows(others.iter()).select_columns(others.iter());
                let a_oj = DVector::from_iterator(others.len(), others.iter().map(|&i| a_aa[(i, pos)]));
                let a_jo = DVector::from_iterator(others.len(), others.iter().map(|&i| a_aa[(pos, i)]));
                match a_oo.lu().solve(&a_oj) {
                    Some(x) => a_aa[(pos, pos)] - a_jo.dot(&x),
                    None => f64::NAN,
                }
            };
            if !(pivot > cfg.pivot_tol * scale) {
                return (knots, fail(j, format!("non-positive principal pivot {pivot:.3e} when adding the feature (A~ is not a P-matrix)")));
            }
        }

        let s_a = DVector::from_column_slice(&signs);
        let Some(dir) = a_aa.clone().lu().solve(&s_a) else {
            return (knots, fail(active[k - 1], "singular active submatrix".into()));
        };
        if let Some(j) = entering {
            let pos = active.iter().position(|&a| a == j).expect("entering is active");
            if dir[pos] * signs[pos] <= 0.0 {
                return (knots, fail(j, format!(
                    "sign-inconsistent step: coefficient moves {:+.3e} against correlation sign {:+}",
                    dir[pos], signs[pos]
                )));
            }
        }
        // Rate of change of the correlations per unit decrease in beta.
        let mut full_dir = DVector::zeros(p);
        for (i, &j) in active.iter().enumerate() {
            full_dir[j] = dir[i];
        }
        let dcorr = &sys.a * &full_dir;

        // A feature that just left the active set sits on the boundary
        // |c_j| = beta and must move inward at least as fast as beta shrinks.
        let skip = last_removed.take();
        if let Some(j) = skip {
            let rate = corr[j].signum() * dcorr[j];
            if rate < 1.0 - 1e-9 {
                return (knots, fail(j, format!(
                    "removed feature's correlation leaves the band (rate {rate:.3e} < 1); the path is not continuous (A~ is not a P-matrix)"
                )));
            }
        }
        let eps = 1e-12 * beta.max(1e-300);
        let mut step = beta - beta_target;
        let mut event: Option<(usize, bool)> = None; // (feature, is_removal)

        for (i, &j) in active.iter().enumerate() {
            if dir[i] != 0.0 {
                let t = -theta[j] / dir[i];
                if t > eps && t <= step * (1.0 + 1e-12) {
                    let better = t < step * (1.0 - 1e-12) || !matches!(event, Some((_, true)));
                    if better {
                        step = t;
                        event = Some((j, true));
                    }
                }
            }
        }
        for j in 0..p {
            if active.contains(&j) {
                continue;
            }
            for (side, num, den) in [(1.0, beta - corr[j], 1.0 - dcorr[j]), (-1.0, beta + corr[j], 1.0 + dcorr[j])] {
                // a just-removed feature can only re-enter on the opposite side
                if Some(j) == skip && side == corr[j].signum() {
                    continue;
                }
                if den > 0.0 {
                    let t = num / den;
                    // removal wins ties
                    if t > eps && t < step * (1.0 - 1e-12) {
                        step = t;
                        event = Some((j, false));
                    }
                }
            }
        }
        if step < 0.0 {
            return (knots, fail(active[k - 1], format!("negative step length {step:.3e}")));
        }

        theta += &full_dir * step;
        corr -= &dcorr * step;
        beta -= step;

        match event {
            None => {
                beta = beta_target;
                knots.push(Knot {
                    beta,
                    theta: theta.clone(),
                });
                return (knots, Stop::Reached);
            }
            Some((j, true)) => {
                let pos = active.iter().position(|&a| a == j).expect("removed is active");
                active.remove(pos);
                signs.remove(pos);
                theta[j] = 0.0;
                entering = None;
                last_removed = Some(j);
                knots.push(Knot {
                    beta,
                    theta: theta.clone(),
                });
                if active.is_empty() {
                    // every coefficient returned to zero; restart from the top correlation
                    let top = (0..p)
                        .max_by(|&a, &b| corr[a].abs().total_cmp(&corr[b].abs()).then(b.cmp(&a)))
                        .expect("p >= 1");
                    active.push(top);
                    signs.push(corr[top].signum());
                    entering = Some(top);
                }
            }
            Some((j, false)) => {
                knots.push(Knot {
                    beta,
                    theta: theta.clone(),
                });
                if active.len() >= cap {
                    return (knots, Stop::Truncated);
                }
                active.push(j);
                signs.push(corr[j].signum());
                entering = Some(j);
            }
        }
    }
    (knots, Stop::Truncated)
}

/// Full homotopy path on an empirical system, knots in decreasing lambda.
pub fn lasso_td_path_system(sys: &EmpiricalSystem, cfg: &LarsTdConfig) -> Result<RegularizationPath> {
    let (knots, stop) = homotopy(sys, 0.0, cfg);
    let n = sys.n;
    let mut points: Vec<PathPoint> = Vec::with_capacity(knots.len());
    for knot in knots {
        let lambda = cfg.scale.from_beta(knot.beta, n);
        // coincident knots (simultaneous events) keep the later state
        if let Some(last) = points.last_mut() {
            if lambda >= last.lambda {
                last.outcome = Ok(Estimate::new(sys, knot.theta, last.lambda, Method::LassoTd));
                continue;
            }
        }
        points.push(PathPoint {
            lambda,
            outcome: Ok(Estimate::new(sys, knot.theta, lambda, Method::LassoTd)),
        });
    }
    let (failure, truncated) = match stop {
        Stop::Reached => (None, false),
        Stop::Truncated => (None, true),
        Stop::Failed(mut f) => {
            f.lambda = cfg.scale.from_beta(f.lambda, n);
            (Some(f), false)
        }
    };
    Ok(RegularizationPath {
        method: Method::LassoTd,
        points,
        piecewise_linear: true,
        failure,
        truncated,
    })
}

pub fn lasso_td_path(samples: &SampleSet, gamma: f64, cfg: &LarsTdConfig) -> Result<RegularizationPath> {
    lasso_td_path_system(&empirical_system(samples, gamma), cfg)
}

/// LASSO-TD at one penalty: the homotopy run down to `lambda`.
pub fn lasso_td_system(sys: &EmpiricalSystem, lambda: f64, cfg: &LarsTdConfig) -> Result<Estimate> {
    check_lambda(lambda)?;
    let beta = cfg.scale.to_beta(lambda, sys.n);
    let (knots, stop) = homotopy(sys, beta, cfg);
    match stop {
        Stop::Reached => {
            let last = knots.into_iter().last().expect("at least one knot");
            Ok(Estimate::new(sys, last.theta, lambda, Method::LassoTd))
        }
        Stop::Truncated => Err(Error::PMatrixFailure {
            lambda: cfg.scale.from_beta(knots.last().map_or(0.0, |k| k.beta), sys.n),
            feature: usize::MAX,
            reason: "active-set cap reached before the requested lambda".into(),
        }),
        Stop::Failed(f) => Err(Error::PMatrixFailure {
            lambda: cfg.scale.from_beta(f.lambda, sys.n),
            feature: f.feature,
            reason: f.reason,
        }),
    }
}

pub fn lasso_td(samples: &SampleSet, gamma: f64, lambda: f64, cfg: &LarsTdConfig) -> Result<Estimate> {
    lasso_td_system(&empirical_system(samples, gamma), lambda, cfg)
}
