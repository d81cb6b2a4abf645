use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::ipm::{self, ConstraintOperator, DenseOperator};
use super::simplex;
use crate::error::{Error, Result};

/// `min c^T x  subject to  G x <= h`, with `x` free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl LinearProgram {
    pub fn new(c: DVector<f64>, g: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        if g.ncols() != c.len() || g.nrows() != h.len() {
            return Err(Error::Dimension(format!(
                "LP with c of length {}, G {}x{}, h of length {}",
                c.len(),
                g.nrows(),
                g.ncols(),
                h.len()
            )));
        }
        if c.iter().chain(g.iter()).chain(h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("LP data must be finite".into()));
        }
        Ok(Self { c, g, h })
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.h.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration_limit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// `s^T z` at the returned iterate (0 for simplex vertices).
    pub duality_gap: f64,
    pub status: LpStatus,
    pub iterations: usize,
    pub message: String,
    /// Gap after every interior-point iteration.
    pub gap_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpAlgorithm {
    /// Simplex when `k * m <= 64`, interior point otherwise.
    Auto,
    InteriorPoint,
    Simplex,
}

/// How the interior-point method solves its normal equations on structured
/// (Dantzig) problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalEquations {
    /// Low-rank when the sample count is below the feature count.
    Auto,
    Dense,
    LowRank,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    pub algorithm: LpAlgorithm,
    pub normal_equations: NormalEquations,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 500,
            algorithm: LpAlgorithm::Auto,
            normal_equations: NormalEquations::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.feas_tol > 0.0 && self.gap_tol > 0.0) {
            return Err(Error::InvalidInput("solver tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) const SIMPLEX_SIZE_LIMIT: usize = 64;
/// Largest `k * m` for which a stalled interior-point run is retried with simplex.
pub(crate) const SIMPLEX_FALLBACK_LIMIT: usize = 60_000;

pub fn solve_lp(lp: &LinearProgram, cfg: &SolverConfig) -> Result<LpSolution> {
    cfg.validate()?;
    let size = lp.num_vars() * lp.num_constraints();
    let use_simplex = match cfg.algorithm {
        LpAlgorithm::Simplex => true,
        LpAlgorithm::InteriorPoint => false,
        LpAlgorithm::Auto => size <= SIMPLEX_SIZE_LIMIT,
    };
    if use_simplex {
        return Ok(simplex::solve_simplex(lp, cfg));
    }
    let op = DenseOperator::new(&lp.g);
    let sol = ipm::solve(&op, &lp.c, &lp.h, cfg);
    Ok(fallback(sol, || lp.clone(), size, cfg))
}

/// Interior point on an implicitly represented constraint matrix. `dense`
/// materializes the LP if the simplex fallback is needed.
pub fn solve_structured<O: ConstraintOperator>(
    op: &O,
    c: &DVector<f64>,
    h: &DVector<f64>,
    cfg: &SolverConfig,
    dense: impl FnOnce() -> LinearProgram,
) -> Result<LpSolution> {
    cfg.validate()?;
    let size = op.num_vars() * op.num_rows();
    let use_simplex = match cfg.algorithm {
        LpAlgorithm::Simplex => true,
        LpAlgorithm::InteriorPoint => false,
        LpAlgorithm::Auto => size <= SIMPLEX_SIZE_LIMIT,
    };
    if use_simplex {
        return Ok(simplex::solve_simplex(&dense(), cfg));
    }
    let sol = ipm::solve(op, c, h, cfg);
    Ok(fallback(sol, dense, size, cfg))
}

fn fallback(
    sol: LpSolution,
    dense: impl FnOnce() -> LinearProgram,
    size: usize,
    cfg: &SolverConfig,
) -> LpSolution {
    if sol.status == LpStatus::IterationLimit
        && cfg.algorithm == LpAlgorithm::Auto
        && size <= SIMPLEX_FALLBACK_LIMIT
    {
        let mut retry = simplex::solve_simplex(&dense(), cfg);
        retry.message = format!(
            "interior point stopped ({}); simplex: {}",
            sol.message, retry.message
        );
        return retry;
    }
    sol
}
