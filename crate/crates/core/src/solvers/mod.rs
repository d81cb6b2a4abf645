//! Numerical engines: a dense linear-program solver (primal-dual interior
//! point with a simplex fallback) and a coordinate-descent LASSO solver.

mod ipm;
mod lasso;
mod lp;
mod simplex;

pub use ipm::{ConstraintOperator, DenseOperator, SpdFactor};
pub use lasso::{lasso_path, lasso_solve, lasso_solve_from, soft_threshold, LassoConfig, LassoOutput};
pub use lp::{
    solve_lp, solve_structured, LinearProgram, LpAlgorithm, LpSolution, LpStatus, NormalEquations,
    SolverConfig,
};
pub use simplex::solve_simplex;

pub(crate) use ipm::spd_factor;
