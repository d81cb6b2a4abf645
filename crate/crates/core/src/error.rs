use thiserror::Error;

/// Errors produced by the policy-evaluation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular system ({what}): smallest/largest singular value ratio {ratio:.3e}")]
    Singular { what: String, ratio: f64 },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("Dantzig constraint infeasible at lambda={lambda:.6e}; smallest feasible lambda is about {min_feasible_lambda:.6e}")]
    DantzigInfeasible { lambda: f64, min_feasible_lambda: f64 },

    #[error("linear program solver stopped: {0}")]
    SolverStopped(String),

    #[error("lasso coordinate descent did not converge after {sweeps} sweeps (KKT violation {kkt_violation:.3e})")]
    LassoNoConvergence {
        sweeps: usize,
        kkt_violation: f64,
        last_iterate: Vec<f64>,
    },

    #[error("LASSO-TD homotopy failed at lambda={lambda:.6e} on feature {feature}: {reason}")]
    PMatrixFailure {
        lambda: f64,
        feature: usize,
        reason: String,
    },

    #[error("no admissible score: {0}")]
    NoScore(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
