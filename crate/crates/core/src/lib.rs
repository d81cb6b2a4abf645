//! Sparse linear value-function estimation for Markov reward processes.
//!
//! The centerpiece is Dantzig-LSTD, which minimizes `||theta||_1` subject to
//! `||A~ theta - b~||_inf <= lambda` and is solved as a linear program. The
//! crate also provides the comparison estimators (LSTD, ridge LSTD, l1-LSTD,
//! LASSO-TD), cross-validation heuristics for choosing `lambda`, and the two
//! benchmark environments used to compare them.

pub mod benchmarks;
pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod mrp;
pub mod selection;
pub mod solvers;
pub mod verification;

pub use error::{Error, Result};
pub use estimators::{Diagnostics, Estimate, FitConfig, Method, RegularizationPath};
pub use mrp::{
    EmpiricalSystem, FeatureBasis, MarkovRewardProcess, ModelSystem, SampleSet,
    SamplingDistribution,
};
pub use solvers::{LinearProgram, LpSolution, LpStatus, SolverConfig};

pub use nalgebra::{DMatrix, DVector};
