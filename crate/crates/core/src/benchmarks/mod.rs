//! The two benchmark environments (a two-state MDP with closed-form paths and
//! the 20-state corrupted chain), feature standardization, and the
//! experiment runners that produce error reports.

mod chain;
mod experiments;
mod report;
mod standardize;
mod two_state;

pub use chain::{
    build_corrupted_chain, chain_kernel, chain_reward, mixture_left, optimal_left, CorruptedChain,
    CorruptedChainSpec, CHAIN_STATES, CORE_FEATURES,
};
pub use experiments::{
    derive_seed, mean_std, run_cv_experiment, run_off_policy, run_on_policy, weighted_error,
    weighted_error_mc, ErrorMetric, ErrorRecord, ExperimentConfig, ExperimentKind, ExperimentReport,
    LambdaPolicy, PathRecord, SummaryRow, CV_TABLE_ROWS,
};
pub use report::{write_errors, write_gnuplot, write_offpolicy, write_paths, write_report, write_summary};
pub use standardize::{standardize, Standardized, StandardizationTransform};
pub use two_state::{analytic_dantzig_path_1d, build_two_state, two_state_system, AnalyticPath1d, MuMode, TwoStateSpec};
