//! Fixtures shared by the benchmarks: standardized corrupted-chain systems
//! of a chosen width.

use dlstd_core::benchmarks::{build_corrupted_chain, standardize, CorruptedChainSpec};
use dlstd_core::mrp::empirical_system;
use dlstd_core::{EmpiricalSystem, SampleSet};

pub struct Fixture {
    pub samples: SampleSet,
    pub system: EmpiricalSystem,
}

/// `n` on-policy transitions with `s_bar` noise features, standardized.
pub fn chain_fixture(s_bar: usize, n: usize, seed: u64) -> Fixture {
    let chain = build_corrupted_chain(&CorruptedChainSpec {
        s_bar,
        ..CorruptedChainSpec::default()
    })
    .expect("valid chain spec");
    let raw = chain.sample_trajectories(n, 20, seed).expect("sampling succeeds");
    let samples = standardize(&raw, chain.spec.gamma).expect("standardization succeeds").samples;
    let system = empirical_system(&samples, chain.spec.gamma);
    Fixture { samples, system }
}

/// A penalty a fixed fraction of the way below the zero-solution threshold.
pub fn lambda_at(sys: &EmpiricalSystem, fraction: f64) -> f64 {
    sys.b.amax() * fraction
}
