use nalgebra::{DMatrix, DVector};
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    EmpiricalSystem, FeatureBasis, LowRankFactors, MarkovRewardProcess, SampleSet,
    SamplingDistribution,
};
use crate::error::{Error, Result};

/// The generator behind every stochastic operation in this crate.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inverse-CDF draw from a probability vector. Zero-probability entries are
/// never returned.
pub(crate) fn draw_index<'a>(rng: &mut Rng, probs: impl IntoIterator<Item = &'a f64>) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.into_iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            cum += p;
            if u < cum {
                return i;
            }
        }
    }
    last_positive
}

fn draw_next(rng: &mut Rng, mrp: &MarkovRewardProcess, state: usize) -> usize {
    draw_index(rng, mrp.transition().row(state).iter())
}

fn check_support(mrp: &MarkovRewardProcess, mu: &SamplingDistribution) -> Result<()> {
    if mu.len() != mrp.num_states() {
        return Err(Error::Dimension(format!(
            "distribution has {} entries, MRP has {} states",
            mu.len(),
            mrp.num_states()
        )));
    }
    Ok(())
}

/// `n` i.i.d. transitions: `s_i ~ mu`, `s'_i ~ P(.|s_i)`, `r_i = R(s_i)`.
pub fn sample_iid(
    mrp: &MarkovRewardProcess,
    basis: &FeatureBasis,
    mu: &SamplingDistribution,
    n: usize,
    seed: u64,
) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    check_support(mrp, mu)?;
    let mut rng = rng_from_seed(seed);
    let mut states = Vec::with_capacity(n);
    let mut next_states = Vec::with_capacity(n);
    for _ in 0..n {
        let s = draw_index(&mut rng, mu.probabilities().iter());
        states.push(s);
        next_states.push(draw_next(&mut rng, mrp, s));
    }
    let rewards = DVector::from_iterator(n, states.iter().map(|&s| mrp.reward()[s]));
    SampleSet::from_basis(basis, states, next_states, rewards, (0..n).collect(), seed)
}

/// Concatenated rollouts of length `horizon`, each started from `start`.
pub fn sample_trajectories(
    mrp: &MarkovRewardProcess,
    basis: &FeatureBasis,
    start: &SamplingDistribution,
    num_trajectories: usize,
    horizon: usize,
    seed: u64,
) -> Result<SampleSet> {
    if num_trajectories == 0 || horizon == 0 {
        return Err(Error::InvalidInput(
            "need at least one trajectory of length at least one".into(),
        ));
    }
    check_support(mrp, start)?;
    let mut rng = rng_from_seed(seed);
    let n = num_trajectories * horizon;
    let mut states = Vec::with_capacity(n);
    let mut next_states = Vec::with_capacity(n);
    let mut episodes = Vec::with_capacity(n);
    for episode in 0..num_trajectories {
        let mut s = draw_index(&mut rng, start.probabilities().iter());
        for _ in 0..horizon {
            let next = draw_next(&mut rng, mrp, s);
            states.push(s);
            next_states.push(next);
            episodes.push(episode);
            s = next;
        }
    }
    let rewards = DVector::from_iterator(n, states.iter().map(|&s| mrp.reward()[s]));
    SampleSet::from_basis(basis, states, next_states, rewards, episodes, seed)
}

/// Build `(A~, b~)` from a sample set. The factors `Phi~` and
/// `Phi~ - gamma Phi~'` are kept for low-rank solves.
pub fn empirical_system(samples: &SampleSet, gamma: f64) -> EmpiricalSystem {
    let n = samples.len();
    let scale = 1.0 / n as f64;
    let delta: DMatrix<f64> = &samples.phi - &samples.phi_next * gamma;
    let a = samples.phi.tr_mul(&delta) * scale;
    let b = samples.phi.tr_mul(&samples.rewards) * scale;
    EmpiricalSystem {
        a,
        b,
        n,
        factors: Some(LowRankFactors {
            phi: samples.phi.clone(),
            delta,
        }),
    }
}
