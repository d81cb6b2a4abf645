use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mrp::sampling::draw_index;
use crate::mrp::{
    rng_from_seed, stationary_distribution, FeatureBasis, MarkovRewardProcess, Rng, SampleSet,
    SamplingDistribution,
};

pub const CHAIN_STATES: usize = 20;
/// Intercept plus five radial basis functions.
pub const CORE_FEATURES: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedChainSpec {
    /// Number of irrelevant standard-normal feature coordinates.
    pub s_bar: usize,
    /// Weight of the worst policy in the behavior mixture, in `[0, 1/2]`.
    pub alpha: f64,
    pub gamma: f64,
    pub rbf_centers: Vec<f64>,
    pub rbf_width: f64,
    pub success_prob: f64,
}

impl Default for CorruptedChainSpec {
    fn default() -> Self {
        Self {
            s_bar: 200,
            alpha: 0.0,
            gamma: 0.9,
            rbf_centers: vec![2.0, 6.5, 11.0, 15.5, 20.0],
            rbf_width: 4.5,
            success_prob: 0.9,
        }
    }
}

impl CorruptedChainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.alpha) {
            return Err(Error::InvalidInput(format!("alpha must lie in [0, 0.5], got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidInput(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if self.rbf_centers.len() != CORE_FEATURES - 1 {
            return Err(Error::InvalidInput(format!(
                "need {} RBF centers, got {}",
                CORE_FEATURES - 1,
                self.rbf_centers.len()
            )));
        }
        if !(self.rbf_width > 0.0) {
            return Err(Error::InvalidInput("RBF width must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.success_prob) {
            return Err(Error::InvalidInput("success probability must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn num_features(&self) -> usize {
        self.s_bar + CORE_FEATURES
    }
}

/// Probability that the optimal policy goes left: it does for the first ten
/// states (0-based `s <= 9`).
pub fn optimal_left(state: usize) -> f64 {
    if state < CHAIN_STATES / 2 {
        1.0
    } else {
        0.0
    }
}

/// `pi_alpha = (1 - alpha) pi_opt + alpha pi_worst`, as the probability of left.
pub fn mixture_left(state: usize, alpha: f64) -> f64 {
    let opt = optimal_left(state);
    (1.0 - alpha) * opt + alpha * (1.0 - opt)
}

/// Chain kernel under a stochastic policy. The chosen direction is taken with
/// probability `success`, the other one otherwise; moves off either end stay
/// in place.
pub fn chain_kernel(left_prob: impl Fn(usize) -> f64, success: f64) -> DMatrix<f64> {
    let n = CHAIN_STATES;
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        let q = left_prob(s);
        let move_left = q * success + (1.0 - q) * (1.0 - success);
        let move_right = 1.0 - move_left;
        p[(s, s.saturating_sub(1))] += move_left;
        p[(s, (s + 1).min(n - 1))] += move_right;
    }
    p
}

pub fn chain_reward() -> DVector<f64> {
    DVector::from_fn(CHAIN_STATES, |s, _| if s == 0 || s == CHAIN_STATES - 1 { 1.0 } else { 0.0 })
}

/// The 20-state chain, its features, and the behavior distribution.
#[derive(Debug, Clone)]
pub struct CorruptedChain {
    pub spec: CorruptedChainSpec,
    /// Chain under the behavior policy `pi_alpha`.
    pub mrp: MarkovRewardProcess,
    /// Chain under the optimal policy: the process being evaluated.
    pub target: MarkovRewardProcess,
    /// Stationary distribution of `mrp`.
    pub behavior: SamplingDistribution,
    /// Intercept and RBF columns over the core states.
    pub core_basis: FeatureBasis,
}

pub fn build_corrupted_chain(spec: &CorruptedChainSpec) -> Result<CorruptedChain> {
    spec.validate()?;
    let alpha = spec.alpha;
    let mrp = MarkovRewardProcess::new(
        chain_kernel(|s| mixture_left(s, alpha), spec.success_prob),
        chain_reward(),
        spec.gamma,
    )?;
    let target = MarkovRewardProcess::new(
        chain_kernel(optimal_left, spec.success_prob),
        chain_reward(),
        spec.gamma,
    )?;
    let behavior = stationary_distribution(mrp.transition())?;
    let two_var = 2.0 * spec.rbf_width * spec.rbf_width;
    // States are labelled 1..20 for the RBF centers.
    let core_basis = FeatureBasis::from_fn(CHAIN_STATES, CORE_FEATURES, |s| {
        let label = (s + 1) as f64;
        std::iter::once(1.0)
            .chain(spec.rbf_centers.iter().map(|c| (-(label - c).powi(2) / two_var).exp()))
            .collect()
    })?;
    Ok(CorruptedChain {
        spec: spec.clone(),
        mrp,
        target,
        behavior,
        core_basis,
    })
}

impl CorruptedChain {
    pub fn num_features(&self) -> usize {
        self.spec.num_features()
    }

    /// Feature vector of `state` with fresh noise coordinates.
    fn fill_row(&self, row: &mut [f64], state: usize, rng: &mut Rng) {
        let core = self.core_basis.matrix();
        for j in 0..CORE_FEATURES {
            row[j] = core[(state, j)];
        }
        for x in row.iter_mut().skip(CORE_FEATURES) {
            *x = rng.sample(StandardNormal);
        }
    }

    /// Row-major feature matrix for a list of states.
    pub fn features(&self, states: &[usize], rng: &mut Rng) -> DMatrix<f64> {
        let p = self.num_features();
        let mut data = vec![0.0; states.len() * p];
        for (row, &s) in data.chunks_mut(p).zip(states) {
            self.fill_row(row, s, rng);
        }
        DMatrix::from_row_slice(states.len(), p, &data)
    }

    fn assemble(&self, states: Vec<usize>, next: Vec<usize>, episodes: Vec<usize>, rng: &mut Rng, seed: u64) -> Result<SampleSet> {
        let phi = self.features(&states, rng);
        let phi_next = self.features(&next, rng);
        let rewards = DVector::from_iterator(states.len(), states.iter().map(|&s| self.mrp.reward()[s]));
        SampleSet::new(states, next, rewards, phi, phi_next, episodes, seed)
    }

    /// Rollouts of the behavior chain from uniformly drawn start states,
    /// truncated to `n` transitions in total.
    pub fn sample_trajectories(&self, n: usize, horizon: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 || horizon == 0 {
            return Err(Error::InvalidInput("need n >= 1 and horizon >= 1".into()));
        }
        let mut rng = rng_from_seed(seed);
        let (mut states, mut next, mut episodes) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut episode = 0;
        while states.len() < n {
            let mut s = rng.random_range(0..CHAIN_STATES);
            for _ in 0..horizon {
                if states.len() == n {
                    break;
                }
                let s2 = draw_index(&mut rng, self.mrp.transition().row(s).iter());
                states.push(s);
                next.push(s2);
                episodes.push(episode);
                s = s2;
            }
            episode += 1;
        }
        self.assemble(states, next, episodes, &mut rng, seed)
    }

    /// `s ~ mu_alpha`, `s' ~ P_opt(s, .)`.
    pub fn sample_off_policy(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        let mut rng = rng_from_seed(seed);
        let mut states = Vec::with_capacity(n);
        let mut next = Vec::with_capacity(n);
        for _ in 0..n {
            let s = draw_index(&mut rng, self.behavior.probabilities().iter());
            states.push(s);
            next.push(draw_index(&mut rng, self.target.transition().row(s).iter()));
        }
        self.assemble(states, next, (0..n).collect(), &mut rng, seed)
    }

    /// Test points: uniform core state plus fresh noise coordinates.
    pub fn sample_test(&self, m: usize, seed: u64) -> (Vec<usize>, DMatrix<f64>) {
        let mut rng = rng_from_seed(seed);
        let states: Vec<usize> = (0..m).map(|_| rng.random_range(0..CHAIN_STATES)).collect();
        let phi = self.features(&states, &mut rng);
        (states, phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn feature_count() {
        let spec = CorruptedChainSpec { s_bar: 800, ..Default::default() };
        assert_eq!(spec.num_features(), 806);
    }

    #[test]
    fn rewards_at_ends() {
        let r = chain_reward();
        for s in 0..CHAIN_STATES {
            assert_eq!(r[s], if s == 0 || s == 19 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn optimal_kernel_from_state_five() {
        let chain = build_corrupted_chain(&CorruptedChainSpec::default()).unwrap();
        // State 5 (1-based) is index 4.
        let row = chain.target.transition().row(4);
        assert_abs_diff_eq!(row[3], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(row[5], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 0.0);
    }

    #[test]
    fn boundaries_self_loop() {
        let p = chain_kernel(optimal_left, 0.9);
        assert_abs_diff_eq!(p[(0, 0)], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(p[(0, 1)], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p[(19, 19)], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn alpha_zero_matches_target() {
        let chain = build_corrupted_chain(&CorruptedChainSpec::default()).unwrap();
        assert_eq!(chain.mrp.transition(), chain.target.transition());
    }

    #[test]
    fn rbf_peaks_at_centers() {
        let chain = build_corrupted_chain(&CorruptedChainSpec::default()).unwrap();
        let m = chain.core_basis.matrix();
        assert_eq!(m[(1, 1)], 1.0);
        assert_eq!(m[(19, 5)], 1.0);
        assert!((0..CHAIN_STATES).all(|s| m[(s, 0)] == 1.0));
    }

    #[test]
    fn trajectory_sample_shape() {
        let chain = build_corrupted_chain(&CorruptedChainSpec { s_bar: 3, ..Default::default() }).unwrap();
        let s = chain.sample_trajectories(45, 20, 1).unwrap();
        assert_eq!(s.len(), 45);
        assert_eq!(s.num_features(), 9);
        assert_eq!(*s.episodes.last().unwrap(), 2);
        for i in 1..s.len() {
            if s.episodes[i] == s.episodes[i - 1] {
                assert_eq!(s.states[i], s.next_states[i - 1]);
            }
        }
        // Noise is drawn independently for s and s'.
        assert_ne!(s.phi[(1, 6)], s.phi_next[(0, 6)]);
    }

    #[test]
    fn invalid_alpha() {
        assert!(build_corrupted_chain(&CorruptedChainSpec { alpha: 0.6, ..Default::default() }).is_err());
    }
}
