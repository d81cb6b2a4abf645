//! Finite Markov reward processes, linear feature bases, sample sets and the
//! linear systems (model-based and empirical) that every estimator works on.
//!
//! States are 0-based indices throughout.

mod exact;
pub(crate) mod sampling;

pub use exact::{
    bound_constants, exact_value, model_system, projection_operator, stationary_distribution,
    stationary_distribution_with, theorem3_decomposition, BoundConstants, PowerIteration,
    Theorem3Decomposition,
};
pub use sampling::{empirical_system, rng_from_seed, sample_iid, sample_trajectories, Rng};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

const STOCHASTIC_TOL: f64 = 1e-12;

/// A finite-state Markov reward process `{S, P, R, gamma}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovRewardProcess {
    transition: DMatrix<f64>,
    reward: DVector<f64>,
    gamma: f64,
}

impl MarkovRewardProcess {
    pub fn new(transition: DMatrix<f64>, reward: DVector<f64>, gamma: f64) -> Result<Self> {
        if !transition.is_square() {
            return Err(Error::Dimension(format!(
                "transition matrix is {}x{}",
                transition.nrows(),
                transition.ncols()
            )));
        }
        if reward.len() != transition.nrows() {
            return Err(Error::Dimension(format!(
                "reward has length {} but there are {} states",
                reward.len(),
                transition.nrows()
            )));
        }
        if transition.nrows() == 0 {
            return Err(Error::InvalidInput("empty state space".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidInput(format!("discount {gamma} outside [0, 1)")));
        }
        check_row_stochastic(&transition)?;
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidInput("reward has non-finite entries".into()));
        }
        Ok(Self {
            transition,
            reward,
            gamma,
        })
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &DVector<f64> {
        &self.reward
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn num_states(&self) -> usize {
        self.reward.len()
    }

    /// `||R||_inf`.
    pub fn r_max(&self) -> f64 {
        linalg::inf_norm(&self.reward)
    }

    /// Same dynamics and reward under another discount.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.transition.clone(), self.reward.clone(), gamma)
    }
}

pub(crate) fn check_row_stochastic(p: &DMatrix<f64>) -> Result<()> {
    for (s, row) in p.row_iter().enumerate() {
        if row.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "transition row {s} has negative or non-finite entries"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidInput(format!(
                "transition row {s} sums to {sum}"
            )));
        }
    }
    Ok(())
}

/// Linear features: row `s` of `phi` is `phi(s)^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    phi: DMatrix<f64>,
}

impl FeatureBasis {
    pub fn new(phi: DMatrix<f64>) -> Result<Self> {
        if phi.ncols() == 0 || phi.nrows() == 0 {
            return Err(Error::InvalidInput("feature matrix must be non-empty".into()));
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("feature matrix has non-finite entries".into()));
        }
        Ok(Self { phi })
    }

    /// Tabulate a feature map over `num_states` states.
    pub fn from_fn(
        num_states: usize,
        num_features: usize,
        f: impl Fn(usize) -> Vec<f64>,
    ) -> Result<Self> {
        let mut phi = DMatrix::zeros(num_states, num_features);
        for s in 0..num_states {
            let row = f(s);
            if row.len() != num_features {
                return Err(Error::Dimension(format!(
                    "feature map returned {} values for state {s}, expected {num_features}",
                    row.len()
                )));
            }
            for (j, v) in row.into_iter().enumerate() {
                phi[(s, j)] = v;
            }
        }
        Self::new(phi)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn evaluate(&self, state: usize) -> DVector<f64> {
        self.phi.row(state).transpose()
    }

    pub fn num_features(&self) -> usize {
        self.phi.ncols()
    }

    pub fn num_states(&self) -> usize {
        self.phi.nrows()
    }

    /// `B_inf,phi = max_s ||phi(s)||_inf`.
    pub fn b_inf(&self) -> f64 {
        linalg::max_norm(&self.phi)
    }
}

/// A probability vector over states.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    mu: DVector<f64>,
}

impl SamplingDistribution {
    pub fn new(mu: DVector<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if mu.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInput(
                "distribution has negative or non-finite entries".into(),
            ));
        }
        let sum: f64 = mu.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidInput(format!("distribution sums to {sum}")));
        }
        Ok(Self { mu })
    }

    pub fn uniform(num_states: usize) -> Self {
        Self {
            mu: DVector::from_element(num_states, 1.0 / num_states as f64),
        }
    }

    pub fn point_mass(num_states: usize, state: usize) -> Self {
        let mut mu = DVector::zeros(num_states);
        mu[state] = 1.0;
        Self { mu }
    }

    pub fn probabilities(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Weighted norm `sqrt(sum_s mu(s) v(s)^2)`.
    pub fn weighted_norm(&self, v: &DVector<f64>) -> f64 {
        self.mu
            .iter()
            .zip(v.iter())
            .map(|(m, x)| m * x * x)
            .sum::<f64>()
            .sqrt()
    }
}

/// `n` observed transitions `(s_i, r_i, s'_i)` with their feature rows.
///
/// `episodes[i]` identifies the trajectory transition `i` came from; for
/// i.i.d. samples every transition is its own episode.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub states: Vec<usize>,
    pub next_states: Vec<usize>,
    pub rewards: DVector<f64>,
    pub phi: DMatrix<f64>,
    pub phi_next: DMatrix<f64>,
    pub episodes: Vec<usize>,
    pub seed: u64,
}

impl SampleSet {
    pub fn new(
        states: Vec<usize>,
        next_states: Vec<usize>,
        rewards: DVector<f64>,
        phi: DMatrix<f64>,
        phi_next: DMatrix<f64>,
        episodes: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::InvalidInput("a sample set needs at least one transition".into()));
        }
        if next_states.len() != n
            || rewards.len() != n
            || phi.nrows() != n
            || phi_next.nrows() != n
            || episodes.len() != n
        {
            return Err(Error::Dimension(format!(
                "sample set fields disagree on n (states {n}, next {}, rewards {}, phi {}, phi' {}, episodes {})",
                next_states.len(),
                rewards.len(),
                phi.nrows(),
                phi_next.nrows(),
                episodes.len()
            )));
        }
        if phi.ncols() != phi_next.ncols() {
            return Err(Error::Dimension("phi and phi' have different widths".into()));
        }
        Ok(Self {
            states,
            next_states,
            rewards,
            phi,
            phi_next,
            episodes,
            seed,
        })
    }

    /// Build feature rows from a tabulated basis.
    pub fn from_basis(
        basis: &FeatureBasis,
        states: Vec<usize>,
        next_states: Vec<usize>,
        rewards: DVector<f64>,
        episodes: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        let p = basis.num_features();
        let lookup = |idx: &[usize]| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::zeros(idx.len(), p);
            for (i, &s) in idx.iter().enumerate() {
                if s >= basis.num_states() {
                    return Err(Error::InvalidInput(format!("state {s} out of range")));
                }
                m.row_mut(i).copy_from(&basis.matrix().row(s));
            }
            Ok(m)
        };
        let phi = lookup(&states)?;
        let phi_next = lookup(&next_states)?;
        Self::new(states, next_states, rewards, phi, phi_next, episodes, seed)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.phi.ncols()
    }

    /// Restrict to the given transition indices (in the order given).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let pick_rows = |m: &DMatrix<f64>| m.select_rows(indices.iter());
        Self::new(
            indices.iter().map(|&i| self.states[i]).collect(),
            indices.iter().map(|&i| self.next_states[i]).collect(),
            DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.rewards[i])),
            pick_rows(&self.phi),
            pick_rows(&self.phi_next),
            indices.iter().map(|&i| self.episodes[i]).collect(),
            self.seed,
        )
    }
}

/// Factors of the empirical matrix: `A~ = (1/n) phi^T delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    pub phi: DMatrix<f64>,
    pub delta: DMatrix<f64>,
}

/// `A~ = (1/n) Phi~^T (Phi~ - gamma Phi~')`, `b~ = (1/n) Phi~^T R~`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub n: usize,
    pub factors: Option<LowRankFactors>,
}

impl EmpiricalSystem {
    /// A system given directly by its matrices (no sample factors).
    pub fn from_parts(a: DMatrix<f64>, b: DVector<f64>, n: usize) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "A is {}x{}, b has length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        Ok(Self {
            a,
            b,
            n,
            factors: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `A~ theta - b~`.
    pub fn residual(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.a * theta - &self.b
    }
}

/// `A = Phi^T D_mu (I - gamma P) Phi`, `b = Phi^T D_mu R` and, when `A` is
/// well conditioned, the LSTD fixed point `theta*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub theta_star: Option<DVector<f64>>,
    pub invertible: bool,
    gram: DMatrix<f64>,
}

impl ModelSystem {
    /// The Gram matrix `M_mu = Phi^T D_mu Phi`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }
}
