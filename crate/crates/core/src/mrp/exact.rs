use nalgebra::{DMatrix, DVector};

use super::{FeatureBasis, MarkovRewardProcess, ModelSystem, SamplingDistribution};
use crate::error::{Error, Result};
use crate::linalg;

/// The value function `V = (I - gamma P)^{-1} R`.
pub fn exact_value(mrp: &MarkovRewardProcess) -> DVector<f64> {
    let n = mrp.num_states();
    let system = DMatrix::identity(n, n) - mrp.transition() * mrp.gamma();
    // I - gamma P is strictly diagonally dominant by rows for gamma < 1.
    system
        .lu()
        .solve(mrp.reward())
        .expect("I - gamma P is nonsingular for gamma < 1")
}

/// Power-iteration settings for [`stationary_distribution_with`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            tol: 1e-12,
        }
    }
}

pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<SamplingDistribution> {
    stationary_distribution_with(p, PowerIteration::default())
}

/// Left Perron vector of a row-stochastic matrix by power iteration from the
/// uniform distribution. Fails on chains where the iteration does not settle
/// (periodic or reducible chains with a non-uniform start dependence).
pub fn stationary_distribution_with(
    p: &DMatrix<f64>,
    cfg: PowerIteration,
) -> Result<SamplingDistribution> {
    super::check_row_stochastic(p)?;
    let n = p.nrows();
    let pt = p.transpose();
    let mut mu = DVector::from_element(n, 1.0 / n as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        let mut next = &pt * &mu;
        let sum: f64 = next.iter().sum();
        next /= sum;
        residual = (&next - &mu).amax();
        mu = next;
        if residual <= cfg.tol {
            for x in mu.iter_mut() {
                *x = x.max(0.0);
            }
            let sum: f64 = mu.iter().sum();
            mu /= sum;
            return SamplingDistribution::new(mu);
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        residual,
    })
}

fn check_dims(
    mrp: &MarkovRewardProcess,
    basis: &FeatureBasis,
    mu: &SamplingDistribution,
) -> Result<()> {
    if basis.num_states() != mrp.num_states() || mu.len() != mrp.num_states() {
        return Err(Error::Dimension(format!(
            "MRP has {} states, basis {}, distribution {}",
            mrp.num_states(),
            basis.num_states(),
            mu.len()
        )));
    }
    Ok(())
}

fn gram(basis: &FeatureBasis, mu: &SamplingDistribution) -> DMatrix<f64> {
    linalg::weighted_cross(basis.matrix(), mu.probabilities(), basis.matrix())
}

pub fn model_system(
    mrp: &MarkovRewardProcess,
    basis: &FeatureBasis,
    mu: &SamplingDistribution,
) -> Result<ModelSystem> {
    check_dims(mrp, basis, mu)?;
    let phi = basis.matrix();
    let d = mu.probabilities();
    let next = mrp.transition() * phi;
    let delta = phi - next * mrp.gamma();
    let a = linalg::weighted_cross(phi, d, &delta);
    let weighted_r = d.component_mul(mrp.reward());
    let b = phi.tr_mul(&weighted_r);
    let invertible = linalg::is_well_conditioned(&a);
    let theta_star = if invertible {
        a.clone().lu().solve(&b)
    } else {
        None
    };
    Ok(ModelSystem {
        invertible: theta_star.is_some(),
        a,
        b,
        theta_star,
        gram: gram(basis, mu),
    })
}

/// `Pi_mu = Phi M_mu^{-1} Phi^T D_mu`.
pub fn projection_operator(
    basis: &FeatureBasis,
    mu: &SamplingDistribution,
) -> Result<DMatrix<f64>> {
    if basis.num_states() != mu.len() {
        return Err(Error::Dimension(format!(
            "basis has {} states, distribution {}",
            basis.num_states(),
            mu.len()
        )));
    }
    let m_inv = linalg::inverse_checked(&gram(basis, mu), "Gram matrix M_mu")?;
    let phi = basis.matrix();
    let mut right = phi.transpose();
    for (mut col, w) in right.column_iter_mut().zip(mu.probabilities().iter()) {
        col *= *w;
    }
    Ok(phi * m_inv * right)
}

/// Both sides of the component-wise identity
/// `V - Phi theta = (I - gamma Pi P)^{-1} ((V - Pi V) + Phi M^{-1} (b - A theta))`.
///
/// The sign of the last term follows from
/// `Pi (T Phi theta - Phi theta) = Phi M^{-1} (b - A theta)`.
#[derive(Debug, Clone)]
pub struct Theorem3Decomposition {
    pub lhs: DVector<f64>,
    pub rhs: DVector<f64>,
}

impl Theorem3Decomposition {
    pub fn max_abs_gap(&self) -> f64 {
        (&self.lhs - &self.rhs).amax()
    }
}

pub fn theorem3_decomposition(
    mrp: &MarkovRewardProcess,
    basis: &FeatureBasis,
    mu: &SamplingDistribution,
    theta: &DVector<f64>,
) -> Result<Theorem3Decomposition> {
    check_dims(mrp, basis, mu)?;
    if theta.len() != basis.num_features() {
        return Err(Error::Dimension(format!(
            "theta has length {}, basis has {} features",
            theta.len(),
            basis.num_features()
        )));
    }
    let n = mrp.num_states();
    let phi = basis.matrix();
    let v = exact_value(mrp);
    let proj = projection_operator(basis, mu)?;
    let model = model_system(mrp, basis, mu)?;
    let m_inv = linalg::inverse_checked(model.gram(), "Gram matrix M_mu")?;

    let lhs = &v - phi * theta;
    let operator = DMatrix::identity(n, n) - (&proj * mrp.transition()) * mrp.gamma();
    let inner = (&v - &proj * &v) + phi * (m_inv * (&model.b - &model.a * theta));
    let rhs = linalg::solve_checked(&operator, &inner, "I - gamma Pi_mu P")?;
    Ok(Theorem3Decomposition { lhs, rhs })
}

/// Constants entering the finite-sample bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// `max_s ||phi(s)||_inf`
    pub b_inf_phi: f64,
    pub r_max: f64,
    /// `max_s ||M_mu^{-1} phi(s)||_1`, absent when the Gram matrix is singular.
    pub l_mu_phi: Option<f64>,
}

pub fn bound_constants(
    mrp: &MarkovRewardProcess,
    basis: &FeatureBasis,
    mu: &SamplingDistribution,
) -> Result<BoundConstants> {
    check_dims(mrp, basis, mu)?;
    let l_mu_phi = linalg::inverse_checked(&gram(basis, mu), "Gram matrix M_mu")
        .ok()
        .map(|m_inv| {
            let mapped = m_inv * basis.matrix().transpose();
            mapped
                .column_iter()
                .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        });
    Ok(BoundConstants {
        b_inf_phi: basis.b_inf(),
        r_max: mrp.r_max(),
        l_mu_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{chain_kernel, optimal_left, CHAIN_STATES};
    use crate::verification::{random_basis, random_distribution, random_mrp};
    use crate::mrp::rng_from_seed;
    use proptest::prelude::*;

    fn two_state(gamma: f64) -> (MarkovRewardProcess, FeatureBasis) {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        let mrp = MarkovRewardProcess::new(p, DVector::from_vec(vec![0.0, -1.0]), gamma).unwrap();
        let basis = FeatureBasis::new(DMatrix::from_column_slice(2, 1, &[1.0, 2.0])).unwrap();
        (mrp, basis)
    }

    /// `mu^T P = mu^T` with one equation replaced by `sum mu = 1`.
    fn stationary_oracle(p: &DMatrix<f64>) -> DVector<f64> {
        let n = p.nrows();
        let mut m = p.transpose() - DMatrix::identity(n, n);
        let mut rhs = DVector::zeros(n);
        m.row_mut(n - 1).fill(1.0);
        rhs[n - 1] = 1.0;
        m.lu().solve(&rhs).unwrap()
    }

    #[test]
    fn two_state_value() {
        let (mrp, _) = two_state(0.9);
        let v = exact_value(&mrp);
        assert!((v[0] + 9.0).abs() < 1e-12 && (v[1] + 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_discount_value_is_reward() {
        let mut rng = rng_from_seed(1);
        let mrp = random_mrp(&mut rng, 6, 0.0).unwrap();
        assert!((exact_value(&mrp) - mrp.reward()).amax() < 1e-14);
    }

    #[test]
    fn value_matches_neumann_series() {
        let mut rng = rng_from_seed(2);
        let mrp = random_mrp(&mut rng, 5, 0.8).unwrap();
        let mut term = mrp.reward().clone();
        let mut sum = term.clone();
        for _ in 1..=200 {
            term = mrp.transition() * term * 0.8;
            sum += &term;
        }
        assert!((exact_value(&mrp) - sum).amax() < 1e-8);
    }

    #[test]
    fn stationary_two_state_and_doubly_stochastic() {
        let (mrp, _) = two_state(0.9);
        let mu = stationary_distribution(mrp.transition()).unwrap();
        assert!((mu.probabilities() - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-12);

        let p = DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.3, 0.3, 0.2, 0.5, 0.5, 0.3, 0.2]);
        let mu = stationary_distribution(&p).unwrap();
        assert!((mu.probabilities() - DVector::from_element(3, 1.0 / 3.0)).amax() < 1e-12);
    }

    #[test]
    fn stationary_chain_kernel_matches_linear_solve() {
        let p = chain_kernel(optimal_left, 0.9);
        assert_eq!(p.nrows(), CHAIN_STATES);
        let mu = stationary_distribution(&p).unwrap();
        let oracle = stationary_oracle(&p);
        assert!((mu.probabilities() - oracle).amax() < 1e-8);
        let drift = p.tr_mul(mu.probabilities()) - mu.probabilities();
        assert!(drift.amax() < 1e-10);
    }

    #[test]
    fn periodic_chain_does_not_converge() {
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.5, 0.0, 0.5, 0.0, 1.0, 0.0]);
        let cfg = PowerIteration { max_iter: 1000, tol: 1e-12 };
        assert!(matches!(
            stationary_distribution_with(&p, cfg),
            Err(Error::NoConvergence { iterations: 1000, .. })
        ));
    }

    #[test]
    fn two_state_model_systems() {
        let (mrp, basis) = two_state(0.9);
        let on = model_system(&mrp, &basis, &SamplingDistribution::point_mass(2, 1)).unwrap();
        assert!((on.a[(0, 0)] - 0.4).abs() < 1e-12);
        assert!((on.b[0] + 2.0).abs() < 1e-12);
        assert!((on.theta_star.unwrap()[0] + 5.0).abs() < 1e-10);

        for gamma in [0.5, 0.8, 5.0 / 6.0, 0.9] {
            let (mrp, basis) = two_state(gamma);
            let off = model_system(&mrp, &basis, &SamplingDistribution::uniform(2)).unwrap();
            assert!((off.a[(0, 0)] - (2.5 - 3.0 * gamma)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_discount_a_is_gram() {
        let mut rng = rng_from_seed(3);
        let mrp = random_mrp(&mut rng, 5, 0.0).unwrap();
        let basis = random_basis(&mut rng, 5, 3).unwrap();
        let mu = random_distribution(&mut rng, 5).unwrap();
        let model = model_system(&mrp, &basis, &mu).unwrap();
        assert!((&model.a - model.gram()).amax() < 1e-14);
    }

    #[test]
    fn model_system_flags_singular_a() {
        let (mrp, _) = two_state(0.9);
        let twin = FeatureBasis::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0])).unwrap();
        let model = model_system(&mrp, &twin, &SamplingDistribution::uniform(2)).unwrap();
        assert!(!model.invertible && model.theta_star.is_none());
    }

    #[test]
    fn projection_examples() {
        let basis = FeatureBasis::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 0.5])).unwrap();
        let pi = projection_operator(&basis, &SamplingDistribution::new(DVector::from_vec(vec![0.3, 0.7])).unwrap()).unwrap();
        assert!((pi - DMatrix::identity(2, 2)).amax() < 1e-12);

        let (_, basis) = two_state(0.9);
        let pi = projection_operator(&basis, &SamplingDistribution::point_mass(2, 1)).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, 1.0]);
        assert!((pi - expected).amax() < 1e-12);

        let pi = projection_operator(&basis, &SamplingDistribution::point_mass(2, 1));
        assert!(pi.is_ok());
        let wide = FeatureBasis::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert!(matches!(
            projection_operator(&wide, &SamplingDistribution::point_mass(2, 1)),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn theorem3_at_fixed_point() {
        let mut rng = rng_from_seed(4);
        let mrp = random_mrp(&mut rng, 6, 0.9).unwrap();
        let basis = random_basis(&mut rng, 6, 3).unwrap();
        let mu = random_distribution(&mut rng, 6).unwrap();
        let model = model_system(&mrp, &basis, &mu).unwrap();
        let theta = model.theta_star.clone().unwrap();
        let dec = theorem3_decomposition(&mrp, &basis, &mu, &theta).unwrap();
        let v = exact_value(&mrp);
        let pi = projection_operator(&basis, &mu).unwrap();
        let op = DMatrix::identity(6, 6) - &pi * mrp.transition() * 0.9;
        let expected = op.lu().solve(&(&v - &pi * &v)).unwrap();
        assert!((&dec.rhs - expected).amax() < 1e-9 * (1.0 + dec.lhs.amax()));
        assert!(dec.max_abs_gap() < 1e-9 * (1.0 + dec.lhs.amax()));
    }

    #[test]
    fn theorem3_complete_basis() {
        let mut rng = rng_from_seed(5);
        let mrp = random_mrp(&mut rng, 4, 0.7).unwrap();
        let basis = random_basis(&mut rng, 4, 4).unwrap();
        let mu = random_distribution(&mut rng, 4).unwrap();
        let theta = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let dec = theorem3_decomposition(&mrp, &basis, &mu, &theta).unwrap();
        assert!(dec.max_abs_gap() < 1e-8 * (1.0 + dec.lhs.amax()));
        assert!(theorem3_decomposition(&mrp, &basis, &mu, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn bound_constants_two_state() {
        let (mrp, basis) = two_state(0.9);
        let c = bound_constants(&mrp, &basis, &SamplingDistribution::point_mass(2, 1)).unwrap();
        assert_eq!(c.b_inf_phi, 2.0);
        assert_eq!(c.r_max, 1.0);
        // M = 4, so max_s |phi(s)| / 4 = 0.5
        assert!((c.l_mu_phi.unwrap() - 0.5).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn value_is_bellman_fixed_point(seed in any::<u64>(), states in 1usize..12, gamma in 0.0f64..0.99) {
            let mut rng = rng_from_seed(seed);
            let mrp = random_mrp(&mut rng, states, gamma).unwrap();
            let v = exact_value(&mrp);
            let bellman = mrp.reward() + mrp.transition() * &v * gamma;
            prop_assert!((&v - bellman).amax() <= 1e-10 * (1.0 + v.amax()));
        }

        #[test]
        fn projection_is_idempotent_and_fixes_features(seed in any::<u64>(), states in 2usize..10, frac in 0.0f64..1.0) {
            let mut rng = rng_from_seed(seed);
            let p = 1 + ((states - 1) as f64 * frac) as usize;
            let basis = random_basis(&mut rng, states, p).unwrap();
            let mu = random_distribution(&mut rng, states).unwrap();
            let pi = projection_operator(&basis, &mu).unwrap();
            prop_assert!((&pi * &pi - &pi).amax() < 1e-9);
            prop_assert!((&pi * basis.matrix() - basis.matrix()).amax() < 1e-9);
        }

        #[test]
        fn model_theta_star_solves_system(seed in any::<u64>(), states in 2usize..9) {
            let mut rng = rng_from_seed(seed);
            let mrp = random_mrp(&mut rng, states, 0.9).unwrap();
            let basis = random_basis(&mut rng, states, states.min(4)).unwrap();
            let mu = stationary_distribution(mrp.transition()).unwrap();
            let model = model_system(&mrp, &basis, &mu).unwrap();
            if let Some(theta) = &model.theta_star {
                let tol = 1e-10 * if model.b.amax() > 0.0 { model.b.amax() } else { 1.0 };
                prop_assert!((&model.a * theta - &model.b).amax() <= tol);
            }
        }

        #[test]
        fn stationary_is_invariant(seed in any::<u64>(), states in 1usize..15) {
            let mut rng = rng_from_seed(seed);
            let mrp = random_mrp(&mut rng, states, 0.5).unwrap();
            let mu = stationary_distribution(mrp.transition()).unwrap();
            let drift = mrp.transition().tr_mul(mu.probabilities()) - mu.probabilities();
            prop_assert!(drift.amax() < 1e-10);
            prop_assert!((mu.probabilities().sum() - 1.0).abs() < 1e-12);
        }
    }
}
