//! Choosing the regularization parameter: K-fold heuristics scoring the
//! residual of held-out linear systems, oracle selection against a known
//! value function, and logarithmic grids.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{fit_grid, FitConfig, Method};
use crate::linalg;
use crate::mrp::{empirical_system, rng_from_seed, EmpiricalSystem, SampleSet};

/// Fold index (0-based) of every transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    membership: Vec<usize>,
    seed: u64,
}

impl FoldAssignment {
    /// Uniformly shuffled folds over transition indices; sizes differ by at
    /// most one.
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 || k > n {
            return Err(Error::InvalidInput(format!(
                "need 2 <= K <= n for K-fold splitting (K={k}, n={n})"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng_from_seed(seed));
        let mut membership = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            membership[i] = pos % k;
        }
        Ok(Self { k, membership, seed })
    }

    /// Whole trajectories go to the same fold (episodes dealt round-robin
    /// after a seeded shuffle).
    pub fn by_episode(episodes: &[usize], k: usize, seed: u64) -> Result<Self> {
        let mut ids: Vec<usize> = episodes.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if k < 2 || k > ids.len() {
            return Err(Error::InvalidInput(format!(
                "need 2 <= K <= number of episodes (K={k}, episodes={})",
                ids.len()
            )));
        }
        ids.shuffle(&mut rng_from_seed(seed));
        let fold_of = |e: usize| ids.iter().position(|&x| x == e).expect("known episode") % k;
        Ok(Self {
            k,
            membership: episodes.iter().map(|&e| fold_of(e)).collect(),
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn fold(&self, k: usize) -> Vec<usize> {
        (0..self.membership.len()).filter(|&i| self.membership[i] == k).collect()
    }

    pub fn complement(&self, k: usize) -> Vec<usize> {
        (0..self.membership.len()).filter(|&i| self.membership[i] != k).collect()
    }
}

/// Strictly decreasing positive penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        values.dedup();
        if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("grid values must be finite and positive".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for LambdaGrid {
    /// 30 log-spaced points from 10 down to 1e-3.
    fn default() -> Self {
        make_grid(1e-3, 10.0, 30).expect("valid default grid")
    }
}

/// `count` log-spaced values from `hi` down to `lo`, endpoints exact.
pub fn make_grid(lo: f64, hi: f64, count: usize) -> Result<LambdaGrid> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("grid needs 0 < lo < hi (lo={lo}, hi={hi})")));
    }
    if count < 2 {
        return Err(Error::InvalidInput("grid needs at least two points".into()));
    }
    let (llo, lhi) = (lo.log10(), hi.log10());
    let last = count - 1;
    let values = (0..count)
        .map(|k| match k {
            0 => hi,
            k if k == last => lo,
            k => 10f64.powf(lhi - (lhi - llo) * k as f64 / last as f64),
        })
        .collect();
    Ok(LambdaGrid { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// Residual of each held-out fold's own system.
    J1,
    /// Residual of the full-sample system.
    J2,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::J1 => "j1",
            Criterion::J2 => "j2",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "j1" => Ok(Criterion::J1),
            "j2" => Ok(Criterion::J2),
            other => Err(Error::Parse(format!("unknown criterion '{other}'"))),
        }
    }
}

/// Normalization of held-out fold systems in J1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FoldNormalization {
    /// `1/|F_k|`: each fold system is an unbiased estimate of `(A, b)`.
    #[default]
    PerFold,
    /// `1/n`, the full-sample normalization.
    FullSample,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CvConfig {
    pub fit: FitConfig,
    pub normalization: FoldNormalization,
}

/// Per-fold scores for one method over a grid.
#[derive(Debug, Clone)]
pub struct CvScores {
    pub method: Method,
    /// Decreasing.
    pub lambdas: Vec<f64>,
    /// `j1_folds[l][k]`, `None` where training on fold `k`'s complement failed.
    pub j1_folds: Vec<Vec<Option<f64>>>,
    pub j2_folds: Vec<Vec<Option<f64>>>,
    /// First failure message per lambda.
    pub failures: Vec<Option<String>>,
}

impl CvScores {
    fn folds(&self, criterion: Criterion) -> &Vec<Vec<Option<f64>>> {
        match criterion {
            Criterion::J1 => &self.j1_folds,
            Criterion::J2 => &self.j2_folds,
        }
    }

    /// Mean over folds; `None` if any fold failed. Summed in fold order.
    pub fn score(&self, criterion: Criterion, lambda_index: usize) -> Option<f64> {
        let row = &self.folds(criterion)[lambda_index];
        let mut sum = 0.0;
        for s in row {
            sum += (*s)?;
        }
        Some(sum / row.len() as f64)
    }

    pub fn scores(&self, criterion: Criterion) -> Vec<Option<f64>> {
        (0..self.lambdas.len()).map(|l| self.score(criterion, l)).collect()
    }

    pub fn table(&self, criterion: Criterion) -> ScoreTable {
        let scores = self.scores(criterion);
        let selected = argmin_prefer_larger(&scores).map(|i| self.lambdas[i]);
        ScoreTable {
            method: self.method,
            criterion,
            entries: self
                .lambdas
                .iter()
                .zip(self.folds(criterion))
                .zip(scores)
                .map(|((&lambda, folds), score)| ScoreEntry {
                    lambda,
                    fold_scores: folds.clone(),
                    score,
                })
                .collect(),
            selected,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub lambda: f64,
    pub fold_scores: Vec<Option<f64>>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub method: Method,
    pub criterion: Criterion,
    /// Decreasing lambda.
    pub entries: Vec<ScoreEntry>,
    pub selected: Option<f64>,
}

/// Index of the smallest score; on ties the earliest (largest lambda) wins.
pub fn argmin_prefer_larger(scores: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = s {
            if s.is_finite() && best.is_none_or(|(_, b)| *s < b) {
                best = Some((i, *s));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    let mut g = grid.to_vec();
    if g.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    g.sort_by(|a, b| b.total_cmp(a));
    g.dedup();
    Ok(g)
}

fn fold_system(samples: &SampleSet, idx: &[usize], gamma: f64, norm: FoldNormalization) -> Result<EmpiricalSystem> {
    let mut sys = empirical_system(&samples.subset(idx)?, gamma);
    if norm == FoldNormalization::FullSample {
        let factor = idx.len() as f64 / samples.len() as f64;
        sys.a *= factor;
        sys.b *= factor;
    }
    Ok(sys)
}

/// J1 and J2 per fold for every grid value in one pass: one training run per
/// fold complement, evaluated against the held-out and full-sample systems.
pub fn cv_scores(
    samples: &SampleSet,
    gamma: f64,
    grid: &[f64],
    folds: &FoldAssignment,
    method: Method,
    cfg: &CvConfig,
) -> Result<CvScores> {
    if folds.membership().len() != samples.len() {
        return Err(Error::Dimension(format!(
            "fold assignment covers {} transitions, sample set has {}",
            folds.membership().len(),
            samples.len()
        )));
    }
    let lambdas = sorted_grid(grid)?;
    let full = empirical_system(samples, gamma);
    let per_fold: Vec<Result<Vec<(Option<f64>, Option<f64>, Option<String>)>>> = (0..folds.k())
        .into_par_iter()
        .map(|k| {
            let train = empirical_system(&samples.subset(&folds.complement(k))?, gamma);
            let held_out = fold_system(samples, &folds.fold(k), gamma, cfg.normalization)?;
            let path = fit_grid(method, &train, &lambdas, &cfg.fit)?;
            Ok(path
                .points
                .iter()
                .map(|pt| match &pt.outcome {
                    Ok(est) => (
                        Some(linalg::inf_norm(&held_out.residual(&est.theta))),
                        Some(linalg::inf_norm(&full.residual(&est.theta))),
                        None,
                    ),
                    Err(msg) => (None, None, Some(format!("fold {k}: {msg}"))),
                })
                .collect())
        })
        .collect();
    let per_fold = per_fold.into_iter().collect::<Result<Vec<_>>>()?;

    let nl = lambdas.len();
    let mut j1_folds = vec![Vec::with_capacity(folds.k()); nl];
    let mut j2_folds = vec![Vec::with_capacity(folds.k()); nl];
    let mut failures = vec![None; nl];
    for fold in per_fold {
        for (l, (j1, j2, err)) in fold.into_iter().enumerate() {
            j1_folds[l].push(j1);
            j2_folds[l].push(j2);
            if failures[l].is_none() {
                failures[l] = err;
            }
        }
    }
    Ok(CvScores {
        method,
        lambdas,
        j1_folds,
        j2_folds,
        failures,
    })
}

fn single_score(
    samples: &SampleSet,
    gamma: f64,
    lambda: f64,
    folds: &FoldAssignment,
    method: Method,
    cfg: &CvConfig,
    criterion: Criterion,
) -> Result<f64> {
    let scores = cv_scores(samples, gamma, &[lambda], folds, method, cfg)?;
    scores.score(criterion, 0).ok_or_else(|| {
        Error::NoScore(
            scores.failures[0]
                .clone()
                .unwrap_or_else(|| "a fold failed".into()),
        )
    })
}

/// `J1(lambda) = (1/K) sum_k ||A~_{F_k} theta^(-k) - b~_{F_k}||_inf`.
pub fn j1_score(
    samples: &SampleSet,
    gamma: f64,
    lambda: f64,
    folds: &FoldAssignment,
    method: Method,
    cfg: &CvConfig,
) -> Result<f64> {
    single_score(samples, gamma, lambda, folds, method, cfg, Criterion::J1)
}

/// `J2(lambda) = (1/K) sum_k ||A~ theta^(-k) - b~||_inf`.
pub fn j2_score(
    samples: &SampleSet,
    gamma: f64,
    lambda: f64,
    folds: &FoldAssignment,
    method: Method,
    cfg: &CvConfig,
) -> Result<f64> {
    single_score(samples, gamma, lambda, folds, method, cfg, Criterion::J2)
}

/// Minimize the chosen criterion over the grid (ties go to the larger lambda).
pub fn select_lambda(
    samples: &SampleSet,
    gamma: f64,
    grid: &[f64],
    folds: &FoldAssignment,
    method: Method,
    criterion: Criterion,
    cfg: &CvConfig,
) -> Result<(f64, ScoreTable)> {
    let scores = cv_scores(samples, gamma, grid, folds, method, cfg)?;
    let table = scores.table(criterion);
    match table.selected {
        Some(lambda) => Ok((lambda, table)),
        None => Err(Error::NoScore(format!(
            "every grid point failed for {method}: {}",
            scores.failures.iter().flatten().next().cloned().unwrap_or_default()
        ))),
    }
}

/// Root-mean-square error of a prediction vector.
pub fn rmse(pred: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    ((pred - truth).norm_squared() / truth.len() as f64).sqrt()
}

/// The lambda whose predictions have the smallest RMSE against the truth;
/// ties go to the larger lambda.
pub fn oracle_select(grid: &[f64], predictions: &[DVector<f64>], truth: &DVector<f64>) -> Result<f64> {
    if grid.len() != predictions.len() || grid.is_empty() {
        return Err(Error::Dimension(format!(
            "{} lambdas but {} prediction vectors",
            grid.len(),
            predictions.len()
        )));
    }
    if predictions.iter().any(|p| p.len() != truth.len()) {
        return Err(Error::Dimension("prediction and truth lengths differ".into()));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
    let scores: Vec<Option<f64>> = order.iter().map(|&i| Some(rmse(&predictions[i], truth))).collect();
    let best = argmin_prefer_larger(&scores)
        .ok_or_else(|| Error::NoScore("every prediction has a non-finite error".into()))?;
    Ok(grid[order[best]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{build_two_state, MuMode, TwoStateSpec};
    use crate::estimators::fit;
    use crate::mrp::sample_iid;
    use crate::verification::{random_instance, InstanceSpec};
    use proptest::prelude::*;

    fn two_state_samples(n: usize) -> SampleSet {
        let spec = TwoStateSpec { gamma: 0.9, mu_mode: MuMode::OnPolicy };
        let (mrp, basis, mu) = build_two_state(&spec).unwrap();
        sample_iid(&mrp, &basis, &mu, n, 1).unwrap()
    }

    fn random_samples(seed: u64, n: usize, p: usize) -> SampleSet {
        let spec = InstanceSpec { states: 6, features: p, n, gamma: 0.9, on_policy: true };
        random_instance(&spec, seed).unwrap().samples
    }

    #[test]
    fn grid_formula() {
        let g = make_grid(1e-3, 10.0, 5).unwrap();
        assert_eq!(g.len(), 5);
        for (k, v) in g.values().iter().enumerate() {
            let expected = 10f64.powf(1.0 - 4.0 * k as f64 / 4.0);
            assert!((v / expected - 1.0).abs() < 1e-12);
        }
        let g = make_grid(1e-3, 10.0, 9).unwrap();
        assert!((g.values()[1] - 10f64.powf(0.5)).abs() < 1e-12);
        assert_eq!(make_grid(0.5, 2.0, 2).unwrap().values(), &[2.0, 0.5]);
        assert!(make_grid(1.0, 1.0, 3).is_err());
        assert!(make_grid(1.0, 2.0, 1).is_err());
        let default = LambdaGrid::default();
        assert_eq!((default.len(), default.values()[0], default.values()[29]), (30, 10.0, 1e-3));
        assert!(default.values().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn grid_sorts_and_rejects() {
        let g = LambdaGrid::new(vec![0.1, 1.0, 0.5, 1.0]).unwrap();
        assert_eq!(g.values(), &[1.0, 0.5, 0.1]);
        assert!(LambdaGrid::new(vec![0.0, 1.0]).is_err());
        assert!(LambdaGrid::new(vec![]).is_err());
    }

    #[test]
    fn criterion_names() {
        assert_eq!("J2".parse::<Criterion>().unwrap(), Criterion::J2);
        assert_eq!(Criterion::J1.to_string(), "j1");
        assert!("j3".parse::<Criterion>().is_err());
    }

    #[test]
    fn episode_folds_keep_trajectories_together() {
        let episodes: Vec<usize> = (0..40).map(|i| i / 4).collect();
        let folds = FoldAssignment::by_episode(&episodes, 5, 2).unwrap();
        for i in 0..40 {
            assert_eq!(folds.membership()[i], folds.membership()[episodes[i] * 4]);
        }
        assert!(FoldAssignment::by_episode(&episodes, 11, 2).is_err());
    }

    #[test]
    fn leave_one_out_matches_loop() {
        let samples = random_samples(3, 6, 2);
        let gamma = 0.9;
        let lambda = 0.05;
        let cfg = CvConfig::default();
        let folds = FoldAssignment::new(6, 6, 4).unwrap();
        let score = j1_score(&samples, gamma, lambda, &folds, Method::Dantzig, &cfg).unwrap();
        let mut total = 0.0;
        for i in 0..6 {
            let train: Vec<usize> = (0..6).filter(|&j| j != i).collect();
            let sys = empirical_system(&samples.subset(&train).unwrap(), gamma);
            let theta = fit(Method::Dantzig, &sys, lambda, &cfg.fit).unwrap().theta;
            let held = empirical_system(&samples.subset(&[i]).unwrap(), gamma);
            total += (&held.a * theta - &held.b).amax();
        }
        assert!((score - total / 6.0).abs() < 1e-10);
    }

    #[test]
    fn identical_folds_give_equal_scores() {
        let samples = two_state_samples(20);
        let folds = FoldAssignment::new(20, 5, 0).unwrap();
        let cfg = CvConfig::default();
        for lambda in [1.5, 0.4] {
            let j1 = j1_score(&samples, 0.9, lambda, &folds, Method::Dantzig, &cfg).unwrap();
            let j2 = j2_score(&samples, 0.9, lambda, &folds, Method::Dantzig, &cfg).unwrap();
            assert!((j1 - j2).abs() < 1e-8);
            assert!(j1 <= lambda + 1e-8);
        }
    }

    #[test]
    fn huge_lambda_scores_the_zero_estimate() {
        let samples = random_samples(5, 50, 3);
        let folds = FoldAssignment::new(50, 5, 1).unwrap();
        let cfg = CvConfig::default();
        let j1 = j1_score(&samples, 0.9, 1e6, &folds, Method::Dantzig, &cfg).unwrap();
        let expected: f64 = (0..5)
            .map(|k| empirical_system(&samples.subset(&folds.fold(k)).unwrap(), 0.9).b.amax())
            .sum::<f64>()
            / 5.0;
        assert!((j1 - expected).abs() < 1e-12);
        let j2 = j2_score(&samples, 0.9, 1e6, &folds, Method::Dantzig, &cfg).unwrap();
        assert!((j2 - empirical_system(&samples, 0.9).b.amax()).abs() < 1e-12);
    }

    #[test]
    fn two_state_j2_picks_smallest() {
        let samples = two_state_samples(25);
        let folds = FoldAssignment::new(25, 5, 3).unwrap();
        let (lambda, table) =
            select_lambda(&samples, 0.9, &[1.9, 1.0, 0.1], &folds, Method::Dantzig, Criterion::J2, &CvConfig::default()).unwrap();
        assert_eq!(lambda, 0.1);
        assert_eq!(table.selected, Some(0.1));
        let (single, _) =
            select_lambda(&samples, 0.9, &[0.7], &folds, Method::Dantzig, Criterion::J1, &CvConfig::default()).unwrap();
        assert_eq!(single, 0.7);
    }

    #[test]
    fn failures_make_scores_absent() {
        let spec = TwoStateSpec { gamma: 0.9, mu_mode: MuMode::OffPolicyUniform };
        let (mrp, basis, mu) = build_two_state(&spec).unwrap();
        let samples = sample_iid(&mrp, &basis, &mu, 400, 2).unwrap();
        let folds = FoldAssignment::new(400, 5, 0).unwrap();
        let cfg = CvConfig::default();
        let scores = cv_scores(&samples, 0.9, &[0.3, 0.1], &folds, Method::LassoTd, &cfg).unwrap();
        assert!(scores.scores(Criterion::J1).iter().all(|s| s.is_none()));
        assert!(scores.failures.iter().all(|f| f.is_some()));
        assert!(matches!(
            select_lambda(&samples, 0.9, &[0.3, 0.1], &folds, Method::LassoTd, Criterion::J2, &cfg),
            Err(Error::NoScore(_))
        ));
        assert!(matches!(
            j1_score(&samples, 0.9, 0.1, &folds, Method::LassoTd, &cfg),
            Err(Error::NoScore(_))
        ));
    }

    #[test]
    fn argmin_ties_and_order() {
        assert_eq!(argmin_prefer_larger(&[Some(1.0), Some(0.5), Some(0.5)]), Some(1));
        assert_eq!(argmin_prefer_larger(&[Some(3.0), Some(2.0), Some(1.0)]), Some(2));
        assert_eq!(argmin_prefer_larger(&[None, Some(f64::NAN)]), None);
    }

    #[test]
    fn oracle_examples() {
        let truth = DVector::from_vec(vec![-10.0]);
        assert_eq!(oracle_select(&[0.3], &[DVector::from_vec(vec![0.0])], &truth).unwrap(), 0.3);
        let same = vec![DVector::from_vec(vec![1.0]); 3];
        assert_eq!(oracle_select(&[0.1, 2.0, 1.0], &same, &truth).unwrap(), 2.0);
        // two-state path: prediction 2 theta(lambda) with theta = -(2 - lambda)/0.4
        let grid = [1.0, 0.5, 0.0];
        let preds: Vec<DVector<f64>> = grid.iter().map(|l| DVector::from_vec(vec![-2.0 * (2.0 - l) / 0.4])).collect();
        assert_eq!(oracle_select(&grid, &preds, &truth).unwrap(), 0.0);
        assert!(oracle_select(&grid, &preds[..2], &truth).is_err());
    }

    #[test]
    fn jensen_direction() {
        let spec = InstanceSpec { states: 5, features: 3, n: 30, gamma: 0.9, on_policy: true };
        let inst = random_instance(&spec, 7).unwrap();
        let theta = DVector::from_vec(vec![0.3, -0.2, 0.1]);
        let model_res = (&inst.model.a * &theta - &inst.model.b).amax();
        let draws: Vec<f64> = (0..1000)
            .map(|s| {
                let set = sample_iid(&inst.mrp, &inst.basis, &inst.mu, 30, 100 + s).unwrap();
                empirical_system(&set, 0.9).residual(&theta).amax()
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / 1000.0;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 999.0;
        assert!(mean >= model_res - 2.0 * (var / 1000.0).sqrt());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn folds_are_balanced_and_deterministic(n in 2usize..200, k in 2usize..10, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let f = FoldAssignment::new(n, k, seed).unwrap();
            prop_assert_eq!(&f, &FoldAssignment::new(n, k, seed).unwrap());
            let sizes: Vec<usize> = (0..k).map(|i| f.fold(i).len()).collect();
            prop_assert!(sizes.iter().all(|&s| s > 0));
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(f.fold(0).len() + f.complement(0).len(), n);
        }

        #[test]
        fn selection_ignores_grid_order(seed in any::<u64>()) {
            let samples = random_samples(seed, 40, 3);
            let folds = FoldAssignment::new(40, 4, seed).unwrap();
            let grid = [0.5, 0.1, 0.02, 0.004];
            let shuffled = [0.02, 0.5, 0.004, 0.1];
            let cfg = CvConfig::default();
            let a = select_lambda(&samples, 0.9, &grid, &folds, Method::Ridge, Criterion::J2, &cfg).unwrap();
            let b = select_lambda(&samples, 0.9, &shuffled, &folds, Method::Ridge, Criterion::J2, &cfg).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
