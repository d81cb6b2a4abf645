//! Random instances and the randomized invariant suites behind `dlstd verify`.
//!
//! Each suite draws independent trials from a base seed and reports pass and
//! fail counts. Trials whose instance is degenerate (singular `A`, failed
//! homotopy) are counted as skipped and redrawn.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimators::{check_prop2, check_theorem1, LarsTdConfig};
use crate::linalg;
use crate::mrp::{
    empirical_system, model_system, rng_from_seed, sample_iid, stationary_distribution,
    theorem3_decomposition, EmpiricalSystem, FeatureBasis, MarkovRewardProcess, ModelSystem,
    Rng, SampleSet, SamplingDistribution,
};
use crate::solvers::{solve_lp, LinearProgram, LpStatus, SolverConfig};

/// Row-stochastic `P` with i.i.d. uniform weights and rewards in `[-1, 1]`.
pub fn random_mrp(rng: &mut Rng, states: usize, gamma: f64) -> Result<MarkovRewardProcess> {
    let mut p = DMatrix::from_fn(states, states, |_, _| rng.random::<f64>() + 1e-3);
    for mut row in p.row_iter_mut() {
        let total = row.sum();
        row /= total;
    }
    let r = DVector::from_fn(states, |_, _| rng.random_range(-1.0..=1.0));
    MarkovRewardProcess::new(p, r, gamma)
}

/// Standard normal features.
pub fn random_basis(rng: &mut Rng, states: usize, features: usize) -> Result<FeatureBasis> {
    FeatureBasis::new(DMatrix::from_fn(states, features, |_, _| rng.sample(StandardNormal)))
}

/// A distribution with full support.
pub fn random_distribution(rng: &mut Rng, states: usize) -> Result<SamplingDistribution> {
    let w = DVector::from_fn(states, |_, _| rng.random::<f64>() + 0.05);
    let total = w.sum();
    SamplingDistribution::new(w / total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub states: usize,
    pub features: usize,
    pub n: usize,
    pub gamma: f64,
    /// Sample from the stationary distribution of `P` rather than a random one.
    pub on_policy: bool,
}

#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub mrp: MarkovRewardProcess,
    pub basis: FeatureBasis,
    pub mu: SamplingDistribution,
    pub samples: SampleSet,
    pub system: EmpiricalSystem,
    pub model: ModelSystem,
}

pub fn random_instance(spec: &InstanceSpec, seed: u64) -> Result<RandomInstance> {
    if spec.features == 0 || spec.features > spec.states {
        return Err(Error::InvalidInput(format!(
            "need 1 <= features <= states, got {} features for {} states",
            spec.features, spec.states
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mrp = random_mrp(&mut rng, spec.states, spec.gamma)?;
    let basis = random_basis(&mut rng, spec.states, spec.features)?;
    let mu = if spec.on_policy {
        stationary_distribution(mrp.transition())?
    } else {
        random_distribution(&mut rng, spec.states)?
    };
    let sample_seed: u64 = rng.random();
    let samples = sample_iid(&mrp, &basis, &mu, spec.n, sample_seed)?;
    let system = empirical_system(&samples, mrp.gamma());
    let model = model_system(&mrp, &basis, &mu)?;
    Ok(RandomInstance {
        mrp,
        basis,
        mu,
        samples,
        system,
        model,
    })
}

/// A bounded, feasible LP: `h = G x0 + slack` and `c = -G^T z0` with
/// `z0 >= 0`, so both the primal and the dual are feasible.
pub fn random_lp(rng: &mut Rng, vars: usize, constraints: usize) -> Result<LinearProgram> {
    let g = DMatrix::from_fn(constraints, vars, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x0 = DVector::from_fn(vars, |_, _| rng.sample::<f64, _>(StandardNormal));
    let slack = DVector::from_fn(constraints, |_, _| rng.random::<f64>());
    let h = &g * x0 + slack;
    let z0 = DVector::from_fn(constraints, |_, _| {
        if rng.random::<f64>() < 0.5 {
            rng.random::<f64>()
        } else {
            0.0
        }
    });
    let c = -g.tr_mul(&z0);
    LinearProgram::new(c, g, h)
}

/// Best vertex of `{x : G x <= h}` by enumerating every choice of `m` tight
/// rows. Returns `None` when there is no feasible vertex. Only meaningful for
/// bounded problems whose constraint matrix has full column rank.
pub fn vertex_enumeration(lp: &LinearProgram, tol: f64) -> Option<(f64, DVector<f64>)> {
    let m = lp.num_vars();
    let k = lp.num_constraints();
    if m == 0 || m > k {
        return None;
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut rows: Vec<usize> = (0..m).collect();
    loop {
        let sub = lp.g.select_rows(rows.iter());
        let rhs = DVector::from_iterator(m, rows.iter().map(|&i| lp.h[i]));
        if linalg::singular_ratio(&sub) > 1e-10 {
            if let Some(x) = sub.lu().solve(&rhs) {
                let slack = &lp.h - &lp.g * &x;
                let scale = 1.0 + linalg::inf_norm(&lp.h);
                if slack.min() >= -tol * scale {
                    let obj = lp.c.dot(&x);
                    if best.as_ref().is_none_or(|b| obj < b.0) {
                        best = Some((obj, x));
                    }
                }
            }
        }
        // next combination in lexicographic order
        let Some(i) = (0..m).rev().find(|&i| rows[i] < k - m + i) else {
            break;
        };
        rows[i] += 1;
        for j in i + 1..m {
            rows[j] = rows[j - 1] + 1;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Theorem1,
    Prop2,
    Theorem3,
    LpOracle,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Theorem1, Suite::Prop2, Suite::Theorem3, Suite::LpOracle];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Prop2 => "prop2",
            Suite::Theorem3 => "theorem3",
            Suite::LpOracle => "lp",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?} (expected theorem1, prop2, theorem3 or lp)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: Suite,
    pub passed: usize,
    pub failed: usize,
    /// Degenerate draws that were replaced.
    pub skipped: usize,
    /// Largest observed violation measure (0 when every check has slack).
    pub worst: f64,
    /// One line per failed trial.
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            passed: 0,
            failed: 0,
            skipped: 0,
            worst: 0.0,
            failures: Vec::new(),
        }
    }

    pub fn trials(&self) -> usize {
        self.passed + self.failed
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    fn record(&mut self, ok: bool, worst: f64, describe: impl FnOnce() -> String) {
        self.worst = self.worst.max(worst);
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            self.failures.push(describe());
        }
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<9} {}/{} passed, {} skipped, worst {:.3e}",
            self.suite,
            self.passed,
            self.trials(),
            self.skipped,
            self.worst
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    pub lp: SolverConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            lp: SolverConfig::default(),
        }
    }
}

/// Give up on a suite after this many degenerate draws per requested trial.
const MAX_SKIPS_PER_TRIAL: usize = 20;

fn trial_seed(base: u64, suite: Suite, attempt: u64) -> u64 {
    let tag = match suite {
        Suite::Theorem1 => 1,
        Suite::Prop2 => 2,
        Suite::Theorem3 => 3,
        Suite::LpOracle => 4,
    };
    crate::benchmarks::derive_seed(base, &[tag, attempt])
}

/// Run `trials` non-degenerate trials of one suite.
pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<SuiteResult> {
    cfg.lp.validate()?;
    let mut result = SuiteResult::new(suite);
    let mut attempt = 0u64;
    while result.trials() < cfg.trials {
        if result.skipped > MAX_SKIPS_PER_TRIAL * cfg.trials.max(1) {
            return Err(Error::InvalidInput(format!(
                "{suite}: too many degenerate instances ({} skipped)",
                result.skipped
            )));
        }
        let seed = trial_seed(cfg.seed, suite, attempt);
        attempt += 1;
        let ran = match suite {
            Suite::Theorem1 => theorem1_trial(seed, cfg, &mut result)?,
            Suite::Prop2 => prop2_trial(seed, cfg, &mut result)?,
            Suite::Theorem3 => theorem3_trial(seed, &mut result)?,
            Suite::LpOracle => lp_trial(seed, cfg, &mut result)?,
        };
        if !ran {
            result.skipped += 1;
        }
    }
    Ok(result)
}

fn theorem1_trial(seed: u64, cfg: &VerifyConfig, out: &mut SuiteResult) -> Result<bool> {
    let spec = InstanceSpec {
        states: 6,
        features: 4,
        n: 50,
        gamma: 0.9,
        on_policy: true,
    };
    let inst = random_instance(&spec, seed)?;
    if inst.model.theta_star.is_none() {
        return Ok(false);
    }
    let check = match check_theorem1(&inst.model, &inst.system, &cfg.lp) {
        Ok(c) => c,
        Err(e) => {
            out.record(false, f64::INFINITY, || format!("seed {seed}: {e}"));
            return Ok(true);
        }
    };
    out.record(check.holds, (check.lhs - check.rhs).max(0.0), || {
        format!("seed {seed}: ||A theta - b||_inf = {:.6e} > 2 lambda = {:.6e}", check.lhs, check.rhs)
    });
    Ok(true)
}

fn prop2_trial(seed: u64, cfg: &VerifyConfig, out: &mut SuiteResult) -> Result<bool> {
    let mut rng = rng_from_seed(seed);
    let spec = InstanceSpec {
        states: rng.random_range(3..=8),
        features: 0,
        n: rng.random_range(50..=300),
        gamma: rng.random_range(0.0..0.95),
        on_policy: true,
    };
    let spec = InstanceSpec {
        features: rng.random_range(1..=spec.states.min(6)),
        ..spec
    };
    let inst = random_instance(&spec, rng.random())?;
    let top = linalg::inf_norm(&inst.system.b);
    if top == 0.0 {
        return Ok(false);
    }
    let lambda = top * rng.random_range(0.02..1.0);
    let check = match check_prop2(&inst.system, lambda, &LarsTdConfig::default(), &cfg.lp) {
        Ok(c) => c,
        Err(Error::PMatrixFailure { .. }) => return Ok(false),
        Err(e) => {
            out.record(false, f64::INFINITY, || format!("seed {seed}: {e}"));
            return Ok(true);
        }
    };
    let excess = (check.inf_residual_lasso - lambda).max(check.l1_dantzig - check.l1_lasso).max(0.0);
    out.record(check.holds(), excess, || {
        format!(
            "seed {seed}: lambda {lambda:.6e}, lasso residual {:.6e}, l1 dantzig {:.6e} vs lasso {:.6e}",
            check.inf_residual_lasso, check.l1_dantzig, check.l1_lasso
        )
    });
    Ok(true)
}

/// Relative tolerance on the component-wise identity.
pub const THEOREM3_TOL: f64 = 1e-8;

fn theorem3_trial(seed: u64, out: &mut SuiteResult) -> Result<bool> {
    let mut rng = rng_from_seed(seed);
    let states = rng.random_range(2..=8);
    let features = rng.random_range(1..=states.min(5));
    let gamma = rng.random_range(0.0..0.95);
    let mrp = random_mrp(&mut rng, states, gamma)?;
    let basis = random_basis(&mut rng, states, features)?;
    let mu = random_distribution(&mut rng, states)?;
    let theta = DVector::from_fn(features, |_, _| rng.sample::<f64, _>(StandardNormal));
    let dec = match theorem3_decomposition(&mrp, &basis, &mu, &theta) {
        Ok(d) => d,
        Err(Error::Singular { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    let rel = dec.max_abs_gap() / (1.0 + dec.lhs.amax());
    out.record(rel <= THEOREM3_TOL, rel, || format!("seed {seed}: relative gap {rel:.3e}"));
    Ok(true)
}

fn lp_trial(seed: u64, cfg: &VerifyConfig, out: &mut SuiteResult) -> Result<bool> {
    let mut rng = rng_from_seed(seed);
    let vars = rng.random_range(1..=3);
    let constraints = rng.random_range(vars + 1..=8);
    let lp = random_lp(&mut rng, vars, constraints)?;
    let Some((oracle, _)) = vertex_enumeration(&lp, 1e-9) else {
        return Ok(false);
    };
    let sol = solve_lp(&lp, &cfg.lp)?;
    let gap = (sol.objective - oracle).abs() / oracle.abs().max(1.0);
    let ok = sol.status == LpStatus::Optimal && gap <= 1e-6;
    out.record(ok, gap, || {
        format!("seed {seed}: {} objective {:.9e} vs vertex {:.9e}", sol.status, sol.objective, oracle)
    });
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_lp_optimum_is_a_vertex() {
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let lp = random_lp(&mut rng, 2, 6).unwrap();
            let (obj, x) = vertex_enumeration(&lp, 1e-9).unwrap();
            assert!((lp.c.dot(&x) - obj).abs() < 1e-12);
            assert!((&lp.g * &x - &lp.h).max() <= 1e-8);
        }
    }

    #[test]
    fn vertex_enumeration_on_unit_box() {
        // min -x - 2y on [0,1]^2 is attained at (1, 1)
        let g = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let h = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        let lp = LinearProgram::new(DVector::from_vec(vec![-1.0, -2.0]), g, h).unwrap();
        let (obj, x) = vertex_enumeration(&lp, 1e-12).unwrap();
        assert_eq!(obj, -3.0);
        assert_eq!(x, DVector::from_vec(vec![1.0, 1.0]));
    }

    #[test]
    fn suites_pass_and_are_reproducible() {
        let cfg = VerifyConfig {
            trials: 10,
            seed: 3,
            ..Default::default()
        };
        for suite in Suite::ALL {
            let a = run_suite(suite, &cfg).unwrap();
            assert!(a.all_passed(), "{a}: {:?}", a.failures);
            assert_eq!(a.trials(), 10);
            assert_eq!(a, run_suite(suite, &cfg).unwrap());
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for suite in Suite::ALL {
            assert_eq!(suite.name().parse::<Suite>().unwrap(), suite);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn instance_rejects_more_features_than_states() {
        let spec = InstanceSpec {
            states: 2,
            features: 3,
            n: 10,
            gamma: 0.5,
            on_policy: true,
        };
        assert!(random_instance(&spec, 0).is_err());
    }
}
