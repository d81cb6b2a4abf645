//! Dantzig-LSTD: `min ||theta||_1 s.t. ||A~ theta - b~||_inf <= lambda`, as
//! the LP over `(theta, u)`:
//!
//! ```text
//! min 1^T u   s.t.   theta - u <= 0,  -theta - u <= 0,
//!                    A~ theta <= b~ + lambda,  -A~ theta <= lambda - b~
//! ```

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use super::{check_grid, check_lambda, Estimate, Method, PathPoint, RegularizationPath};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mrp::{EmpiricalSystem, LowRankFactors};
use crate::solvers::{
    solve_lp, solve_structured, spd_factor, ConstraintOperator, LinearProgram, LpAlgorithm, LpStatus,
    NormalEquations, SolverConfig, SpdFactor,
};

/// The Dantzig LP in generic dense form (`4p` rows, `2p` variables).
pub fn dantzig_lp(sys: &EmpiricalSystem, lambda: f64) -> LinearProgram {
    let p = sys.dim();
    let mut g = DMatrix::zeros(4 * p, 2 * p);
    let mut h = DVector::zeros(4 * p);
    for i in 0..p {
        g[(i, i)] = 1.0;
        g[(i, p + i)] = -1.0;
        g[(p + i, i)] = -1.0;
        g[(p + i, p + i)] = -1.0;
        for j in 0..p {
            g[(2 * p + i, j)] = sys.a[(i, j)];
            g[(3 * p + i, j)] = -sys.a[(i, j)];
        }
        h[2 * p + i] = sys.b[i] + lambda;
        h[3 * p + i] = lambda - sys.b[i];
    }
    let mut c = DVector::zeros(2 * p);
    c.rows_mut(p, p).fill(1.0);
    LinearProgram { c, g, h }
}

fn dantzig_rhs(sys: &EmpiricalSystem, lambda: f64) -> (DVector<f64>, DVector<f64>) {
    let p = sys.dim();
    let mut h = DVector::zeros(4 * p);
    for i in 0..p {
        h[2 * p + i] = sys.b[i] + lambda;
        h[3 * p + i] = lambda - sys.b[i];
    }
    let mut c = DVector::zeros(2 * p);
    c.rows_mut(p, p).fill(1.0);
    (c, h)
}

/// The Dantzig constraint matrix applied implicitly. With sample factors
/// available the normal equations are solved through the Woodbury identity
/// on `A~ = (1/n) Phi~^T Delta`, costing `O(n^2 p + n^3)` instead of `O(p^3)`.
pub struct DantzigOperator<'a> {
    a: &'a DMatrix<f64>,
    factors: Option<&'a LowRankFactors>,
    n: usize,
    low_rank: bool,
}

impl<'a> DantzigOperator<'a> {
    pub fn new(sys: &'a EmpiricalSystem, mode: NormalEquations) -> Self {
        let low_rank = match (mode, &sys.factors) {
            (NormalEquations::Dense, _) | (_, None) => false,
            (NormalEquations::LowRank, Some(_)) => true,
            (NormalEquations::Auto, Some(f)) => f.phi.nrows() < sys.dim(),
        };
        Self {
            a: &sys.a,
            factors: sys.factors.as_ref(),
            n: sys.n,
            low_rank,
        }
    }

    pub fn uses_low_rank(&self) -> bool {
        self.low_rank
    }

    fn p(&self) -> usize {
        self.a.nrows()
    }

    fn a_mul(&self, theta: &DVector<f64>) -> DVector<f64> {
        match (self.low_rank, self.factors) {
            (true, Some(f)) => f.phi.tr_mul(&(&f.delta * theta)) / self.n as f64,
            _ => self.a * theta,
        }
    }

    fn a_tr_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        match (self.low_rank, self.factors) {
            (true, Some(f)) => f.delta.tr_mul(&(&f.phi * v)) / self.n as f64,
            _ => self.a.tr_mul(v),
        }
    }

    /// `(diag(delta) + A~^T diag(d) A~) y = r`, dense.
    pub fn reduced_solve_dense(
        &self,
        delta: &DVector<f64>,
        d: &DVector<f64>,
        r: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        self.reduced_factor_dense(delta, d).solve(r)
    }

    fn reduced_factor_dense(&self, delta: &DVector<f64>, d: &DVector<f64>) -> SpdFactor {
        let mut m = linalg::weighted_cross(self.a, d, self.a);
        for i in 0..m.nrows() {
            m[(i, i)] += delta[i];
        }
        spd_factor(m)
    }

    /// Same system through the Woodbury identity. `None` without factors.
    pub fn reduced_solve_low_rank(
        &self,
        delta: &DVector<f64>,
        d: &DVector<f64>,
        r: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        self.reduced_factor_low_rank(delta, d)?.solve(r)
    }

    fn reduced_factor_low_rank(&self, delta: &DVector<f64>, d: &DVector<f64>) -> Option<Woodbury<'a>> {
        let f = self.factors?;
        let n = f.phi.nrows();
        let inv_n2 = 1.0 / (self.n as f64 * self.n as f64);
        // A~^T D A~ = L^T C L with L = Delta (n x p), C = (1/n^2) Phi D Phi^T.
        let c = linalg::weighted_cross(&f.phi.transpose(), d, &f.phi.transpose()) * inv_n2;
        let delta_inv = delta.map(|x| 1.0 / x);
        let mut l_scaled = f.delta.clone();
        for (mut col, w) in l_scaled.column_iter_mut().zip(delta_inv.iter()) {
            col *= *w;
        }
        // M = L diag(delta)^-1 L^T
        let m = &l_scaled * f.delta.transpose();
        let k = (DMatrix::identity(n, n) + &m * &c).lu();
        Some(Woodbury { delta: &f.delta, delta_inv, l_scaled, c, k })
    }

    fn reduced_apply(&self, delta: &DVector<f64>, d: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        delta.component_mul(y) + self.a_tr_mul(&d.component_mul(&self.a_mul(y)))
    }
}

/// Woodbury form of the reduced normal matrix.
struct Woodbury<'a> {
    delta: &'a DMatrix<f64>,
    delta_inv: DVector<f64>,
    l_scaled: DMatrix<f64>,
    c: DMatrix<f64>,
    k: LU<f64, Dyn, Dyn>,
}

impl Woodbury<'_> {
    fn solve(&self, r: &DVector<f64>) -> Option<DVector<f64>> {
        let t = r.component_mul(&self.delta_inv);
        let v = self.delta * &t;
        let w = self.k.solve(&v)?;
        let y = t - self.l_scaled.tr_mul(&(&self.c * w));
        y.iter().all(|x| x.is_finite()).then_some(y)
    }
}

/// One iteration's factored Dantzig normal equations. The dense factor is
/// built lazily when the Woodbury solve is missing or inaccurate.
pub struct DantzigNormal<'a> {
    duu: DVector<f64>,
    dtu: DVector<f64>,
    delta: DVector<f64>,
    d: DVector<f64>,
    low_rank: Option<Woodbury<'a>>,
    dense: RefCell<Option<SpdFactor>>,
}

impl<'a> ConstraintOperator for DantzigOperator<'a> {
    fn num_vars(&self) -> usize {
        2 * self.p()
    }

    fn num_rows(&self) -> usize {
        4 * self.p()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.p();
        let theta = x.rows(0, p).into_owned();
        let u = x.rows(p, p);
        let at = self.a_mul(&theta);
        let mut out = DVector::zeros(4 * p);
        for i in 0..p {
            out[i] = theta[i] - u[i];
            out[p + i] = -theta[i] - u[i];
            out[2 * p + i] = at[i];
            out[3 * p + i] = -at[i];
        }
        out
    }

    fn apply_t(&self, z: &DVector<f64>) -> DVector<f64> {
        let p = self.p();
        let diff = z.rows(2 * p, p) - z.rows(3 * p, p);
        let atz = self.a_tr_mul(&diff.into_owned());
        let mut out = DVector::zeros(2 * p);
        for i in 0..p {
            out[i] = z[i] - z[p + i] + atz[i];
            out[p + i] = -z[i] - z[p + i];
        }
        out
    }

    type Normal = DantzigNormal<'a>;

    fn factor_normal(&self, w: &DVector<f64>) -> Option<DantzigNormal<'a>> {
        let p = self.p();
        let w1 = w.rows(0, p);
        let w2 = w.rows(p, p);
        let d = (w.rows(2 * p, p) + w.rows(3 * p, p)).into_owned();
        // Block system [[W1+W2+A^T D A, W2-W1], [W2-W1, W1+W2]]; eliminate u.
        let duu = w1 + w2;
        let dtu = w2 - w1;
        let delta = DVector::from_iterator(p, (0..p).map(|i| 4.0 * w1[i] * w2[i] / duu[i]));
        let low_rank = if self.low_rank {
            self.reduced_factor_low_rank(&delta, &d)
        } else {
            None
        };
        let dense = if low_rank.is_none() {
            Some(self.reduced_factor_dense(&delta, &d))
        } else {
            None
        };
        Some(DantzigNormal { duu, dtu, delta, d, low_rank, dense: RefCell::new(dense) })
    }

    fn solve_factored(&self, f: &DantzigNormal<'a>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let p = self.p();
        let (duu, dtu) = (&f.duu, &f.dtu);
        let r_theta = rhs.rows(0, p);
        let r_u = rhs.rows(p, p);
        let reduced_rhs = DVector::from_iterator(p, (0..p).map(|i| r_theta[i] - dtu[i] * r_u[i] / duu[i]));

        let mut dtheta = None;
        if let Some(wb) = &f.low_rank {
            if let Some(y) = wb.solve(&reduced_rhs) {
                let res = self.reduced_apply(&f.delta, &f.d, &y) - &reduced_rhs;
                if res.amax() <= 1e-8 * (1.0 + reduced_rhs.amax()) {
                    dtheta = Some(y);
                }
            }
        }
        let dtheta = match dtheta {
            Some(y) => y,
            None => {
                let mut dense = f.dense.borrow_mut();
                dense
                    .get_or_insert_with(|| self.reduced_factor_dense(&f.delta, &f.d))
                    .solve(&reduced_rhs)?
            }
        };
        let du = DVector::from_iterator(p, (0..p).map(|i| (r_u[i] - dtu[i] * dtheta[i]) / duu[i]));
        let mut out = DVector::zeros(2 * p);
        out.rows_mut(0, p).copy_from(&dtheta);
        out.rows_mut(p, p).copy_from(&du);
        Some(out)
    }
}

/// `min_theta ||A~ theta - b~||_inf`, the smallest lambda for which the
/// Dantzig constraint is feasible (up to a tiny l1 tie-breaker).
pub fn min_feasible_lambda(sys: &EmpiricalSystem, cfg: &SolverConfig) -> f64 {
    let p = sys.dim();
    // variables (theta, u, t)
    let m = 2 * p + 1;
    let mut g = DMatrix::zeros(4 * p, m);
    let mut h = DVector::zeros(4 * p);
    for i in 0..p {
        for j in 0..p {
            g[(i, j)] = sys.a[(i, j)];
            g[(p + i, j)] = -sys.a[(i, j)];
        }
        g[(i, 2 * p)] = -1.0;
        g[(p + i, 2 * p)] = -1.0;
        h[i] = sys.b[i];
        h[p + i] = -sys.b[i];
        g[(2 * p + i, i)] = 1.0;
        g[(2 * p + i, p + i)] = -1.0;
        g[(3 * p + i, i)] = -1.0;
        g[(3 * p + i, p + i)] = -1.0;
    }
    let mut c = DVector::from_element(m, 1e-9);
    c.rows_mut(0, p).fill(0.0);
    c[2 * p] = 1.0;
    let lp = LinearProgram { c, g, h };
    let fallback_cfg = SolverConfig {
        algorithm: LpAlgorithm::Auto,
        ..*cfg
    };
    match solve_lp(&lp, &fallback_cfg) {
        Ok(sol) if sol.status == LpStatus::Optimal => {
            linalg::inf_norm(&sys.residual(&sol.x.rows(0, p).into_owned()))
        }
        _ => {
            // Least-squares residual is an upper bound.
            let svd = sys.a.clone().svd(true, true);
            match svd.solve(&sys.b, 1e-12) {
                Ok(theta) => linalg::inf_norm(&sys.residual(&theta)),
                Err(_) => linalg::inf_norm(&sys.b),
            }
        }
    }
}

pub fn dantzig_lstd(sys: &EmpiricalSystem, lambda: f64, cfg: &SolverConfig) -> Result<Estimate> {
    check_lambda(lambda)?;
    cfg.validate()?;
    let p = sys.dim();
    if lambda >= linalg::inf_norm(&sys.b) {
        // zero is feasible and has the smallest possible l1 norm
        return Ok(Estimate::new(sys, DVector::zeros(p), lambda, Method::Dantzig));
    }
    let op = DantzigOperator::new(sys, cfg.normal_equations);
    let (c, h) = dantzig_rhs(sys, lambda);
    let sol = solve_structured(&op, &c, &h, cfg, || dantzig_lp(sys, lambda))?;
    match sol.status {
        LpStatus::Optimal => {
            let theta = sol.x.rows(0, p).into_owned();
            Ok(Estimate::new(sys, theta, lambda, Method::Dantzig))
        }
        LpStatus::Infeasible => Err(Error::DantzigInfeasible {
            lambda,
            min_feasible_lambda: min_feasible_lambda(sys, cfg),
        }),
        status => {
            let min_lambda = min_feasible_lambda(sys, cfg);
            if lambda < min_lambda * (1.0 - 1e-6) {
                Err(Error::DantzigInfeasible {
                    lambda,
                    min_feasible_lambda: min_lambda,
                })
            } else {
                Err(Error::SolverStopped(format!("{status}: {}", sol.message)))
            }
        }
    }
}

/// D-LSTD at each grid value; grid points are independent and solved in
/// parallel, then assembled in grid order.
pub fn dantzig_path(sys: &EmpiricalSystem, grid: &[f64], cfg: &SolverConfig) -> Result<RegularizationPath> {
    check_grid(grid)?;
    cfg.validate()?;
    let points = grid
        .par_iter()
        .map(|&lambda| PathPoint {
            lambda,
            outcome: dantzig_lstd(sys, lambda, cfg).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(RegularizationPath {
        method: Method::Dantzig,
        points,
        piecewise_linear: false,
        failure: None,
        truncated: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{two_state_system, MuMode, TwoStateSpec};
    use crate::estimators::{lstd, Diagnostics};
    use crate::mrp::{empirical_system, rng_from_seed};
    use crate::verification::{random_instance, InstanceSpec};
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    /// Minimize `||theta||_1` over `{|A theta - b| <= lambda}` by visiting every
    /// vertex of the arrangement of the constraint facets and the coordinate
    /// hyperplanes.
    fn brute_force(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> f64 {
        let p = b.len();
        let mut planes: Vec<(DVector<f64>, f64)> = Vec::new();
        for i in 0..p {
            let row = a.row(i).transpose();
            planes.push((row.clone(), b[i] + lambda));
            planes.push((row, b[i] - lambda));
            let mut e = DVector::zeros(p);
            e[i] = 1.0;
            planes.push((e, 0.0));
        }
        let mut best = f64::INFINITY;
        let total = planes.len();
        let mut pick: Vec<usize> = (0..p).collect();
        loop {
            let m = DMatrix::from_fn(p, p, |r, c| planes[pick[r]].0[c]);
            let rhs = DVector::from_fn(p, |r, _| planes[pick[r]].1);
            if let Some(x) = m.lu().solve(&rhs) {
                if x.iter().all(|v| v.is_finite()) && (a * &x - b).amax() <= lambda + 1e-9 {
                    best = best.min(x.iter().map(|v| v.abs()).sum());
                }
            }
            let Some(i) = (0..p).rev().find(|&i| pick[i] < total - p + i) else { break };
            pick[i] += 1;
            for j in i + 1..p {
                pick[j] = pick[j - 1] + 1;
            }
        }
        best
    }

    fn two_state(gamma: f64, mu_mode: MuMode) -> EmpiricalSystem {
        two_state_system(&TwoStateSpec { gamma, mu_mode }).unwrap()
    }

    fn small_system(seed: u64, p: usize, n: usize) -> EmpiricalSystem {
        let spec = InstanceSpec {
            states: 6,
            features: p,
            n,
            gamma: 0.8,
            on_policy: false,
        };
        random_instance(&spec, seed).unwrap().system
    }

    #[test]
    fn zero_above_threshold() {
        let sys = small_system(1, 3, 100);
        let big = 2.0 * sys.b.amax();
        let est = dantzig_lstd(&sys, big, &SolverConfig::default()).unwrap();
        assert_eq!(est.theta, DVector::zeros(3));
        let path = dantzig_path(&sys, &[big], &SolverConfig::default()).unwrap();
        assert_eq!(path.points.len(), 1);
        assert_eq!(path.points[0].estimate().unwrap().theta, DVector::zeros(3));
    }

    #[test]
    fn two_state_scalar_solutions() {
        let cfg = SolverConfig::default();
        let on = two_state(0.9, MuMode::OnPolicy);
        assert!((dantzig_lstd(&on, 0.1, &cfg).unwrap().theta[0] + 4.75).abs() < 1e-7);
        let off = two_state(0.9, MuMode::OffPolicyUniform);
        assert!((dantzig_lstd(&off, 0.5, &cfg).unwrap().theta[0] - 2.5).abs() < 1e-7);
    }

    #[test]
    fn two_state_path_closed_form() {
        let on = two_state(0.9, MuMode::OnPolicy);
        let grid: Vec<f64> = (0..25).map(|i| 2.5 - 0.1 * i as f64).collect();
        let path = dantzig_path(&on, &grid, &SolverConfig::default()).unwrap();
        for point in &path.points {
            let theta = point.estimate().unwrap().theta[0];
            let expected = (2.0 - point.lambda).max(0.0) / 0.4;
            assert!((theta.abs() - expected).abs() < 1e-6, "lambda {}", point.lambda);
        }
    }

    #[test]
    fn zero_lambda_endpoint_is_lstd() {
        let sys = small_system(2, 4, 200);
        let path = dantzig_path(&sys, &[0.1, 0.01, 0.0], &SolverConfig::default()).unwrap();
        let end = path.points[2].estimate().unwrap();
        assert!((&end.theta - lstd(&sys).unwrap().theta).amax() < 1e-6);
    }

    #[test]
    fn infeasible_lambda_names_minimum() {
        // rank-one A~: the constraint cannot be met for small lambda
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let sys = EmpiricalSystem::from_parts(a, b, 1).unwrap();
        match dantzig_lstd(&sys, 0.5, &SolverConfig::default()) {
            Err(Error::DantzigInfeasible { min_feasible_lambda, .. }) => {
                assert!((min_feasible_lambda - 1.0).abs() < 1e-6);
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
        assert!(dantzig_lstd(&sys, 1.5, &SolverConfig::default()).is_ok());
    }

    #[test]
    fn woodbury_matches_dense() {
        let mut rng = rng_from_seed(3);
        let (n, p) = (12, 40);
        let phi = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let next = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let rewards = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let set = crate::mrp::SampleSet::new(vec![0; n], vec![0; n], rewards, phi, next, (0..n).collect(), 0).unwrap();
        let sys = empirical_system(&set, 0.9);
        let op = DantzigOperator::new(&sys, NormalEquations::Auto);
        assert!(op.uses_low_rank());
        for _ in 0..5 {
            let delta = DVector::from_fn(p, |_, _| rng.random_range(0.01..10.0));
            let d = DVector::from_fn(p, |_, _| rng.random_range(0.01..10.0));
            let r = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let dense = op.reduced_solve_dense(&delta, &d, &r).unwrap();
            let low = op.reduced_solve_low_rank(&delta, &d, &r).unwrap();
            assert!((&dense - &low).amax() <= 1e-8 * (1.0 + dense.amax()));
        }
        let dense_cfg = SolverConfig {
            normal_equations: NormalEquations::Dense,
            ..Default::default()
        };
        let low_cfg = SolverConfig {
            normal_equations: NormalEquations::LowRank,
            ..Default::default()
        };
        let lambda = 0.3 * sys.b.amax();
        let a = dantzig_lstd(&sys, lambda, &dense_cfg).unwrap();
        let b = dantzig_lstd(&sys, lambda, &low_cfg).unwrap();
        assert!((a.diagnostics.l1_norm_theta - b.diagnostics.l1_norm_theta).abs() < 1e-6);
    }

    #[test]
    fn generic_lp_agrees_with_structured_solve() {
        let sys = small_system(4, 5, 150);
        let lambda = 0.2 * sys.b.amax();
        let lp = dantzig_lp(&sys, lambda);
        assert_eq!((lp.num_constraints(), lp.num_vars()), (20, 10));
        let generic = solve_lp(&lp, &SolverConfig::default()).unwrap();
        let est = dantzig_lstd(&sys, lambda, &SolverConfig::default()).unwrap();
        assert!((generic.objective - est.diagnostics.l1_norm_theta).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn matches_brute_force(seed in any::<u64>(), p in 1usize..=3, frac in 0.0f64..1.2) {
            let sys = small_system(seed, p, 60);
            prop_assume!(crate::linalg::is_well_conditioned(&sys.a));
            let lambda = frac * sys.b.amax();
            let est = dantzig_lstd(&sys, lambda, &SolverConfig::default()).unwrap();
            let oracle = brute_force(&sys.a, &sys.b, lambda);
            prop_assert!((est.diagnostics.l1_norm_theta - oracle).abs() <= 1e-5 * (1.0 + oracle));
            prop_assert!(est.diagnostics.inf_norm_residual <= lambda + 1e-8 * (1.0 + sys.b.amax()));
            prop_assert_eq!(est.diagnostics, Diagnostics::compute(&sys, &est.theta));
        }

        #[test]
        fn l1_norm_grows_as_lambda_shrinks(seed in any::<u64>()) {
            let sys = small_system(seed, 4, 80);
            prop_assume!(crate::linalg::is_well_conditioned(&sys.a));
            let top = sys.b.amax();
            let grid: Vec<f64> = (0..8).map(|i| top * (1.0 - i as f64 / 8.0)).collect();
            let path = dantzig_path(&sys, &grid, &SolverConfig::default()).unwrap();
            let norms: Vec<f64> = path.estimates().map(|e| e.diagnostics.l1_norm_theta).collect();
            prop_assert_eq!(norms.len(), grid.len());
            for w in norms.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-7);
            }
        }
    }
}
