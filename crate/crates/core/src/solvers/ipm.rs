//! Mehrotra predictor-corrector interior-point method for
//! `min c^T x s.t. G x + s = h, s >= 0` with dual `G^T z + c = 0, z >= 0`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use super::lp::{LpSolution, LpStatus, SolverConfig};
use crate::linalg;

/// The constraint matrix `G` as seen by the interior-point method.
pub trait ConstraintOperator {
    fn num_vars(&self) -> usize;
    fn num_rows(&self) -> usize;
    /// `G x`
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `G^T z`
    fn apply_t(&self, z: &DVector<f64>) -> DVector<f64>;
    /// Factorization of `G^T diag(w) G`, shared by the predictor and
    /// corrector solves of one iteration.
    type Normal;
    fn factor_normal(&self, w: &DVector<f64>) -> Option<Self::Normal>;
    fn solve_factored(&self, f: &Self::Normal, rhs: &DVector<f64>) -> Option<DVector<f64>>;
    /// Solve `G^T diag(w) G dx = rhs`.
    fn solve_normal(&self, w: &DVector<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let f = self.factor_normal(w)?;
        self.solve_factored(&f, rhs)
    }
}

pub struct DenseOperator<'a> {
    g: &'a DMatrix<f64>,
}

impl<'a> DenseOperator<'a> {
    pub fn new(g: &'a DMatrix<f64>) -> Self {
        Self { g }
    }
}

impl ConstraintOperator for DenseOperator<'_> {
    fn num_vars(&self) -> usize {
        self.g.ncols()
    }

    fn num_rows(&self) -> usize {
        self.g.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.g * x
    }

    fn apply_t(&self, z: &DVector<f64>) -> DVector<f64> {
        self.g.tr_mul(z)
    }

    type Normal = SpdFactor;

    fn factor_normal(&self, w: &DVector<f64>) -> Option<SpdFactor> {
        Some(spd_factor(linalg::weighted_cross(self.g, w, self.g)))
    }

    fn solve_factored(&self, f: &SpdFactor, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        f.solve(rhs)
    }
}

/// A symmetric positive (semi)definite matrix, factored.
pub enum SpdFactor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl SpdFactor {
    pub fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let x = match self {
            SpdFactor::Cholesky(c) => c.solve(rhs),
            SpdFactor::Lu(lu) => lu.solve(rhs)?,
        };
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// Cholesky with escalating diagonal jitter for nearly singular normal
/// matrices; LU of the jittered matrix as a last resort.
pub(crate) fn spd_factor(mut m: DMatrix<f64>) -> SpdFactor {
    let scale = m.diagonal().iter().fold(0.0f64, |a, d| a.max(d.abs())).max(1e-300);
    let mut jitter = 0.0;
    for _ in 0..6 {
        if let Some(chol) = m.clone().cholesky() {
            if chol.l_dirty().diagonal().iter().all(|v| v.is_finite() && *v > 0.0) {
                return SpdFactor::Cholesky(chol);
            }
        }
        let next = if jitter == 0.0 { scale * 1e-14 } else { jitter * 100.0 };
        for i in 0..m.nrows() {
            m[(i, i)] += next - jitter;
        }
        jitter = next;
    }
    SpdFactor::Lu(m.lu())
}

pub(crate) fn spd_solve(m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    spd_factor(m).solve(rhs)
}

const STEP_FRACTION: f64 = 0.99;
const DIVERGENCE: f64 = 1e13;
/// Give up after this many iterations without halving the merit.
const STALL_ITERATIONS: usize = 40;

/// Largest `alpha` keeping `v + alpha dv >= 0` (infinite if unconstrained).
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

struct Direction {
    dx: DVector<f64>,
    ds: DVector<f64>,
    dz: DVector<f64>,
}

struct Iterate<'a, O: ConstraintOperator> {
    op: &'a O,
    s: DVector<f64>,
    w: DVector<f64>,
    r_p: DVector<f64>,
    r_d: DVector<f64>,
}

impl<O: ConstraintOperator> Iterate<'_, O> {
    /// Newton step for complementarity target `rc = (S dz + Z ds)`.
    fn direction(&self, normal: &O::Normal, rc: &DVector<f64>) -> Option<Direction> {
        let w = &self.w;
        let rc_over_s = rc.component_div(&self.s);
        let inner = w.component_mul(&self.r_p) + &rc_over_s;
        let rhs = -&self.r_d - self.op.apply_t(&inner);
        let dx = self.op.solve_factored(normal, &rhs)?;
        let gdx = self.op.apply(&dx);
        let dz = w.component_mul(&(&gdx + &self.r_p)) + rc_over_s;
        let ds = -&self.r_p - gdx;
        if dx.iter().chain(dz.iter()).chain(ds.iter()).all(|v| v.is_finite()) {
            Some(Direction { dx, ds, dz })
        } else {
            None
        }
    }
}

pub(crate) fn solve<O: ConstraintOperator>(
    op: &O,
    c: &DVector<f64>,
    h: &DVector<f64>,
    cfg: &SolverConfig,
) -> LpSolution {
    let m = op.num_vars();
    let k = op.num_rows();
    let h_scale = 1.0 + linalg::inf_norm(h);
    let c_norm = linalg::inf_norm(c);

    // Starting point: least-squares x, minimum-norm dual, both shifted inside.
    let ones = DVector::from_element(k, 1.0);
    let mut x = op
        .solve_normal(&ones, &op.apply_t(h))
        .unwrap_or_else(|| DVector::zeros(m));
    let mut s = h - op.apply(&x);
    let mut z = op
        .solve_normal(&ones, &(-c))
        .map(|y| op.apply(&y))
        .unwrap_or_else(|| DVector::from_element(k, 1.0));
    let shift = |v: &mut DVector<f64>| {
        let lo = v.min();
        if lo <= 0.0 {
            v.add_scalar_mut(1.0 - lo);
        }
    };
    shift(&mut s);
    shift(&mut z);

    let mut gap_history = Vec::new();
    // Best iterate by the largest of the three convergence measures.
    let mut best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>)> = None;
    let mut since_best = 0;
    let finish = |x: DVector<f64>, s: &DVector<f64>, z: &DVector<f64>, status, iterations, message: String, gap_history| {
        let objective = c.dot(&x);
        LpSolution {
            x,
            objective,
            duality_gap: s.dot(z).max(0.0),
            status,
            iterations,
            message,
            gap_history,
        }
    };

    for iter in 0..cfg.max_iter {
        let r_p = op.apply(&x) + &s - h;
        let r_d = op.apply_t(&z) + c;
        let gap = s.dot(&z);
        gap_history.push(gap);
        let pobj = c.dot(&x);

        // Residuals are measured against the size of the terms that produce
        // them; large multipliers make absolute dual accuracy unreachable.
        let pres = linalg::inf_norm(&r_p) / (h_scale + linalg::inf_norm(&s));
        let dres = linalg::inf_norm(&r_d) / (1.0 + c_norm.max(linalg::inf_norm(&z)));
        let rgap = gap / pobj.abs().max(1.0);
        if pres <= cfg.feas_tol && dres <= cfg.feas_tol && rgap <= cfg.gap_tol {
            return finish(x, &s, &z, LpStatus::Optimal, iter, "converged".into(), gap_history);
        }
        let merit = (pres / cfg.feas_tol).max(dres / cfg.feas_tol).max(rgap / cfg.gap_tol);
        if best.as_ref().is_none_or(|b| merit < 0.5 * b.0) {
            best = Some((merit, x.clone(), s.clone(), z.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STALL_ITERATIONS {
                let (m, bx, bs, bz) = best.take().expect("set above");
                let msg = format!("stalled; best iterate is {m:.3e} times the tolerances");
                return finish(bx, &bs, &bz, LpStatus::IterationLimit, iter, msg, gap_history);
            }
        }

        // Infeasibility certificates: a ray z >= 0 with G^T z = 0, h^T z < 0
        // proves primal infeasibility; x with G x <= 0, c^T x < 0 proves
        // unboundedness.
        let hz = h.dot(&z);
        if hz < 0.0 {
            let gtz = op.apply_t(&z);
            if linalg::inf_norm(&gtz) <= cfg.feas_tol * (-hz) {
                let msg = format!(
                    "Farkas certificate: ||G^T z||_inf / -h^T z = {:.3e}",
                    linalg::inf_norm(&gtz) / -hz
                );
                return finish(x, &s, &z, LpStatus::Infeasible, iter, msg, gap_history);
            }
        }
        if pobj < 0.0 {
            let gx = op.apply(&x);
            let worst = gx.iter().fold(0.0f64, |a, v| a.max(*v));
            if worst <= cfg.feas_tol * (-pobj) && linalg::inf_norm(&x) > 1e6 * h_scale {
                let msg = format!("primal ray: max(G x)_+ / -c^T x = {:.3e}", worst / -pobj);
                return finish(x, &s, &z, LpStatus::Unbounded, iter, msg, gap_history);
            }
        }
        if linalg::inf_norm(&x) > DIVERGENCE || linalg::inf_norm(&z) > DIVERGENCE {
            return finish(x, &s, &z, LpStatus::IterationLimit, iter, "iterates diverged".into(), gap_history);
        }

        let mu = gap / k as f64;
        let state = Iterate {
            op,
            s: s.clone(),
            w: z.component_div(&s),
            r_p,
            r_d,
        };
        let Some(normal) = op.factor_normal(&state.w) else {
            return finish(x, &s, &z, LpStatus::IterationLimit, iter, "singular Newton system".into(), gap_history);
        };

        let rc_aff = -s.component_mul(&z);
        let Some(aff) = state.direction(&normal, &rc_aff) else {
            return finish(x, &s, &z, LpStatus::IterationLimit, iter, "singular Newton system".into(), gap_history);
        };
        let ap = max_step(&s, &aff.ds).min(1.0);
        let ad = max_step(&z, &aff.dz).min(1.0);
        let mu_aff = (&s + &aff.ds * ap).dot(&(&z + &aff.dz * ad)) / k as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let rc = rc_aff - aff.ds.component_mul(&aff.dz) + DVector::from_element(k, sigma * mu);
        let Some(dir) = state.direction(&normal, &rc) else {
            return finish(x, &s, &z, LpStatus::IterationLimit, iter, "singular Newton system".into(), gap_history);
        };
        let ap = (STEP_FRACTION * max_step(&s, &dir.ds)).min(1.0);
        let ad = (STEP_FRACTION * max_step(&z, &dir.dz)).min(1.0);
        x += &dir.dx * ap;
        s += &dir.ds * ap;
        z += &dir.dz * ad;
    }
    let msg = format!("no convergence in {} iterations", cfg.max_iter);
    match best {
        Some((_, bx, bs, bz)) => finish(bx, &bs, &bz, LpStatus::IterationLimit, cfg.max_iter, msg, gap_history),
        None => finish(x, &s, &z, LpStatus::IterationLimit, cfg.max_iter, msg, gap_history),
    }
}
