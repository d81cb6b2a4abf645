//! Dense two-phase tableau simplex with Bland's rule. Exact vertices for
//! small problems; also the fallback when the interior-point method stalls.

use nalgebra::DVector;

use super::lp::{LinearProgram, LpSolution, LpStatus, SolverConfig};

const PIVOT_TOL: f64 = 1e-11;

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major, `rows + 1` rows (last is the objective), `cols + 1` columns
    /// (last is the right-hand side).
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.cols + 1;
        let pv = self.at(pr, pc);
        for c in 0..width {
            *self.at_mut(pr, c) /= pv;
        }
        let pivot_row: Vec<f64> = self.data[pr * width..(pr + 1) * width].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let factor = self.at(r, pc);
            if factor != 0.0 {
                let row = &mut self.data[r * width..(r + 1) * width];
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= factor * p;
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Load objective `cost` (over all columns) into the last row, expressed
    /// in terms of the non-basic variables.
    fn set_objective(&mut self, cost: &[f64]) {
        let width = self.cols + 1;
        let obj = self.rows;
        for c in 0..width {
            *self.at_mut(obj, c) = if c < self.cols { cost[c] } else { 0.0 };
        }
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for c in 0..width {
                    let v = self.at(r, c);
                    *self.at_mut(obj, c) -= cb * v;
                }
            }
        }
    }

    /// Minimize the loaded objective over columns `allowed`. Returns false on
    /// unboundedness.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool, max_pivots: usize) -> Option<bool> {
        for _ in 0..max_pivots {
            let obj = self.rows;
            let entering = (0..self.cols).find(|&c| allowed(c) && self.at(obj, c) < -PIVOT_TOL);
            let Some(pc) = entering else {
                return Some(true);
            };
            let mut best: Option<(f64, usize)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    best = match best {
                        None => Some((ratio, r)),
                        Some((br, brow)) => {
                            if ratio < br - 1e-12
                                || (ratio <= br + 1e-12 && self.basis[r] < self.basis[brow])
                            {
                                Some((ratio, r))
                            } else {
                                Some((br, brow))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Some(false),
                Some((_, pr)) => self.pivot(pr, pc),
            }
        }
        None
    }
}

/// Solve `min c^T x s.t. G x <= h` by writing `x = x+ - x-` and adding slacks.
pub fn solve_simplex(lp: &LinearProgram, cfg: &SolverConfig) -> LpSolution {
    let m = lp.num_vars();
    let k = lp.num_constraints();
    let negative_rows: Vec<usize> = (0..k).filter(|&i| lp.h[i] < 0.0).collect();
    let art_count = negative_rows.len();
    // columns: x+ (m), x- (m), slacks (k), artificials
    let cols = 2 * m + k + art_count;
    let width = cols + 1;
    let mut t = Tableau {
        rows: k,
        cols,
        data: vec![0.0; (k + 1) * width],
        basis: vec![0; k],
    };
    let mut art_of_row = vec![None; k];
    for (a, &r) in negative_rows.iter().enumerate() {
        art_of_row[r] = Some(2 * m + k + a);
    }
    for i in 0..k {
        let sign = if lp.h[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..m {
            *t.at_mut(i, j) = sign * lp.g[(i, j)];
            *t.at_mut(i, m + j) = -sign * lp.g[(i, j)];
        }
        *t.at_mut(i, 2 * m + i) = sign;
        *t.at_mut(i, cols) = sign * lp.h[i];
        match art_of_row[i] {
            Some(ac) => {
                *t.at_mut(i, ac) = 1.0;
                t.basis[i] = ac;
            }
            None => t.basis[i] = 2 * m + i,
        }
    }
    let max_pivots = (50 * (k + cols)).max(10 * cfg.max_iter);
    let stopped = |msg: &str| LpSolution {
        x: DVector::zeros(m),
        objective: f64::NAN,
        duality_gap: f64::NAN,
        status: LpStatus::IterationLimit,
        iterations: max_pivots,
        message: msg.to_string(),
        gap_history: Vec::new(),
    };

    let first_art = 2 * m + k;
    if art_count > 0 {
        let mut cost = vec![0.0; cols];
        for c in cost.iter_mut().skip(first_art) {
            *c = 1.0;
        }
        t.set_objective(&cost);
        if t.optimize(&|_| true, max_pivots).is_none() {
            return stopped("simplex phase 1 pivot limit");
        }
        let infeas = -t.rhs(k);
        let tol = cfg.feas_tol * (1.0 + lp.h.amax());
        if infeas > tol {
            return LpSolution {
                x: DVector::zeros(m),
                objective: f64::NAN,
                duality_gap: f64::NAN,
                status: LpStatus::Infeasible,
                iterations: 0,
                message: format!("phase 1 minimum total constraint violation {infeas:.6e}"),
                gap_history: Vec::new(),
            };
        }
        // Drive remaining artificials out of the basis.
        for r in 0..k {
            if t.basis[r] >= first_art {
                if let Some(pc) = (0..first_art).find(|&c| t.at(r, c).abs() > 1e-9) {
                    t.pivot(r, pc);
                }
            }
        }
    }

    let mut cost = vec![0.0; cols];
    for j in 0..m {
        cost[j] = lp.c[j];
        cost[m + j] = -lp.c[j];
    }
    t.set_objective(&cost);
    match t.optimize(&|c| c < first_art, max_pivots) {
        None => stopped("simplex phase 2 pivot limit"),
        Some(false) => LpSolution {
            x: DVector::zeros(m),
            objective: f64::NEG_INFINITY,
            duality_gap: f64::NAN,
            status: LpStatus::Unbounded,
            iterations: 0,
            message: "unbounded ray found in phase 2".into(),
            gap_history: Vec::new(),
        },
        Some(true) => {
            let mut x = DVector::zeros(m);
            for r in 0..k {
                let b = t.basis[r];
                if b < m {
                    x[b] += t.rhs(r);
                } else if b < 2 * m {
                    x[b - m] -= t.rhs(r);
                }
            }
            LpSolution {
                objective: lp.c.dot(&x),
                x,
                duality_gap: 0.0,
                status: LpStatus::Optimal,
                iterations: 0,
                message: "simplex optimal vertex".into(),
                gap_history: Vec::new(),
            }
        }
    }
}
