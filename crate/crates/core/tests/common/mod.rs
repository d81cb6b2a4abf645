//! Oracles written independently of the library code paths they check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Every `m`-subset of `0..k` in lexicographic order.
pub fn subsets(k: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            if k - i < m - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, k, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, m, &mut Vec::new(), &mut out);
    out
}

/// Minimum of `c^T x` over `G x <= h`, found by solving every square
/// subsystem of active constraints. Only valid when the minimum is attained
/// at a vertex (pointed, bounded problems).
pub fn lp_by_vertices(c: &DVector<f64>, g: &DMatrix<f64>, h: &DVector<f64>, tol: f64) -> Option<(f64, DVector<f64>)> {
    let (k, m) = g.shape();
    let slack = tol * (1.0 + h.amax());
    let mut best: Option<(f64, DVector<f64>)> = None;
    for rows in subsets(k, m) {
        let sub = DMatrix::from_fn(m, m, |i, j| g[(rows[i], j)]);
        let rhs = DVector::from_fn(m, |i, _| h[rows[i]]);
        let svd = sub.clone().svd(false, false);
        let sv = &svd.singular_values;
        if sv.min() <= 1e-10 * sv.max().max(1e-300) {
            continue;
        }
        let Some(x) = sub.lu().solve(&rhs) else { continue };
        if (g * &x - h).max() > slack {
            continue;
        }
        let obj = c.dot(&x);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    }
    best
}

/// `min ||theta||_1 s.t. ||a theta - b||_inf <= lambda`, by vertex
/// enumeration over `theta = theta+ - theta-` with both parts nonnegative.
pub fn dantzig_brute_force(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> Option<(f64, DVector<f64>)> {
    let p = a.ncols();
    let mut g = DMatrix::zeros(4 * p, 2 * p);
    let mut h = DVector::zeros(4 * p);
    for i in 0..p {
        for j in 0..p {
            g[(i, j)] = a[(i, j)];
            g[(i, j + p)] = -a[(i, j)];
            g[(i + p, j)] = -a[(i, j)];
            g[(i + p, j + p)] = a[(i, j)];
        }
        h[i] = lambda + b[i];
        h[i + p] = lambda - b[i];
    }
    for j in 0..2 * p {
        g[(2 * p + j, j)] = -1.0;
    }
    let c = DVector::from_element(2 * p, 1.0);
    lp_by_vertices(&c, &g, &h, 1e-9).map(|(obj, x)| {
        let theta = DVector::from_fn(p, |j, _| x[j] - x[j + p]);
        (obj, theta)
    })
}

/// Largest singular value over smallest; infinite for singular matrices.
pub fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    if sv.min() == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / sv.min()
    }
}

pub fn inf_dist(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x - y).amax()
}

/// Transition-weighted quantities of an MRP computed from first
/// principles: `V`, `Pi`, `M`, `A`, `b`.
pub struct Model {
    pub v: DVector<f64>,
    pub proj: DMatrix<f64>,
    pub gram: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

pub fn model(p: &DMatrix<f64>, r: &DVector<f64>, gamma: f64, phi: &DMatrix<f64>, mu: &DVector<f64>) -> Model {
    let n = p.nrows();
    let v = (DMatrix::identity(n, n) - p * gamma).lu().solve(r).expect("I - gamma P is invertible");
    let d = DMatrix::from_diagonal(mu);
    let gram = phi.transpose() * &d * phi;
    let gram_inv = gram.clone().try_inverse().expect("Gram matrix is invertible");
    let proj = phi * gram_inv * phi.transpose() * &d;
    let a = phi.transpose() * &d * (phi - p * phi * gamma);
    let b = phi.transpose() * &d * r;
    Model { v, proj, gram, a, b }
}
