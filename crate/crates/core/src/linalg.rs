//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold below which a matrix is treated as singular.
pub const SINGULAR_RATIO: f64 = 1e-10;

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn l1_norm(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Entrywise max norm.
pub fn max_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Ratio of the smallest to the largest singular value (0 for a zero matrix).
pub fn singular_ratio(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

pub fn is_well_conditioned(m: &DMatrix<f64>) -> bool {
    m.is_square() && singular_ratio(m) > SINGULAR_RATIO
}

/// Solve a square system after checking its conditioning.
pub fn solve_checked(m: &DMatrix<f64>, rhs: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let ratio = singular_ratio(m);
    if !m.is_square() || ratio <= SINGULAR_RATIO {
        return Err(Error::Singular {
            what: what.to_string(),
            ratio,
        });
    }
    m.clone().lu().solve(rhs).ok_or_else(|| Error::Singular {
        what: what.to_string(),
        ratio,
    })
}

pub fn inverse_checked(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let ratio = singular_ratio(m);
    if !m.is_square() || ratio <= SINGULAR_RATIO {
        return Err(Error::Singular {
            what: what.to_string(),
            ratio,
        });
    }
    m.clone().try_inverse().ok_or_else(|| Error::Singular {
        what: what.to_string(),
        ratio,
    })
}

/// `Phi^T diag(w) M` without materializing the diagonal.
pub fn weighted_cross(phi: &DMatrix<f64>, w: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut scaled = m.clone();
    for (mut row, wi) in scaled.row_iter_mut().zip(w.iter()) {
        row *= *wi;
    }
    phi.tr_mul(&scaled)
}
