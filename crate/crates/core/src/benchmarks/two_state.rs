use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mrp::{model_system, EmpiricalSystem, FeatureBasis, MarkovRewardProcess, SamplingDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuMode {
    /// `mu = (0, 1)`, the stationary distribution.
    #[default]
    OnPolicy,
    /// `mu = (1/2, 1/2)`.
    OffPolicyUniform,
}

impl fmt::Display for MuMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MuMode::OnPolicy => "on-policy",
            MuMode::OffPolicyUniform => "off-policy",
        })
    }
}

impl FromStr for MuMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "on-policy" | "on" => Ok(MuMode::OnPolicy),
            "off-policy" | "off" | "off-policy-uniform" => Ok(MuMode::OffPolicyUniform),
            other => Err(Error::Parse(format!("unknown sampling mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateSpec {
    pub gamma: f64,
    pub mu_mode: MuMode,
}

/// `P = [[0, 1], [0, 1]]`, `R = (0, -1)`, a single feature `phi = (1, 2)`.
pub fn build_two_state(spec: &TwoStateSpec) -> Result<(MarkovRewardProcess, FeatureBasis, SamplingDistribution)> {
    let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
    let r = DVector::from_vec(vec![0.0, -1.0]);
    let mrp = MarkovRewardProcess::new(p, r, spec.gamma)?;
    let basis = FeatureBasis::new(DMatrix::from_column_slice(2, 1, &[1.0, 2.0]))?;
    let mu = match spec.mu_mode {
        MuMode::OnPolicy => SamplingDistribution::point_mass(2, 1),
        MuMode::OffPolicyUniform => SamplingDistribution::uniform(2),
    };
    Ok((mrp, basis, mu))
}

/// The model system `(A, b)` as an estimator input (the asymptotic regime).
pub fn two_state_system(spec: &TwoStateSpec) -> Result<EmpiricalSystem> {
    let (mrp, basis, mu) = build_two_state(spec)?;
    let m = model_system(&mrp, &basis, &mu)?;
    EmpiricalSystem::from_parts(m.a, m.b, 1)
}

/// Closed-form scalar paths for `a theta = b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPath1d {
    pub a: f64,
    pub b: f64,
}

impl AnalyticPath1d {
    /// Dantzig: `sign(b/a) max(0, |b| - lambda) / |a|`.
    pub fn dantzig(&self, lambda: f64) -> f64 {
        (self.b / self.a).signum() * (self.b.abs() - lambda).max(0.0) / self.a.abs()
    }

    /// l1-LSTD (`(a theta - b)^2 + lambda |theta|`):
    /// `sign(ab) max(0, |ab| - lambda/2) / a^2`.
    pub fn l1_lstd(&self, lambda: f64) -> f64 {
        let ab = self.a * self.b;
        ab.signum() * (ab.abs() - lambda / 2.0).max(0.0) / (self.a * self.a)
    }

    /// Ridge: `b / (a + lambda)`; undefined at `lambda = -a`.
    pub fn ridge(&self, lambda: f64) -> Option<f64> {
        let d = self.a + lambda;
        (d != 0.0).then(|| self.b / d)
    }

    /// LASSO-TD in correlation units; unique only when `a > 0`.
    pub fn lasso_td(&self, lambda: f64) -> Option<f64> {
        (self.a > 0.0).then(|| self.dantzig(lambda))
    }

    /// The Dantzig path's single knot.
    pub fn knot(&self) -> f64 {
        self.b.abs()
    }
}

pub fn analytic_dantzig_path_1d(a: f64, b: f64) -> Result<AnalyticPath1d> {
    if a == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("need finite a != 0 (a={a}, b={b})")));
    }
    Ok(AnalyticPath1d { a, b })
}
