use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mrp::SampleSet;

/// Affine feature map fitted on training features: drop constant-one
/// columns, then `z_j = (x_j - m_j) / sd_j` on the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationTransform {
    pub feature_means: DVector<f64>,
    pub feature_scales: DVector<f64>,
    pub reward_mean: f64,
    /// Intercept columns removed, in raw column indices.
    pub columns_dropped: Vec<usize>,
    /// Retained columns with zero training variance (scale forced to 1).
    pub zero_variance: Vec<usize>,
    kept: Vec<usize>,
    raw_width: usize,
}

/// A standardized training set and what is needed to predict with it.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub samples: SampleSet,
    pub transform: StandardizationTransform,
    pub gamma: f64,
    /// Mean of the transformed next-state features, for the intercept.
    pub next_feature_mean: DVector<f64>,
}

fn is_intercept(col: nalgebra::DMatrixView<'_, f64>) -> bool {
    col.iter().all(|&x| x == 1.0)
}

/// Fit the transform on `train.phi`, apply it to both `phi` and `phi_next`,
/// and center the rewards.
pub fn standardize(train: &SampleSet, gamma: f64) -> Result<Standardized> {
    let n = train.len();
    let raw_width = train.num_features();
    let columns_dropped: Vec<usize> = (0..raw_width)
        .filter(|&j| is_intercept(train.phi.columns(j, 1)))
        .collect();
    if columns_dropped.is_empty() {
        return Err(Error::InvalidInput("no constant-one intercept column to remove".into()));
    }
    let kept: Vec<usize> = (0..raw_width).filter(|j| !columns_dropped.contains(j)).collect();
    let mut means = DVector::zeros(kept.len());
    let mut scales = DVector::zeros(kept.len());
    let mut zero_variance = Vec::new();
    for (k, &j) in kept.iter().enumerate() {
        let col = train.phi.column(j);
        let m = col.mean();
        let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
        means[k] = m;
        if var > 0.0 {
            scales[k] = var.sqrt();
        } else {
            scales[k] = 1.0;
            zero_variance.push(j);
        }
    }
    let transform = StandardizationTransform {
        feature_means: means,
        feature_scales: scales,
        reward_mean: train.rewards.mean(),
        columns_dropped,
        zero_variance,
        kept,
        raw_width,
    };
    let phi = transform.apply(&train.phi)?;
    let phi_next = transform.apply(&train.phi_next)?;
    let next_feature_mean = DVector::from_iterator(phi_next.ncols(), phi_next.column_iter().map(|c| c.mean()));
    let rewards = train.rewards.add_scalar(-transform.reward_mean);
    let samples = SampleSet::new(
        train.states.clone(),
        train.next_states.clone(),
        rewards,
        phi,
        phi_next,
        train.episodes.clone(),
        train.seed,
    )?;
    Ok(Standardized {
        samples,
        transform,
        gamma,
        next_feature_mean,
    })
}

impl StandardizationTransform {
    pub fn raw_width(&self) -> usize {
        self.raw_width
    }

    /// Raw column index of each standardized column.
    pub fn kept_columns(&self) -> &[usize] {
        &self.kept
    }

    pub fn apply(&self, raw: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if raw.ncols() != self.raw_width {
            return Err(Error::Dimension(format!(
                "transform expects {} columns, got {}",
                self.raw_width,
                raw.ncols()
            )));
        }
        Ok(DMatrix::from_fn(raw.nrows(), self.kept.len(), |i, k| {
            (raw[(i, self.kept[k])] - self.feature_means[k]) / self.feature_scales[k]
        }))
    }

    /// Undo [`apply`](Self::apply); dropped intercept columns come back as 1.
    pub fn inverse(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.ncols() != self.kept.len() {
            return Err(Error::Dimension(format!(
                "inverse expects {} columns, got {}",
                self.kept.len(),
                z.ncols()
            )));
        }
        let mut raw = DMatrix::from_element(z.nrows(), self.raw_width, 1.0);
        for (k, &j) in self.kept.iter().enumerate() {
            for i in 0..z.nrows() {
                raw[(i, j)] = z[(i, k)] * self.feature_scales[k] + self.feature_means[k];
            }
        }
        Ok(raw)
    }
}

impl Standardized {
    /// Intercept that makes the intercept row of the full LSTD system hold:
    /// `c = (r_mean + gamma zbar'^T theta) / (1 - gamma)`.
    pub fn intercept(&self, theta: &DVector<f64>) -> f64 {
        (self.transform.reward_mean + self.gamma * self.next_feature_mean.dot(theta)) / (1.0 - self.gamma)
    }

    /// Predictions `c + z(x)^T theta` for raw feature rows.
    pub fn predict(&self, raw: &DMatrix<f64>, theta: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.transform.apply(raw)?;
        Ok((z * theta).add_scalar(self.intercept(theta)))
    }
}
