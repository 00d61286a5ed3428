use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::matrix::FeatureMatrix;

/// Feature preprocessing applied before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Per feature row: subtract the mean, divide by the population standard
    /// deviation.
    Zscore,
    /// `Zscore`, then every sample column scaled to unit Euclidean norm.
    #[default]
    ZscoreUnit,
}

/// Fitted per-feature statistics, so that held-out samples can be
/// transformed exactly like the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub mode: Normalization,
    pub mean: Vec<f64>,
    /// Divisor per feature; `1.0` for zero-variance features.
    pub scale: Vec<f64>,
}

impl Preprocessor {
    pub fn fit(x: &FeatureMatrix, mode: Normalization) -> Self {
        let m = x.as_matrix();
        let (mean, scale) = match mode {
            Normalization::None => (vec![0.0; m.nrows()], vec![1.0; m.nrows()]),
            Normalization::Zscore | Normalization::ZscoreUnit => {
                let n = m.ncols() as f64;
                let mut mean = Vec::with_capacity(m.nrows());
                let mut scale = Vec::with_capacity(m.nrows());
                for row in m.row_iter() {
                    let mu = row.sum() / n;
                    let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    mean.push(mu);
                    scale.push(if sd > 0.0 { sd } else { 1.0 });
                }
                (mean, scale)
            }
        };
        Preprocessor { mode, mean, scale }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> FeatureMatrix {
        if self.mode == Normalization::None {
            return x.clone();
        }
        let m = x.as_matrix();
        let mut out = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] - self.mean[i]) / self.scale[i]);
        if self.mode == Normalization::ZscoreUnit {
            for mut col in out.column_iter_mut() {
                let norm = col.norm();
                if norm > 0.0 {
                    col /= norm;
                }
            }
        }
        FeatureMatrix::new(out).expect("normalization keeps entries finite")
    }
}

/// Normalizes `x` with statistics computed on `x` itself.
pub fn normalize(x: &FeatureMatrix, mode: Normalization) -> FeatureMatrix {
    Preprocessor::fit(x, mode).apply(x)
}
