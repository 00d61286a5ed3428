use nalgebra::DMatrix;

use crate::error::{DaError, Result};

/// A classifier trained on labelled columns and applied to unlabelled ones.
///
/// The NN-labelling variants and the initial pseudo-labels go through this
/// trait, so another base learner can be swapped in via
/// [`crate::pipeline::fit_with_classifier`].
pub trait BaseClassifier: Send + Sync {
    fn name(&self) -> &str;

    /// Columns of `train_x` and `test_x` are samples; labels are 1-based.
    fn classify(&self, train_x: &DMatrix<f64>, train_labels: &[usize], test_x: &DMatrix<f64>) -> Result<Vec<usize>>;
}

/// Euclidean 1-nearest-neighbour.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestNeighbor;

impl BaseClassifier for NearestNeighbor {
    fn name(&self) -> &str {
        "1-NN"
    }

    fn classify(&self, train_x: &DMatrix<f64>, train_labels: &[usize], test_x: &DMatrix<f64>) -> Result<Vec<usize>> {
        nn_classify(train_x, train_labels, test_x)
    }
}

/// Label of the Euclidean-nearest training column for every test column.
/// Ties go to the lowest training index.
pub fn nn_classify(train_x: &DMatrix<f64>, train_labels: &[usize], test_x: &DMatrix<f64>) -> Result<Vec<usize>> {
    if train_x.ncols() == 0 {
        return Err(DaError::data("nearest-neighbour training set is empty"));
    }
    if train_x.ncols() != train_labels.len() {
        return Err(DaError::data(format!(
            "{} training samples but {} labels",
            train_x.ncols(),
            train_labels.len()
        )));
    }
    if train_x.nrows() != test_x.nrows() {
        return Err(DaError::data(format!(
            "training samples have dimension {}, test samples {}",
            train_x.nrows(),
            test_x.nrows()
        )));
    }
    let out = test_x
        .column_iter()
        .map(|t| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, s) in train_x.column_iter().enumerate() {
                let d: f64 = s.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            train_labels[best]
        })
        .collect();
    Ok(out)
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(DaError::data(format!(
            "{} predictions for {} truth labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(DaError::data("accuracy of an empty prediction set"));
    }
    let correct = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truth.len() as f64)
}
