//! Label embedding: a `C`-class one-hot vector zero-padded to the subspace
//! dimension `k`, so that label vectors of different classes are orthogonal
//! and live in the same space as the projected samples.

use nalgebra::DMatrix;

use crate::error::{DaError, Result};

/// `n × k` label matrix. Row `i` holds class probabilities in its first `C`
/// entries and zeros after that.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedLabels {
    values: DMatrix<f64>,
    class_count: usize,
}

impl EmbeddedLabels {
    /// Wraps `values` after checking the simplex/embedding invariants.
    pub fn from_matrix(values: DMatrix<f64>, class_count: usize) -> Result<Self> {
        let y = EmbeddedLabels { values, class_count };
        y.validate(1e-9)?;
        Ok(y)
    }

    pub(crate) fn from_matrix_unchecked(values: DMatrix<f64>, class_count: usize) -> Self {
        EmbeddedLabels { values, class_count }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Checks every row: entries ≥ 0, first `C` summing to one within `tol`,
    /// padding exactly zero.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let c = self.class_count;
        if c == 0 || c > self.k() {
            return Err(DaError::config(format!(
                "class count {c} incompatible with label dimension {}",
                self.k()
            )));
        }
        for (i, row) in self.values.row_iter().enumerate() {
            if row.iter().any(|&v| !(v >= 0.0)) {
                return Err(DaError::numerical(format!("label row {i} has a negative or NaN entry")));
            }
            let s: f64 = row.columns(0, c).sum();
            if (s - 1.0).abs() > tol {
                return Err(DaError::numerical(format!("label row {i} sums to {s}, not 1")));
            }
            if row.columns(c, self.k() - c).iter().any(|&v| v != 0.0) {
                return Err(DaError::numerical(format!("label row {i} has non-zero padding")));
            }
        }
        Ok(())
    }

    /// Arg-max class (1-based) of every row over the first `C` entries, ties
    /// to the lowest class index.
    pub fn hard_labels(&self) -> Vec<usize> {
        hard_labels_of(&self.values, self.class_count)
    }

    /// Hard labels of rows `start..start + count`.
    pub fn hard_labels_range(&self, start: usize, count: usize) -> Vec<usize> {
        hard_labels_of(&self.values.rows(start, count).into_owned(), self.class_count)
    }
}

/// One-hot rows of 1-based `labels`, padded with `k − C` zeros.
pub fn embed_labels(labels: &[usize], class_count: usize, k: usize) -> Result<EmbeddedLabels> {
    if class_count == 0 {
        return Err(DaError::config("class count must be at least 1"));
    }
    if k < class_count {
        return Err(DaError::config(format!(
            "subspace dimension k = {k} is smaller than the class count C = {class_count}"
        )));
    }
    let mut values = DMatrix::zeros(labels.len(), k);
    for (i, &label) in labels.iter().enumerate() {
        if label == 0 || label > class_count {
            return Err(DaError::data(format!(
                "label {label} at position {} is outside 1..={class_count}",
                i + 1
            )));
        }
        values[(i, label - 1)] = 1.0;
    }
    Ok(EmbeddedLabels { values, class_count })
}

/// See [`EmbeddedLabels::hard_labels`].
pub fn hard_labels(y: &EmbeddedLabels, class_count: usize) -> Vec<usize> {
    hard_labels_of(y.as_matrix(), class_count)
}

fn hard_labels_of(values: &DMatrix<f64>, class_count: usize) -> Vec<usize> {
    values
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..class_count {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best + 1
        })
        .collect()
}
