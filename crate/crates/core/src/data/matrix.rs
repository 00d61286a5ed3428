use nalgebra::DMatrix;

use crate::error::{DaError, Result};

/// Dense `features × samples` matrix; each column is one sample.
///
/// All entries are finite. The backing store is column-major, but the
/// external row-major contract (files, [`FeatureMatrix::to_row_major`]) is
/// what callers see.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(DMatrix<f64>);

impl FeatureMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(DaError::data(format!(
                "feature matrix must be non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
            return Err(DaError::data(format!(
                "non-finite entry at row {}, column {}",
                pos % m.nrows() + 1,
                pos / m.nrows() + 1
            )));
        }
        Ok(FeatureMatrix(m))
    }

    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(DaError::data(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, values))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for row in self.0.row_iter() {
            out.extend(row.iter());
        }
        out
    }

    /// Column-wise concatenation `[self, other]`.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.rows() != other.rows() {
            return Err(DaError::data(format!(
                "feature dimension mismatch: {} vs {}",
                self.rows(),
                other.rows()
            )));
        }
        let mut m = DMatrix::zeros(self.rows(), self.cols() + other.cols());
        m.columns_mut(0, self.cols()).copy_from(&self.0);
        m.columns_mut(self.cols(), other.cols()).copy_from(&other.0);
        Ok(FeatureMatrix(m))
    }

    pub fn columns(&self, start: usize, count: usize) -> FeatureMatrix {
        FeatureMatrix(self.0.columns(start, count).into_owned())
    }
}

impl TryFrom<DMatrix<f64>> for FeatureMatrix {
    type Error = DaError;

    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        FeatureMatrix::new(m)
    }
}
