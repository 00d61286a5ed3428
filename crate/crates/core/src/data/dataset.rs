use crate::data::matrix::FeatureMatrix;
use crate::error::{DaError, Result};

/// Source and target samples packed as `X = [X_S, X_T]` with the source
/// labels. Target labels are deliberately absent: nothing reachable from a
/// `DaDataset` can leak ground truth into a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DaDataset {
    x: FeatureMatrix,
    n_source: usize,
    source_labels: Vec<usize>,
    class_count: usize,
}

impl DaDataset {
    /// Builds a dataset from the packed matrix. `class_count` is taken as the
    /// largest source label; every class `1..=C` must appear in the source.
    pub fn new(x: FeatureMatrix, n_source: usize, source_labels: Vec<usize>) -> Result<Self> {
        if n_source == 0 || n_source >= x.cols() {
            return Err(DaError::data(format!(
                "need at least one source and one target sample, got n_s = {n_source} of {} columns",
                x.cols()
            )));
        }
        if source_labels.len() != n_source {
            return Err(DaError::data(format!(
                "{} source labels for {n_source} source samples",
                source_labels.len()
            )));
        }
        if let Some(pos) = source_labels.iter().position(|&l| l == 0) {
            return Err(DaError::data(format!(
                "source label at position {} is 0; labels are 1-based",
                pos + 1
            )));
        }
        let class_count = *source_labels.iter().max().expect("non-empty");
        let mut seen = vec![false; class_count];
        for &l in &source_labels {
            seen[l - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(DaError::data(format!(
                "class {} has no source sample; classes must be contiguous 1..={class_count}",
                missing + 1
            )));
        }
        Ok(DaDataset {
            x,
            n_source,
            source_labels,
            class_count,
        })
    }

    pub fn from_domains(source: &FeatureMatrix, target: &FeatureMatrix, source_labels: Vec<usize>) -> Result<Self> {
        let x = source.hstack(target)?;
        Self::new(x, source.cols(), source_labels)
    }

    pub fn x(&self) -> &FeatureMatrix {
        &self.x
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.x.cols() - self.n_source
    }

    pub fn n(&self) -> usize {
        self.x.cols()
    }

    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn source_labels(&self) -> &[usize] {
        &self.source_labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn source_x(&self) -> FeatureMatrix {
        self.x.columns(0, self.n_source)
    }

    pub fn target_x(&self) -> FeatureMatrix {
        self.x.columns(self.n_source, self.n_target())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: usize, cols: usize) -> FeatureMatrix {
        FeatureMatrix::from_row_major(rows, cols, &vec![0.5; rows * cols]).unwrap()
    }

    #[test]
    fn splits_domains() {
        let d = DaDataset::from_domains(&fm(2, 3), &fm(2, 4), vec![1, 2, 2]).unwrap();
        assert_eq!((d.n_source(), d.n_target(), d.class_count()), (3, 4, 2));
        assert_eq!(d.target_x().cols(), 4);
    }

    #[test]
    fn rejects_gaps_and_mismatches() {
        assert!(DaDataset::new(fm(2, 4), 2, vec![1, 3]).is_err());
        assert!(DaDataset::new(fm(2, 4), 2, vec![1]).is_err());
        assert!(DaDataset::new(fm(2, 4), 4, vec![1, 1, 1, 1]).is_err());
        assert!(DaDataset::new(fm(2, 4), 2, vec![0, 1]).is_err());
    }
}
