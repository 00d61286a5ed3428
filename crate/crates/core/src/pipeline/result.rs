use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::ResolvedKernel;
use crate::config::{SolverConfig, Variant};
use crate::data::{decode_fbin, encode_fbin, EmbeddedLabels, FeatureMatrix, Preprocessor};
use crate::error::{DaError, Result};
use crate::eval::nn_classify;

/// Name of the JSON document written by [`FitResult::save`].
pub const RESULT_FILE: &str = "fit_result.json";

/// Output of a fit. Everything needed to embed and label new target samples
/// is kept, so a saved result can be reloaded for prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub variant: Variant,
    pub config: SolverConfig,
    pub class_count: usize,
    pub n_source: usize,
    pub source_labels: Vec<usize>,
    /// `l × k`, or `n × k` in kernel mode.
    pub a: DMatrix<f64>,
    pub e: DVector<f64>,
    pub y: EmbeddedLabels,
    pub target_labels: Vec<usize>,
    /// Objective after every outer iteration.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    /// Classes with an empty target pseudo-class, per outer iteration.
    pub skipped_classes_log: Vec<BTreeSet<usize>>,
    /// Target hard labels after every outer iteration.
    pub label_history: Vec<Vec<usize>>,
    /// Largest `‖Aᵀ X (H + δI) Xᵀ A − I‖_F` seen after any A-update.
    pub constraint_defect: f64,
    pub preprocessor: Preprocessor,
    pub kernel: Option<ResolvedKernel>,
    /// Preprocessed training samples, kept in kernel mode to expand new data.
    pub kernel_basis: Option<DMatrix<f64>>,
    /// `Aᵀ` applied to the source features.
    pub source_embedding: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitResultDoc {
    variant: Variant,
    config: SolverConfig,
    class_count: usize,
    n_source: usize,
    source_labels: Vec<usize>,
    a: String,
    e: Vec<f64>,
    y: String,
    target_labels: Vec<usize>,
    objective_trace: Vec<f64>,
    iterations_run: usize,
    skipped_classes_log: Vec<BTreeSet<usize>>,
    label_history: Vec<Vec<usize>>,
    constraint_defect: f64,
    preprocessor: Preprocessor,
    kernel: Option<ResolvedKernel>,
    kernel_basis: Option<String>,
    source_embedding: String,
}

const A_FILE: &str = "a.fbin";
const Y_FILE: &str = "y.fbin";
const EMBED_FILE: &str = "source_embedding.fbin";
const BASIS_FILE: &str = "kernel_basis.fbin";

fn matrix_bytes(m: &DMatrix<f64>, name: &str) -> Result<Vec<u8>> {
    let fm = FeatureMatrix::new(m.clone()).map_err(|e| DaError::numerical(format!("cannot store {name}: {e}")))?;
    Ok(encode_fbin(&fm))
}

impl FitResult {
    /// The JSON document; matrices are referenced by side-file name.
    pub fn to_json(&self) -> Result<String> {
        let doc = FitResultDoc {
            variant: self.variant,
            config: self.config.clone(),
            class_count: self.class_count,
            n_source: self.n_source,
            source_labels: self.source_labels.clone(),
            a: A_FILE.into(),
            e: self.e.iter().copied().collect(),
            y: Y_FILE.into(),
            target_labels: self.target_labels.clone(),
            objective_trace: self.objective_trace.clone(),
            iterations_run: self.iterations_run,
            skipped_classes_log: self.skipped_classes_log.clone(),
            label_history: self.label_history.clone(),
            constraint_defect: self.constraint_defect,
            preprocessor: self.preprocessor.clone(),
            kernel: self.kernel,
            kernel_basis: self.kernel_basis.as_ref().map(|_| BASIS_FILE.into()),
            source_embedding: EMBED_FILE.into(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| DaError::numerical(format!("cannot serialize fit result: {e}")))
    }

    /// `(file name, bytes)` of every fbin side file.
    pub fn side_files(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        let mut files = vec![
            (A_FILE, matrix_bytes(&self.a, "A")?),
            (Y_FILE, matrix_bytes(self.y.as_matrix(), "Y")?),
            (EMBED_FILE, matrix_bytes(&self.source_embedding, "source embedding")?),
        ];
        if let Some(basis) = &self.kernel_basis {
            files.push((BASIS_FILE, matrix_bytes(basis, "kernel basis")?));
        }
        Ok(files)
    }

    /// Writes [`RESULT_FILE`] and the side files into `dir`, creating it.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| DaError::io(dir, e))?;
        let json = self.to_json()?;
        let path = dir.join(RESULT_FILE);
        fs::write(&path, json).map_err(|e| DaError::io(&path, e))?;
        for (name, bytes) in self.side_files()? {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| DaError::io(&path, e))?;
        }
        Ok(())
    }

    /// Reads a result written by [`FitResult::save`].
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(RESULT_FILE);
        let text = fs::read_to_string(&path).map_err(|e| DaError::io(&path, e))?;
        let doc: FitResultDoc =
            serde_json::from_str(&text).map_err(|e| DaError::data(format!("{}: {e}", path.display())))?;
        let read = |name: &str| -> Result<DMatrix<f64>> {
            let p = dir.join(name);
            let bytes = fs::read(&p).map_err(|e| DaError::io(&p, e))?;
            decode_fbin(&bytes)
                .map(FeatureMatrix::into_matrix)
                .map_err(|e| DaError::data(format!("{}: {e}", p.display())))
        };
        let y = EmbeddedLabels::from_matrix(read(&doc.y)?, doc.class_count)
            .map_err(|e| DaError::data(format!("stored label matrix is invalid: {e}")))?;
        Ok(FitResult {
            variant: doc.variant,
            config: doc.config,
            class_count: doc.class_count,
            n_source: doc.n_source,
            source_labels: doc.source_labels,
            a: read(&doc.a)?,
            e: DVector::from_vec(doc.e),
            y,
            target_labels: doc.target_labels,
            objective_trace: doc.objective_trace,
            iterations_run: doc.iterations_run,
            skipped_classes_log: doc.skipped_classes_log,
            label_history: doc.label_history,
            constraint_defect: doc.constraint_defect,
            preprocessor: doc.preprocessor,
            kernel: doc.kernel,
            kernel_basis: doc.kernel_basis.as_deref().map(read).transpose()?,
            source_embedding: read(&doc.source_embedding)?,
        })
    }

    /// `Aᵀ φ(x)` for raw (unpreprocessed) samples `x`.
    pub fn embed(&self, x: &FeatureMatrix) -> Result<DMatrix<f64>> {
        if x.rows() != self.preprocessor.mean.len() {
            return Err(DaError::data(format!(
                "model expects {} features, got {}",
                self.preprocessor.mean.len(),
                x.rows()
            )));
        }
        let xn = self.preprocessor.apply(x).into_matrix();
        let features = match (&self.kernel, &self.kernel_basis) {
            (Some(k), Some(basis)) => k.cross(basis, &xn),
            (None, _) => xn,
            (Some(_), None) => return Err(DaError::data("kernel model is missing its basis samples")),
        };
        Ok(self.a.tr_mul(&features))
    }

    /// Class labels for raw samples `x`: arg-max of `Aᵀ φ(x) + e` for the
    /// regression variants, 1-NN against the embedded source otherwise.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        let z = self.embed(x)?;
        if self.variant.uses_regression() {
            Ok(z.column_iter()
                .map(|col| {
                    let mut best = 0;
                    for c in 1..self.class_count {
                        if col[c] + self.e[c] > col[best] + self.e[best] {
                            best = c;
                        }
                    }
                    best + 1
                })
                .collect())
        } else {
            nn_classify(&self.source_embedding, &self.source_labels, &z)
        }
    }
}
