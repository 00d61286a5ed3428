use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{SolverConfig, Variant};
use crate::data::{encode_fbin, DaDataset};
use crate::eval::accuracy;
use crate::pipeline::fit;

/// Outcome of one task. A failed fit yields a report with `error` set and
/// no accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task_name: String,
    pub variant: Variant,
    /// Final target accuracy in `[0, 1]`; absent without truth labels or on
    /// failure.
    pub accuracy: Option<f64>,
    /// Accuracy of the target labels after each outer iteration.
    pub per_iteration_accuracy: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub wall_time_seconds: f64,
    pub config_echo: SolverConfig,
    pub seed: u64,
    /// SHA-256 of the fbin encoding of the features followed by the source
    /// labels as little-endian `u32`.
    pub dataset_hash: String,
    pub error: Option<String>,
}

impl TaskReport {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Content digest identifying the dataset a report was computed on.
pub fn dataset_digest(dataset: &DaDataset) -> String {
    let mut h = Sha256::new();
    h.update(encode_fbin(dataset.x()));
    for &l in dataset.source_labels() {
        h.update((l as u32).to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Fits `dataset` and scores the target labels against `truth`, which is
/// used only after the fit returns.
pub fn run_task(name: &str, dataset: &DaDataset, config: &SolverConfig, truth: Option<&[usize]>) -> TaskReport {
    let start = Instant::now();
    let outcome = fit(dataset, config);
    let wall_time_seconds = start.elapsed().as_secs_f64();
    let mut report = TaskReport {
        task_name: name.to_string(),
        variant: config.variant,
        accuracy: None,
        per_iteration_accuracy: Vec::new(),
        objective_trace: Vec::new(),
        iterations_run: 0,
        wall_time_seconds,
        config_echo: config.clone(),
        seed: config.seed,
        dataset_hash: dataset_digest(dataset),
        error: None,
    };
    match outcome {
        Ok(result) => {
            report.objective_trace = result.objective_trace.clone();
            report.iterations_run = result.iterations_run;
            if let Some(truth) = truth {
                let scored: Result<Vec<f64>, _> = result.label_history.iter().map(|l| accuracy(l, truth)).collect();
                match scored.and_then(|per| accuracy(&result.target_labels, truth).map(|acc| (per, acc))) {
                    Ok((per, acc)) => {
                        report.per_iteration_accuracy = per;
                        report.accuracy = Some(acc);
                    }
                    Err(e) => report.error = Some(e.to_string()),
                }
            }
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report
}
