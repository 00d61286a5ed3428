//! Evaluation: base classifiers, the accuracy metric, synthetic tasks and
//! batch experiment execution.

mod classify;
mod report;
mod suite;
mod synthetic;

pub use classify::{accuracy, nn_classify, BaseClassifier, NearestNeighbor};
pub use report::{dataset_digest, run_task, TaskReport};
pub use suite::{
    load_manifest, run_manifest, run_suite, summary_csv, write_convergence_csv, write_summary_csv, Manifest, SuiteReport, TaskSpec,
    VariantMean,
};
pub use synthetic::{make_synthetic, make_two_moons, SyntheticTask};
