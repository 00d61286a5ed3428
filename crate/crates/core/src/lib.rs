#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod gpi;
pub mod linalg;
pub mod mmd;
pub mod pipeline;

pub use config::{InitLabels, KernelSpec, SolverConfig, Variant};
pub use data::{DaDataset, EmbeddedLabels, FeatureMatrix, Normalization};
pub use error::{DaError, Result};
pub use pipeline::{fit, fit_kernel, FitResult};
