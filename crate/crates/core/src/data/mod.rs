//! Core value types: feature matrices, packed datasets, embedded labels,
//! preprocessing and file I/O.

pub mod dataset;
pub mod io;
pub mod labels;
pub mod matrix;
pub mod normalize;

pub use dataset::DaDataset;
pub use io::{decode_fbin, encode_fbin, load_labels, load_matrix, load_matrix_auto, save_labels, save_matrix, MatrixFormat};
pub use labels::{embed_labels, hard_labels, EmbeddedLabels};
pub use matrix::FeatureMatrix;
pub use normalize::{normalize, Normalization, Preprocessor};
