//! Downstream use of frozen embeddings: a shallow classifier, cosine
//! retrieval and TSV export.

mod classifier;
mod export;
mod index;
mod labels;

use std::fmt;

use thiserror::Error;

use crate::tensor::TensorError;

pub use classifier::{evaluate_accuracy, train_classifier, ClassifierConfig, ShallowClassifier};
pub use export::{export_embeddings, import_embeddings, read_embeddings, write_embeddings, EmbeddingRow};
pub use index::{cosine, EmbeddingIndex};
pub use labels::{label_mapping, label_mapping_names, Identity, LabelMapping, RatingBinary, RatingFive};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("need at least two classes")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("query vector has zero norm")]
    ZeroQuery,
    #[error("duplicate document id {0}")]
    DuplicateId(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Structured accuracy summary.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyReport {
    pub task: String,
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: f64,
}

impl fmt::Display for AccuracyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "task\t{}", self.task)?;
        writeln!(f, "train\t{}", self.train_size)?;
        writeln!(f, "test\t{}", self.test_size)?;
        writeln!(f, "accuracy\t{:.4}", self.accuracy)
    }
}
