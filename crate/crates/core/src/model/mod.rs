//! The document encoder: word lookup, a stack of gated convolutions with
//! periodic skip connections, an aggregator and one dense output layer.

mod aggregate;
mod config;
mod encoder;
mod io;

use thiserror::Error;

use crate::tensor::TensorError;

pub use aggregate::{
    aggregator_names, build_aggregator, pad_or_truncate, Aggregator, MaxKPool, MaxPool, MeanPool,
    PadFlatten, Pooled, Selection,
};
pub use config::ModelConfig;
pub use encoder::{EncoderModel, ForwardCache, GluBlock, ModelGrads, SalientSpan};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("empty document")]
    EmptyDocument,
    #[error("word id {id} outside the word table ({len} rows)")]
    WordOutOfRange { id: u32, len: usize },
    #[error("subsequence bounds {i}..={j} outside 1..={len}")]
    Range { i: usize, j: usize, len: usize },
    #[error("activation tracing needs max or max-k pooling, model uses `{0}`")]
    TraceUnsupported(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
