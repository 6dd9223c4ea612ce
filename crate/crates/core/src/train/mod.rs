//! Unsupervised training by forward word prediction with negative sampling.

mod batching;
mod fit;
mod objective;
mod sampling;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;
use crate::tensor::{OptimizerSettings, TensorError};

pub use batching::{eligible, length_bucket, make_minibatch, plan_epoch, shared_interval, TrainingSample};
pub use fit::{batch_step, fit, EpochStats, StepOutcome};
pub use objective::{loss, word_probability, LossOutput};
pub use sampling::{
    negative_sampler, negative_sampler_names, prediction_interval, sample_negatives,
    sample_prediction_point, BatchWindow, NegativeSampler, WholeDocument,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("embedding has {embedding} dimensions, word vectors have {word}")]
    DimensionMismatch { embedding: usize, word: usize },
    #[error("no positive targets")]
    EmptyPositives,
    #[error("no document is longer than h + 1 = {}", h + 1)]
    NoEligibleDocuments { h: usize },
    #[error("cannot draw {requested} distinct negatives from {eligible} eligible words")]
    InfeasibleNegatives { requested: usize, eligible: usize },
    #[error("non-finite loss in epoch {epoch}, batch {batch} (documents {doc_ids:?}, prediction point {i})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        doc_ids: Vec<usize>,
        i: usize,
    },
    #[error("{0}")]
    Observer(String),
}

impl TrainError {
    /// True for failures caused by numerical blow-up rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TrainError::NonFiniteLoss { .. }
                | TrainError::Tensor(TensorError::NonFiniteGradient(_))
                | TrainError::Model(ModelError::Tensor(TensorError::NonFiniteGradient(_)))
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Forward prediction window in words.
    pub h: usize,
    /// Smallest prediction point (prefix length).
    pub epsilon: usize,
    pub neg_samples: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Registered name: `batch_window` or `document`.
    pub negative_sampler: String,
    /// Write a checkpoint every this many epochs; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub optimizer: OptimizerSettings,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            h: 10,
            epsilon: 10,
            neg_samples: 50,
            batch_size: 100,
            epochs: 10,
            seed: 1,
            negative_sampler: "batch_window".into(),
            checkpoint_every: 0,
            optimizer: OptimizerSettings::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::Config(m.into()));
        if self.h == 0 {
            return fail("h must be >= 1");
        }
        if self.epsilon < 2 {
            return fail("epsilon must be >= 2");
        }
        if self.neg_samples == 0 {
            return fail("neg_samples must be >= 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1");
        }
        negative_sampler(&self.negative_sampler)?;
        Ok(())
    }
}
