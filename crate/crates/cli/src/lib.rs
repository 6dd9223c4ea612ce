//! Library side of the `docembed` binary, so integration tests can drive
//! the commands in-process as well as through the executable.

pub mod bundle;
pub mod commands;
pub mod config;

use docembed::model::ModelError;
use docembed::tensor::TensorError;
use docembed::text::CorpusError;
use docembed::train::TrainError;
use thiserror::Error;

/// Failures grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            _ if e.is_numerical() => CliError::Numerical(e.to_string()),
            TrainError::Config(_) => CliError::Config(e.to_string()),
            TrainError::Model(ModelError::Config(_)) => CliError::Config(e.to_string()),
            TrainError::NoEligibleDocuments { .. } | TrainError::InfeasibleNegatives { .. } => {
                CliError::Data(e.to_string())
            }
            TrainError::Observer(m) => CliError::Data(m),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(_) | ModelError::Checkpoint(_) | ModelError::WordOutOfRange { .. } => {
                CliError::Config(e.to_string())
            }
            ModelError::Tensor(TensorError::Io(_)) => CliError::Data(e.to_string()),
            ModelError::Tensor(TensorError::Checkpoint(_)) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<docembed::eval::EvalError> for CliError {
    fn from(e: docembed::eval::EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}
