//! Dataset splitting, the training loop, history export, and model
//! persistence.

mod artifact;
mod bytes;
mod dataset;
mod split;
mod train;

use std::error::Error;
use std::fmt;

use crate::models::ModelError;
use crate::nncore::NumericError;

pub use artifact::{artifact_from_bytes, read_artifact, AnyArtifact, ModelArtifact};
pub use dataset::{Dataset, EncodedRecord};
pub use split::{split_dataset, split_indices, Split, SplitSpec};
pub use train::{
    accuracy, evaluate_on, export_history, train, EpochRecord, Precision, TrainConfig,
};

/// Errors from splitting, training, evaluation, and persistence.
#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    TooFewRecords {
        got: usize,
        min: usize,
    },
    MissingClass {
        class: usize,
    },
    ConfigMismatch {
        reason: String,
    },
    /// Training diverged; the epoch where it happened.
    NonFiniteLoss {
        epoch: usize,
    },
    /// A dataset was encoded with a different vocabulary than the model.
    VocabularyMismatch {
        expected: u64,
        actual: u64,
    },
    UnsupportedVersion {
        version: u16,
    },
    CorruptArtifact {
        reason: String,
    },
    MalformedDataset {
        reason: String,
    },
    EmptyHistory,
    Io(String),
    Model(ModelError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::TooFewRecords { got, min } => {
                write!(f, "too few records: {got} (need at least {min})")
            }
            PipelineError::MissingClass { class } => {
                write!(f, "class {class} has no records")
            }
            PipelineError::ConfigMismatch { reason } => write!(f, "config mismatch: {reason}"),
            PipelineError::NonFiniteLoss { epoch } => {
                write!(f, "training diverged to a non-finite loss in epoch {epoch}")
            }
            PipelineError::VocabularyMismatch { expected, actual } => write!(
                f,
                "vocabulary mismatch: model was trained with hash {expected:016x}, data encoded with {actual:016x}"
            ),
            PipelineError::UnsupportedVersion { version } => {
                write!(f, "unsupported file format version {version}")
            }
            PipelineError::CorruptArtifact { reason } => {
                write!(f, "corrupt model artifact: {reason}")
            }
            PipelineError::MalformedDataset { reason } => {
                write!(f, "malformed dataset file: {reason}")
            }
            PipelineError::EmptyHistory => write!(f, "history is empty"),
            PipelineError::Io(e) => write!(f, "io error: {e}"),
            PipelineError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl Error for PipelineError {}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        PipelineError::Model(e)
    }
}

impl From<NumericError> for PipelineError {
    fn from(e: NumericError) -> Self {
        PipelineError::Model(ModelError::Numeric(e))
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}
