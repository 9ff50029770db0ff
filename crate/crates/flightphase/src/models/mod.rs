//! The two classifiers: an embedding + simple recurrent network trained
//! with backpropagation through time, and an embedding + mean-pool +
//! residual-dense-block network. Backward passes are hand-derived and
//! checked against central finite differences.

mod resnet;
mod srnn;

use std::error::Error;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::nncore::{Matrix, NumericError, Rng, Scalar};
use crate::textproc::TokenSequence;

pub use resnet::{rdb_forward, RdbParams, ResnetForward, ResnetParams};
pub use srnn::{SrnnForward, SrnnParams};

/// Which classifier a configuration or artifact refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Srnn,
    Resnet,
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arch::Srnn => write!(f, "srnn"),
            Arch::Resnet => write!(f, "resnet"),
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "srnn" => Ok(Arch::Srnn),
            "resnet" => Ok(Arch::Resnet),
            other => Err(format!("unknown architecture {other:?}")),
        }
    }
}

/// Model dimensions. `hidden_dim` is the recurrent state width for the sRNN
/// and the residual block width for the ResNet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub max_len: usize,
    pub architecture: Arch,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |reason: String| ModelError::InvalidConfig { reason };
        if self.vocab_size < 2 {
            return Err(invalid(format!(
                "vocab_size {} too small; pad and oov need two slots",
                self.vocab_size
            )));
        }
        if self.num_classes < 2 {
            return Err(invalid(format!(
                "num_classes must be at least 2, got {}",
                self.num_classes
            )));
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.max_len == 0 {
            return Err(invalid("dimensions must be positive".to_string()));
        }
        Ok(())
    }
}

/// Errors from model evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// A token id exceeds the embedding table.
    IndexOutOfRange {
        id: u32,
        vocab_size: usize,
    },
    /// The sequence has no non-PAD positions.
    EmptySequence,
    /// Dimensions are inconsistent or degenerate.
    InvalidConfig {
        reason: String,
    },
    Numeric(NumericError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::IndexOutOfRange { id, vocab_size } => {
                write!(
                    f,
                    "token id {id} out of range for vocabulary of size {vocab_size}"
                )
            }
            ModelError::EmptySequence => write!(f, "sequence has no non-pad tokens"),
            ModelError::InvalidConfig { reason } => write!(f, "invalid model config: {reason}"),
            ModelError::Numeric(e) => write!(f, "numeric error: {e}"),
        }
    }
}

impl Error for ModelError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            ModelError::Numeric(e) => Some(e),
            _ => None,
        }
    }
}

impl From<NumericError> for ModelError {
    fn from(e: NumericError) -> Self {
        ModelError::Numeric(e)
    }
}

/// Look up one embedding row, bounds-checked.
pub(crate) fn embedding_row<T: Scalar>(
    embedding: &Matrix<T>,
    id: u32,
) -> Result<Matrix<T>, ModelError> {
    if (id as usize) >= embedding.rows() {
        return Err(ModelError::IndexOutOfRange {
            id,
            vocab_size: embedding.rows(),
        });
    }
    Ok(Matrix::row_vector(embedding.row(id as usize)))
}

/// Embed every position of a sequence: one output row per id, PAD (id 0)
/// included as row 0 of the table. Masking happens downstream.
pub fn embed<T: Scalar>(
    seq: &TokenSequence,
    embedding: &Matrix<T>,
) -> Result<Matrix<T>, ModelError> {
    let mut out = Matrix::zeros(seq.ids().len(), embedding.cols());
    for (r, &id) in seq.ids().iter().enumerate() {
        if (id as usize) >= embedding.rows() {
            return Err(ModelError::IndexOutOfRange {
                id,
                vocab_size: embedding.rows(),
            });
        }
        out.row_mut(r).copy_from_slice(embedding.row(id as usize));
    }
    Ok(out)
}

/// Smallest index attaining the maximum probability.
pub fn predict<T: Scalar>(probs: &Matrix<T>) -> usize {
    let mut best = 0;
    let mut best_val = T::neg_infinity();
    for (i, &v) in probs.data().iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Parameters of either architecture, usable interchangeably by the training
/// loop, the optimizer, and serialization. Gradients reuse the same shape.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams<T: Scalar> {
    Srnn(SrnnParams<T>),
    Resnet(ResnetParams<T>),
}

impl<T: Scalar> ModelParams<T> {
    /// Glorot-initialized parameters; biases start at zero. The draw order
    /// is fixed, so a seed fully determines the initialization.
    pub fn init(config: &ModelConfig, rng: &mut Rng) -> Result<ModelParams<T>, ModelError> {
        config.validate()?;
        Ok(match config.architecture {
            Arch::Srnn => ModelParams::Srnn(SrnnParams::init(config, rng)),
            Arch::Resnet => ModelParams::Resnet(ResnetParams::init(config, rng)),
        })
    }

    /// All-zero parameters of the configured shapes. Used as a loading
    /// target and as a gradient accumulator seed.
    pub fn zeros(config: &ModelConfig) -> Result<ModelParams<T>, ModelError> {
        config.validate()?;
        Ok(match config.architecture {
            Arch::Srnn => ModelParams::Srnn(SrnnParams::zeros(config)),
            Arch::Resnet => ModelParams::Resnet(ResnetParams::zeros(config)),
        })
    }

    pub fn arch(&self) -> Arch {
        match self {
            ModelParams::Srnn(_) => Arch::Srnn,
            ModelParams::Resnet(_) => Arch::Resnet,
        }
    }

    /// Forward pass to `(logits, probs)`.
    pub fn forward(&self, seq: &TokenSequence) -> Result<(Matrix<T>, Matrix<T>), ModelError> {
        match self {
            ModelParams::Srnn(p) => {
                let fwd = p.forward(seq)?;
                Ok((fwd.logits, fwd.probs))
            }
            ModelParams::Resnet(p) => {
                let fwd = p.forward(seq)?;
                Ok((fwd.logits, fwd.probs))
            }
        }
    }

    /// Cross-entropy loss and gradients for one example.
    pub fn loss_and_grads(
        &self,
        seq: &TokenSequence,
        target: usize,
    ) -> Result<(T, ModelParams<T>), ModelError> {
        match self {
            ModelParams::Srnn(p) => {
                let fwd = p.forward(seq)?;
                let loss = crate::nncore::cross_entropy(&fwd.probs, target)?;
                let grads = p.backward(seq, &fwd, target)?;
                Ok((loss, ModelParams::Srnn(grads)))
            }
            ModelParams::Resnet(p) => {
                let fwd = p.forward(seq)?;
                let loss = crate::nncore::cross_entropy(&fwd.probs, target)?;
                let grads = p.backward(seq, &fwd, target)?;
                Ok((loss, ModelParams::Resnet(grads)))
            }
        }
    }

    /// Named views of every parameter tensor, in the fixed serialization
    /// order.
    pub fn tensors(&self) -> Vec<(&'static str, &Matrix<T>)> {
        match self {
            ModelParams::Srnn(p) => p.tensors(),
            ModelParams::Resnet(p) => p.tensors(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Matrix<T>)> {
        match self {
            ModelParams::Srnn(p) => p.tensors_mut(),
            ModelParams::Resnet(p) => p.tensors_mut(),
        }
    }

    /// Same-shaped zero parameters, used as a gradient accumulator.
    pub fn zeros_like(&self) -> ModelParams<T> {
        let mut out = self.clone();
        for (_, tensor) in out.tensors_mut() {
            *tensor = tensor.zeros_like();
        }
        out
    }

    pub fn add_assign(&mut self, other: &ModelParams<T>) -> Result<(), ModelError> {
        let other_tensors = other.tensors();
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other_tensors) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale_assign(&mut self, factor: T) {
        for (_, tensor) in self.tensors_mut() {
            tensor.scale_assign(factor);
        }
    }
}
