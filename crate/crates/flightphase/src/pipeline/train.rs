//! Mini-batch Adam training with per-epoch validation.

use serde::{Deserialize, Serialize};

use crate::models::{ModelConfig, ModelError, ModelParams};
use crate::nncore::{adam_step, AdamHyper, AdamState, NumericError, Rng, Scalar};

use super::artifact::ModelArtifact;
use super::dataset::{Dataset, EncodedRecord};
use super::PipelineError;

/// Numeric precision of a training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision {other:?}")),
        }
    }
}

/// Training-loop knobs. The defaults are working values for the shipped
/// desk-scale corpora, not tuned reproductions of anything.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub precision: Precision,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            lr: 3e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 42,
            precision: Precision::F32,
            shuffle: true,
        }
    }
}

/// One epoch's summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Train one model on the fit set, evaluating on the validation set after
/// every epoch. Deterministic for fixed seeds: one RNG stream drives
/// initialization and the per-epoch shuffles, batches accumulate in input
/// order, and the loop is single-threaded.
pub fn train<T: Scalar>(
    fit: &[EncodedRecord],
    val: &[EncodedRecord],
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    vocab_hash: u64,
    labels: &[String],
) -> Result<(ModelArtifact<T>, Vec<EpochRecord>), PipelineError> {
    let mismatch = |reason: String| PipelineError::ConfigMismatch { reason };
    if fit.is_empty() {
        return Err(mismatch("fit set is empty".to_string()));
    }
    if val.is_empty() {
        return Err(mismatch("validation set is empty".to_string()));
    }
    if train_config.epochs == 0 || train_config.batch_size == 0 {
        return Err(mismatch(
            "epochs and batch_size must be positive".to_string(),
        ));
    }
    if labels.len() != model_config.num_classes {
        return Err(mismatch(format!(
            "label map has {} entries but the model expects {} classes",
            labels.len(),
            model_config.num_classes
        )));
    }
    model_config
        .validate()
        .map_err(|e| mismatch(e.to_string()))?;
    for record in fit.iter().chain(val) {
        if record.seq.max_len() != model_config.max_len {
            return Err(mismatch(format!(
                "record max_len {} does not match model max_len {}",
                record.seq.max_len(),
                model_config.max_len
            )));
        }
        if (record.phase_id as usize) >= model_config.num_classes {
            return Err(mismatch(format!(
                "phase id {} outside [0, {})",
                record.phase_id, model_config.num_classes
            )));
        }
    }

    let mut rng = Rng::new(train_config.seed);
    let mut params = ModelParams::<T>::init(model_config, &mut rng)?;
    let hyper = AdamHyper {
        lr: T::from_f64(train_config.lr),
        beta1: T::from_f64(train_config.beta1),
        beta2: T::from_f64(train_config.beta2),
        epsilon: T::from_f64(train_config.epsilon),
    };
    let mut optimizer: Vec<AdamState<T>> = params
        .tensors()
        .iter()
        .map(|(_, t)| AdamState::new(t.rows(), t.cols(), hyper))
        .collect();

    let mut order: Vec<usize> = (0..fit.len()).collect();
    let mut history = Vec::with_capacity(train_config.epochs);

    for epoch in 1..=train_config.epochs {
        if train_config.shuffle {
            rng.shuffle(&mut order);
        }
        let mut epoch_loss = 0.0f64;
        for batch in order.chunks(train_config.batch_size) {
            let mut grads = params.zeros_like();
            let mut batch_loss = 0.0f64;
            for &i in batch {
                let record = &fit[i];
                let (loss, g) = params
                    .loss_and_grads(&record.seq, record.phase_id as usize)
                    .map_err(|e| divergence_or(e, epoch))?;
                batch_loss += loss.as_f64();
                grads.add_assign(&g)?;
            }
            if !batch_loss.is_finite() {
                return Err(PipelineError::NonFiniteLoss { epoch });
            }
            epoch_loss += batch_loss;
            grads.scale_assign(T::from_f64(1.0 / batch.len() as f64));
            let grad_tensors = grads.tensors();
            for (((_, tensor), state), (_, grad)) in params
                .tensors_mut()
                .into_iter()
                .zip(&mut optimizer)
                .zip(grad_tensors)
            {
                adam_step(tensor, grad, state)?;
            }
        }
        let train_loss = epoch_loss / fit.len() as f64;
        let val_accuracy = accuracy(&params, val)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_accuracy,
        });
    }

    let artifact = ModelArtifact {
        config: *model_config,
        params,
        vocab_hash,
        labels: labels.to_vec(),
        train_seed: train_config.seed,
    };
    Ok((artifact, history))
}

fn divergence_or(e: ModelError, epoch: usize) -> PipelineError {
    match e {
        ModelError::Numeric(NumericError::NonFinite { .. }) => {
            PipelineError::NonFiniteLoss { epoch }
        }
        other => other.into(),
    }
}

/// Fraction of records whose argmax prediction matches the label.
pub fn accuracy<T: Scalar>(
    params: &ModelParams<T>,
    records: &[EncodedRecord],
) -> Result<f64, PipelineError> {
    if records.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for record in records {
        let (_, probs) = params.forward(&record.seq)?;
        if crate::models::predict(&probs) == record.phase_id as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / records.len() as f64)
}

/// Evaluate an artifact on an encoded dataset: one `(predicted, true)` pair
/// per record, in order. The dataset's vocabulary hash must match the
/// artifact's.
pub fn evaluate_on<T: Scalar>(
    artifact: &ModelArtifact<T>,
    dataset: &Dataset,
) -> Result<Vec<(usize, usize)>, PipelineError> {
    if dataset.vocab_hash != artifact.vocab_hash {
        return Err(PipelineError::VocabularyMismatch {
            expected: artifact.vocab_hash,
            actual: dataset.vocab_hash,
        });
    }
    let mut pairs = Vec::with_capacity(dataset.records.len());
    for record in &dataset.records {
        let (_, probs) = artifact.params.forward(&record.seq)?;
        pairs.push((crate::models::predict(&probs), record.phase_id as usize));
    }
    Ok(pairs)
}

/// Render a history as CSV: `epoch,train_loss,val_accuracy`, six decimals.
pub fn export_history(history: &[EpochRecord]) -> Result<String, PipelineError> {
    if history.is_empty() {
        return Err(PipelineError::EmptyHistory);
    }
    let mut out = String::from("epoch,train_loss,val_accuracy\n");
    for record in history {
        out.push_str(&format!(
            "{},{:.6},{:.6}\n",
            record.epoch, record.train_loss, record.val_accuracy
        ));
    }
    Ok(out)
}
