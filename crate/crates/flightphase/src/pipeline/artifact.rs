//! Trained-model persistence.
//!
//! Layout (little-endian): magic `FPMA`, format version (u16), precision
//! byte (4 = f32, 8 = f64), architecture byte, the five model dimensions
//! (u32 each), vocabulary hash (u64), training seed (u64), length-prefixed
//! labels, tensor count (u16), each tensor as rows/cols (u32) plus raw
//! scalar data, and a trailing FNV-1a checksum (u64) over everything before
//! it. The version gate runs before the checksum so a bumped version reports
//! as unsupported rather than corrupt.

use std::io::{Read, Write};

use crate::models::{Arch, ModelConfig, ModelParams};
use crate::nncore::{Matrix, Scalar};
use crate::textproc::TokenSequence;
use crate::util::fnv1a64;

use super::bytes::{push_string, Cursor};
use super::PipelineError;

const MAGIC: &[u8; 4] = b"FPMA";
const VERSION: u16 = 1;

/// A trained model plus everything needed to use it safely: its dimensions,
/// the label map, the hash of the vocabulary it was encoded with, and the
/// seed it was trained from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact<T: Scalar> {
    pub config: ModelConfig,
    pub params: ModelParams<T>,
    pub vocab_hash: u64,
    pub labels: Vec<String>,
    pub train_seed: u64,
}

impl<T: Scalar> ModelArtifact<T> {
    /// Logits and probabilities for one sequence.
    pub fn forward(&self, seq: &TokenSequence) -> Result<(Matrix<T>, Matrix<T>), PipelineError> {
        Ok(self.params.forward(seq)?)
    }

    /// Predicted class id plus the probability vector (as f64 for output).
    pub fn predict(&self, seq: &TokenSequence) -> Result<(usize, Vec<f64>), PipelineError> {
        let (_, probs) = self.forward(seq)?;
        let class = crate::models::predict(&probs);
        Ok((class, probs.data().iter().map(|v| v.as_f64()).collect()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(T::BYTE_WIDTH as u8);
        out.push(match self.config.architecture {
            Arch::Srnn => 0,
            Arch::Resnet => 1,
        });
        for dim in [
            self.config.vocab_size,
            self.config.embed_dim,
            self.config.hidden_dim,
            self.config.num_classes,
            self.config.max_len,
        ] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.vocab_hash.to_le_bytes());
        out.extend_from_slice(&self.train_seed.to_le_bytes());
        out.extend_from_slice(&(self.labels.len() as u16).to_le_bytes());
        for label in &self.labels {
            push_string(&mut out, label);
        }
        let tensors = self.params.tensors();
        out.extend_from_slice(&(tensors.len() as u16).to_le_bytes());
        for (_, tensor) in tensors {
            out.extend_from_slice(&(tensor.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(tensor.cols() as u32).to_le_bytes());
            for &v in tensor.data() {
                v.write_le(&mut out);
            }
        }
        let checksum = fnv1a64(&out);
        out.extend_from_slice(&checksum.to_le_bytes());
        out
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(&self.to_bytes())
    }

    fn from_cursor(cur: &mut Cursor<'_>, arch: Arch) -> Result<ModelArtifact<T>, PipelineError> {
        let corrupt = |reason: String| PipelineError::CorruptArtifact { reason };
        let mut dim =
            || -> Result<usize, PipelineError> { Ok(cur.u32().map_err(corrupt)? as usize) };
        let vocab_size = dim()?;
        let embed_dim = dim()?;
        let hidden_dim = dim()?;
        let num_classes = dim()?;
        let max_len = dim()?;
        let config = ModelConfig {
            vocab_size,
            embed_dim,
            hidden_dim,
            num_classes,
            max_len,
            architecture: arch,
        };
        let vocab_hash = cur.u64().map_err(corrupt)?;
        let train_seed = cur.u64().map_err(corrupt)?;
        let label_count = cur.u16().map_err(corrupt)?;
        let labels = (0..label_count)
            .map(|_| cur.string())
            .collect::<Result<Vec<_>, _>>()
            .map_err(corrupt)?;

        let mut params = ModelParams::<T>::zeros(&config).map_err(|e| corrupt(e.to_string()))?;
        let tensor_count = cur.u16().map_err(corrupt)? as usize;
        let mut expected = params.tensors_mut();
        if tensor_count != expected.len() {
            return Err(corrupt(format!(
                "expected {} tensors, file has {tensor_count}",
                expected.len()
            )));
        }
        for (name, tensor) in expected.iter_mut() {
            let rows = cur.u32().map_err(corrupt)? as usize;
            let cols = cur.u32().map_err(corrupt)? as usize;
            if (rows, cols) != tensor.shape() {
                return Err(corrupt(format!(
                    "tensor {name}: expected shape {:?}, file has ({rows}, {cols})",
                    tensor.shape()
                )));
            }
            let raw = cur.take(rows * cols * T::BYTE_WIDTH).map_err(corrupt)?;
            for (slot, chunk) in tensor
                .data_mut()
                .iter_mut()
                .zip(raw.chunks_exact(T::BYTE_WIDTH))
            {
                *slot = T::read_le(chunk);
            }
        }
        if !cur.at_end() {
            return Err(corrupt("trailing bytes after tensors".to_string()));
        }
        Ok(ModelArtifact {
            config,
            params,
            vocab_hash,
            labels,
            train_seed,
        })
    }
}

/// An artifact loaded from disk, in whichever precision it was saved.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyArtifact {
    F32(ModelArtifact<f32>),
    F64(ModelArtifact<f64>),
}

impl AnyArtifact {
    pub fn config(&self) -> &ModelConfig {
        match self {
            AnyArtifact::F32(a) => &a.config,
            AnyArtifact::F64(a) => &a.config,
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            AnyArtifact::F32(a) => &a.labels,
            AnyArtifact::F64(a) => &a.labels,
        }
    }

    pub fn vocab_hash(&self) -> u64 {
        match self {
            AnyArtifact::F32(a) => a.vocab_hash,
            AnyArtifact::F64(a) => a.vocab_hash,
        }
    }

    pub fn predict(&self, seq: &TokenSequence) -> Result<(usize, Vec<f64>), PipelineError> {
        match self {
            AnyArtifact::F32(a) => a.predict(seq),
            AnyArtifact::F64(a) => a.predict(seq),
        }
    }
}

/// Parse an artifact in either precision. The magic and version are checked
/// first, then the trailing checksum, then the payload.
pub fn artifact_from_bytes(bytes: &[u8]) -> Result<AnyArtifact, PipelineError> {
    let corrupt = |reason: &str| PipelineError::CorruptArtifact {
        reason: reason.to_string(),
    };
    if bytes.len() < MAGIC.len() + 2 + 8 {
        return Err(corrupt("file too short"));
    }
    if &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(PipelineError::UnsupportedVersion { version });
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if fnv1a64(payload) != stored {
        return Err(corrupt("checksum mismatch"));
    }

    let mut cur = Cursor::new(&payload[6..]);
    let precision = cur.u8().map_err(|e| corrupt(&e))?;
    let arch = match cur.u8().map_err(|e| corrupt(&e))? {
        0 => Arch::Srnn,
        1 => Arch::Resnet,
        other => return Err(corrupt(&format!("unknown architecture byte {other}"))),
    };
    match precision as usize {
        n if n == <f32 as Scalar>::BYTE_WIDTH => Ok(AnyArtifact::F32(ModelArtifact::from_cursor(
            &mut cur, arch,
        )?)),
        n if n == <f64 as Scalar>::BYTE_WIDTH => Ok(AnyArtifact::F64(ModelArtifact::from_cursor(
            &mut cur, arch,
        )?)),
        other => Err(corrupt(&format!("unknown precision byte {other}"))),
    }
}

/// Read an artifact from any reader.
pub fn read_artifact(input: &mut impl Read) -> Result<AnyArtifact, PipelineError> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| PipelineError::Io(e.to_string()))?;
    artifact_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::Rng;

    fn sample_artifact(arch: Arch) -> ModelArtifact<f32> {
        let config = ModelConfig {
            vocab_size: 11,
            embed_dim: 4,
            hidden_dim: 5,
            num_classes: 3,
            max_len: 7,
            architecture: arch,
        };
        ModelArtifact {
            config,
            params: ModelParams::init(&config, &mut Rng::new(77)).unwrap(),
            vocab_hash: 0xfeed_beef_cafe_f00d,
            labels: vec!["a".into(), "b".into(), "c".into()],
            train_seed: 77,
        }
    }

    fn random_seq(rng: &mut Rng, vocab: usize, max_len: usize) -> TokenSequence {
        let len = 1 + rng.next_below(max_len as u64) as usize;
        let mut ids: Vec<u32> = (0..len)
            .map(|_| 2 + rng.next_below((vocab - 2) as u64) as u32)
            .collect();
        let true_len = ids.len() as u32;
        ids.resize(max_len, 0);
        TokenSequence::from_parts(ids, true_len).unwrap()
    }

    #[test]
    fn round_trip_preserves_logits_bitwise() {
        for arch in [Arch::Srnn, Arch::Resnet] {
            let artifact = sample_artifact(arch);
            let bytes = artifact.to_bytes();
            let loaded = match artifact_from_bytes(&bytes).unwrap() {
                AnyArtifact::F32(a) => a,
                _ => panic!("expected f32 artifact"),
            };
            assert_eq!(loaded, artifact);
            let mut rng = Rng::new(5);
            for _ in 0..100 {
                let seq = random_seq(&mut rng, 11, 7);
                let (a, _) = artifact.forward(&seq).unwrap();
                let (b, _) = loaded.forward(&seq).unwrap();
                let a_bits: Vec<u32> = a.data().iter().map(|v| v.to_bits()).collect();
                let b_bits: Vec<u32> = b.data().iter().map(|v| v.to_bits()).collect();
                assert_eq!(a_bits, b_bits);
            }
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = sample_artifact(Arch::Srnn).to_bytes();
        let truncated = &bytes[..bytes.len() - 5];
        assert!(matches!(
            artifact_from_bytes(truncated),
            Err(PipelineError::CorruptArtifact { .. })
        ));
    }

    #[test]
    fn flipped_byte_is_corrupt() {
        let mut bytes = sample_artifact(Arch::Resnet).to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(
            artifact_from_bytes(&bytes),
            Err(PipelineError::CorruptArtifact { .. })
        ));
    }

    #[test]
    fn bumped_version_is_unsupported() {
        let mut bytes = sample_artifact(Arch::Srnn).to_bytes();
        bytes[4] = 2;
        assert!(matches!(
            artifact_from_bytes(&bytes),
            Err(PipelineError::UnsupportedVersion { version: 2 })
        ));
    }

    #[test]
    fn f64_artifacts_round_trip() {
        let config = ModelConfig {
            vocab_size: 6,
            embed_dim: 2,
            hidden_dim: 3,
            num_classes: 2,
            max_len: 4,
            architecture: Arch::Resnet,
        };
        let artifact = ModelArtifact::<f64> {
            config,
            params: ModelParams::init(&config, &mut Rng::new(9)).unwrap(),
            vocab_hash: 1,
            labels: vec!["x".into(), "y".into()],
            train_seed: 9,
        };
        match artifact_from_bytes(&artifact.to_bytes()).unwrap() {
            AnyArtifact::F64(loaded) => assert_eq!(loaded, artifact),
            _ => panic!("expected f64 artifact"),
        }
    }
}
