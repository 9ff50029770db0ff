//! Encoded dataset: fixed-length integer sequences plus labels, with a
//! binary on-disk format.
//!
//! Layout (all little-endian): magic `FPDS`, format version (u16), vocabulary
//! hash (u64), vocabulary size (u32), label count (u16) and length-prefixed
//! labels, record count (u32), max_len (u32), then per record: phase_id
//! (u16), true_len (u32), and exactly max_len ids (u32 each). The vocabulary
//! hash, its size, and the label map ride in the header so downstream stages
//! can size embedding tables, verify they decode with the right vocabulary,
//! and name classes without re-reading the corpus.

use std::io::{Read, Write};

use crate::textproc::TokenSequence;

use super::bytes::{push_string, Cursor};
use super::PipelineError;

const MAGIC: &[u8; 4] = b"FPDS";
const VERSION: u16 = 1;

/// One encoded example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedRecord {
    pub phase_id: u16,
    pub seq: TokenSequence,
}

/// A full encoded dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub max_len: u32,
    pub vocab_hash: u64,
    pub vocab_size: u32,
    pub labels: Vec<String>,
    pub records: Vec<EncodedRecord>,
}

impl Dataset {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.vocab_hash.to_le_bytes());
        out.extend_from_slice(&self.vocab_size.to_le_bytes());
        out.extend_from_slice(&(self.labels.len() as u16).to_le_bytes());
        for label in &self.labels {
            push_string(&mut out, label);
        }
        out.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.max_len.to_le_bytes());
        for record in &self.records {
            debug_assert_eq!(record.seq.max_len(), self.max_len as usize);
            out.extend_from_slice(&record.phase_id.to_le_bytes());
            out.extend_from_slice(&record.seq.true_len().to_le_bytes());
            for &id in record.seq.ids() {
                out.extend_from_slice(&id.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Dataset, PipelineError> {
        let malformed = |reason: String| PipelineError::MalformedDataset { reason };
        let mut cur = Cursor::new(bytes);
        let magic = cur.take(4).map_err(malformed)?;
        if magic != MAGIC {
            return Err(malformed("bad magic bytes".to_string()));
        }
        let version = cur.u16().map_err(malformed)?;
        if version != VERSION {
            return Err(PipelineError::UnsupportedVersion { version });
        }
        let vocab_hash = cur.u64().map_err(malformed)?;
        let vocab_size = cur.u32().map_err(malformed)?;
        let label_count = cur.u16().map_err(malformed)?;
        let labels = (0..label_count)
            .map(|_| cur.string())
            .collect::<Result<Vec<_>, _>>()
            .map_err(malformed)?;
        let record_count = cur.u32().map_err(malformed)?;
        let max_len = cur.u32().map_err(malformed)?;
        if max_len == 0 {
            return Err(malformed("max_len must be positive".to_string()));
        }

        let mut records = Vec::with_capacity(record_count as usize);
        for i in 0..record_count {
            let at = |reason: String| malformed(format!("record {i}: {reason}"));
            let phase_id = cur.u16().map_err(at)?;
            if (phase_id as usize) >= labels.len() {
                return Err(at(format!(
                    "phase id {phase_id} outside label map of size {}",
                    labels.len()
                )));
            }
            let true_len = cur.u32().map_err(at)?;
            let id_bytes = cur.take(max_len as usize * 4).map_err(at)?;
            let ids: Vec<u32> = id_bytes
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let seq = TokenSequence::from_parts(ids, true_len).map_err(|e| at(e.to_string()))?;
            records.push(EncodedRecord { phase_id, seq });
        }
        if !cur.at_end() {
            return Err(malformed("trailing bytes after last record".to_string()));
        }
        Ok(Dataset {
            max_len,
            vocab_hash,
            vocab_size,
            labels,
            records,
        })
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(&self.to_bytes())
    }

    pub fn read_from(input: &mut impl Read) -> Result<Dataset, PipelineError> {
        let mut bytes = Vec::new();
        input
            .read_to_end(&mut bytes)
            .map_err(|e| PipelineError::Io(e.to_string()))?;
        Dataset::from_bytes(&bytes)
    }

    /// A dataset with the same header but only the given records.
    pub fn subset(&self, records: Vec<EncodedRecord>) -> Dataset {
        Dataset {
            max_len: self.max_len,
            vocab_hash: self.vocab_hash,
            vocab_size: self.vocab_size,
            labels: self.labels.clone(),
            records,
        }
    }
}
