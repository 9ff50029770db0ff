//! Report ingestion: parsing JSON/CSV exports, filtering usable records,
//! label-map construction, synthetic corpus generation, and the canonical
//! corpus file format.

mod corpus;
mod parse;
mod synthetic;

use std::collections::HashMap;
use std::error::Error;
use std::fmt;

pub use corpus::{read_corpus, write_corpus};
pub use parse::{parse_report_file, FieldMap, ReportFormat};
pub use synthetic::{generate_synthetic_corpus, ClassSpec, SyntheticSpec};

/// One record as parsed from an export file, before any filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReport {
    pub report_id: String,
    pub narrative: String,
    pub flight_phase: String,
    pub investigation_complete: bool,
}

/// A usable training record: narrative text plus its resolved phase label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledNarrative {
    pub text: String,
    pub phase: String,
    pub phase_id: usize,
}

/// Ordered set of canonical phase labels; a label's position is its class id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelMap {
    /// Build from canonical labels. Labels must be distinct and non-empty;
    /// single-label maps are permitted here and rejected at training time.
    pub fn new(labels: Vec<String>) -> Result<LabelMap, IngestError> {
        if labels.is_empty() {
            return Err(IngestError::NoLabels);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(IngestError::InvalidLabelMap {
                    reason: "empty label".to_string(),
                });
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(IngestError::InvalidLabelMap {
                    reason: format!("duplicate label {label:?}"),
                });
            }
        }
        Ok(LabelMap { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(|s| s.as_str())
    }

    pub fn id_of(&self, canonical: &str) -> Option<usize> {
        self.index.get(canonical).copied()
    }
}

/// Phase-label canonicalization: trim surrounding whitespace and case-fold.
/// No synonym merging.
pub fn canonical_phase(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Why records were dropped during extraction. When several reasons apply,
/// the tally uses the precedence incomplete > empty_narrative >
/// unknown_phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropTally {
    pub incomplete: usize,
    pub empty_narrative: usize,
    pub unknown_phase: usize,
}

impl DropTally {
    pub fn total(&self) -> usize {
        self.incomplete + self.empty_narrative + self.unknown_phase
    }
}

impl fmt::Display for DropTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "incomplete={} empty_narrative={} unknown_phase={}",
            self.incomplete, self.empty_narrative, self.unknown_phase
        )
    }
}

/// Keep records with a completed investigation, a non-empty narrative, and a
/// phase found in the label map after canonicalization. Input order is
/// preserved and kept narratives are byte-identical to their source.
pub fn extract_records(raw: &[RawReport], map: &LabelMap) -> (Vec<LabeledNarrative>, DropTally) {
    let mut kept = Vec::new();
    let mut tally = DropTally::default();
    for report in raw {
        if !report.investigation_complete {
            tally.incomplete += 1;
            continue;
        }
        if report.narrative.trim().is_empty() {
            tally.empty_narrative += 1;
            continue;
        }
        let phase = canonical_phase(&report.flight_phase);
        match map.id_of(&phase) {
            Some(phase_id) => kept.push(LabeledNarrative {
                text: report.narrative.clone(),
                phase,
                phase_id,
            }),
            None => tally.unknown_phase += 1,
        }
    }
    (kept, tally)
}

/// Derive a label map from the data: distinct canonical phases ordered by
/// descending frequency, ties broken by first occurrence.
pub fn build_label_map(raw: &[RawReport]) -> Result<LabelMap, IngestError> {
    let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
    let mut seen = 0usize;
    for report in raw {
        let phase = canonical_phase(&report.flight_phase);
        if phase.is_empty() {
            continue;
        }
        let entry = counts.entry(phase).or_insert((0, seen));
        entry.0 += 1;
        seen += 1;
    }
    if counts.is_empty() {
        return Err(IngestError::NoLabels);
    }
    let mut ranked: Vec<(String, usize, usize)> = counts
        .into_iter()
        .map(|(label, (count, first))| (label, count, first))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    LabelMap::new(ranked.into_iter().map(|(label, _, _)| label).collect())
}

/// Errors raised during ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestError {
    /// The input file is undecodable or structurally invalid.
    MalformedInput { position: String, reason: String },
    /// Two records share a report id.
    DuplicateId { id: String },
    /// No record carries a phase label.
    NoLabels,
    /// Labels passed to [`LabelMap::new`] violate its invariants.
    InvalidLabelMap { reason: String },
    /// A synthetic-corpus spec violates its invariants.
    InvalidSpec { reason: String },
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IngestError::MalformedInput { position, reason } => {
                write!(f, "malformed input at {position}: {reason}")
            }
            IngestError::DuplicateId { id } => write!(f, "duplicate report id {id:?}"),
            IngestError::NoLabels => write!(f, "no record carries a phase label"),
            IngestError::InvalidLabelMap { reason } => write!(f, "invalid label map: {reason}"),
            IngestError::InvalidSpec { reason } => {
                write!(f, "invalid synthetic corpus spec: {reason}")
            }
        }
    }
}

impl Error for IngestError {}
