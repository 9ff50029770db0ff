//! Run configuration and the subcommand implementations behind the CLI.
//!
//! The config is one JSON document with strict key checking; command-line
//! flags override individual keys. Everything here is also callable as a
//! library, which is how the end-to-end tests drive full runs.

use std::error::Error;
use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::{compute_metrics, format_table, reports_to_json, ConfusionMatrix, MetricsReport};
use crate::gradcheck::{run_suite, GradCheckConfig, GradCheckReport};
use crate::ingest::{
    build_label_map, extract_records, generate_synthetic_corpus, parse_report_file, read_corpus,
    write_corpus, ClassSpec, DropTally, FieldMap, IngestError, ReportFormat, SyntheticSpec,
};
use crate::models::{Arch, ModelConfig, ModelError};
use crate::nncore::NumericError;
use crate::pipeline::{
    evaluate_on, export_history, split_dataset, AnyArtifact, Dataset, EncodedRecord, ModelArtifact,
    PipelineError, Precision, SplitSpec, TrainConfig,
};
use crate::textproc::{
    encode_with, normalize, replace_numeric, rules_by_version, TextError, TruncationSide,
    Vocabulary,
};
use crate::util::fnv1a64;

/// Application error with a process exit code: 2 for configuration
/// problems, 3 for data problems, 4 for numeric failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AppError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) => 3,
            AppError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(msg) => write!(f, "config error: {msg}"),
            AppError::Data(msg) => write!(f, "data error: {msg}"),
            AppError::Numeric(msg) => write!(f, "numeric failure: {msg}"),
        }
    }
}

impl Error for AppError {}

impl From<IngestError> for AppError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidSpec { .. } => AppError::Config(e.to_string()),
            other => AppError::Data(other.to_string()),
        }
    }
}

impl From<TextError> for AppError {
    fn from(e: TextError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::ConfigMismatch { .. } => AppError::Config(e.to_string()),
            PipelineError::NonFiniteLoss { .. } => AppError::Numeric(e.to_string()),
            PipelineError::Model(ModelError::InvalidConfig { .. }) => {
                AppError::Config(e.to_string())
            }
            PipelineError::Model(ModelError::Numeric(NumericError::NonFinite { .. })) => {
                AppError::Numeric(e.to_string())
            }
            other => AppError::Data(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> AppError {
    AppError::Data(format!("{}: {e}", path.display()))
}

/// Built-in size presets: desk-scale defaults for laptop runs, and the
/// full-scale profile (sequence length 2000, vocabulary cap 100,000) for
/// real corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Desk,
    Full,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    /// Explicit classes; when unset, a seven-class keyword corpus is used
    /// (or a shared-pair two-class corpus when `order_sensitive` is set).
    pub classes: Option<Vec<ClassSpec>>,
    pub docs_per_class: Option<usize>,
    pub filler_vocab_size: Option<usize>,
    pub doc_length_range: Option<(usize, usize)>,
    pub order_sensitive: Option<bool>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizationSection {
    /// Rule-set version; `v1` is the shipped set.
    pub rules: String,
}

impl Default for NormalizationSection {
    fn default() -> Self {
        NormalizationSection {
            rules: crate::textproc::DEFAULT_RULES_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VocabSection {
    pub max_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceSection {
    pub max_len: Option<usize>,
    pub truncation: TruncationSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub architecture: Arch,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            architecture: Arch::Srnn,
            embed_dim: 32,
            hidden_dim: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestSection {
    pub format: ReportFormat,
    pub fields: FieldMap,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            format: ReportFormat::Json,
            fields: FieldMap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub input: String,
    pub corpus: String,
    pub vocab: String,
    pub dataset: String,
    pub model: String,
    pub history: String,
    pub metrics: String,
    pub test_set: String,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            input: "reports.json".to_string(),
            corpus: "corpus.tsv".to_string(),
            vocab: "vocab.tsv".to_string(),
            dataset: "dataset.bin".to_string(),
            model: "model.fpm".to_string(),
            history: "history.csv".to_string(),
            metrics: "metrics.json".to_string(),
            test_set: "test.bin".to_string(),
        }
    }
}

/// The full configuration document. Unknown keys anywhere are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub profile: Profile,
    pub synthetic: SyntheticSection,
    pub normalization: NormalizationSection,
    pub vocab: VocabSection,
    pub sequence: SequenceSection,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub ingest: IngestSection,
    pub paths: PathsSection,
}

impl RunConfig {
    pub fn from_json(bytes: &[u8]) -> Result<RunConfig, AppError> {
        serde_json::from_slice(bytes).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig, AppError> {
        let bytes = fs::read(path)
            .map_err(|e| AppError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&bytes)
    }

    pub fn vocab_max_size(&self) -> usize {
        self.vocab.max_size.unwrap_or(match self.profile {
            Profile::Desk => 5_000,
            Profile::Full => 100_000,
        })
    }

    pub fn max_len(&self) -> usize {
        self.sequence.max_len.unwrap_or(match self.profile {
            Profile::Desk => 200,
            Profile::Full => 2_000,
        })
    }

    pub fn rules(&self) -> Result<crate::textproc::NormalizationRules, AppError> {
        rules_by_version(&self.normalization.rules).ok_or_else(|| {
            AppError::Config(format!(
                "unknown normalization rules version {:?}",
                self.normalization.rules
            ))
        })
    }

    /// Assemble the synthetic spec, falling back to the shipped class sets.
    pub fn synthetic_spec(&self) -> SyntheticSpec {
        let order_sensitive = self.synthetic.order_sensitive.unwrap_or(false);
        let seed = self.synthetic.seed.unwrap_or(42);
        let mut spec = if order_sensitive {
            SyntheticSpec::default_order_pair(seed)
        } else {
            SyntheticSpec::default_seven(seed)
        };
        if let Some(classes) = &self.synthetic.classes {
            spec.classes = classes.clone();
        }
        if let Some(v) = self.synthetic.docs_per_class {
            spec.docs_per_class = v;
        }
        if let Some(v) = self.synthetic.filler_vocab_size {
            spec.filler_vocab_size = v;
        }
        if let Some(v) = self.synthetic.doc_length_range {
            spec.doc_length_range = v;
        }
        spec
    }
}

/// What `synth` produced.
#[derive(Debug)]
pub struct SynthSummary {
    pub records: usize,
    pub classes: usize,
}

/// Generate a synthetic corpus and write it in the canonical corpus format.
pub fn run_synth(config: &RunConfig, corpus_path: &Path) -> Result<SynthSummary, AppError> {
    let spec = config.synthetic_spec();
    let (records, map) = generate_synthetic_corpus(&spec)?;
    let mut out = Vec::new();
    write_corpus(&records, &map, &mut out).map_err(|e| io_err(corpus_path, e))?;
    fs::write(corpus_path, out).map_err(|e| io_err(corpus_path, e))?;
    Ok(SynthSummary {
        records: records.len(),
        classes: map.len(),
    })
}

/// What `ingest` produced.
#[derive(Debug)]
pub struct IngestSummary {
    pub parsed: usize,
    pub kept: usize,
    pub dropped: DropTally,
    pub labels: Vec<String>,
}

/// Parse a report export, derive the label map from the data, filter usable
/// records, and write the canonical corpus.
pub fn run_ingest(
    config: &RunConfig,
    input_path: &Path,
    corpus_path: &Path,
) -> Result<IngestSummary, AppError> {
    let bytes = fs::read(input_path).map_err(|e| io_err(input_path, e))?;
    let raw = parse_report_file(&bytes, config.ingest.format, &config.ingest.fields)?;
    let map = build_label_map(&raw)?;
    let (kept, dropped) = extract_records(&raw, &map);
    let mut out = Vec::new();
    write_corpus(&kept, &map, &mut out).map_err(|e| io_err(corpus_path, e))?;
    fs::write(corpus_path, out).map_err(|e| io_err(corpus_path, e))?;
    Ok(IngestSummary {
        parsed: raw.len(),
        kept: kept.len(),
        dropped,
        labels: map.labels().to_vec(),
    })
}

/// What `preprocess` produced.
#[derive(Debug)]
pub struct PreprocessSummary {
    pub records: usize,
    pub dropped_empty: usize,
    pub vocab_size: usize,
    pub max_len: usize,
}

/// Corpus file → vocabulary file + encoded dataset file.
pub fn run_preprocess(
    config: &RunConfig,
    corpus_path: &Path,
    vocab_path: &Path,
    dataset_path: &Path,
) -> Result<PreprocessSummary, AppError> {
    if config.vocab_max_size() == 0 {
        return Err(AppError::Config(
            "vocab.max_size must be positive".to_string(),
        ));
    }
    if config.max_len() == 0 {
        return Err(AppError::Config(
            "sequence.max_len must be positive".to_string(),
        ));
    }
    let corpus_bytes = fs::read(corpus_path).map_err(|e| io_err(corpus_path, e))?;
    let corpus_hash = fnv1a64(&corpus_bytes);
    let (records, map) = read_corpus(&mut corpus_bytes.as_slice())?;
    let rules = config.rules()?;

    let mut tokenized: Vec<(u16, Vec<String>)> = Vec::with_capacity(records.len());
    let mut dropped_empty = 0usize;
    for record in &records {
        let mut tokens = normalize(&record.text, &rules);
        replace_numeric(&mut tokens);
        if tokens.is_empty() {
            // Narratives with no usable tokens cannot be encoded or trained
            // on; they are dropped here with a count.
            dropped_empty += 1;
            continue;
        }
        tokenized.push((record.phase_id as u16, tokens));
    }
    if tokenized.is_empty() {
        return Err(AppError::Data(
            "no records with usable tokens after normalization".to_string(),
        ));
    }

    let docs: Vec<Vec<String>> = tokenized.iter().map(|(_, t)| t.clone()).collect();
    let vocab = Vocabulary::build(&docs, config.vocab_max_size())?;

    let mut vocab_out = Vec::new();
    vocab
        .write_to(&rules.version, corpus_hash, &mut vocab_out)
        .map_err(|e| io_err(vocab_path, e))?;
    fs::write(vocab_path, vocab_out).map_err(|e| io_err(vocab_path, e))?;

    let max_len = config.max_len();
    let encoded: Vec<EncodedRecord> = tokenized
        .iter()
        .map(|(phase_id, tokens)| EncodedRecord {
            phase_id: *phase_id,
            seq: encode_with(tokens, &vocab, max_len, config.sequence.truncation),
        })
        .collect();
    let dataset = Dataset {
        max_len: max_len as u32,
        vocab_hash: vocab.content_hash(),
        vocab_size: vocab.size() as u32,
        labels: map.labels().to_vec(),
        records: encoded,
    };
    let mut dataset_out = Vec::new();
    dataset
        .write_to(&mut dataset_out)
        .map_err(|e| io_err(dataset_path, e))?;
    fs::write(dataset_path, dataset_out).map_err(|e| io_err(dataset_path, e))?;

    Ok(PreprocessSummary {
        records: dataset.records.len(),
        dropped_empty,
        vocab_size: vocab.size(),
        max_len,
    })
}

/// What `train` produced.
#[derive(Debug)]
pub struct TrainSummary {
    pub fit: usize,
    pub val: usize,
    pub test: usize,
    pub history: Vec<crate::pipeline::EpochRecord>,
    pub final_val_accuracy: f64,
}

/// Encoded dataset → model artifact + history CSV + held-out test set file.
pub fn run_train(
    config: &RunConfig,
    dataset_path: &Path,
    model_path: &Path,
    history_path: &Path,
    test_path: &Path,
) -> Result<TrainSummary, AppError> {
    let bytes = fs::read(dataset_path).map_err(|e| io_err(dataset_path, e))?;
    let dataset = Dataset::from_bytes(&bytes)?;
    let (fit, val, test) = split_dataset(&dataset.records, dataset.labels.len(), &config.split)?;

    let model_config = ModelConfig {
        vocab_size: dataset.vocab_size as usize,
        embed_dim: config.model.embed_dim,
        hidden_dim: config.model.hidden_dim,
        num_classes: dataset.labels.len(),
        max_len: dataset.max_len as usize,
        architecture: config.model.architecture,
    };

    let (artifact_bytes, history) = match config.train.precision {
        Precision::F32 => {
            let (artifact, history) = crate::pipeline::train::<f32>(
                &fit,
                &val,
                &model_config,
                &config.train,
                dataset.vocab_hash,
                &dataset.labels,
            )?;
            (artifact.to_bytes(), history)
        }
        Precision::F64 => {
            let (artifact, history) = crate::pipeline::train::<f64>(
                &fit,
                &val,
                &model_config,
                &config.train,
                dataset.vocab_hash,
                &dataset.labels,
            )?;
            (artifact.to_bytes(), history)
        }
    };

    fs::write(model_path, &artifact_bytes).map_err(|e| io_err(model_path, e))?;
    let csv = export_history(&history)?;
    fs::write(history_path, csv).map_err(|e| io_err(history_path, e))?;
    let test_set = dataset.subset(test.clone());
    fs::write(test_path, test_set.to_bytes()).map_err(|e| io_err(test_path, e))?;

    let final_val_accuracy = history.last().map(|r| r.val_accuracy).unwrap_or(0.0);
    Ok(TrainSummary {
        fit: fit.len(),
        val: val.len(),
        test: test.len(),
        history,
        final_val_accuracy,
    })
}

/// What `eval` produced.
#[derive(Debug)]
pub struct EvalSummary {
    pub table: String,
    pub json: String,
    pub report: MetricsReport,
}

/// Model artifact + encoded test set → metrics JSON file + text table.
pub fn run_eval(
    model_path: &Path,
    dataset_path: &Path,
    metrics_path: &Path,
) -> Result<EvalSummary, AppError> {
    let artifact_bytes = fs::read(model_path).map_err(|e| io_err(model_path, e))?;
    let artifact = crate::pipeline::artifact_from_bytes(&artifact_bytes)?;
    let dataset_bytes = fs::read(dataset_path).map_err(|e| io_err(dataset_path, e))?;
    let dataset = Dataset::from_bytes(&dataset_bytes)?;

    let pairs = match &artifact {
        AnyArtifact::F32(a) => evaluate_on(a, &dataset)?,
        AnyArtifact::F64(a) => evaluate_on(a, &dataset)?,
    };
    let k = artifact.config().num_classes;
    let cm = ConfusionMatrix::from_pairs(&pairs, k).map_err(|e| AppError::Data(e.to_string()))?;
    let report = compute_metrics(&cm).map_err(|e| AppError::Data(e.to_string()))?;

    let name = artifact.config().architecture.to_string();
    let reports = vec![(name, report.clone())];
    let table = format_table(&reports);
    let json = reports_to_json(&reports);
    fs::write(metrics_path, &json).map_err(|e| io_err(metrics_path, e))?;
    Ok(EvalSummary {
        table,
        json,
        report,
    })
}

/// Streamed prediction: one JSON line per input narrative line.
pub fn run_predict(
    config: &RunConfig,
    model_path: &Path,
    vocab_path: &Path,
    input: &mut impl BufRead,
    output: &mut impl Write,
) -> Result<usize, AppError> {
    let artifact_bytes = fs::read(model_path).map_err(|e| io_err(model_path, e))?;
    let artifact = crate::pipeline::artifact_from_bytes(&artifact_bytes)?;
    let vocab_bytes = fs::read(vocab_path).map_err(|e| io_err(vocab_path, e))?;
    let (vocab, rules_version, _) = Vocabulary::read_from(&mut vocab_bytes.as_slice())?;
    if vocab.content_hash() != artifact.vocab_hash() {
        return Err(PipelineError::VocabularyMismatch {
            expected: artifact.vocab_hash(),
            actual: vocab.content_hash(),
        }
        .into());
    }
    // Normalize with the rules the vocabulary was built with, not whatever
    // the current config says.
    let rules = rules_by_version(&rules_version).ok_or_else(|| {
        AppError::Data(format!(
            "vocabulary was built with unknown rules version {rules_version:?}"
        ))
    })?;

    let max_len = artifact.config().max_len;
    let mut lines = 0usize;
    for line in input.lines() {
        let line = line.map_err(|e| AppError::Data(e.to_string()))?;
        let mut tokens = normalize(&line, &rules);
        replace_numeric(&mut tokens);
        let json = if tokens.is_empty() {
            serde_json::json!({ "error": "no tokens after normalization" })
        } else {
            let seq = encode_with(&tokens, &vocab, max_len, config.sequence.truncation);
            let (phase_id, probs) = artifact.predict(&seq)?;
            let label = artifact.labels().get(phase_id).cloned().unwrap_or_default();
            serde_json::json!({ "label": label, "phase_id": phase_id, "probs": probs })
        };
        writeln!(output, "{json}").map_err(|e| AppError::Data(e.to_string()))?;
        lines += 1;
    }
    Ok(lines)
}

/// Full finite-difference suite in 64-bit mode.
pub fn run_gradcheck(seeds: u64) -> GradCheckReport {
    run_suite(&GradCheckConfig {
        seeds,
        ..GradCheckConfig::default()
    })
}

/// Re-export used by the CLI for typed artifact work in tests.
pub fn load_artifact_f32(path: &Path) -> Result<ModelArtifact<f32>, AppError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    match crate::pipeline::artifact_from_bytes(&bytes)? {
        AnyArtifact::F32(a) => Ok(a),
        AnyArtifact::F64(_) => Err(AppError::Data(format!(
            "{} holds an f64 artifact",
            path.display()
        ))),
    }
}
