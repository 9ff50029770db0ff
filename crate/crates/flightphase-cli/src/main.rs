//! `flightphase` — classify the flight phase of aviation safety occurrences
//! from their narrative text.
//!
//! Subcommands wire the library into reproducible runs:
//! `synth`/`ingest` produce a corpus, `preprocess` encodes it, `train` fits
//! a model, `eval` scores it, `predict` streams predictions, and `gradcheck`
//! verifies the hand-derived gradients against finite differences.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use flightphase::ingest::ReportFormat;
use flightphase::models::Arch;
use flightphase::pipeline::Precision;
use flightphase::runconfig::{
    run_eval, run_gradcheck, run_ingest, run_predict, run_preprocess, run_synth, run_train,
    AppError, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "flightphase",
    version,
    about = "Classify the flight phase of aviation safety occurrences from text narratives"
)]
struct Cli {
    /// JSON config file; command-line flags override individual keys
    /// [default: built-in defaults]
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus as a canonical corpus file
    Synth(SynthArgs),
    /// Parse a report export (JSON or CSV) into a canonical corpus file
    Ingest(IngestArgs),
    /// Corpus file -> vocabulary file + encoded dataset file
    Preprocess(PreprocessArgs),
    /// Train a classifier; writes model artifact, history CSV, and test set
    Train(TrainArgs),
    /// Evaluate a model artifact on an encoded test set
    Eval(EvalArgs),
    /// Read narrative lines from stdin, print one JSON prediction per line
    Predict(PredictArgs),
    /// Verify all model gradients against finite differences (64-bit)
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output corpus file [default: corpus.tsv]
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Corpus generator seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Documents per class [default: 100]
    #[arg(long)]
    docs_per_class: Option<usize>,
    /// Filler vocabulary size [default: 300]
    #[arg(long)]
    filler_vocab_size: Option<usize>,
    /// Encode the class in keyword order instead of keyword presence
    /// [default: false]
    #[arg(long, value_name = "BOOL")]
    order_sensitive: Option<bool>,
}

#[derive(Args)]
struct IngestArgs {
    /// Report export to parse [default: reports.json]
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Output corpus file [default: corpus.tsv]
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Input format: json or csv [default: json]
    #[arg(long)]
    format: Option<ReportFormat>,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Input corpus file [default: corpus.tsv]
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Output vocabulary file [default: vocab.tsv]
    #[arg(long, value_name = "FILE")]
    vocab: Option<PathBuf>,
    /// Output encoded dataset file [default: dataset.bin]
    #[arg(long, value_name = "FILE")]
    dataset: Option<PathBuf>,
    /// Sequence length [default: 200 desk profile, 2000 full profile]
    #[arg(long)]
    max_len: Option<usize>,
    /// Vocabulary capacity [default: 5000 desk profile, 100000 full profile]
    #[arg(long)]
    max_size: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Input encoded dataset [default: dataset.bin]
    #[arg(long, value_name = "FILE")]
    dataset: Option<PathBuf>,
    /// Output model artifact [default: model.fpm]
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Output history CSV [default: history.csv]
    #[arg(long, value_name = "FILE")]
    history: Option<PathBuf>,
    /// Output held-out test set [default: test.bin]
    #[arg(long, value_name = "FILE")]
    test_set: Option<PathBuf>,
    /// Architecture: srnn or resnet [default: srnn]
    #[arg(long)]
    arch: Option<Arch>,
    /// Training epochs [default: 30]
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    lr: Option<f64>,
    /// Training seed (initialization and shuffling) [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Numeric precision: f32 or f64 [default: f32]
    #[arg(long)]
    precision: Option<Precision>,
    /// Embedding dimension [default: 32]
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Hidden/block width [default: 64]
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Split seed [default: 42]
    #[arg(long)]
    split_seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Model artifact [default: model.fpm]
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Encoded test set [default: test.bin]
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Output metrics JSON [default: metrics.json]
    #[arg(long, value_name = "FILE")]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Model artifact [default: model.fpm]
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Vocabulary file the dataset was encoded with [default: vocab.tsv]
    #[arg(long, value_name = "FILE")]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Random configurations per architecture [default: 20]
    #[arg(long)]
    seeds: Option<u64>,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, AppError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let mut config = load_config(&cli.config)?;
    match cli.command {
        Command::Synth(args) => {
            if let Some(v) = args.seed {
                config.synthetic.seed = Some(v);
            }
            if let Some(v) = args.docs_per_class {
                config.synthetic.docs_per_class = Some(v);
            }
            if let Some(v) = args.filler_vocab_size {
                config.synthetic.filler_vocab_size = Some(v);
            }
            if let Some(v) = args.order_sensitive {
                config.synthetic.order_sensitive = Some(v);
            }
            let corpus = args
                .corpus
                .unwrap_or_else(|| PathBuf::from(&config.paths.corpus));
            let summary = run_synth(&config, &corpus)?;
            println!(
                "wrote {} records across {} classes to {}",
                summary.records,
                summary.classes,
                corpus.display()
            );
        }
        Command::Ingest(args) => {
            if let Some(v) = args.format {
                config.ingest.format = v;
            }
            let input = args
                .input
                .unwrap_or_else(|| PathBuf::from(&config.paths.input));
            let corpus = args
                .corpus
                .unwrap_or_else(|| PathBuf::from(&config.paths.corpus));
            let summary = run_ingest(&config, &input, &corpus)?;
            println!(
                "parsed {} records; kept {} ({}); labels: {}",
                summary.parsed,
                summary.kept,
                summary.dropped,
                summary.labels.join(", ")
            );
            println!("wrote corpus to {}", corpus.display());
        }
        Command::Preprocess(args) => {
            if let Some(v) = args.max_len {
                config.sequence.max_len = Some(v);
            }
            if let Some(v) = args.max_size {
                config.vocab.max_size = Some(v);
            }
            let corpus = args
                .corpus
                .unwrap_or_else(|| PathBuf::from(&config.paths.corpus));
            let vocab = args
                .vocab
                .unwrap_or_else(|| PathBuf::from(&config.paths.vocab));
            let dataset = args
                .dataset
                .unwrap_or_else(|| PathBuf::from(&config.paths.dataset));
            let summary = run_preprocess(&config, &corpus, &vocab, &dataset)?;
            println!(
                "encoded {} records (dropped {} with no usable tokens); vocabulary size {}; max_len {}",
                summary.records, summary.dropped_empty, summary.vocab_size, summary.max_len
            );
            println!(
                "wrote vocabulary to {} and dataset to {}",
                vocab.display(),
                dataset.display()
            );
        }
        Command::Train(args) => {
            if let Some(v) = args.arch {
                config.model.architecture = v;
            }
            if let Some(v) = args.epochs {
                config.train.epochs = v;
            }
            if let Some(v) = args.batch_size {
                config.train.batch_size = v;
            }
            if let Some(v) = args.lr {
                config.train.lr = v;
            }
            if let Some(v) = args.seed {
                config.train.seed = v;
            }
            if let Some(v) = args.precision {
                config.train.precision = v;
            }
            if let Some(v) = args.embed_dim {
                config.model.embed_dim = v;
            }
            if let Some(v) = args.hidden_dim {
                config.model.hidden_dim = v;
            }
            if let Some(v) = args.split_seed {
                config.split.seed = v;
            }
            let dataset = args
                .dataset
                .unwrap_or_else(|| PathBuf::from(&config.paths.dataset));
            let model = args
                .model
                .unwrap_or_else(|| PathBuf::from(&config.paths.model));
            let history = args
                .history
                .unwrap_or_else(|| PathBuf::from(&config.paths.history));
            let test_set = args
                .test_set
                .unwrap_or_else(|| PathBuf::from(&config.paths.test_set));
            let summary = run_train(&config, &dataset, &model, &history, &test_set)?;
            for record in &summary.history {
                println!(
                    "epoch {:>3}  train_loss {:.6}  val_accuracy {:.6}",
                    record.epoch, record.train_loss, record.val_accuracy
                );
            }
            println!(
                "split: fit {} / val {} / test {}",
                summary.fit, summary.val, summary.test
            );
            println!(
                "final validation accuracy: {:.6}",
                summary.final_val_accuracy
            );
            println!(
                "wrote model to {}, history to {}, test set to {}",
                model.display(),
                history.display(),
                test_set.display()
            );
        }
        Command::Eval(args) => {
            let model = args
                .model
                .unwrap_or_else(|| PathBuf::from(&config.paths.model));
            let data = args
                .data
                .unwrap_or_else(|| PathBuf::from(&config.paths.test_set));
            let metrics = args
                .metrics
                .unwrap_or_else(|| PathBuf::from(&config.paths.metrics));
            let summary = run_eval(&model, &data, &metrics)?;
            print!("{}", summary.table);
            println!("metrics written to {}", metrics.display());
        }
        Command::Predict(args) => {
            let model = args
                .model
                .unwrap_or_else(|| PathBuf::from(&config.paths.model));
            let vocab = args
                .vocab
                .unwrap_or_else(|| PathBuf::from(&config.paths.vocab));
            let stdin = std::io::stdin();
            let mut reader = BufReader::new(stdin.lock());
            let stdout = std::io::stdout();
            let mut writer = stdout.lock();
            run_predict(&config, &model, &vocab, &mut reader, &mut writer)?;
            writer.flush().map_err(|e| AppError::Data(e.to_string()))?;
        }
        Command::Gradcheck(args) => {
            let report = run_gradcheck(args.seeds.unwrap_or(20));
            for check in &report.checks {
                println!(
                    "{:<6} {:<12} max_rel_error {:>9.3e}  {}",
                    check.arch.to_string(),
                    check.tensor,
                    check.max_rel_error,
                    if check.passed { "PASS" } else { "FAIL" }
                );
            }
            if !report.passed() {
                return Err(AppError::Numeric(format!(
                    "gradient check failed: {} of {} tensors exceed tolerance {:.1e}",
                    report.checks.iter().filter(|c| !c.passed).count(),
                    report.checks.len(),
                    report.tolerance
                )));
            }
            println!(
                "all {} tensor gradients within {:.1e} of finite differences",
                report.checks.len(),
                report.tolerance
            );
        }
    }
    Ok(())
}
