//! Command-line entry point: one subcommand per pipeline stage, exit code 0
//! on success, 1 on validation errors, 2 on I/O or transport errors.

pub mod config;
pub mod exec;

use crate::dataset::{DatasetError, DedupScope, Normalization, PromptId, Subtask};
use crate::evaluator::EvalError;
use crate::manifest::{Manifest, ManifestError};
use crate::model::{HeadKind, ModelError, Pooling};
use crate::tokenizer::TokenizerError;
use crate::trainer::{Optimizer, SearchSpace, TrainError};
use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use exec::*;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

/// Errors classified by exit code: validation -> 1, I/O and transport -> 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) | CliError::Transport(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Transport(m) => write!(f, "transport: {m}"),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Io(e.to_string()),
            DatasetError::Transport(_) => CliError::Transport(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TokenizerError> for CliError {
    fn from(e: TokenizerError) -> Self {
        match e {
            TokenizerError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Model(ModelError::Io { .. }) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        match e {
            ManifestError::Io { .. } => CliError::Io(e.to_string()),
            ManifestError::Malformed(_) => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "lateralqa",
    version,
    about = "Lateral-thinking multiple-choice QA workbench: data pipeline, BPE tokenizer, \
             compact transformer training, and adversarial-group evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a provided-task file into the canonical instance format
    Ingest {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long)]
        subtask: Subtask,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
    },
    /// Remap five-choice riddles (JSON Lines) to four-choice instances
    Remap {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// Shuffle each instance's choices with this seed (off by default,
        /// which keeps remapped gold answers at their original positions)
        #[arg(long)]
        shuffle_seed: Option<u64>,
    },
    /// Drop near-duplicate instances, keeping first occurrences
    Dedup {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// Also write the dropped instances here
        #[arg(long, value_name = "FILE")]
        dropped: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "casefold_strip_punct")]
        normalization: Normalization,
        #[arg(long, value_enum, default_value = "question_only")]
        scope: DedupScope,
    },
    /// Request one humor batch from a completion service and keep novel rows
    Generate {
        #[arg(long, value_enum)]
        prompt: PromptId,
        /// Already-collected instances to dedup against
        #[arg(long, value_name = "FILE")]
        accumulated: Option<PathBuf>,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// File-backed mock transport: respond with this file's contents
        #[arg(long, value_name = "FILE")]
        mock: Option<PathBuf>,
        /// POST endpoint URL; pass a bare --endpoint to read LATERALQA_ENDPOINT.
        /// The bearer token always comes from LATERALQA_API_TOKEN.
        #[arg(long, value_name = "URL", num_args = 0..=1, default_missing_value = "")]
        endpoint: Option<String>,
    },
    /// Concatenate weighted sources and shuffle
    Mix {
        /// Source file, optionally weighted as FILE:WEIGHT (default weight 1)
        #[arg(long = "in", value_name = "FILE[:WEIGHT]", required = true)]
        inputs: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
    },
    /// Tokenizer tools
    Tok {
        #[command(subcommand)]
        action: TokCommand,
    },
    /// Train one model configuration
    Train {
        #[command(flatten)]
        pipeline: PipelineFlags,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Random hyperparameter search with validation-accuracy selection
    Search {
        #[command(flatten)]
        pipeline: PipelineFlags,
        #[command(flatten)]
        search: SearchFlags,
    },
    /// Write predictions for a gold file using a trained checkpoint
    Predict {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        #[arg(long, value_name = "FILE")]
        table: PathBuf,
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
    },
    /// Score predictions against gold instances
    Eval {
        #[arg(long, value_name = "FILE")]
        preds: PathBuf,
        #[arg(long, value_name = "FILE")]
        gold: PathBuf,
        /// Restrict scoring to one subtask
        #[arg(long, value_enum)]
        subtask: Option<Subtask>,
        /// Also write the machine-readable report here
        #[arg(long = "out", value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Render results tables and ablation deltas from saved reports
    Report {
        #[arg(long, value_name = "FILE")]
        sentence: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        word: Option<PathBuf>,
        /// JSON array of {"label", "accuracy"} rows (accuracy as a decimal string)
        #[arg(long, value_name = "FILE")]
        ablation: Option<PathBuf>,
        /// Leave out the published reference rows
        #[arg(long)]
        hide_reference: bool,
    },
    /// Re-run a recorded command and verify bit-identical outputs
    Replay {
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
    },
}

#[derive(Subcommand)]
enum TokCommand {
    /// Train a merge table on a corpus (one document per line)
    Train {
        #[arg(long, value_name = "FILE")]
        corpus: PathBuf,
        #[arg(long)]
        vocab: usize,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
    },
}

/// Data, tokenizer, encoder, and output settings shared by train and search.
#[derive(Args)]
struct PipelineFlags {
    /// Experiment config file (TOML); flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Explicit validation file; otherwise --val-fraction splits --data
    #[arg(long, value_name = "FILE")]
    val: Option<PathBuf>,
    #[arg(long)]
    val_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    instruction_prefix: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    ffn_dim: Option<usize>,
    #[arg(long)]
    max_positions: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long, value_enum)]
    pooling: Option<Pooling>,
    #[arg(long)]
    init_seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FitFlags {
    #[arg(long, value_enum)]
    head: Option<HeadKind>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    optimizer: Option<Optimizer>,
    #[arg(long)]
    stop_at_val_accuracy: Option<f64>,
}

#[derive(Args)]
struct SearchFlags {
    #[arg(long, value_delimiter = ',')]
    batch_sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    learning_rates: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, value_enum)]
    head: Option<HeadKind>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_enum)]
    optimizer: Option<Optimizer>,
    #[arg(long)]
    stop_at_val_accuracy: Option<f64>,
    /// Worker pool size for concurrent trials
    #[arg(long)]
    jobs: Option<usize>,
}

/// Run one command; argv excludes the binary name. Returns the exit code.
pub fn run_command<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let mut argv: Vec<OsString> = vec![OsString::from("lateralqa")];
    argv.extend(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn manifest_sibling(output: &Path) -> PathBuf {
    PathBuf::from(format!("{}.manifest.json", output.display()))
}

fn save_manifest(manifest: &Manifest, path: &Path) -> Result<(), CliError> {
    manifest.save(path)?;
    Ok(())
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest { input, subtask, output } => {
            let params = IngestParams { input, subtask, output };
            let manifest = exec_ingest(&params, None)?;
            save_manifest(&manifest, &manifest_sibling(&params.output))
        }
        Command::Remap { input, output, shuffle_seed } => {
            let params = RemapParams { input, output, shuffle_seed };
            let manifest = exec_remap(&params, None)?;
            save_manifest(&manifest, &manifest_sibling(&params.output))
        }
        Command::Dedup { input, output, dropped, normalization, scope } => {
            let params = DedupParams { input, output, dropped, normalization, scope };
            let manifest = exec_dedup(&params, None)?;
            save_manifest(&manifest, &manifest_sibling(&params.output))
        }
        Command::Generate { prompt, accumulated, output, mock, endpoint } => {
            let endpoint = match endpoint {
                Some(url) if url.is_empty() => Some(std::env::var(exec::ENDPOINT_ENV).map_err(
                    |_| {
                        CliError::Validation(format!(
                            "--endpoint given without a URL and {} is unset",
                            exec::ENDPOINT_ENV
                        ))
                    },
                )?),
                other => other,
            };
            let params = GenerateParams { prompt, accumulated, output, mock, endpoint };
            let manifest = exec_generate(&params, None)?;
            save_manifest(&manifest, &manifest_sibling(&params.output))
        }
        Command::Mix { inputs, seed, output } => {
            let sources = inputs
                .iter()
                .map(|spec| parse_mix_source(spec))
                .collect::<Result<Vec<_>, _>>()?;
            let params = MixParams { sources, seed, output };
            let manifest = exec_mix(&params, None)?;
            save_manifest(&manifest, &manifest_sibling(&params.output))
        }
        Command::Tok { action } => match action {
            TokCommand::Train { corpus, vocab, output } => {
                let params = TokTrainParams { corpus, vocab, output };
                let manifest = exec_tok_train(&params, None)?;
                save_manifest(&manifest, &manifest_sibling(&params.output))
            }
        },
        Command::Train { pipeline, fit } => {
            let params = resolve_train(&pipeline, &fit)?;
            let manifest = exec_train(&params, None)?;
            save_manifest(&manifest, &params.out_dir.join("manifest.json"))
        }
        Command::Search { pipeline, search } => {
            let params = resolve_search(&pipeline, &search)?;
            let manifest = exec_search(&params, None)?;
            save_manifest(&manifest, &params.out_dir.join("manifest.json"))
        }
        Command::Predict { checkpoint, table, data, output } => {
            let params = PredictParams { checkpoint, table, data, output };
            let manifest = exec_predict(&params, None)?;
            save_manifest(&manifest, &manifest_sibling(&params.output))
        }
        Command::Eval { preds, gold, subtask, output } => {
            let params = EvalParams { preds, gold, subtask, output };
            let manifest = exec_eval(&params, None)?;
            match &params.output {
                Some(output) => save_manifest(&manifest, &manifest_sibling(output)),
                None => Ok(()),
            }
        }
        Command::Report { sentence, word, ablation, hide_reference } => {
            exec_report(&ReportParams { sentence, word, ablation, hide_reference })
        }
        Command::Replay { manifest } => exec_replay(&manifest),
    }
}

fn parse_mix_source(spec: &str) -> Result<MixSource, CliError> {
    if let Some((path, weight)) = spec.rsplit_once(':') {
        if let Ok(weight) = weight.parse::<f64>() {
            return Ok(MixSource { path: PathBuf::from(path), weight });
        }
    }
    Ok(MixSource { path: PathBuf::from(spec), weight: 1.0 })
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(path) => ExperimentConfig::load(path).map_err(CliError::Validation),
        None => Ok(ExperimentConfig::default()),
    }
}

fn resolve_pipeline(
    flags: &PipelineFlags,
) -> Result<(ExperimentConfig, EncoderSettings, PathBuf, PathBuf, usize, PathBuf), CliError> {
    let file = load_config(&flags.config)?;
    let defaults = EncoderSettings::default();
    let encoder = EncoderSettings {
        layers: flags.layers.or(file.encoder.layers).unwrap_or(defaults.layers),
        hidden_dim: flags.hidden_dim.or(file.encoder.hidden_dim).unwrap_or(defaults.hidden_dim),
        heads: flags.heads.or(file.encoder.heads).unwrap_or(defaults.heads),
        ffn_dim: flags.ffn_dim.or(file.encoder.ffn_dim).unwrap_or(defaults.ffn_dim),
        max_positions: flags
            .max_positions
            .or(file.encoder.max_positions)
            .unwrap_or(defaults.max_positions),
        vocab_size: flags.vocab_size.or(file.encoder.vocab_size),
        pooling: flags.pooling.or(file.encoder.pooling).unwrap_or(defaults.pooling),
    };
    let data = flags
        .data
        .clone()
        .or(file.data.train.clone())
        .ok_or_else(|| CliError::Validation("training data required (--data or [data].train)".into()))?;
    let table = flags
        .table
        .clone()
        .or(file.tokenizer.table.clone())
        .ok_or_else(|| CliError::Validation("merge table required (--table or [tokenizer].table)".into()))?;
    let max_len = flags
        .max_len
        .or(file.tokenizer.max_len)
        .unwrap_or(encoder.max_positions);
    let out_dir = flags
        .out_dir
        .clone()
        .or(file.output.dir.clone())
        .ok_or_else(|| CliError::Validation("output directory required (--out-dir or [output].dir)".into()))?;
    Ok((file, encoder, data, table, max_len, out_dir))
}

fn resolve_train(pipeline: &PipelineFlags, fit: &FitFlags) -> Result<TrainParams, CliError> {
    let (file, encoder, data, table, max_len, out_dir) = resolve_pipeline(pipeline)?;
    let hp = crate::trainer::Hyperparams {
        batch_size: fit.batch_size.or(file.train.batch_size).unwrap_or(16),
        learning_rate: fit.learning_rate.or(file.train.learning_rate).unwrap_or(1e-3),
        epochs: fit.epochs.or(file.train.epochs).unwrap_or(10),
        seed: fit.seed.or(file.train.seed).unwrap_or(0),
        head: fit.head.or(file.train.head).unwrap_or(HeadKind::Mc),
        optimizer: fit.optimizer.or(file.train.optimizer).unwrap_or(Optimizer::AdamLike),
        stop_at_val_accuracy: fit.stop_at_val_accuracy.or(file.train.stop_at_val_accuracy),
    };
    Ok(TrainParams {
        data,
        val: pipeline.val.clone().or(file.data.val.clone()),
        val_fraction: pipeline.val_fraction.or(file.data.val_fraction).unwrap_or(0.2),
        split_seed: pipeline.split_seed.or(file.data.split_seed).unwrap_or(0),
        table,
        max_len,
        instruction_prefix: pipeline
            .instruction_prefix
            .clone()
            .or(file.tokenizer.instruction_prefix.clone())
            .unwrap_or_default(),
        encoder,
        init_seed: pipeline.init_seed.or(file.train.init_seed).unwrap_or(0),
        hp,
        out_dir,
    })
}

fn resolve_search(pipeline: &PipelineFlags, search: &SearchFlags) -> Result<SearchParams, CliError> {
    let (file, encoder, data, table, max_len, out_dir) = resolve_pipeline(pipeline)?;
    let space = SearchSpace {
        batch_sizes: search
            .batch_sizes
            .clone()
            .or(file.search.batch_sizes.clone())
            .unwrap_or_else(|| vec![4, 16, 32]),
        learning_rates: search
            .learning_rates
            .clone()
            .or(file.search.learning_rates.clone())
            .unwrap_or_else(|| vec![5e-5, 1e-4, 2e-4]),
    };
    Ok(SearchParams {
        data,
        val: pipeline.val.clone().or(file.data.val.clone()),
        val_fraction: pipeline.val_fraction.or(file.data.val_fraction).unwrap_or(0.2),
        split_seed: pipeline.split_seed.or(file.data.split_seed).unwrap_or(0),
        table,
        max_len,
        instruction_prefix: pipeline
            .instruction_prefix
            .clone()
            .or(file.tokenizer.instruction_prefix.clone())
            .unwrap_or_default(),
        encoder,
        init_seed: pipeline.init_seed.or(file.train.init_seed).unwrap_or(0),
        space,
        trials: search.trials.or(file.search.trials).unwrap_or(9),
        base_seed: search.base_seed.or(file.search.base_seed).unwrap_or(0),
        head: search.head.or(file.train.head).unwrap_or(HeadKind::Mc),
        epochs: search.epochs.or(file.train.epochs).unwrap_or(10),
        optimizer: search.optimizer.or(file.train.optimizer).unwrap_or(Optimizer::AdamLike),
        stop_at_val_accuracy: search.stop_at_val_accuracy.or(file.train.stop_at_val_accuracy),
        jobs: search.jobs.or(file.search.jobs),
        out_dir,
    })
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

static REPLAY_COUNTER: AtomicUsize = AtomicUsize::new(0);

fn run_from_manifest(manifest: &Manifest, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    fn params<T: serde::de::DeserializeOwned>(value: &serde_json::Value) -> Result<T, CliError> {
        serde_json::from_value(value.clone())
            .map_err(|e| CliError::Validation(format!("manifest params do not parse: {e}")))
    }
    match manifest.command.as_str() {
        "ingest" => exec_ingest(&params(&manifest.params)?, sandbox),
        "remap" => exec_remap(&params(&manifest.params)?, sandbox),
        "dedup" => exec_dedup(&params(&manifest.params)?, sandbox),
        "generate" => {
            let p: GenerateParams = params(&manifest.params)?;
            if p.endpoint.is_some() {
                return Err(CliError::Validation(
                    "generate runs against a live endpoint are not replayable".to_string(),
                ));
            }
            exec_generate(&p, sandbox)
        }
        "mix" => exec_mix(&params(&manifest.params)?, sandbox),
        "tok-train" => exec_tok_train(&params(&manifest.params)?, sandbox),
        "train" => exec_train(&params(&manifest.params)?, sandbox),
        "search" => exec_search(&params(&manifest.params)?, sandbox),
        "predict" => exec_predict(&params(&manifest.params)?, sandbox),
        "eval" => exec_eval(&params(&manifest.params)?, sandbox),
        other => Err(CliError::Validation(format!("manifest names unknown command {other:?}"))),
    }
}

fn exec_replay(manifest_path: &Path) -> Result<(), CliError> {
    let manifest = Manifest::load(manifest_path)?;
    manifest.verify_inputs().map_err(CliError::Validation)?;
    let sandbox = std::env::temp_dir().join(format!(
        "lateralqa-replay-{}-{}",
        std::process::id(),
        REPLAY_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&sandbox).map_err(|e| CliError::Io(format!("{}: {e}", sandbox.display())))?;
    let outcome = run_from_manifest(&manifest, Some(&sandbox));
    let rerun = match outcome {
        Ok(rerun) => rerun,
        Err(e) => {
            let _ = std::fs::remove_dir_all(&sandbox);
            return Err(e);
        }
    };
    let _ = std::fs::remove_dir_all(&sandbox);

    let mut mismatches = Vec::new();
    for (path, expected) in &manifest.outputs {
        match rerun.outputs.get(path) {
            Some(actual) if actual == expected => println!("replay ok: {path}"),
            Some(_) => {
                println!("replay MISMATCH: {path}");
                mismatches.push(path.clone());
            }
            None => {
                println!("replay MISSING: {path}");
                mismatches.push(path.clone());
            }
        }
    }
    for path in rerun.outputs.keys() {
        if !manifest.outputs.contains_key(path) {
            println!("replay EXTRA: {path}");
            mismatches.push(path.clone());
        }
    }
    if mismatches.is_empty() {
        println!("replay verified: {} output(s) byte-identical", manifest.outputs.len());
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "replay diverged on {} output(s)",
            mismatches.len()
        )))
    }
}
