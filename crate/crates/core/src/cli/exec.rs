//! Resolved command parameters and their execution. Each artifact-producing
//! command serializes its resolved params into a [`Manifest`]; `replay`
//! deserializes them and re-runs into a sandbox directory, comparing output
//! digests for bit-exact agreement.

use super::CliError;
use crate::dataset::{
    self, dedup, load_brainteaser, load_riddlesense, mix, read_instances, remap_five_to_four,
    split_train_val, DatasetStats, DedupPolicy, DedupScope, Normalization, PromptId, QAInstance,
    Subtask,
};
use crate::evaluator::{
    self, ablation_deltas, build_results_table, parse_decimal, render_ablation, Accuracy,
    MetricsTable, Prediction, SubtaskMetrics,
};
use crate::manifest::Manifest;
use crate::model::{self, Checkpoint, EncoderConfig, HeadKind, Pooling};
use crate::tokenizer::{train_bpe, MergeTable};
use crate::trainer::{self, Hyperparams, SearchSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable holding the completion-service bearer token.
pub const TOKEN_ENV: &str = "LATERALQA_API_TOKEN";
/// Environment variable holding the completion-service endpoint URL.
pub const ENDPOINT_ENV: &str = "LATERALQA_ENDPOINT";

fn io_err(context: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", context.display()))
}

/// Map a logical output path into the sandbox (for replay) or leave it.
fn sink_path(sandbox: Option<&Path>, logical: &Path) -> PathBuf {
    match sandbox {
        None => logical.to_path_buf(),
        Some(root) => {
            let mut out = root.to_path_buf();
            for component in logical.components() {
                if let std::path::Component::Normal(part) = component {
                    out.push(part);
                }
            }
            out
        }
    }
}

fn write_artifact(
    manifest: &mut Manifest,
    sandbox: Option<&Path>,
    logical: &Path,
    bytes: &[u8],
) -> Result<(), CliError> {
    let actual = sink_path(sandbox, logical);
    if let Some(parent) = actual.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    fs::write(&actual, bytes).map_err(|e| io_err(&actual, e))?;
    manifest.record_output(logical, &actual)?;
    Ok(())
}

fn instances_json(instances: &[QAInstance]) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(instances).expect("instances serialize");
    text.push('\n');
    text.into_bytes()
}

fn params_value<T: Serialize>(params: &T) -> serde_json::Value {
    serde_json::to_value(params).expect("params serialize")
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestParams {
    pub input: PathBuf,
    pub subtask: Subtask,
    pub output: PathBuf,
}

pub fn exec_ingest(params: &IngestParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("ingest", params_value(params));
    manifest.record_input(&params.input)?;
    let instances = load_brainteaser(&params.input, params.subtask)?;
    let mut stats = DatasetStats::new();
    stats.add_instances("ingested", &instances);
    write_artifact(&mut manifest, sandbox, &params.output, &instances_json(&instances))?;
    println!("{stats}");
    println!("wrote {} instances to {}", instances.len(), params.output.display());
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// remap
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemapParams {
    pub input: PathBuf,
    pub output: PathBuf,
    pub shuffle_seed: Option<u64>,
}

pub fn exec_remap(params: &RemapParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("remap", params_value(params));
    manifest.record_input(&params.input)?;
    let riddles = load_riddlesense(&params.input)?;
    let mut instances = riddles
        .iter()
        .map(remap_five_to_four)
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = params.shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for inst in &mut instances {
            dataset::shuffle_choices(inst, &mut rng);
        }
    }
    write_artifact(&mut manifest, sandbox, &params.output, &instances_json(&instances))?;
    println!(
        "remapped {} riddles to 4 choices -> {}",
        instances.len(),
        params.output.display()
    );
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// dedup
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DedupParams {
    pub input: PathBuf,
    pub output: PathBuf,
    pub dropped: Option<PathBuf>,
    pub normalization: Normalization,
    pub scope: DedupScope,
}

pub fn exec_dedup(params: &DedupParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("dedup", params_value(params));
    manifest.record_input(&params.input)?;
    let instances = read_instances(&params.input)?;
    let policy = DedupPolicy { normalization: params.normalization, scope: params.scope };
    let (kept, dropped) = dedup(instances, policy);
    write_artifact(&mut manifest, sandbox, &params.output, &instances_json(&kept))?;
    if let Some(dropped_path) = &params.dropped {
        write_artifact(&mut manifest, sandbox, dropped_path, &instances_json(&dropped))?;
    }
    println!("kept {} instances, dropped {} duplicates", kept.len(), dropped.len());
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateParams {
    pub prompt: PromptId,
    pub accumulated: Option<PathBuf>,
    pub output: PathBuf,
    pub mock: Option<PathBuf>,
    pub endpoint: Option<String>,
}

pub fn exec_generate(params: &GenerateParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("generate", params_value(params));
    let accumulated = match &params.accumulated {
        Some(path) => {
            manifest.record_input(path)?;
            read_instances(path)?
        }
        None => Vec::new(),
    };
    let client: Box<dyn dataset::CompletionClient> = match (&params.mock, &params.endpoint) {
        (Some(mock), None) => {
            manifest.record_input(mock)?;
            Box::new(dataset::FileMockClient::from_path(mock)?)
        }
        (None, Some(endpoint)) => {
            let token = std::env::var(TOKEN_ENV).ok();
            Box::new(dataset::HttpCompletionClient::new(endpoint.clone(), token))
        }
        _ => {
            return Err(CliError::Validation(
                "generate needs exactly one of --mock FILE or --endpoint URL".to_string(),
            ))
        }
    };
    let novel = dataset::generate_humor_batch(client.as_ref(), params.prompt, &accumulated)?;
    write_artifact(&mut manifest, sandbox, &params.output, &instances_json(&novel))?;
    println!(
        "generated {} novel instances ({} already accumulated)",
        novel.len(),
        accumulated.len()
    );
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// mix
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixSource {
    pub path: PathBuf,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixParams {
    pub sources: Vec<MixSource>,
    pub seed: u64,
    pub output: PathBuf,
}

pub fn exec_mix(params: &MixParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("mix", params_value(params));
    let mut pools = Vec::with_capacity(params.sources.len());
    for source in &params.sources {
        manifest.record_input(&source.path)?;
        pools.push((read_instances(&source.path)?, source.weight));
    }
    let borrowed: Vec<(&[QAInstance], f64)> =
        pools.iter().map(|(pool, weight)| (pool.as_slice(), *weight)).collect();
    let mixed = mix(&borrowed, params.seed)?;
    write_artifact(&mut manifest, sandbox, &params.output, &instances_json(&mixed))?;
    let mut stats = DatasetStats::new();
    stats.add_instances("mixed", &mixed);
    println!("{stats}");
    println!("mixed {} instances -> {}", mixed.len(), params.output.display());
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// tok train
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokTrainParams {
    pub corpus: PathBuf,
    pub vocab: usize,
    pub output: PathBuf,
}

pub fn exec_tok_train(params: &TokTrainParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("tok-train", params_value(params));
    manifest.record_input(&params.corpus)?;
    let text = fs::read_to_string(&params.corpus).map_err(|e| io_err(&params.corpus, e))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    let table = train_bpe(&lines, params.vocab)?;
    write_artifact(&mut manifest, sandbox, &params.output, table.to_json().as_bytes())?;
    println!(
        "trained merge table: {} merges, vocab {} -> {}",
        table.merges().len(),
        table.vocab_size(),
        params.output.display()
    );
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// train / search
// ---------------------------------------------------------------------------

/// Encoder shape as configured; vocab defaults to the merge table's size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderSettings {
    pub layers: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub max_positions: usize,
    pub vocab_size: Option<usize>,
    pub pooling: Pooling,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        let desk = EncoderConfig::desk(0);
        EncoderSettings {
            layers: desk.layers,
            hidden_dim: desk.hidden_dim,
            heads: desk.heads,
            ffn_dim: desk.ffn_dim,
            max_positions: desk.max_positions,
            vocab_size: None,
            pooling: desk.pooling,
        }
    }
}

impl EncoderSettings {
    pub fn resolve(&self, table: &MergeTable) -> EncoderConfig {
        EncoderConfig {
            layers: self.layers,
            hidden_dim: self.hidden_dim,
            heads: self.heads,
            ffn_dim: self.ffn_dim,
            max_positions: self.max_positions,
            vocab_size: self.vocab_size.unwrap_or_else(|| table.vocab_size()),
            pooling: self.pooling,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainParams {
    pub data: PathBuf,
    pub val: Option<PathBuf>,
    pub val_fraction: f64,
    pub split_seed: u64,
    pub table: PathBuf,
    pub max_len: usize,
    pub instruction_prefix: String,
    pub encoder: EncoderSettings,
    pub init_seed: u64,
    pub hp: Hyperparams,
    pub out_dir: PathBuf,
}

struct LoadedData {
    config: EncoderConfig,
    table: MergeTable,
    train_set: Vec<QAInstance>,
    val_set: Vec<QAInstance>,
}

fn load_training_data(
    manifest: &mut Manifest,
    data: &Path,
    val: &Option<PathBuf>,
    val_fraction: f64,
    split_seed: u64,
    table_path: &Path,
    encoder: &EncoderSettings,
) -> Result<LoadedData, CliError> {
    manifest.record_input(data)?;
    manifest.record_input(table_path)?;
    if let Some(val_path) = val {
        manifest.record_input(val_path)?;
    }
    let table = MergeTable::load(table_path)?;
    let config = encoder.resolve(&table);
    config.validate()?;
    let all = read_instances(data)?;
    let (train_set, val_set) = match val {
        Some(val_path) => (all, read_instances(val_path)?),
        None => split_train_val(&all, val_fraction, split_seed)?,
    };
    Ok(LoadedData { config, table, train_set, val_set })
}

pub fn exec_train(params: &TrainParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("train", params_value(params));
    let loaded = load_training_data(
        &mut manifest,
        &params.data,
        &params.val,
        params.val_fraction,
        params.split_seed,
        &params.table,
        &params.encoder,
    )?;
    let train_enc = trainer::encode_instances(
        &loaded.table,
        params.hp.head,
        &loaded.train_set,
        params.max_len,
        &params.instruction_prefix,
    )?;
    let val_enc = trainer::encode_instances(
        &loaded.table,
        params.hp.head,
        &loaded.val_set,
        params.max_len,
        &params.instruction_prefix,
    )?;
    let init = model::init_params(&loaded.config, params.init_seed)?;
    println!(
        "training {:?} head on {} train / {} val instances",
        params.hp.head,
        train_enc.len(),
        val_enc.len()
    );
    let report = trainer::train(&loaded.config, &init, &train_enc, &val_enc, &params.hp)?;
    for (epoch, stats) in report.epochs.iter().enumerate() {
        println!(
            "epoch {epoch:>3}: train loss {:.4}  val acc {}/{} ({:.3})",
            stats.train_loss,
            stats.val_correct,
            stats.val_total,
            stats.val_accuracy()
        );
    }
    println!(
        "best epoch {} (val acc {:.3}); wall clock {:.1}s",
        report.best_epoch,
        report.best_val_accuracy(),
        report.wall_clock_secs
    );

    let checkpoint = Checkpoint {
        encoder: loaded.config,
        head: params.hp.head,
        max_len: params.max_len,
        instruction_prefix: params.instruction_prefix.clone(),
        params: report.params.clone(),
    };
    write_artifact(
        &mut manifest,
        sandbox,
        &params.out_dir.join("checkpoint.bin"),
        &checkpoint.to_bytes(),
    )?;
    let report_json = serde_json::json!({
        "command": "train",
        "encoder": loaded.config,
        "hyperparams": params.hp,
        "result": report.to_json(),
    });
    let mut body = serde_json::to_string_pretty(&report_json).expect("report serializes");
    body.push('\n');
    write_artifact(&mut manifest, sandbox, &params.out_dir.join("report.json"), body.as_bytes())?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchParams {
    pub data: PathBuf,
    pub val: Option<PathBuf>,
    pub val_fraction: f64,
    pub split_seed: u64,
    pub table: PathBuf,
    pub max_len: usize,
    pub instruction_prefix: String,
    pub encoder: EncoderSettings,
    pub init_seed: u64,
    pub space: SearchSpace,
    pub trials: usize,
    pub base_seed: u64,
    pub head: HeadKind,
    pub epochs: usize,
    pub optimizer: trainer::Optimizer,
    pub stop_at_val_accuracy: Option<f64>,
    pub jobs: Option<usize>,
    pub out_dir: PathBuf,
}

pub fn exec_search(params: &SearchParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("search", params_value(params));
    let loaded = load_training_data(
        &mut manifest,
        &params.data,
        &params.val,
        params.val_fraction,
        params.split_seed,
        &params.table,
        &params.encoder,
    )?;
    let train_enc = trainer::encode_instances(
        &loaded.table,
        params.head,
        &loaded.train_set,
        params.max_len,
        &params.instruction_prefix,
    )?;
    let val_enc = trainer::encode_instances(
        &loaded.table,
        params.head,
        &loaded.val_set,
        params.max_len,
        &params.instruction_prefix,
    )?;
    let init = model::init_params(&loaded.config, params.init_seed)?;
    let template = Hyperparams {
        batch_size: 1,
        learning_rate: 1.0,
        epochs: params.epochs,
        seed: 0,
        head: params.head,
        optimizer: params.optimizer,
        stop_at_val_accuracy: params.stop_at_val_accuracy,
    };

    let run = || {
        trainer::random_search(
            &loaded.config,
            &init,
            &train_enc,
            &val_enc,
            &params.space,
            params.trials,
            params.base_seed,
            &template,
        )
    };
    let outcome = match params.jobs {
        Some(jobs) if jobs > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Validation(format!("cannot build worker pool: {e}")))?
            .install(run),
        _ => run(),
    }?;

    for trial in &outcome.trials {
        println!(
            "trial {:>2}: batch {:>3} lr {:<8} -> val acc {:.3}{}",
            trial.index,
            trial.hp.batch_size,
            trial.hp.learning_rate,
            trial.report.best_val_accuracy(),
            if trial.index == outcome.best_index { "  <- best" } else { "" }
        );
    }

    let best = outcome.best();
    let checkpoint = Checkpoint {
        encoder: loaded.config,
        head: params.head,
        max_len: params.max_len,
        instruction_prefix: params.instruction_prefix.clone(),
        params: best.report.params.clone(),
    };
    write_artifact(
        &mut manifest,
        sandbox,
        &params.out_dir.join("best_checkpoint.bin"),
        &checkpoint.to_bytes(),
    )?;
    let trials_json: Vec<serde_json::Value> = outcome
        .trials
        .iter()
        .map(|trial| {
            serde_json::json!({
                "index": trial.index,
                "batch_size": trial.hp.batch_size,
                "learning_rate": trial.hp.learning_rate,
                "seed": trial.hp.seed,
                "result": trial.report.to_json(),
            })
        })
        .collect();
    let report_json = serde_json::json!({
        "command": "search",
        "encoder": loaded.config,
        "space": params.space,
        "best_index": outcome.best_index,
        "trials": trials_json,
    });
    let mut body = serde_json::to_string_pretty(&report_json).expect("report serializes");
    body.push('\n');
    write_artifact(
        &mut manifest,
        sandbox,
        &params.out_dir.join("search_report.json"),
        body.as_bytes(),
    )?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictParams {
    pub checkpoint: PathBuf,
    pub table: PathBuf,
    pub data: PathBuf,
    pub output: PathBuf,
}

pub fn exec_predict(params: &PredictParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("predict", params_value(params));
    manifest.record_input(&params.checkpoint)?;
    manifest.record_input(&params.table)?;
    manifest.record_input(&params.data)?;
    let checkpoint = Checkpoint::load(&params.checkpoint)?;
    let table = MergeTable::load(&params.table)?;
    let instances = read_instances(&params.data)?;
    let encoded = trainer::encode_instances(
        &table,
        checkpoint.head,
        &instances,
        checkpoint.max_len,
        &checkpoint.instruction_prefix,
    )?;
    let predictions: Vec<Prediction> = encoded
        .iter()
        .map(|inst| {
            let chosen =
                model::predict_instance(&checkpoint.params, &checkpoint.encoder, inst, checkpoint.head)?;
            Ok(Prediction { id: inst.id.clone(), chosen_index: chosen })
        })
        .collect::<Result<_, CliError>>()?;
    let mut body = String::new();
    for pred in &predictions {
        body.push_str(&serde_json::to_string(pred).expect("prediction serializes"));
        body.push('\n');
    }
    write_artifact(&mut manifest, sandbox, &params.output, body.as_bytes())?;
    println!("wrote {} predictions to {}", predictions.len(), params.output.display());
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalParams {
    pub preds: PathBuf,
    pub gold: PathBuf,
    pub subtask: Option<Subtask>,
    pub output: Option<PathBuf>,
}

pub fn exec_eval(params: &EvalParams, sandbox: Option<&Path>) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("eval", params_value(params));
    manifest.record_input(&params.preds)?;
    manifest.record_input(&params.gold)?;
    let preds = evaluator::read_predictions(&params.preds)?;
    let gold = read_instances(&params.gold)?;

    // Partition predictions by the subtask of the instance they refer to.
    let section_of: HashMap<&str, Subtask> =
        gold.iter().map(|inst| (inst.id.as_str(), inst.subtask)).collect();
    let wanted = |subtask: Subtask| params.subtask.is_none_or(|s| s == subtask);
    let mut preds_by_subtask: BTreeMap<Subtask, Vec<Prediction>> = BTreeMap::new();
    for pred in preds {
        match section_of.get(pred.id.as_str()) {
            Some(&subtask) => {
                if wanted(subtask) {
                    preds_by_subtask.entry(subtask).or_default().push(pred);
                }
            }
            None => return Err(evaluator::EvalError::UnmatchedPrediction(pred.id).into()),
        }
    }
    let mut gold_by_subtask: BTreeMap<Subtask, Vec<QAInstance>> = BTreeMap::new();
    for inst in gold {
        if wanted(inst.subtask) {
            gold_by_subtask.entry(inst.subtask).or_default().push(inst);
        }
    }
    if gold_by_subtask.is_empty() {
        return Err(CliError::Validation("no gold instances match the subtask filter".into()));
    }

    let empty: Vec<Prediction> = Vec::new();
    let sections: Vec<(Subtask, &[Prediction], &[QAInstance])> = gold_by_subtask
        .iter()
        .map(|(subtask, instances)| {
            let section_preds =
                preds_by_subtask.get(subtask).map_or(empty.as_slice(), Vec::as_slice);
            (*subtask, section_preds, instances.as_slice())
        })
        .collect();
    let table = build_results_table(&sections)?;
    print!("{}", table.render(true));
    if let Some(output) = &params.output {
        let mut body =
            serde_json::to_string_pretty(&table.to_json()).expect("report serializes");
        body.push('\n');
        write_artifact(&mut manifest, sandbox, output, body.as_bytes())?;
    }
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportParams {
    pub sentence: Option<PathBuf>,
    pub word: Option<PathBuf>,
    pub ablation: Option<PathBuf>,
    pub hide_reference: bool,
}

fn accuracy_from_json(cell: &serde_json::Value) -> Result<Accuracy, CliError> {
    let take = |key: &str| {
        cell[key]
            .as_u64()
            .ok_or_else(|| CliError::Validation(format!("report cell lacks integer {key:?}")))
    };
    Ok(Accuracy { correct: take("num")?, total: take("den")? })
}

fn sections_from_report(path: &Path) -> Result<Vec<SubtaskMetrics>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let sections = value["sections"]
        .as_array()
        .ok_or_else(|| CliError::Validation(format!("{}: missing sections", path.display())))?;
    sections
        .iter()
        .map(|section| {
            let name = section["subtask"].as_str().unwrap_or_default();
            let subtask = match name {
                "sentence" => Subtask::Sentence,
                "word" => Subtask::Word,
                "external" => Subtask::External,
                other => {
                    return Err(CliError::Validation(format!("unknown subtask {other:?}")));
                }
            };
            let cells = &section["cells"];
            let warnings = section["warnings"]
                .as_array()
                .map(|w| w.iter().filter_map(|v| v.as_str().map(String::from)).collect())
                .unwrap_or_default();
            Ok(SubtaskMetrics {
                subtask,
                original: accuracy_from_json(&cells["original"])?,
                semantic: accuracy_from_json(&cells["semantic"])?,
                context: accuracy_from_json(&cells["context"])?,
                orig_sem: accuracy_from_json(&cells["orig_sem"])?,
                orig_sem_con: accuracy_from_json(&cells["orig_sem_con"])?,
                overall: accuracy_from_json(&cells["overall"])?,
                warnings,
            })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct AblationInputRow {
    label: String,
    accuracy: String,
}

pub fn exec_report(params: &ReportParams) -> Result<(), CliError> {
    let mut table = MetricsTable::default();
    for path in [&params.sentence, &params.word].into_iter().flatten() {
        table.sections.extend(sections_from_report(path)?);
    }
    if !table.sections.is_empty() {
        print!("{}", table.render(!params.hide_reference));
    }
    if let Some(ablation_path) = &params.ablation {
        let text = fs::read_to_string(ablation_path).map_err(|e| io_err(ablation_path, e))?;
        let rows: Vec<AblationInputRow> = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", ablation_path.display())))?;
        let parsed: Vec<(String, num_rational::Ratio<i64>)> = rows
            .iter()
            .map(|row| Ok((row.label.clone(), parse_decimal(&row.accuracy)?)))
            .collect::<Result<_, CliError>>()?;
        let deltas = ablation_deltas(&parsed);
        print!("{}", render_ablation(&deltas));
    }
    if table.sections.is_empty() && params.ablation.is_none() {
        return Err(CliError::Validation(
            "report needs at least one of --sentence, --word, --ablation".to_string(),
        ));
    }
    Ok(())
}
