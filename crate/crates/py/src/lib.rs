//! Python bindings: the canonical instance type, data pipeline operations,
//! the BPE tokenizer, model training/prediction, and the accuracy metrics.
//!
//! Build the cdylib with `cargo build -p lateralqa-py --release` and import
//! it as `lateralqa_py` (see python/smoke_test.py for the loading dance).

use lateralqa::dataset::{self, DedupPolicy, DedupScope, GroupKey, Normalization, Subtask, Variant};
use lateralqa::evaluator;
use lateralqa::model::{self, Checkpoint, EncoderConfig, HeadKind, Pooling};
use lateralqa::tokenizer::{self, MergeTable, TokenSeq};
use lateralqa::trainer::{self, Hyperparams, Optimizer};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use std::path::{Path, PathBuf};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_or_value_err(e: dataset::DatasetError) -> PyErr {
    match e {
        dataset::DatasetError::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_variant(name: &str) -> PyResult<Variant> {
    match name {
        "original" => Ok(Variant::Original),
        "semantic" => Ok(Variant::Semantic),
        "context" => Ok(Variant::Context),
        "ungrouped" => Ok(Variant::Ungrouped),
        other => Err(value_err(format!("unknown variant {other:?}"))),
    }
}

fn parse_subtask(name: &str) -> PyResult<Subtask> {
    match name {
        "sentence" => Ok(Subtask::Sentence),
        "word" => Ok(Subtask::Word),
        "external" => Ok(Subtask::External),
        other => Err(value_err(format!("unknown subtask {other:?}"))),
    }
}

fn parse_source(name: &str) -> PyResult<dataset::Source> {
    match name {
        "provided" => Ok(dataset::Source::Provided),
        "humor" => Ok(dataset::Source::Humor),
        "riddlesense" => Ok(dataset::Source::Riddlesense),
        "synthetic" => Ok(dataset::Source::Synthetic),
        other => Err(value_err(format!("unknown source {other:?}"))),
    }
}

/// One multiple-choice question with grouping metadata.
#[pyclass(name = "QAInstance", get_all, from_py_object)]
#[derive(Clone)]
struct PyQAInstance {
    id: String,
    question: String,
    choices: Vec<String>,
    gold_index: usize,
    group: String,
    variant: String,
    subtask: String,
    source: String,
}

impl PyQAInstance {
    fn from_core(inst: &dataset::QAInstance) -> Self {
        PyQAInstance {
            id: inst.id.clone(),
            question: inst.question.clone(),
            choices: inst.choices.clone(),
            gold_index: inst.gold_index,
            group: inst.group.as_str().to_string(),
            variant: inst.variant.name().to_string(),
            subtask: inst.subtask.name().to_string(),
            source: inst.source.name().to_string(),
        }
    }

    fn to_core(&self) -> PyResult<dataset::QAInstance> {
        let inst = dataset::QAInstance {
            id: self.id.clone(),
            question: self.question.clone(),
            choices: self.choices.clone(),
            gold_index: self.gold_index,
            group: GroupKey(self.group.clone()),
            variant: parse_variant(&self.variant)?,
            subtask: parse_subtask(&self.subtask)?,
            source: parse_source(&self.source)?,
        };
        inst.validate().map_err(value_err)?;
        Ok(inst)
    }
}

#[pymethods]
impl PyQAInstance {
    #[new]
    #[pyo3(signature = (id, question, choices, gold_index, group=None, variant="ungrouped", subtask="external", source="synthetic"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        id: String,
        question: String,
        choices: Vec<String>,
        gold_index: usize,
        group: Option<String>,
        variant: &str,
        subtask: &str,
        source: &str,
    ) -> PyResult<Self> {
        let made = PyQAInstance {
            group: group.unwrap_or_else(|| id.clone()),
            id,
            question,
            choices,
            gold_index,
            variant: variant.to_string(),
            subtask: subtask.to_string(),
            source: source.to_string(),
        };
        made.to_core()?;
        Ok(made)
    }

    fn gold_text(&self) -> PyResult<String> {
        self.choices
            .get(self.gold_index)
            .cloned()
            .ok_or_else(|| value_err("gold index out of range"))
    }

    fn __repr__(&self) -> String {
        format!(
            "QAInstance(id={:?}, question={:?}, choices={}, gold_index={})",
            self.id,
            self.question,
            self.choices.len(),
            self.gold_index
        )
    }
}

fn to_core_vec(instances: &[PyQAInstance]) -> PyResult<Vec<dataset::QAInstance>> {
    instances.iter().map(PyQAInstance::to_core).collect()
}

fn from_core_vec(instances: &[dataset::QAInstance]) -> Vec<PyQAInstance> {
    instances.iter().map(PyQAInstance::from_core).collect()
}

#[pyfunction]
fn load_instances(path: PathBuf) -> PyResult<Vec<PyQAInstance>> {
    let instances = dataset::read_instances(&path).map_err(io_or_value_err)?;
    Ok(from_core_vec(&instances))
}

#[pyfunction]
fn save_instances(path: PathBuf, instances: Vec<PyQAInstance>) -> PyResult<()> {
    dataset::write_instances(&path, &to_core_vec(&instances)?).map_err(io_or_value_err)
}

#[pyfunction]
fn load_brainteaser(path: PathBuf, subtask: &str) -> PyResult<Vec<PyQAInstance>> {
    let instances =
        dataset::load_brainteaser(&path, parse_subtask(subtask)?).map_err(io_or_value_err)?;
    Ok(from_core_vec(&instances))
}

/// Load five-choice riddles (JSON Lines) and remap them to four choices.
#[pyfunction]
#[pyo3(signature = (path, shuffle_seed=None))]
fn load_riddlesense_remapped(path: PathBuf, shuffle_seed: Option<u64>) -> PyResult<Vec<PyQAInstance>> {
    let riddles = dataset::load_riddlesense(&path).map_err(io_or_value_err)?;
    let mut instances = riddles
        .iter()
        .map(dataset::remap_five_to_four)
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_or_value_err)?;
    if let Some(seed) = shuffle_seed {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for inst in &mut instances {
            dataset::shuffle_choices(inst, &mut rng);
        }
    }
    Ok(from_core_vec(&instances))
}

#[pyfunction]
fn load_humor(path: PathBuf) -> PyResult<Vec<PyQAInstance>> {
    let instances = dataset::load_humor(&path).map_err(io_or_value_err)?;
    Ok(from_core_vec(&instances))
}

#[pyfunction]
#[pyo3(signature = (instances, normalization="casefold_strip_punct", scope="question_only"))]
fn dedup_instances(
    instances: Vec<PyQAInstance>,
    normalization: &str,
    scope: &str,
) -> PyResult<(Vec<PyQAInstance>, Vec<PyQAInstance>)> {
    let policy = DedupPolicy {
        normalization: match normalization {
            "exact" => Normalization::Exact,
            "casefold_strip_punct" => Normalization::CasefoldStripPunct,
            other => return Err(value_err(format!("unknown normalization {other:?}"))),
        },
        scope: match scope {
            "question_only" => DedupScope::QuestionOnly,
            "question_plus_choices" => DedupScope::QuestionPlusChoices,
            other => return Err(value_err(format!("unknown scope {other:?}"))),
        },
    };
    let (kept, dropped) = dataset::dedup(to_core_vec(&instances)?, policy);
    Ok((from_core_vec(&kept), from_core_vec(&dropped)))
}

#[pyfunction]
fn mix_instances(sources: Vec<(Vec<PyQAInstance>, f64)>, seed: u64) -> PyResult<Vec<PyQAInstance>> {
    let pools = sources
        .iter()
        .map(|(instances, weight)| Ok((to_core_vec(instances)?, *weight)))
        .collect::<PyResult<Vec<_>>>()?;
    let borrowed: Vec<(&[dataset::QAInstance], f64)> =
        pools.iter().map(|(pool, weight)| (pool.as_slice(), *weight)).collect();
    let mixed = dataset::mix(&borrowed, seed).map_err(io_or_value_err)?;
    Ok(from_core_vec(&mixed))
}

#[pyfunction]
fn split_train_val(
    instances: Vec<PyQAInstance>,
    val_fraction: f64,
    seed: u64,
) -> PyResult<(Vec<PyQAInstance>, Vec<PyQAInstance>)> {
    let (train, val) = dataset::split_train_val(&to_core_vec(&instances)?, val_fraction, seed)
        .map_err(io_or_value_err)?;
    Ok((from_core_vec(&train), from_core_vec(&val)))
}

#[pyfunction]
fn copy_marker_dataset(count: usize, seed: u64) -> Vec<PyQAInstance> {
    from_core_vec(&dataset::copy_marker_dataset(count, seed))
}

/// Byte-level BPE tokenizer over a trained merge table.
#[pyclass(name = "Tokenizer")]
struct PyTokenizer {
    table: MergeTable,
}

#[pymethods]
impl PyTokenizer {
    #[staticmethod]
    fn train(corpus: Vec<String>, target_vocab: usize) -> PyResult<Self> {
        let table = tokenizer::train_bpe(&corpus, target_vocab).map_err(value_err)?;
        Ok(PyTokenizer { table })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let table = MergeTable::load(&path).map_err(value_err)?;
        Ok(PyTokenizer { table })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.table.save(&path).map_err(value_err)
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.table.vocab_size()
    }

    #[getter]
    fn merge_count(&self) -> usize {
        self.table.merges().len()
    }

    /// Returns (ids, truncated).
    #[pyo3(signature = (text, max_len=None))]
    fn encode(&self, text: &str, max_len: Option<usize>) -> (Vec<u32>, bool) {
        let seq = tokenizer::encode(&self.table, text, max_len.unwrap_or(usize::MAX));
        (seq.ids, seq.truncated)
    }

    fn decode(&self, ids: Vec<u32>) -> PyResult<String> {
        tokenizer::decode(&self.table, &TokenSeq::untruncated(ids)).map_err(value_err)
    }

    #[pyo3(signature = (question, choice, max_len=None))]
    fn encode_pair(&self, question: &str, choice: &str, max_len: Option<usize>) -> (Vec<u32>, bool) {
        let seq =
            tokenizer::encode_pair(&self.table, question, choice, max_len.unwrap_or(usize::MAX));
        (seq.ids, seq.truncated)
    }
}

fn parse_head(name: &str) -> PyResult<HeadKind> {
    match name {
        "mc" => Ok(HeadKind::Mc),
        "sc" => Ok(HeadKind::Sc),
        other => Err(value_err(format!("unknown head {other:?}"))),
    }
}

/// A compact transformer encoder plus one task head, ready to train or run.
#[pyclass(name = "Model")]
struct PyModel {
    checkpoint: Checkpoint,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (vocab_size, head="mc", layers=2, hidden_dim=64, heads=4, ffn_dim=128,
                        max_positions=128, pooling="first_token", max_len=64, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn init(
        vocab_size: usize,
        head: &str,
        layers: usize,
        hidden_dim: usize,
        heads: usize,
        ffn_dim: usize,
        max_positions: usize,
        pooling: &str,
        max_len: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let encoder = EncoderConfig {
            layers,
            hidden_dim,
            heads,
            ffn_dim,
            max_positions,
            vocab_size,
            pooling: match pooling {
                "first_token" => Pooling::FirstToken,
                "mean" => Pooling::Mean,
                other => return Err(value_err(format!("unknown pooling {other:?}"))),
            },
        };
        let params = model::init_params(&encoder, seed).map_err(value_err)?;
        Ok(PyModel {
            checkpoint: Checkpoint {
                encoder,
                head: parse_head(head)?,
                max_len,
                instruction_prefix: String::new(),
                params,
            },
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let checkpoint = Checkpoint::load(&path).map_err(value_err)?;
        Ok(PyModel { checkpoint })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.checkpoint.save(&path).map_err(value_err)
    }

    #[getter]
    fn head(&self) -> &'static str {
        match self.checkpoint.head {
            HeadKind::Mc => "mc",
            HeadKind::Sc => "sc",
        }
    }

    /// Train in place, keeping the best-epoch parameters. Returns
    /// (epoch_stats, best_epoch) where each stat is
    /// (train_loss, val_correct, val_total).
    #[pyo3(signature = (tokenizer, train, val, batch_size=16, learning_rate=1e-3, epochs=10,
                        seed=0, optimizer="adam_like", stop_at_val_accuracy=None))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        tokenizer: &PyTokenizer,
        train: Vec<PyQAInstance>,
        val: Vec<PyQAInstance>,
        batch_size: usize,
        learning_rate: f64,
        epochs: usize,
        seed: u64,
        optimizer: &str,
        stop_at_val_accuracy: Option<f64>,
    ) -> PyResult<(Vec<(f64, u64, u64)>, usize)> {
        let hp = Hyperparams {
            batch_size,
            learning_rate,
            epochs,
            seed,
            head: self.checkpoint.head,
            optimizer: match optimizer {
                "sgd" => Optimizer::Sgd,
                "adam_like" => Optimizer::AdamLike,
                other => return Err(value_err(format!("unknown optimizer {other:?}"))),
            },
            stop_at_val_accuracy,
        };
        let encode = |instances: &[PyQAInstance]| -> PyResult<Vec<model::EncodedInstance>> {
            trainer::encode_instances(
                &tokenizer.table,
                self.checkpoint.head,
                &to_core_vec(instances)?,
                self.checkpoint.max_len,
                &self.checkpoint.instruction_prefix,
            )
            .map_err(value_err)
        };
        let train_enc = encode(&train)?;
        let val_enc = encode(&val)?;
        let report = trainer::train(
            &self.checkpoint.encoder,
            &self.checkpoint.params,
            &train_enc,
            &val_enc,
            &hp,
        )
        .map_err(value_err)?;
        self.checkpoint.params = report.params.clone();
        let stats = report
            .epochs
            .iter()
            .map(|e| (e.train_loss, e.val_correct, e.val_total))
            .collect();
        Ok((stats, report.best_epoch))
    }

    /// Argmax predictions as (instance id, chosen index) pairs.
    fn predict(
        &self,
        tokenizer: &PyTokenizer,
        instances: Vec<PyQAInstance>,
    ) -> PyResult<Vec<(String, usize)>> {
        let encoded = trainer::encode_instances(
            &tokenizer.table,
            self.checkpoint.head,
            &to_core_vec(&instances)?,
            self.checkpoint.max_len,
            &self.checkpoint.instruction_prefix,
        )
        .map_err(value_err)?;
        encoded
            .iter()
            .map(|inst| {
                let chosen = model::predict_instance(
                    &self.checkpoint.params,
                    &self.checkpoint.encoder,
                    inst,
                    self.checkpoint.head,
                )
                .map_err(value_err)?;
                Ok((inst.id.clone(), chosen))
            })
            .collect()
    }
}

fn to_predictions(preds: &[(String, usize)]) -> Vec<evaluator::Prediction> {
    preds
        .iter()
        .map(|(id, chosen)| evaluator::Prediction { id: id.clone(), chosen_index: *chosen })
        .collect()
}

/// Exact instance accuracy as a (correct, total) pair.
#[pyfunction]
#[pyo3(signature = (preds, gold, variant=None))]
fn instance_accuracy(
    preds: Vec<(String, usize)>,
    gold: Vec<PyQAInstance>,
    variant: Option<&str>,
) -> PyResult<(u64, u64)> {
    let filter = variant.map(parse_variant).transpose()?;
    let acc = evaluator::instance_accuracy(&to_predictions(&preds), &to_core_vec(&gold)?, filter)
        .map_err(value_err)?;
    Ok((acc.correct, acc.total))
}

/// Exact group accuracy over the given member variants.
#[pyfunction]
fn group_accuracy(
    preds: Vec<(String, usize)>,
    gold: Vec<PyQAInstance>,
    members: Vec<String>,
) -> PyResult<(u64, u64)> {
    let member_set = members
        .iter()
        .map(|m| parse_variant(m))
        .collect::<PyResult<std::collections::BTreeSet<Variant>>>()?;
    let score =
        evaluator::group_accuracy(&to_predictions(&preds), &to_core_vec(&gold)?, &member_set)
            .map_err(value_err)?;
    Ok((score.accuracy.correct, score.accuracy.total))
}

/// Render the six-column results table for the gold instances' subtasks.
#[pyfunction]
#[pyo3(signature = (preds, gold, include_reference=true))]
fn render_results(
    preds: Vec<(String, usize)>,
    gold: Vec<PyQAInstance>,
    include_reference: bool,
) -> PyResult<String> {
    let gold = to_core_vec(&gold)?;
    let preds = to_predictions(&preds);
    let mut by_subtask: std::collections::BTreeMap<Subtask, Vec<dataset::QAInstance>> =
        Default::default();
    for inst in gold {
        by_subtask.entry(inst.subtask).or_default().push(inst);
    }
    let id_to_subtask: std::collections::HashMap<String, Subtask> = by_subtask
        .iter()
        .flat_map(|(s, v)| v.iter().map(|i| (i.id.clone(), *s)))
        .collect();
    let mut preds_by: std::collections::BTreeMap<Subtask, Vec<evaluator::Prediction>> =
        Default::default();
    for pred in preds {
        match id_to_subtask.get(&pred.id) {
            Some(subtask) => preds_by.entry(*subtask).or_default().push(pred),
            None => return Err(value_err(format!("prediction {} matches no instance", pred.id))),
        }
    }
    let empty = Vec::new();
    let sections: Vec<(Subtask, &[evaluator::Prediction], &[dataset::QAInstance])> = by_subtask
        .iter()
        .map(|(subtask, instances)| {
            (*subtask, preds_by.get(subtask).unwrap_or(&empty).as_slice(), instances.as_slice())
        })
        .collect();
    let table = evaluator::build_results_table(&sections).map_err(value_err)?;
    Ok(table.render(include_reference))
}

/// Consecutive deltas over (label, decimal-string accuracy) rows; returns
/// (label, (acc_num, acc_den), (delta_num, delta_den) or None).
#[pyfunction]
#[allow(clippy::type_complexity)]
fn ablation_deltas(
    rows: Vec<(String, String)>,
) -> PyResult<Vec<(String, (i64, i64), Option<(i64, i64)>)>> {
    let parsed = rows
        .iter()
        .map(|(label, acc)| Ok((label.clone(), evaluator::parse_decimal(acc).map_err(value_err)?)))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(evaluator::ablation_deltas(&parsed)
        .into_iter()
        .map(|row| {
            (
                row.label,
                (*row.accuracy.numer(), *row.accuracy.denom()),
                row.delta.map(|d| (*d.numer(), *d.denom())),
            )
        })
        .collect())
}

/// Stabilized `-log softmax(logits)[gold]`.
#[pyfunction]
fn cross_entropy(logits: Vec<f64>, gold: usize) -> PyResult<f64> {
    model::cross_entropy(&logits, gold).map_err(value_err)
}

/// Run one generation round against a file-backed mock transport.
#[pyfunction]
fn generate_humor_batch_mock(
    mock_path: PathBuf,
    prompt: &str,
    accumulated: Vec<PyQAInstance>,
) -> PyResult<Vec<PyQAInstance>> {
    let prompt = match prompt {
        "p1" => dataset::PromptId::P1,
        "p2" => dataset::PromptId::P2,
        "p3" => dataset::PromptId::P3,
        other => return Err(value_err(format!("unknown prompt {other:?}"))),
    };
    let client =
        dataset::FileMockClient::from_path(Path::new(&mock_path)).map_err(io_or_value_err)?;
    let novel = dataset::generate_humor_batch(&client, prompt, &to_core_vec(&accumulated)?)
        .map_err(io_or_value_err)?;
    Ok(from_core_vec(&novel))
}

#[pymodule]
fn lateralqa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQAInstance>()?;
    m.add_class::<PyTokenizer>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(load_instances, m)?)?;
    m.add_function(wrap_pyfunction!(save_instances, m)?)?;
    m.add_function(wrap_pyfunction!(load_brainteaser, m)?)?;
    m.add_function(wrap_pyfunction!(load_riddlesense_remapped, m)?)?;
    m.add_function(wrap_pyfunction!(load_humor, m)?)?;
    m.add_function(wrap_pyfunction!(dedup_instances, m)?)?;
    m.add_function(wrap_pyfunction!(mix_instances, m)?)?;
    m.add_function(wrap_pyfunction!(split_train_val, m)?)?;
    m.add_function(wrap_pyfunction!(copy_marker_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(instance_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(group_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(render_results, m)?)?;
    m.add_function(wrap_pyfunction!(ablation_deltas, m)?)?;
    m.add_function(wrap_pyfunction!(cross_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(generate_humor_batch_mock, m)?)?;
    Ok(())
}
