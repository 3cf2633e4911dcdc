//! Mini-batch gradient training of either head plus random hyperparameter
//! search with validation-accuracy model selection. Every run is a pure
//! function of (initial parameters, data, hyperparameters).

use crate::dataset::QAInstance;
use crate::model::{
    self, EncodedInstance, EncoderConfig, HeadKind, ModelError, Parameters, SC_CLASSES,
};
use crate::tokenizer::{encode_pair, encode_packed, MergeTable};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{0} set is empty")]
    EmptyDataset(&'static str),
    #[error("instance {id}: {message}")]
    BadInstance { id: String, message: String },
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("search space is empty")]
    EmptySearchSpace,
    #[error("search needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    AdamLike,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub head: HeadKind,
    pub optimizer: Optimizer,
    /// Stop after the first epoch whose validation accuracy reaches this
    /// threshold; `None` always runs the full epoch budget.
    #[serde(default)]
    pub stop_at_val_accuracy: Option<f64>,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::BadInstance {
                id: "-".into(),
                message: "batch_size must be at least 1".into(),
            });
        }
        if self.epochs == 0 {
            return Err(TrainError::BadInstance {
                id: "-".into(),
                message: "epochs must be at least 1".into(),
            });
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::BadInstance {
                id: "-".into(),
                message: format!("learning rate {} is not usable", self.learning_rate),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_correct: u64,
    pub val_total: u64,
}

impl EpochStats {
    pub fn val_accuracy(&self) -> f64 {
        self.val_correct as f64 / self.val_total.max(1) as f64
    }
}

/// Everything a finished run reports, plus the best-epoch parameters.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub params: Parameters,
    pub wall_clock_secs: f64,
}

impl TrainReport {
    pub fn best(&self) -> &EpochStats {
        &self.epochs[self.best_epoch]
    }

    pub fn best_val_accuracy(&self) -> f64 {
        self.best().val_accuracy()
    }

    /// Deterministic report body: excludes wall clock (and parameters) so
    /// replayed runs serialize byte-identically.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "epochs": self.epochs,
            "best_epoch": self.best_epoch,
            "best_val_accuracy": {
                "num": self.best().val_correct,
                "den": self.best().val_total,
            },
        })
    }
}

/// Encode instances for a head: K pair sequences per instance for `Mc`, one
/// packed sequence for `Sc` (which requires exactly four choices).
pub fn encode_instances(
    table: &MergeTable,
    head: HeadKind,
    instances: &[QAInstance],
    max_len: usize,
    instruction_prefix: &str,
) -> Result<Vec<EncodedInstance>, TrainError> {
    instances
        .iter()
        .map(|inst| {
            let question = if instruction_prefix.is_empty() {
                inst.question.clone()
            } else {
                format!("{instruction_prefix}{}", inst.question)
            };
            let seqs = match head {
                HeadKind::Mc => {
                    if inst.choices.len() < 2 {
                        return Err(TrainError::BadInstance {
                            id: inst.id.clone(),
                            message: format!(
                                "multiple-choice head needs >= 2 choices, has {}",
                                inst.choices.len()
                            ),
                        });
                    }
                    inst.choices
                        .iter()
                        .map(|choice| encode_pair(table, &question, choice, max_len))
                        .collect()
                }
                HeadKind::Sc => {
                    if inst.choices.len() != SC_CLASSES {
                        return Err(TrainError::BadInstance {
                            id: inst.id.clone(),
                            message: format!(
                                "sequence-classification head needs exactly {SC_CLASSES} choices, has {}",
                                inst.choices.len()
                            ),
                        });
                    }
                    vec![encode_packed(table, &question, &inst.choices, max_len)]
                }
            };
            Ok(EncodedInstance { id: inst.id.clone(), gold: inst.gold_index, seqs })
        })
        .collect()
}

struct AdamState {
    first: BTreeMap<String, model::Mat>,
    second: BTreeMap<String, model::Mat>,
    step: u64,
}

impl AdamState {
    fn new(params: &Parameters) -> Self {
        let zeros = |_: &str, m: &model::Mat| model::Mat::zeros(m.rows(), m.cols());
        AdamState {
            first: params.iter().map(|(n, m)| (n.to_string(), zeros(n, m))).collect(),
            second: params.iter().map(|(n, m)| (n.to_string(), zeros(n, m))).collect(),
            step: 0,
        }
    }
}

fn apply_update(
    params: &mut Parameters,
    grads: &BTreeMap<String, model::Mat>,
    hp: &Hyperparams,
    adam: &mut AdamState,
) {
    match hp.optimizer {
        Optimizer::Sgd => {
            for (name, tensor) in params.iter_mut() {
                let grad = &grads[name];
                for (p, g) in tensor.data_mut().iter_mut().zip(grad.data()) {
                    *p -= hp.learning_rate * g;
                }
            }
        }
        Optimizer::AdamLike => {
            adam.step += 1;
            let bias1 = 1.0 - ADAM_BETA1.powi(adam.step as i32);
            let bias2 = 1.0 - ADAM_BETA2.powi(adam.step as i32);
            for (name, tensor) in params.iter_mut() {
                let grad = &grads[name];
                let m = adam.first.get_mut(name).expect("adam state");
                let v = adam.second.get_mut(name).expect("adam state");
                for (((p, g), m), v) in tensor
                    .data_mut()
                    .iter_mut()
                    .zip(grad.data())
                    .zip(m.data_mut())
                    .zip(v.data_mut())
                {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = *m / bias1;
                    let v_hat = *v / bias2;
                    *p -= hp.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Count of correct argmax predictions over a validation set.
fn validation_correct(
    params: &Parameters,
    config: &EncoderConfig,
    val: &[EncodedInstance],
    head: HeadKind,
) -> Result<u64, ModelError> {
    let hits: Vec<bool> = val
        .par_iter()
        .map(|inst| Ok(model::predict_instance(params, config, inst, head)? == inst.gold))
        .collect::<Result<_, ModelError>>()?;
    Ok(hits.into_iter().filter(|&h| h).count() as u64)
}

/// Train with per-epoch seeded shuffling, mean-loss gradient steps, and
/// best-epoch checkpointing (validation accuracy, earliest epoch on ties).
pub fn train(
    config: &EncoderConfig,
    init: &Parameters,
    train_set: &[EncodedInstance],
    val_set: &[EncodedInstance],
    hp: &Hyperparams,
) -> Result<TrainReport, TrainError> {
    hp.validate()?;
    config.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyDataset("train"));
    }
    if val_set.is_empty() {
        return Err(TrainError::EmptyDataset("validation"));
    }

    let started = Instant::now();
    let mut params = init.clone();
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);

    let mut epochs = Vec::with_capacity(hp.epochs);
    let mut best_epoch = 0;
    let mut best_correct = 0u64;
    let mut best_params = params.clone();

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (step, chunk) in order.chunks(hp.batch_size).enumerate() {
            let batch: Vec<EncodedInstance> =
                chunk.iter().map(|&i| train_set[i].clone()).collect();
            let report = model::backward(&params, config, &batch, hp.head)?;
            if !report.loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, step });
            }
            loss_sum += report.loss * batch.len() as f64;
            apply_update(&mut params, &report.grads, hp, &mut adam);
        }
        let val_correct = validation_correct(&params, config, val_set, hp.head)?;
        let stats = EpochStats {
            train_loss: loss_sum / train_set.len() as f64,
            val_correct,
            val_total: val_set.len() as u64,
        };
        epochs.push(stats);
        if epoch == 0 || val_correct > best_correct {
            best_epoch = epoch;
            best_correct = val_correct;
            best_params = params.clone();
        }
        if let Some(threshold) = hp.stop_at_val_accuracy {
            if stats.val_accuracy() >= threshold {
                break;
            }
        }
    }

    Ok(TrainReport {
        epochs,
        best_epoch,
        params: best_params,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// Candidate batch sizes and learning rates for random search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub batch_sizes: Vec<usize>,
    pub learning_rates: Vec<f64>,
}

impl SearchSpace {
    pub fn len(&self) -> usize {
        self.batch_sizes.len() * self.learning_rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub index: usize,
    pub hp: Hyperparams,
    pub report: TrainReport,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best_index: usize,
    pub trials: Vec<TrialResult>,
}

impl SearchOutcome {
    pub fn best(&self) -> &TrialResult {
        &self.trials[self.best_index]
    }
}

/// Uniform sampling with replacement over the (batch size, learning rate)
/// cross-product. Trial t runs with seed `base_seed + t`; the winner is the
/// trial whose delivered model has the highest validation accuracy, earliest
/// trial on ties. Trials run in parallel but are merged in trial order.
pub fn random_search(
    config: &EncoderConfig,
    init: &Parameters,
    train_set: &[EncodedInstance],
    val_set: &[EncodedInstance],
    space: &SearchSpace,
    trials: usize,
    base_seed: u64,
    template: &Hyperparams,
) -> Result<SearchOutcome, TrainError> {
    if space.is_empty() {
        return Err(TrainError::EmptySearchSpace);
    }
    if trials == 0 {
        return Err(TrainError::NoTrials);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    let configs: Vec<Hyperparams> = (0..trials)
        .map(|trial| {
            let pick = rng.random_range(0..space.len());
            Hyperparams {
                batch_size: space.batch_sizes[pick / space.learning_rates.len()],
                learning_rate: space.learning_rates[pick % space.learning_rates.len()],
                seed: base_seed.wrapping_add(trial as u64),
                ..template.clone()
            }
        })
        .collect();

    let results: Vec<TrialResult> = configs
        .into_par_iter()
        .enumerate()
        .map(|(index, hp)| {
            let report = train(config, init, train_set, val_set, &hp)?;
            Ok(TrialResult { index, hp, report })
        })
        .collect::<Result<_, TrainError>>()?;

    let mut best_index = 0;
    for trial in &results {
        let best = results[best_index].report.best();
        let this = trial.report.best();
        // Exact fraction comparison; strictly-greater keeps the earliest.
        if this.val_correct * best.val_total > best.val_correct * this.val_total {
            best_index = trial.index;
        }
    }
    Ok(SearchOutcome { best_index, trials: results })
}
