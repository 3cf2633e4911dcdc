//! Compact pre-norm transformer encoder with exact-gradient training support
//! and the two task heads under comparison: a shared scalar scorer applied
//! per (question, choice) pairing, and a fixed 4-way classifier over one
//! packed sequence.

mod checkpoint;
mod encoder;
mod graph;
mod mat;

pub use checkpoint::Checkpoint;
pub use mat::Mat;

use crate::tokenizer::TokenSeq;
use graph::Graph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid encoder config: {0}")]
    ConfigInvalid(String),
    #[error("empty input sequence")]
    EmptySequence,
    #[error("sequence of {len} tokens exceeds max_positions {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("pad mask covers {mask} positions for {ids} tokens")]
    PadMaskMismatch { ids: usize, mask: usize },
    #[error("token id {id} is outside the {vocab}-entry vocabulary")]
    TokenOutOfRange { id: u32, vocab: usize },
    #[error("multiple-choice scoring needs at least 2 choices, got {count}")]
    TooFewChoices { count: usize },
    #[error("gold index {gold} out of range for {count} classes")]
    GoldOutOfRange { gold: usize, count: usize },
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("checkpoint format error: {0}")]
    CheckpointFormat(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Pooling {
    FirstToken,
    Mean,
}

/// Which task head scores an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
#[clap(rename_all = "lowercase")]
pub enum HeadKind {
    /// Shared scalar scorer over each (question, choice) pairing.
    Mc,
    /// Fixed 4-way classifier over one packed sequence.
    Sc,
}

/// Number of classes the sequence-classification head projects to.
pub const SC_CLASSES: usize = 4;

/// Shape of the encoder stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub max_positions: usize,
    pub vocab_size: usize,
    pub pooling: Pooling,
}

impl EncoderConfig {
    /// Desk-scale default: large enough to learn the synthetic tasks, small
    /// enough for finite-difference checks.
    pub fn desk(vocab_size: usize) -> Self {
        EncoderConfig {
            layers: 2,
            hidden_dim: 64,
            heads: 4,
            ffn_dim: 128,
            max_positions: 128,
            vocab_size,
            pooling: Pooling::FirstToken,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("layers", self.layers),
            ("hidden_dim", self.hidden_dim),
            ("heads", self.heads),
            ("ffn_dim", self.ffn_dim),
            ("max_positions", self.max_positions),
            ("vocab_size", self.vocab_size),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(ModelError::ConfigInvalid(format!("{name} must be positive")));
            }
        }
        if self.hidden_dim % self.heads != 0 {
            return Err(ModelError::ConfigInvalid(format!(
                "hidden_dim {} not divisible by {} heads",
                self.hidden_dim, self.heads
            )));
        }
        Ok(())
    }
}

/// Named weight tensors. Immutable during inference and safely shared
/// across threads; training owns a single mutable copy.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Parameters {
    tensors: BTreeMap<String, Mat>,
}

impl Parameters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, mat: Mat) {
        self.tensors.insert(name.to_string(), mat);
    }

    pub fn get(&self, name: &str) -> Option<&Mat> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Mat> {
        self.tensors.get_mut(name)
    }

    pub(crate) fn expect(&self, name: &str) -> Result<&Mat, ModelError> {
        self.tensors
            .get(name)
            .ok_or_else(|| ModelError::UnknownParameter(name.to_string()))
    }

    /// Name-sorted iteration; the order checkpoints serialize in.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mat)> {
        self.tensors.iter().map(|(n, m)| (n.as_str(), m))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Mat)> {
        self.tensors.iter_mut().map(|(n, m)| (n.as_str(), m))
    }

    pub fn tensor_count(&self) -> usize {
        self.tensors.len()
    }

    pub fn value_count(&self) -> usize {
        self.tensors.values().map(|m| m.rows() * m.cols()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.values().all(Mat::is_finite)
    }
}

/// Exact analytic gradients of a mean batch loss, shaped like [`Parameters`].
#[derive(Debug, Clone)]
pub struct GradientReport {
    pub loss: f64,
    pub grads: BTreeMap<String, Mat>,
}

impl GradientReport {
    pub fn is_finite(&self) -> bool {
        self.loss.is_finite() && self.grads.values().all(Mat::is_finite)
    }
}

/// One instance ready for a head: K pair sequences for `Mc`, a single
/// packed sequence for `Sc`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedInstance {
    pub id: String,
    pub gold: usize,
    pub seqs: Vec<TokenSeq>,
}

fn normal_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Mat {
    let dist = Normal::new(0.0, std).expect("positive std");
    Mat::from_fn(rows, cols, |_, _| dist.sample(rng))
}

/// Seeded initialization: linear weights drawn at scale 1/sqrt(fan_in),
/// layer-norm gains 1 and offsets 0, biases 0. Both heads are always
/// initialized so a checkpoint can serve either.
pub fn init_params(config: &EncoderConfig, seed: u64) -> Result<Parameters, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = config.hidden_dim;
    let ffn = config.ffn_dim;
    let d_std = 1.0 / (d as f64).sqrt();

    let mut params = Parameters::new();
    params.insert("embed.token", normal_mat(&mut rng, config.vocab_size, d, d_std));
    params.insert("embed.pos", normal_mat(&mut rng, config.max_positions, d, d_std));
    for layer in 0..config.layers {
        let p = |suffix: &str| format!("layer{layer}.{suffix}");
        params.insert(&p("ln1.g"), Mat::from_fn(1, d, |_, _| 1.0));
        params.insert(&p("ln1.b"), Mat::zeros(1, d));
        for proj in ["q", "k", "v", "o"] {
            params.insert(&p(&format!("attn.{proj}.w")), normal_mat(&mut rng, d, d, d_std));
            if proj != "k" {
                params.insert(&p(&format!("attn.{proj}.b")), Mat::zeros(1, d));
            }
        }
        params.insert(&p("ln2.g"), Mat::from_fn(1, d, |_, _| 1.0));
        params.insert(&p("ln2.b"), Mat::zeros(1, d));
        params.insert(&p("ffn.in.w"), normal_mat(&mut rng, d, ffn, d_std));
        params.insert(&p("ffn.in.b"), Mat::zeros(1, ffn));
        params.insert(&p("ffn.out.w"), normal_mat(&mut rng, ffn, d, 1.0 / (ffn as f64).sqrt()));
        params.insert(&p("ffn.out.b"), Mat::zeros(1, d));
    }
    params.insert("ln_final.g", Mat::from_fn(1, d, |_, _| 1.0));
    params.insert("head.mc.w", normal_mat(&mut rng, d, 1, d_std));
    params.insert("head.sc.w", normal_mat(&mut rng, d, SC_CLASSES, d_std));
    params.insert("head.sc.b", Mat::zeros(1, SC_CLASSES));
    Ok(params)
}

/// Pooled representation of one sequence.
pub fn forward_encode(
    params: &Parameters,
    config: &EncoderConfig,
    tokens: &TokenSeq,
    pad_mask: &[bool],
) -> Result<Vec<f64>, ModelError> {
    config.validate()?;
    let mut graph = Graph::new(params);
    let pooled = encoder::encode_to_pooled(&mut graph, config, &tokens.ids, pad_mask, None)?;
    Ok(graph.value(pooled).row(0).to_vec())
}

/// As [`forward_encode`], additionally returning every attention matrix
/// (layer-major, then head) for inspection.
pub fn forward_encode_traced(
    params: &Parameters,
    config: &EncoderConfig,
    tokens: &TokenSeq,
    pad_mask: &[bool],
) -> Result<(Vec<f64>, Vec<Mat>), ModelError> {
    config.validate()?;
    let mut graph = Graph::new(params);
    let mut attention = Vec::new();
    let pooled = encoder::encode_to_pooled(
        &mut graph,
        config,
        &tokens.ids,
        pad_mask,
        Some(&mut attention),
    )?;
    Ok((graph.value(pooled).row(0).to_vec(), attention))
}

/// Score K (question, choice) pairings with shared parameters; one logit
/// per choice. Softmax is applied only inside the loss.
pub fn mc_logits(
    params: &Parameters,
    config: &EncoderConfig,
    pairs: &[TokenSeq],
) -> Result<Vec<f64>, ModelError> {
    config.validate()?;
    let mut graph = Graph::new(params);
    let logits = encoder::mc_logits_node(&mut graph, config, pairs)?;
    Ok(graph.value(logits).row(0).to_vec())
}

/// Four positional-class logits from one packed sequence.
pub fn sc_logits(
    params: &Parameters,
    config: &EncoderConfig,
    packed: &TokenSeq,
) -> Result<Vec<f64>, ModelError> {
    config.validate()?;
    let mut graph = Graph::new(params);
    let logits = encoder::sc_logits_node(&mut graph, config, packed)?;
    Ok(graph.value(logits).row(0).to_vec())
}

/// `-log softmax(logits)[gold]`, stabilized by max subtraction.
pub fn cross_entropy(logits: &[f64], gold: usize) -> Result<f64, ModelError> {
    if gold >= logits.len() {
        return Err(ModelError::GoldOutOfRange { gold, count: logits.len() });
    }
    Ok(graph::stable_cross_entropy(logits, gold))
}

fn instance_logits_node(
    graph: &mut Graph,
    config: &EncoderConfig,
    instance: &EncodedInstance,
    head: HeadKind,
) -> Result<graph::NodeId, ModelError> {
    match head {
        HeadKind::Mc => encoder::mc_logits_node(graph, config, &instance.seqs),
        HeadKind::Sc => {
            debug_assert_eq!(instance.seqs.len(), 1, "sc instances hold one packed seq");
            encoder::sc_logits_node(graph, config, &instance.seqs[0])
        }
    }
}

fn instance_loss_and_grads(
    params: &Parameters,
    config: &EncoderConfig,
    instance: &EncodedInstance,
    head: HeadKind,
) -> Result<(f64, Vec<(String, Mat)>), ModelError> {
    let mut graph = Graph::new(params);
    let logits = instance_logits_node(&mut graph, config, instance, head)?;
    let count = graph.value(logits).cols();
    if instance.gold >= count {
        return Err(ModelError::GoldOutOfRange { gold: instance.gold, count });
    }
    let loss = graph.cross_entropy(logits, instance.gold);
    let grads = graph.backward(loss);
    Ok((graph.scalar(loss), graph.param_grads(&grads)))
}

/// Exact analytic gradients of the mean batch loss with respect to every
/// parameter. Instances are processed in parallel; accumulation happens in
/// batch order, so the result is bitwise deterministic.
pub fn backward(
    params: &Parameters,
    config: &EncoderConfig,
    batch: &[EncodedInstance],
    head: HeadKind,
) -> Result<GradientReport, ModelError> {
    config.validate()?;
    if batch.is_empty() {
        return Err(ModelError::ConfigInvalid("empty batch".to_string()));
    }
    let per_instance: Vec<(f64, Vec<(String, Mat)>)> = batch
        .par_iter()
        .map(|instance| instance_loss_and_grads(params, config, instance, head))
        .collect::<Result<_, _>>()?;

    let scale = 1.0 / batch.len() as f64;
    let mut grads: BTreeMap<String, Mat> = params
        .iter()
        .map(|(name, mat)| (name.to_string(), Mat::zeros(mat.rows(), mat.cols())))
        .collect();
    let mut loss = 0.0;
    for (instance_loss, instance_grads) in per_instance {
        loss += instance_loss * scale;
        for (name, grad) in instance_grads {
            let mut scaled = grad;
            scaled.scale_assign(scale);
            grads.get_mut(&name).expect("grad name known").add_assign(&scaled);
        }
    }
    Ok(GradientReport { loss, grads })
}

/// Mean loss of a batch without gradients.
pub fn batch_loss(
    params: &Parameters,
    config: &EncoderConfig,
    batch: &[EncodedInstance],
    head: HeadKind,
) -> Result<f64, ModelError> {
    let losses: Vec<f64> = batch
        .par_iter()
        .map(|instance| {
            let logits = instance_logits(params, config, instance, head)?;
            cross_entropy(&logits, instance.gold)
        })
        .collect::<Result<_, _>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

fn instance_logits(
    params: &Parameters,
    config: &EncoderConfig,
    instance: &EncodedInstance,
    head: HeadKind,
) -> Result<Vec<f64>, ModelError> {
    match head {
        HeadKind::Mc => mc_logits(params, config, &instance.seqs),
        HeadKind::Sc => sc_logits(params, config, &instance.seqs[0]),
    }
}

/// Argmax prediction with lowest-index tie-break.
pub fn predict_instance(
    params: &Parameters,
    config: &EncoderConfig,
    instance: &EncodedInstance,
    head: HeadKind,
) -> Result<usize, ModelError> {
    let logits = instance_logits(params, config, instance, head)?;
    Ok(argmax(&logits))
}

/// First index of the maximum value.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
