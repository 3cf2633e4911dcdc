//! Builds the pre-norm transformer encoder and the two task heads on a
//! [`Graph`] tape.

use super::graph::{Graph, NodeId};
use super::mat::Mat;
use super::{EncoderConfig, ModelError, Pooling};
use crate::tokenizer::TokenSeq;

pub(crate) const LAYER_NORM_EPS: f64 = 1e-5;
/// Additive mask value for pad keys. Large and negative but finite, so an
/// all-masked row degrades to a uniform softmax instead of NaN.
const MASK_VALUE: f64 = -1e30;

fn ln(graph: &mut Graph, x: NodeId, prefix: &str) -> Result<NodeId, ModelError> {
    let gain = graph.param(&format!("{prefix}.g"))?;
    let bias = graph.param(&format!("{prefix}.b"))?;
    let normed = graph.layer_norm_rows(x, LAYER_NORM_EPS);
    let scaled = graph.mul_row(normed, gain);
    Ok(graph.add_row(scaled, bias))
}

/// The final norm keeps only a gain: its bias would shift every pooled
/// vector by the same constant, which the head biases already express.
fn ln_gain_only(graph: &mut Graph, x: NodeId, prefix: &str) -> Result<NodeId, ModelError> {
    let gain = graph.param(&format!("{prefix}.g"))?;
    let normed = graph.layer_norm_rows(x, LAYER_NORM_EPS);
    Ok(graph.mul_row(normed, gain))
}

fn linear(graph: &mut Graph, x: NodeId, prefix: &str) -> Result<NodeId, ModelError> {
    let weight = graph.param(&format!("{prefix}.w"))?;
    let bias = graph.param(&format!("{prefix}.b"))?;
    let projected = graph.matmul(x, weight);
    Ok(graph.add_row(projected, bias))
}

fn linear_no_bias(graph: &mut Graph, x: NodeId, prefix: &str) -> Result<NodeId, ModelError> {
    let weight = graph.param(&format!("{prefix}.w"))?;
    Ok(graph.matmul(x, weight))
}

fn attention_block(
    graph: &mut Graph,
    config: &EncoderConfig,
    hidden: NodeId,
    mask: NodeId,
    layer: usize,
    trace: &mut Option<&mut Vec<Mat>>,
) -> Result<NodeId, ModelError> {
    let head_dim = config.hidden_dim / config.heads;
    let normed = ln(graph, hidden, &format!("layer{layer}.ln1"))?;
    let q = linear(graph, normed, &format!("layer{layer}.attn.q"))?;
    // No key bias: it shifts every score in a row equally, which softmax
    // cancels, leaving a parameter with an identically zero gradient.
    let k = linear_no_bias(graph, normed, &format!("layer{layer}.attn.k"))?;
    let v = linear(graph, normed, &format!("layer{layer}.attn.v"))?;

    let mut head_outputs = Vec::with_capacity(config.heads);
    for head in 0..config.heads {
        let start = head * head_dim;
        let qh = graph.slice_cols(q, start, head_dim);
        let kh = graph.slice_cols(k, start, head_dim);
        let vh = graph.slice_cols(v, start, head_dim);
        let kt = graph.transpose(kh);
        let scores = graph.matmul(qh, kt);
        let scaled = graph.scale(scores, 1.0 / (head_dim as f64).sqrt());
        let masked = graph.add(scaled, mask);
        let probs = graph.softmax_rows(masked);
        if let Some(sink) = trace.as_deref_mut() {
            sink.push(graph.value(probs).clone());
        }
        head_outputs.push(graph.matmul(probs, vh));
    }
    let merged = graph.concat_cols(head_outputs);
    let projected = linear(graph, merged, &format!("layer{layer}.attn.o"))?;
    Ok(graph.add(hidden, projected))
}

fn feed_forward_block(
    graph: &mut Graph,
    hidden: NodeId,
    layer: usize,
) -> Result<NodeId, ModelError> {
    let normed = ln(graph, hidden, &format!("layer{layer}.ln2"))?;
    let up = linear(graph, normed, &format!("layer{layer}.ffn.in"))?;
    let act = graph.gelu(up);
    let down = linear(graph, act, &format!("layer{layer}.ffn.out"))?;
    Ok(graph.add(hidden, down))
}

/// Encode one sequence to its pooled representation node (1×hidden).
/// `pad_mask[i]` marks position i as padding: masked out of attention keys
/// and excluded from mean pooling.
pub(crate) fn encode_to_pooled(
    graph: &mut Graph,
    config: &EncoderConfig,
    ids: &[u32],
    pad_mask: &[bool],
    mut trace: Option<&mut Vec<Mat>>,
) -> Result<NodeId, ModelError> {
    let len = ids.len();
    if len == 0 {
        return Err(ModelError::EmptySequence);
    }
    if len > config.max_positions {
        return Err(ModelError::SequenceTooLong { len, max: config.max_positions });
    }
    if pad_mask.len() != len {
        return Err(ModelError::PadMaskMismatch { ids: len, mask: pad_mask.len() });
    }
    if let Some(&bad) = ids.iter().find(|&&id| id as usize >= config.vocab_size) {
        return Err(ModelError::TokenOutOfRange { id: bad, vocab: config.vocab_size });
    }
    if config.pooling == Pooling::FirstToken && pad_mask[0] {
        return Err(ModelError::EmptySequence);
    }

    let token_table = graph.param("embed.token")?;
    let token_emb = graph.gather_rows(token_table, ids.iter().map(|&i| i as usize).collect());
    let pos_table = graph.param("embed.pos")?;
    let pos_emb = graph.gather_rows(pos_table, (0..len).collect());
    let mut hidden = graph.add(token_emb, pos_emb);

    let mask = graph.constant(Mat::from_fn(len, len, |_, key| {
        if pad_mask[key] {
            MASK_VALUE
        } else {
            0.0
        }
    }));

    for layer in 0..config.layers {
        hidden = attention_block(graph, config, hidden, mask, layer, &mut trace)?;
        hidden = feed_forward_block(graph, hidden, layer)?;
    }
    let final_norm = ln_gain_only(graph, hidden, "ln_final")?;

    Ok(match config.pooling {
        Pooling::FirstToken => graph.select_row(final_norm, 0),
        Pooling::Mean => graph.mean_rows(final_norm, pad_mask.iter().map(|&p| !p).collect()),
    })
}

/// Score each (question, choice) pairing with the shared scalar scorer;
/// returns the 1×K logits node. Exactly equivariant under choice
/// permutation because each pairing is encoded independently.
pub(crate) fn mc_logits_node(
    graph: &mut Graph,
    config: &EncoderConfig,
    pairs: &[TokenSeq],
) -> Result<NodeId, ModelError> {
    if pairs.len() < 2 {
        return Err(ModelError::TooFewChoices { count: pairs.len() });
    }
    let mut logits = Vec::with_capacity(pairs.len());
    for seq in pairs {
        let no_pad = vec![false; seq.len()];
        let pooled = encode_to_pooled(graph, config, &seq.ids, &no_pad, None)?;
        // No scorer bias: a constant added to all K logits changes neither
        // the loss (shift invariance) nor the argmax.
        let weight = graph.param("head.mc.w")?;
        logits.push(graph.matmul(pooled, weight));
    }
    Ok(graph.concat_cols(logits))
}

/// One forward pass over the packed sequence through the fixed 4-way head;
/// class identity is positional.
pub(crate) fn sc_logits_node(
    graph: &mut Graph,
    config: &EncoderConfig,
    packed: &TokenSeq,
) -> Result<NodeId, ModelError> {
    let no_pad = vec![false; packed.len()];
    let pooled = encode_to_pooled(graph, config, &packed.ids, &no_pad, None)?;
    linear(graph, pooled, "head.sc")
}
