//! Reverse-mode tape over [`Mat`] values. Forward results are computed
//! eagerly as nodes are appended; `backward` walks the tape once and
//! accumulates exact gradients. Node parents always precede their children,
//! so a single reverse sweep suffices.

use super::mat::Mat;
use super::{ModelError, Parameters};
use std::borrow::Cow;
use std::collections::HashMap;

pub(crate) type NodeId = usize;

#[derive(Debug)]
enum Op {
    Param,
    Constant,
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    MulRow(NodeId, NodeId),
    Scale(NodeId, f64),
    SoftmaxRows(NodeId),
    LayerNormRows { src: NodeId, eps: f64 },
    Gelu(NodeId),
    GatherRows { src: NodeId, rows: Vec<usize> },
    SliceCols { src: NodeId, start: usize, len: usize },
    ConcatCols(Vec<NodeId>),
    SelectRow { src: NodeId, row: usize },
    MeanRows { src: NodeId, keep: Vec<bool> },
    CrossEntropy { logits: NodeId, gold: usize },
}

struct Node<'p> {
    op: Op,
    value: Cow<'p, Mat>,
}

pub(crate) struct Graph<'p> {
    params: &'p Parameters,
    nodes: Vec<Node<'p>>,
    param_ids: HashMap<String, NodeId>,
}

const GELU_COEFF: f64 = 0.044_715;

fn gelu_scalar(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + GELU_COEFF * x * x * x)).tanh())
}

fn gelu_derivative(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let u = c * (x + GELU_COEFF * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * GELU_COEFF * x * x)
}

fn softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p Parameters) -> Self {
        Graph { params, nodes: Vec::new(), param_ids: HashMap::new() }
    }

    pub fn value(&self, id: NodeId) -> &Mat {
        &self.nodes[id].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        let value = self.value(id);
        debug_assert_eq!(value.shape(), (1, 1));
        value.at(0, 0)
    }

    fn push(&mut self, op: Op, value: Mat) -> NodeId {
        self.nodes.push(Node { op, value: Cow::Owned(value) });
        self.nodes.len() - 1
    }

    pub fn param(&mut self, name: &str) -> Result<NodeId, ModelError> {
        if let Some(&id) = self.param_ids.get(name) {
            return Ok(id);
        }
        let mat = self.params.expect(name)?;
        self.nodes.push(Node { op: Op::Param, value: Cow::Borrowed(mat) });
        let id = self.nodes.len() - 1;
        self.param_ids.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn constant(&mut self, value: Mat) -> NodeId {
        self.push(Op::Constant, value)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), value)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).transpose();
        self.push(Op::Transpose(a), value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut value = self.value(a).clone();
        value.add_assign(self.value(b));
        self.push(Op::Add(a, b), value)
    }

    /// Broadcast-add a 1×n row vector over every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let r = self.value(row);
        debug_assert_eq!(r.rows(), 1);
        debug_assert_eq!(r.cols(), self.value(a).cols());
        let base = self.value(a);
        let mut value = base.clone();
        for i in 0..value.rows() {
            for (v, b) in value.row_mut(i).iter_mut().zip(self.value(row).row(0)) {
                *v += b;
            }
        }
        self.push(Op::AddRow(a, row), value)
    }

    /// Broadcast-multiply a 1×n row vector into every row of `a`.
    pub fn mul_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let r = self.value(row);
        debug_assert_eq!(r.rows(), 1);
        debug_assert_eq!(r.cols(), self.value(a).cols());
        let mut value = self.value(a).clone();
        for i in 0..value.rows() {
            for (v, b) in value.row_mut(i).iter_mut().zip(self.value(row).row(0)) {
                *v *= b;
            }
        }
        self.push(Op::MulRow(a, row), value)
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let mut value = self.value(a).clone();
        value.scale_assign(factor);
        self.push(Op::Scale(a, factor), value)
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let src = self.value(a);
        let mut value = Mat::zeros(src.rows(), src.cols());
        for i in 0..src.rows() {
            value.row_mut(i).copy_from_slice(&softmax_row(src.row(i)));
        }
        self.push(Op::SoftmaxRows(a), value)
    }

    /// Per-row normalization to zero mean and unit variance (no affine).
    pub fn layer_norm_rows(&mut self, src: NodeId, eps: f64) -> NodeId {
        let x = self.value(src);
        let n = x.cols() as f64;
        let mut value = Mat::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            let row = x.row(i);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let inv = 1.0 / (var + eps).sqrt();
            for (out, &v) in value.row_mut(i).iter_mut().zip(row) {
                *out = (v - mean) * inv;
            }
        }
        self.push(Op::LayerNormRows { src, eps }, value)
    }

    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let mut value = self.value(a).clone();
        for v in value.data_mut() {
            *v = gelu_scalar(*v);
        }
        self.push(Op::Gelu(a), value)
    }

    /// Row lookup: output row i is `src` row `rows[i]`.
    pub fn gather_rows(&mut self, src: NodeId, rows: Vec<usize>) -> NodeId {
        let table = self.value(src);
        let mut value = Mat::zeros(rows.len(), table.cols());
        for (i, &r) in rows.iter().enumerate() {
            value.row_mut(i).copy_from_slice(table.row(r));
        }
        self.push(Op::GatherRows { src, rows }, value)
    }

    pub fn slice_cols(&mut self, src: NodeId, start: usize, len: usize) -> NodeId {
        let x = self.value(src);
        let value = Mat::from_fn(x.rows(), len, |r, c| x.at(r, start + c));
        self.push(Op::SliceCols { src, start, len }, value)
    }

    pub fn concat_cols(&mut self, parts: Vec<NodeId>) -> NodeId {
        debug_assert!(!parts.is_empty());
        let rows = self.value(parts[0]).rows();
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut value = Mat::zeros(rows, total);
        let mut offset = 0;
        for &part in &parts {
            let x = self.value(part);
            debug_assert_eq!(x.rows(), rows);
            for r in 0..rows {
                value.row_mut(r)[offset..offset + x.cols()].copy_from_slice(x.row(r));
            }
            offset += x.cols();
        }
        self.push(Op::ConcatCols(parts), value)
    }

    pub fn select_row(&mut self, src: NodeId, row: usize) -> NodeId {
        let x = self.value(src);
        let value = Mat::from_vec(1, x.cols(), x.row(row).to_vec());
        self.push(Op::SelectRow { src, row }, value)
    }

    /// Mean over the rows where `keep` is true.
    pub fn mean_rows(&mut self, src: NodeId, keep: Vec<bool>) -> NodeId {
        let x = self.value(src);
        debug_assert_eq!(keep.len(), x.rows());
        let count = keep.iter().filter(|&&k| k).count().max(1) as f64;
        let mut value = Mat::zeros(1, x.cols());
        for (r, &k) in keep.iter().enumerate() {
            if k {
                for (out, &v) in value.row_mut(0).iter_mut().zip(x.row(r)) {
                    *out += v;
                }
            }
        }
        value.scale_assign(1.0 / count);
        self.push(Op::MeanRows { src, keep }, value)
    }

    /// `-log softmax(logits)[gold]` for a 1×K logits row, computed with
    /// max subtraction.
    pub fn cross_entropy(&mut self, logits: NodeId, gold: usize) -> NodeId {
        let row = self.value(logits);
        debug_assert_eq!(row.rows(), 1);
        debug_assert!(gold < row.cols());
        let loss = stable_cross_entropy(row.row(0), gold);
        self.push(Op::CrossEntropy { logits, gold }, Mat::from_vec(1, 1, vec![loss]))
    }

    /// Gradient of the scalar at `root` with respect to every node.
    pub fn backward(&self, root: NodeId) -> Vec<Option<Mat>> {
        debug_assert_eq!(self.value(root).shape(), (1, 1));
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root] = Some(Mat::from_vec(1, 1, vec![1.0]));

        for id in (0..=root).rev() {
            let (before, rest) = grads.split_at_mut(id);
            let Some(g) = rest[0].as_ref() else { continue };
            match &self.nodes[id].op {
                Op::Param | Op::Constant => {}
                Op::MatMul(a, b) => {
                    let da = g.matmul_transb(self.value(*b));
                    let db = self.value(*a).matmul_transa(g);
                    accumulate(&mut before[*a], da);
                    accumulate(&mut before[*b], db);
                }
                Op::Transpose(a) => {
                    accumulate(&mut before[*a], g.transpose());
                }
                Op::Add(a, b) => {
                    accumulate(&mut before[*a], g.clone());
                    accumulate(&mut before[*b], g.clone());
                }
                Op::AddRow(a, row) => {
                    accumulate(&mut before[*a], g.clone());
                    let mut dr = Mat::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, &v) in dr.row_mut(0).iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    accumulate(&mut before[*row], dr);
                }
                Op::MulRow(a, row) => {
                    let x = self.value(*a);
                    let r = self.value(*row);
                    let mut da = Mat::zeros(g.rows(), g.cols());
                    let mut dr = Mat::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for j in 0..g.cols() {
                            da.set(i, j, g.at(i, j) * r.at(0, j));
                            dr.set(0, j, dr.at(0, j) + g.at(i, j) * x.at(i, j));
                        }
                    }
                    accumulate(&mut before[*a], da);
                    accumulate(&mut before[*row], dr);
                }
                Op::Scale(a, factor) => {
                    let mut da = g.clone();
                    da.scale_assign(*factor);
                    accumulate(&mut before[*a], da);
                }
                Op::SoftmaxRows(a) => {
                    let y = self.value(id);
                    let mut da = Mat::zeros(g.rows(), g.cols());
                    for i in 0..g.rows() {
                        let dot: f64 = g.row(i).iter().zip(y.row(i)).map(|(gv, yv)| gv * yv).sum();
                        for j in 0..g.cols() {
                            da.set(i, j, y.at(i, j) * (g.at(i, j) - dot));
                        }
                    }
                    accumulate(&mut before[*a], da);
                }
                Op::LayerNormRows { src, eps } => {
                    let x = self.value(*src);
                    let y = self.value(id);
                    let n = x.cols() as f64;
                    let mut da = Mat::zeros(x.rows(), x.cols());
                    for i in 0..x.rows() {
                        let row = x.row(i);
                        let mean = row.iter().sum::<f64>() / n;
                        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                        let inv = 1.0 / (var + eps).sqrt();
                        let g_mean: f64 = g.row(i).iter().sum::<f64>() / n;
                        let gy_mean: f64 =
                            g.row(i).iter().zip(y.row(i)).map(|(gv, yv)| gv * yv).sum::<f64>() / n;
                        for j in 0..x.cols() {
                            da.set(i, j, inv * (g.at(i, j) - g_mean - y.at(i, j) * gy_mean));
                        }
                    }
                    accumulate(&mut before[*src], da);
                }
                Op::Gelu(a) => {
                    let x = self.value(*a);
                    let mut da = Mat::zeros(g.rows(), g.cols());
                    for (o, (&gv, &xv)) in
                        da.data_mut().iter_mut().zip(g.data().iter().zip(x.data()))
                    {
                        *o = gv * gelu_derivative(xv);
                    }
                    accumulate(&mut before[*a], da);
                }
                Op::GatherRows { src, rows } => {
                    let table = self.value(*src);
                    let slot = before[*src]
                        .get_or_insert_with(|| Mat::zeros(table.rows(), table.cols()));
                    for (i, &r) in rows.iter().enumerate() {
                        for (o, &v) in slot.row_mut(r).iter_mut().zip(g.row(i)) {
                            *o += v;
                        }
                    }
                }
                Op::SliceCols { src, start, len } => {
                    let x = self.value(*src);
                    let slot =
                        before[*src].get_or_insert_with(|| Mat::zeros(x.rows(), x.cols()));
                    for r in 0..g.rows() {
                        for j in 0..*len {
                            slot.set(r, start + j, slot.at(r, start + j) + g.at(r, j));
                        }
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &part in parts {
                        let cols = self.value(part).cols();
                        let dp = Mat::from_fn(g.rows(), cols, |r, c| g.at(r, offset + c));
                        accumulate(&mut before[part], dp);
                        offset += cols;
                    }
                }
                Op::SelectRow { src, row } => {
                    let x = self.value(*src);
                    let slot =
                        before[*src].get_or_insert_with(|| Mat::zeros(x.rows(), x.cols()));
                    for (o, &v) in slot.row_mut(*row).iter_mut().zip(g.row(0)) {
                        *o += v;
                    }
                }
                Op::MeanRows { src, keep } => {
                    let x = self.value(*src);
                    let count = keep.iter().filter(|&&k| k).count().max(1) as f64;
                    let slot =
                        before[*src].get_or_insert_with(|| Mat::zeros(x.rows(), x.cols()));
                    for (r, &k) in keep.iter().enumerate() {
                        if k {
                            for (o, &v) in slot.row_mut(r).iter_mut().zip(g.row(0)) {
                                *o += v / count;
                            }
                        }
                    }
                }
                Op::CrossEntropy { logits, gold } => {
                    let upstream = g.at(0, 0);
                    let row = self.value(*logits);
                    let probs = softmax_row(row.row(0));
                    let mut dl = Mat::zeros(1, row.cols());
                    for (j, &p) in probs.iter().enumerate() {
                        let indicator = if j == *gold { 1.0 } else { 0.0 };
                        dl.set(0, j, upstream * (p - indicator));
                    }
                    accumulate(&mut before[*logits], dl);
                }
            }
        }
        grads
    }

    /// Collect the gradients of every parameter this graph touched.
    pub fn param_grads(&self, grads: &[Option<Mat>]) -> Vec<(String, Mat)> {
        let mut out = Vec::with_capacity(self.param_ids.len());
        for (name, &id) in &self.param_ids {
            let shape = self.value(id).shape();
            let grad = grads[id].clone().unwrap_or_else(|| Mat::zeros(shape.0, shape.1));
            out.push((name.clone(), grad));
        }
        out
    }
}

fn accumulate(slot: &mut Option<Mat>, delta: Mat) {
    match slot {
        Some(existing) => existing.add_assign(&delta),
        None => *slot = Some(delta),
    }
}

/// Max-subtraction stabilized `-log softmax(logits)[gold]`.
pub(crate) fn stable_cross_entropy(logits: &[f64], gold: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    (max + log_sum) - logits[gold]
}
