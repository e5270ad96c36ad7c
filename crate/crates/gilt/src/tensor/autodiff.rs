//! Reverse-mode automatic differentiation over a flat tape of tensor ops.
//!
//! Values are computed eagerly as nodes are appended, so a [`Graph`] can
//! also serve as a value-only forward engine (inference simply never
//! calls [`Graph::backward`]). One graph is single-writer; concurrent
//! workers each build their own graph over a shared read-only
//! [`ParameterSet`] and the caller folds leaf gradients back serially.
//!
//! Shape errors are programmer errors and panic; data-dependent errors
//! (bucket indices out of embedding range) are validated by callers
//! before graph construction.

use std::sync::Arc;

use super::{ParameterSet, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
enum Value {
    Owned(Tensor),
    Shared(Arc<Tensor>),
}

impl Value {
    fn tensor(&self) -> &Tensor {
        match self {
            Value::Owned(t) => t,
            Value::Shared(t) => t,
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    /// Input with no parents; `param` names the ParameterSet entry it
    /// mirrors so gradients can be exported.
    Leaf { param: Option<String> },
    /// Constant: like Leaf but never receives gradient.
    Const,
    Matmul(NodeId, NodeId),
    Transpose(NodeId),
    Add(NodeId, NodeId),
    /// matrix + row vector, broadcast over rows
    AddRowBroadcast(NodeId, NodeId),
    /// tensor + scalar node, broadcast everywhere
    AddScalar(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Sigmoid(NodeId),
    Gelu(NodeId),
    /// softmax over each row
    Softmax(NodeId),
    /// log-softmax over each row
    LogSoftmax(NodeId),
    Log(NodeId),
    LayerNorm {
        x: NodeId,
        gain: NodeId,
        bias: NodeId,
        eps: f64,
    },
    /// rows of `table` selected by `indices`
    Embed { table: NodeId, indices: Vec<usize> },
    /// vectors (1×c each) stacked into an n×c matrix
    StackRows(Vec<NodeId>),
    /// same-height matrices side by side
    ConcatCols(Vec<NodeId>),
    Row(NodeId, usize),
    SliceRows(NodeId, usize, usize),
    SliceCols(NodeId, usize, usize),
    SumAxis0(NodeId),
    SumAxis1(NodeId),
    Sum(NodeId),
    Mean(NodeId),
    Dot(NodeId, NodeId),
    /// selected (row, col) entries as a 1×n vector
    Gather(NodeId, Vec<(usize, usize)>),
    /// elementwise binary cross-entropy against a constant target;
    /// probabilities clamped away from {0,1} by `BCE_EPS`
    BceElem(NodeId, Tensor),
    /// sum of same-shape tensors
    AddN(Vec<NodeId>),
}

const BCE_EPS: f64 = 1e-7;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

struct Node {
    value: Value,
    op: Op,
}

/// Flat computation tape.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        self.nodes[id.0].value.tensor()
    }

    // ---- inputs ----

    pub fn leaf(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf { param: None })
    }

    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Const)
    }

    pub fn scalar(&mut self, v: f64) -> NodeId {
        self.constant(Tensor::scalar(v))
    }

    /// Leaf backed by a named parameter (shared storage, no copy).
    pub fn param(&mut self, params: &ParameterSet, name: &str) -> NodeId {
        let p = params.get(name);
        self.nodes.push(Node {
            value: Value::Shared(Arc::clone(&p.value)),
            op: Op::Leaf {
                param: Some(name.to_string()),
            },
        });
        NodeId(self.nodes.len() - 1)
    }

    // ---- ops ----

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::Matmul(a, b))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "add shape mismatch");
        let mut v = ta.clone();
        v.add_assign_scaled(tb, 1.0);
        self.push(v, Op::Add(a, b))
    }

    pub fn add_row_broadcast(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let (ta, tr) = (self.value(a), self.value(row));
        assert_eq!(tr.rows(), 1, "broadcast operand must be a row vector");
        assert_eq!(ta.cols(), tr.cols(), "broadcast width mismatch");
        let mut v = ta.clone();
        for r in 0..v.rows() {
            for c in 0..v.cols() {
                let x = v.at(r, c) + tr.at(0, c);
                v.set(r, c, x);
            }
        }
        self.push(v, Op::AddRowBroadcast(a, row))
    }

    pub fn add_scalar(&mut self, a: NodeId, s: NodeId) -> NodeId {
        let sv = self.value(s).item();
        let mut v = self.value(a).clone();
        v.data_mut().iter_mut().for_each(|x| *x += sv);
        self.push(v, Op::AddScalar(a, s))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let nb = self.scale(b, -1.0);
        self.add(a, nb)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "mul shape mismatch");
        let data = ta
            .data()
            .iter()
            .zip(tb.data().iter())
            .map(|(x, y)| x * y)
            .collect();
        let v = Tensor::from_vec(ta.rows(), ta.cols(), data);
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let mut v = self.value(a).clone();
        v.data_mut().iter_mut().for_each(|x| *x *= s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let data = t.data().iter().map(|&x| sigmoid_scalar(x)).collect();
        let v = Tensor::from_vec(t.rows(), t.cols(), data);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let data = t.data().iter().map(|&x| gelu_scalar(x)).collect();
        let v = Tensor::from_vec(t.rows(), t.cols(), data);
        self.push(v, Op::Gelu(a))
    }

    /// Softmax over each row (max-subtracted for stability).
    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let mut v = t.clone();
        for r in 0..v.rows() {
            softmax_row_in_place(&mut v.data_mut()[r * t.cols()..(r + 1) * t.cols()]);
        }
        self.push(v, Op::Softmax(a))
    }

    /// Softmax along the chosen axis of a matrix: 1 = within rows,
    /// 0 = within columns.
    pub fn softmax_axis(&mut self, a: NodeId, axis: usize) -> NodeId {
        match axis {
            1 => self.softmax(a),
            0 => {
                let t = self.transpose(a);
                let s = self.softmax(t);
                self.transpose(s)
            }
            _ => panic!("softmax axis must be 0 or 1"),
        }
    }

    pub fn log_softmax(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let cols = t.cols();
        let mut v = t.clone();
        for r in 0..v.rows() {
            let row = &mut v.data_mut()[r * cols..(r + 1) * cols];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = row.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
            row.iter_mut().for_each(|x| *x -= lse);
        }
        self.push(v, Op::LogSoftmax(a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let data = t.data().iter().map(|x| x.ln()).collect();
        let v = Tensor::from_vec(t.rows(), t.cols(), data);
        self.push(v, Op::Log(a))
    }

    /// Row-wise layer normalization with learnable gain/bias vectors.
    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, bias: NodeId, eps: f64) -> NodeId {
        let t = self.value(x);
        let (g, b) = (self.value(gain), self.value(bias));
        assert_eq!(g.cols(), t.cols(), "layer_norm gain width");
        assert_eq!(b.cols(), t.cols(), "layer_norm bias width");
        let cols = t.cols();
        let mut v = t.clone();
        for r in 0..v.rows() {
            let row = &mut v.data_mut()[r * cols..(r + 1) * cols];
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / cols as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for (c, x) in row.iter_mut().enumerate() {
                *x = (*x - mean) * inv * g.at(0, c) + b.at(0, c);
            }
        }
        self.push(v, Op::LayerNorm { x, gain, bias, eps })
    }

    /// Rows of `table` selected by `indices`. Out-of-range indices are a
    /// hard error: clamping belongs to the feature bucketing stage, and a
    /// raw index escaping it means the caps are misconfigured.
    pub fn embed(&mut self, table: NodeId, indices: &[usize]) -> NodeId {
        let t = self.value(table);
        let cols = t.cols();
        let mut v = Tensor::zeros(indices.len(), cols);
        for (r, &idx) in indices.iter().enumerate() {
            assert!(
                idx < t.rows(),
                "embedding index {idx} out of range for table with {} rows",
                t.rows()
            );
            v.data_mut()[r * cols..(r + 1) * cols].copy_from_slice(t.row_slice(idx));
        }
        self.push(
            v,
            Op::Embed {
                table,
                indices: indices.to_vec(),
            },
        )
    }

    pub fn stack_rows(&mut self, rows: &[NodeId]) -> NodeId {
        assert!(!rows.is_empty(), "stack_rows of nothing");
        let cols = self.value(rows[0]).cols();
        let mut v = Tensor::zeros(rows.len(), cols);
        for (r, &id) in rows.iter().enumerate() {
            let t = self.value(id);
            assert_eq!(t.rows(), 1, "stack_rows expects row vectors");
            assert_eq!(t.cols(), cols, "stack_rows width mismatch");
            v.data_mut()[r * cols..(r + 1) * cols].copy_from_slice(t.row_slice(0));
        }
        self.push(v, Op::StackRows(rows.to_vec()))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let rows = self.value(parts[0]).rows();
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut v = Tensor::zeros(rows, total);
        let mut off = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.rows(), rows, "concat_cols height mismatch");
            for r in 0..rows {
                for c in 0..t.cols() {
                    v.set(r, off + c, t.at(r, c));
                }
            }
            off += t.cols();
        }
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn row(&mut self, a: NodeId, r: usize) -> NodeId {
        let t = self.value(a);
        assert!(r < t.rows(), "row index out of range");
        let v = Tensor::row_vector(t.row_slice(r).to_vec());
        self.push(v, Op::Row(a, r))
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let t = self.value(a);
        assert!(start + len <= t.rows(), "slice_rows out of range");
        let cols = t.cols();
        let v = Tensor::from_vec(
            len,
            cols,
            t.data()[start * cols..(start + len) * cols].to_vec(),
        );
        self.push(v, Op::SliceRows(a, start, len))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let t = self.value(a);
        assert!(start + len <= t.cols(), "slice_cols out of range");
        let mut v = Tensor::zeros(t.rows(), len);
        for r in 0..t.rows() {
            for c in 0..len {
                v.set(r, c, t.at(r, start + c));
            }
        }
        self.push(v, Op::SliceCols(a, start, len))
    }

    /// Column sums: (r×c) → (1×c).
    pub fn sum_axis0(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let mut v = Tensor::zeros(1, t.cols());
        for r in 0..t.rows() {
            for c in 0..t.cols() {
                let x = v.at(0, c) + t.at(r, c);
                v.set(0, c, x);
            }
        }
        self.push(v, Op::SumAxis0(a))
    }

    /// Row sums: (r×c) → (r×1).
    pub fn sum_axis1(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let mut v = Tensor::zeros(t.rows(), 1);
        for r in 0..t.rows() {
            v.set(r, 0, t.row_slice(r).iter().sum());
        }
        self.push(v, Op::SumAxis1(a))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Tensor::scalar(self.value(a).data().iter().sum());
        self.push(v, Op::Sum(a))
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let v = Tensor::scalar(t.data().iter().sum::<f64>() / t.len() as f64);
        self.push(v, Op::Mean(a))
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "dot shape mismatch");
        let v = Tensor::scalar(
            ta.data()
                .iter()
                .zip(tb.data().iter())
                .map(|(x, y)| x * y)
                .sum(),
        );
        self.push(v, Op::Dot(a, b))
    }

    /// Selected entries as a 1×n row.
    pub fn gather(&mut self, a: NodeId, idx: &[(usize, usize)]) -> NodeId {
        let t = self.value(a);
        let data = idx
            .iter()
            .map(|&(r, c)| {
                assert!(r < t.rows() && c < t.cols(), "gather index out of range");
                t.at(r, c)
            })
            .collect();
        let v = Tensor::from_vec(1, idx.len(), data);
        self.push(v, Op::Gather(a, idx.to_vec()))
    }

    /// Elementwise −[t·ln p + (1−t)·ln(1−p)] with p clamped to
    /// [1e-7, 1−1e-7]. Reduce with [`Graph::sum`] or [`Graph::mean`].
    pub fn bce_elem(&mut self, p: NodeId, target: Tensor) -> NodeId {
        let tp = self.value(p);
        assert_eq!(tp.shape(), target.shape(), "bce shape mismatch");
        let data = tp
            .data()
            .iter()
            .zip(target.data().iter())
            .map(|(&p, &t)| {
                let pc = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
                -(t * pc.ln() + (1.0 - t) * (1.0 - pc).ln())
            })
            .collect();
        let v = Tensor::from_vec(tp.rows(), tp.cols(), data);
        self.push(v, Op::BceElem(p, target))
    }

    /// Sum of same-shape tensors.
    pub fn add_n(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "add_n of nothing");
        let mut v = self.value(parts[0]).clone();
        for &p in &parts[1..] {
            let t = self.value(p);
            assert_eq!(t.shape(), v.shape(), "add_n shape mismatch");
            v.add_assign_scaled(t, 1.0);
        }
        self.push(v, Op::AddN(parts.to_vec()))
    }

    // ---- backward ----

    /// Reverse pass from a scalar output. Returns per-node gradients;
    /// fetch them with [`Graph::grad`] or export parameter gradients via
    /// [`Graph::param_grads`].
    pub fn backward(&self, output: NodeId) -> Gradients {
        assert_eq!(
            self.value(output).len(),
            1,
            "backward needs a scalar output"
        );
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(Tensor::scalar(1.0));
        for i in (0..=output.0).rev() {
            let Some(out_grad) = grads[i].take() else {
                continue;
            };
            self.backward_node(i, &out_grad, &mut grads);
            grads[i] = Some(out_grad);
        }
        Gradients { grads }
    }

    fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, add: Tensor) {
        match &mut grads[id.0] {
            Some(g) => g.add_assign_scaled(&add, 1.0),
            slot @ None => *slot = Some(add),
        }
    }

    fn backward_node(&self, i: usize, og: &Tensor, grads: &mut [Option<Tensor>]) {
        match &self.nodes[i].op {
            Op::Leaf { .. } | Op::Const => {}
            Op::Matmul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                Self::accumulate(grads, *a, og.matmul(&tb.transpose()));
                Self::accumulate(grads, *b, ta.transpose().matmul(og));
            }
            Op::Transpose(a) => {
                Self::accumulate(grads, *a, og.transpose());
            }
            Op::Add(a, b) => {
                Self::accumulate(grads, *a, og.clone());
                Self::accumulate(grads, *b, og.clone());
            }
            Op::AddRowBroadcast(a, row) => {
                Self::accumulate(grads, *a, og.clone());
                let mut rg = Tensor::zeros(1, og.cols());
                for r in 0..og.rows() {
                    for c in 0..og.cols() {
                        let x = rg.at(0, c) + og.at(r, c);
                        rg.set(0, c, x);
                    }
                }
                Self::accumulate(grads, *row, rg);
            }
            Op::AddScalar(a, s) => {
                Self::accumulate(grads, *a, og.clone());
                Self::accumulate(grads, *s, Tensor::scalar(og.data().iter().sum()));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let ga = Tensor::from_vec(
                    og.rows(),
                    og.cols(),
                    og.data()
                        .iter()
                        .zip(tb.data().iter())
                        .map(|(g, y)| g * y)
                        .collect(),
                );
                let gb = Tensor::from_vec(
                    og.rows(),
                    og.cols(),
                    og.data()
                        .iter()
                        .zip(ta.data().iter())
                        .map(|(g, x)| g * x)
                        .collect(),
                );
                Self::accumulate(grads, *a, ga);
                Self::accumulate(grads, *b, gb);
            }
            Op::Scale(a, s) => {
                let mut g = og.clone();
                g.data_mut().iter_mut().for_each(|x| *x *= s);
                Self::accumulate(grads, *a, g);
            }
            Op::Sigmoid(a) => {
                let y = self.value(NodeId(i));
                let g = Tensor::from_vec(
                    og.rows(),
                    og.cols(),
                    og.data()
                        .iter()
                        .zip(y.data().iter())
                        .map(|(g, y)| g * y * (1.0 - y))
                        .collect(),
                );
                Self::accumulate(grads, *a, g);
            }
            Op::Gelu(a) => {
                let x = self.value(*a);
                let g = Tensor::from_vec(
                    og.rows(),
                    og.cols(),
                    og.data()
                        .iter()
                        .zip(x.data().iter())
                        .map(|(g, &x)| g * gelu_grad_scalar(x))
                        .collect(),
                );
                Self::accumulate(grads, *a, g);
            }
            Op::Softmax(a) => {
                let y = self.value(NodeId(i));
                let cols = y.cols();
                let mut g = Tensor::zeros(y.rows(), cols);
                for r in 0..y.rows() {
                    let yr = y.row_slice(r);
                    let gr = og.row_slice(r);
                    let dot: f64 = yr.iter().zip(gr.iter()).map(|(y, g)| y * g).sum();
                    for c in 0..cols {
                        g.set(r, c, yr[c] * (gr[c] - dot));
                    }
                }
                Self::accumulate(grads, *a, g);
            }
            Op::LogSoftmax(a) => {
                let y = self.value(NodeId(i));
                let cols = y.cols();
                let mut g = Tensor::zeros(y.rows(), cols);
                for r in 0..y.rows() {
                    let yr = y.row_slice(r);
                    let gr = og.row_slice(r);
                    let total: f64 = gr.iter().sum();
                    for c in 0..cols {
                        g.set(r, c, gr[c] - yr[c].exp() * total);
                    }
                }
                Self::accumulate(grads, *a, g);
            }
            Op::Log(a) => {
                let x = self.value(*a);
                let g = Tensor::from_vec(
                    og.rows(),
                    og.cols(),
                    og.data()
                        .iter()
                        .zip(x.data().iter())
                        .map(|(g, x)| g / x)
                        .collect(),
                );
                Self::accumulate(grads, *a, g);
            }
            Op::LayerNorm { x, gain, bias, eps } => {
                let tx = self.value(*x);
                let tg = self.value(*gain);
                let cols = tx.cols();
                let n = cols as f64;
                let mut gx = Tensor::zeros(tx.rows(), cols);
                let mut gg = Tensor::zeros(1, cols);
                let mut gb = Tensor::zeros(1, cols);
                for r in 0..tx.rows() {
                    let xr = tx.row_slice(r);
                    let gr = og.row_slice(r);
                    let mean = xr.iter().sum::<f64>() / n;
                    let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    let inv = 1.0 / (var + eps).sqrt();
                    // xhat and the two reduced terms
                    let mut dxhat = vec![0.0; cols];
                    let mut sum_dxhat = 0.0;
                    let mut sum_dxhat_xhat = 0.0;
                    for c in 0..cols {
                        let xhat = (xr[c] - mean) * inv;
                        let d = gr[c] * tg.at(0, c);
                        dxhat[c] = d;
                        sum_dxhat += d;
                        sum_dxhat_xhat += d * xhat;
                        gg.set(0, c, gg.at(0, c) + gr[c] * xhat);
                        gb.set(0, c, gb.at(0, c) + gr[c]);
                    }
                    for c in 0..cols {
                        let xhat = (xr[c] - mean) * inv;
                        gx.set(
                            r,
                            c,
                            inv * (dxhat[c] - sum_dxhat / n - xhat * sum_dxhat_xhat / n),
                        );
                    }
                }
                Self::accumulate(grads, *x, gx);
                Self::accumulate(grads, *gain, gg);
                Self::accumulate(grads, *bias, gb);
            }
            Op::Embed { table, indices } => {
                let t = self.value(*table);
                let cols = t.cols();
                let mut g = Tensor::zeros(t.rows(), cols);
                for (r, &idx) in indices.iter().enumerate() {
                    for c in 0..cols {
                        g.set(idx, c, g.at(idx, c) + og.at(r, c));
                    }
                }
                Self::accumulate(grads, *table, g);
            }
            Op::StackRows(rows) => {
                for (r, &id) in rows.iter().enumerate() {
                    Self::accumulate(grads, id, Tensor::row_vector(og.row_slice(r).to_vec()));
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    let mut g = Tensor::zeros(og.rows(), w);
                    for r in 0..og.rows() {
                        for c in 0..w {
                            g.set(r, c, og.at(r, off + c));
                        }
                    }
                    Self::accumulate(grads, p, g);
                    off += w;
                }
            }
            Op::Row(a, r) => {
                let t = self.value(*a);
                let mut g = Tensor::zeros(t.rows(), t.cols());
                for c in 0..t.cols() {
                    g.set(*r, c, og.at(0, c));
                }
                Self::accumulate(grads, *a, g);
            }
            Op::SliceRows(a, start, len) => {
                let t = self.value(*a);
                let mut g = Tensor::zeros(t.rows(), t.cols());
                for r in 0..*len {
                    for c in 0..t.cols() {
                        g.set(start + r, c, og.at(r, c));
                    }
                }
                Self::accumulate(grads, *a, g);
            }
            Op::SliceCols(a, start, len) => {
                let t = self.value(*a);
                let mut g = Tensor::zeros(t.rows(), t.cols());
                for r in 0..t.rows() {
                    for c in 0..*len {
                        g.set(r, start + c, og.at(r, c));
                    }
                }
                Self::accumulate(grads, *a, g);
            }
            Op::SumAxis0(a) => {
                let t = self.value(*a);
                let mut g = Tensor::zeros(t.rows(), t.cols());
                for r in 0..t.rows() {
                    for c in 0..t.cols() {
                        g.set(r, c, og.at(0, c));
                    }
                }
                Self::accumulate(grads, *a, g);
            }
            Op::SumAxis1(a) => {
                let t = self.value(*a);
                let mut g = Tensor::zeros(t.rows(), t.cols());
                for r in 0..t.rows() {
                    for c in 0..t.cols() {
                        g.set(r, c, og.at(r, 0));
                    }
                }
                Self::accumulate(grads, *a, g);
            }
            Op::Sum(a) => {
                let t = self.value(*a);
                let g = Tensor::full(t.rows(), t.cols(), og.item());
                Self::accumulate(grads, *a, g);
            }
            Op::Mean(a) => {
                let t = self.value(*a);
                let g = Tensor::full(t.rows(), t.cols(), og.item() / t.len() as f64);
                Self::accumulate(grads, *a, g);
            }
            Op::Dot(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let s = og.item();
                let mut ga = tb.clone();
                ga.data_mut().iter_mut().for_each(|x| *x *= s);
                let mut gb = ta.clone();
                gb.data_mut().iter_mut().for_each(|x| *x *= s);
                Self::accumulate(grads, *a, ga);
                Self::accumulate(grads, *b, gb);
            }
            Op::Gather(a, idx) => {
                let t = self.value(*a);
                let mut g = Tensor::zeros(t.rows(), t.cols());
                for (k, &(r, c)) in idx.iter().enumerate() {
                    g.set(r, c, g.at(r, c) + og.at(0, k));
                }
                Self::accumulate(grads, *a, g);
            }
            Op::BceElem(p, target) => {
                let tp = self.value(*p);
                let g = Tensor::from_vec(
                    tp.rows(),
                    tp.cols(),
                    tp.data()
                        .iter()
                        .zip(target.data().iter())
                        .zip(og.data().iter())
                        .map(|((&p, &t), &g)| {
                            if p <= BCE_EPS || p >= 1.0 - BCE_EPS {
                                0.0 // clamped region is flat
                            } else {
                                g * ((1.0 - t) / (1.0 - p) - t / p)
                            }
                        })
                        .collect(),
                );
                Self::accumulate(grads, *p, g);
            }
            Op::AddN(parts) => {
                for &p in parts {
                    Self::accumulate(grads, p, og.clone());
                }
            }
        }
    }
}

/// Result of a backward pass.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads[id.0].as_ref()
    }

    /// Gradients of parameter-backed leaves, keyed by parameter name, in
    /// graph order. A parameter used through several leaves appears once
    /// per leaf; fold them all.
    pub fn param_grads<'g>(
        &'g self,
        graph: &'g Graph,
    ) -> impl Iterator<Item = (&'g str, &'g Tensor)> + 'g {
        graph.nodes.iter().enumerate().filter_map(move |(i, n)| {
            if let Op::Leaf { param: Some(name) } = &n.op {
                self.grads[i].as_ref().map(|g| (name.as_str(), g))
            } else {
                None
            }
        })
    }
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn gelu_scalar(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

#[inline]
fn gelu_grad_scalar(x: f64) -> f64 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

fn softmax_row_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

/// log(Σ exp(xs)) computed stably; -inf for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_vec(2, 3, vec![0.1, -2.0, 5.0, 1.0, 1.0, 1.0]));
        let y = g.softmax(x);
        for r in 0..2 {
            let s: f64 = g.value(y).row_slice(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // all-equal logits → 1/n each
        assert!((g.value(y).at(1, 0) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_shift_invariant() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::row_vector(vec![0.3, -1.2, 2.0]));
        let y = g.softmax(x);
        let xs = g.leaf(Tensor::row_vector(vec![100.3, 98.8, 102.0]));
        let ys = g.softmax(xs);
        for c in 0..3 {
            assert!((g.value(y).at(0, c) - g.value(ys).at(0, c)).abs() < 1e-12);
        }
    }

    #[test]
    fn sigmoid_symmetry() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        for &x in &[0.3, -2.0, 7.5] {
            assert!((sigmoid_scalar(x) + sigmoid_scalar(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bce_analytic_values() {
        let mut g = Graph::new();
        let p = g.leaf(Tensor::row_vector(vec![0.5]));
        let l = g.bce_elem(p, Tensor::row_vector(vec![1.0]));
        assert!((g.value(l).item() - std::f64::consts::LN_2).abs() < 1e-12);

        // perfect (clamped) predictions ≈ 0
        let p = g.leaf(Tensor::row_vector(vec![1.0, 0.0]));
        let l = g.bce_elem(p, Tensor::row_vector(vec![1.0, 0.0]));
        let s = g.sum(l);
        assert!(g.value(s).item().abs() < 1e-5);
    }

    #[test]
    fn backward_linearity_of_sums() {
        // backward of (f + g) equals backward of f plus backward of g
        let x0 = Tensor::row_vector(vec![0.7, -1.3, 2.2]);

        let mut g1 = Graph::new();
        let x = g1.leaf(x0.clone());
        let s = g1.sigmoid(x);
        let f = g1.sum(s);
        let gr1 = g1.backward(f);

        let mut g2 = Graph::new();
        let x = g2.leaf(x0.clone());
        let m = g2.mul(x, x);
        let h = g2.sum(m);
        let gr2 = g2.backward(h);

        let mut g3 = Graph::new();
        let x = g3.leaf(x0.clone());
        let s = g3.sigmoid(x);
        let f = g3.sum(s);
        let m = g3.mul(x, x);
        let h = g3.sum(m);
        let tot = g3.add(f, h);
        let gr3 = g3.backward(tot);

        let a = gr1.grad(NodeId(0)).unwrap();
        let b = gr2.grad(NodeId(0)).unwrap();
        let c = gr3.grad(NodeId(0)).unwrap();
        for i in 0..3 {
            assert!((a.data()[i] + b.data()[i] - c.data()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_identity_keeps_vector() {
        let mut g = Graph::new();
        let id = g.constant(Tensor::from_vec(3, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]));
        let v = g.leaf(Tensor::row_vector(vec![1.5, -2.0, 0.25]));
        let y = g.matmul(v, id);
        assert_eq!(g.value(y).data(), &[1.5, -2.0, 0.25]);
    }

    #[test]
    fn logsumexp_stable() {
        assert!((logsumexp(&[0.0, 0.0]) - std::f64::consts::LN_2).abs() < 1e-12);
        let big = logsumexp(&[1000.0, 1000.0]);
        assert!((big - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-9);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
    }
}
