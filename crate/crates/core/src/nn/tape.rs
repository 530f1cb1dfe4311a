//! Dynamic tape for reverse-mode differentiation.
//!
//! A fresh [`Tape`] is recorded for every batch. Leaves are either
//! [`Tape::variable`]s (gradients wanted) or [`Tape::constant`]s; every other
//! node records the operation that produced it. [`Tape::backward`] walks the
//! tape once in reverse and returns the gradient of a scalar node with respect
//! to every node that depends on a variable.

use alloc::vec;
use alloc::vec::Vec;

use super::NnError;
use crate::math;
use crate::tensor::{gemm, Tensor};

/// Inputs to `ln` are floored here; the gradient below the floor is zero.
pub const LOG_FLOOR: f64 = 1e-12;

/// Rows whose norm is below this are left out of the pull-away term.
pub const PULL_AWAY_EPS: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMulNT(Var, Var),
    WeightNorm { direction: Var, scale: Var },
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine { x: Var, mul: f64 },
    Elu(Var),
    Tanh(Var),
    Abs(Var),
    Log(Var),
    SoftmaxFake(Var),
    SliceCols { x: Var, start: usize },
    ConcatRows(Vec<Var>),
    RowSum(Var),
    DivByCol(Var, Var),
    Gather { x: Var, cols: Vec<usize> },
    Mean(Var),
    Sum(Var),
    MeanRows(Var),
    BatchNorm { x: Var, gamma: Var, beta: Var, xhat: Tensor, inv_std: Vec<f64> },
    ColAffine { x: Var, gamma: Var, beta: Var, mean: Vec<f64>, inv_std: Vec<f64> },
    PullAway { x: Var, normalized: Tensor, norms: Vec<f64>, gram: Tensor },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `None` when the node does not depend on any variable or does not
    /// influence the loss.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn accumulate(slot: &mut Option<Tensor>, delta: Tensor) {
    match slot {
        Some(g) => {
            g.assert_same_shape(&delta);
            for (a, b) in g.data_mut().iter_mut().zip(delta.data()) {
                *a += b;
            }
        }
        None => *slot = Some(delta),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn variable(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// `a · wᵀ` for `a: [b, i]`, `w: [o, i]`.
    pub fn matmul_nt(&mut self, a: Var, w: Var) -> Var {
        let (av, wv) = (self.value(a), self.value(w));
        let mut out = Tensor::zeros(av.rows(), wv.rows());
        gemm(1.0, av, false, wv, true, 0.0, &mut out);
        self.push(out, Op::MatMulNT(a, w), &[a, w])
    }

    /// Row-wise weight normalization: `W_k = scale_k · v_k / ‖v_k‖`.
    /// A zero direction row yields a zero weight row.
    pub fn weight_norm(&mut self, direction: Var, scale: Var) -> Var {
        let (v, s) = (self.value(direction), self.value(scale));
        assert_eq!(s.shape(), (1, v.rows()), "weight_norm scale shape");
        let mut out = Tensor::zeros(v.rows(), v.cols());
        for k in 0..v.rows() {
            let norm = math::sqrt(v.row(k).iter().map(|x| x * x).sum());
            if norm > 0.0 {
                let f = s.get(0, k) / norm;
                for (o, &x) in out.row_mut(k).iter_mut().zip(v.row(k)) {
                    *o = f * x;
                }
            }
        }
        self.push(out, Op::WeightNorm { direction, scale }, &[direction, scale])
    }

    /// Adds a `[1, o]` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Var {
        let (xv, bv) = (self.value(x), self.value(bias));
        assert_eq!(bv.shape(), (1, xv.cols()), "add_row bias shape");
        let mut out = xv.clone();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(bv.data()) {
                *o += b;
            }
        }
        self.push(out, Op::AddRow(x, bias), &[x, bias])
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (av, bv) = (self.value(a), self.value(b));
        av.assert_same_shape(bv);
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::from_vec(av.rows(), av.cols(), data).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip_with(a, b, |x, y| x + y);
        self.push(out, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip_with(a, b, |x, y| x - y);
        self.push(out, Op::Sub(a, b), &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip_with(a, b, |x, y| x * y);
        self.push(out, Op::Mul(a, b), &[a, b])
    }

    /// `mul · x + add`, elementwise.
    pub fn affine(&mut self, x: Var, mul: f64, add: f64) -> Var {
        let out = self.value(x).map(|v| mul * v + add);
        self.push(out, Op::Affine { x, mul }, &[x])
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        self.affine(x, factor, 0.0)
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.mul(x, x)
    }

    pub fn elu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| if v > 0.0 { v } else { math::expm1(v) });
        self.push(out, Op::Elu(x), &[x])
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.value(x).map(math::tanh);
        self.push(out, Op::Tanh(x), &[x])
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let out = self.value(x).map(f64::abs);
        self.push(out, Op::Abs(x), &[x])
    }

    /// Natural log with inputs floored at [`LOG_FLOOR`].
    pub fn log(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let clamped = xv.data().iter().filter(|&&v| v < LOG_FLOOR).count();
        if clamped > 0 {
            log::debug!("log: {clamped} input(s) clamped at {LOG_FLOOR:e}");
        }
        let out = xv.map(|v| math::ln(v.max(LOG_FLOOR)));
        self.push(out, Op::Log(x), &[x])
    }

    /// Softmax over `[logits | 0]`: the fake class has a fixed zero logit.
    /// Returns `[b, M + 1]`, the last column being the fake probability.
    pub fn softmax_fake(&mut self, logits: Var) -> Var {
        let z = self.value(logits);
        let m = z.cols();
        let mut out = Tensor::zeros(z.rows(), m + 1);
        for r in 0..z.rows() {
            let row = z.row(r);
            let max = row.iter().copied().fold(0.0f64, f64::max);
            let o = out.row_mut(r);
            let mut total = 0.0;
            for (oj, &zj) in o.iter_mut().zip(row) {
                *oj = math::exp(zj - max);
                total += *oj;
            }
            o[m] = math::exp(-max);
            total += o[m];
            for oj in o.iter_mut() {
                *oj /= total;
            }
        }
        self.push(out, Op::SoftmaxFake(logits), &[logits])
    }

    /// Columns `start .. start + width`.
    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Var {
        let xv = self.value(x);
        assert!(start + width <= xv.cols(), "slice_cols out of range");
        let mut out = Tensor::zeros(xv.rows(), width);
        for r in 0..xv.rows() {
            out.row_mut(r).copy_from_slice(&xv.row(r)[start..start + width]);
        }
        self.push(out, Op::SliceCols { x, start }, &[x])
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_rows of nothing");
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.cols(), cols, "concat_rows width mismatch");
            data.extend_from_slice(v.data());
            rows += v.rows();
        }
        let out = Tensor::from_vec(rows, cols, data).expect("consistent widths");
        self.push(out, Op::ConcatRows(parts.to_vec()), parts)
    }

    /// `[b, k] -> [b, 1]`.
    pub fn row_sum(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let data = (0..xv.rows()).map(|r| xv.row(r).iter().sum()).collect();
        let out = Tensor::from_vec(xv.rows(), 1, data).expect("column");
        self.push(out, Op::RowSum(x), &[x])
    }

    /// Divides each row of `a: [b, k]` by the matching entry of `s: [b, 1]`.
    pub fn div_by_col(&mut self, a: Var, s: Var) -> Var {
        let (av, sv) = (self.value(a), self.value(s));
        assert_eq!(sv.shape(), (av.rows(), 1), "div_by_col divisor shape");
        let mut out = av.clone();
        for r in 0..out.rows() {
            let d = sv.get(r, 0);
            for o in out.row_mut(r) {
                *o /= d;
            }
        }
        self.push(out, Op::DivByCol(a, s), &[a, s])
    }

    /// Picks `x[r, cols[r]]` for every row: `[b, k] -> [b, 1]`.
    pub fn gather(&mut self, x: Var, cols: &[usize]) -> Var {
        let xv = self.value(x);
        assert_eq!(cols.len(), xv.rows(), "gather needs one index per row");
        let data = cols.iter().enumerate().map(|(r, &c)| xv.get(r, c)).collect();
        let out = Tensor::from_vec(xv.rows(), 1, data).expect("column");
        self.push(
            out,
            Op::Gather {
                x,
                cols: cols.to_vec(),
            },
            &[x],
        )
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let out = Tensor::scalar(xv.sum() / xv.len() as f64);
        self.push(out, Op::Mean(x), &[x])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let out = Tensor::scalar(self.value(x).sum());
        self.push(out, Op::Sum(x), &[x])
    }

    /// Column means: `[b, f] -> [1, f]`.
    pub fn mean_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let mut out = Tensor::zeros(1, xv.cols());
        for r in 0..xv.rows() {
            for (o, v) in out.data_mut().iter_mut().zip(xv.row(r)) {
                *o += v;
            }
        }
        let b = xv.rows() as f64;
        for o in out.data_mut() {
            *o /= b;
        }
        self.push(out, Op::MeanRows(x), &[x])
    }

    /// Batch normalization with batch statistics (population variance).
    /// Returns the output and the per-feature batch mean and variance so the
    /// caller can update running statistics.
    pub fn batch_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> (Var, Vec<f64>, Vec<f64>) {
        let xv = self.value(x);
        let (b, f) = xv.shape();
        let (gv, bv) = (self.value(gamma), self.value(beta));
        assert_eq!(gv.shape(), (1, f), "batch_norm gamma shape");
        assert_eq!(bv.shape(), (1, f), "batch_norm beta shape");
        let mut mean = vec![0.0; f];
        for r in 0..b {
            for (m, v) in mean.iter_mut().zip(xv.row(r)) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= b as f64;
        }
        let mut var = vec![0.0; f];
        for r in 0..b {
            for ((s, v), m) in var.iter_mut().zip(xv.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in var.iter_mut() {
            *s /= b as f64;
        }
        let inv_std: Vec<f64> = var.iter().map(|s| 1.0 / math::sqrt(s + eps)).collect();
        let mut xhat = Tensor::zeros(b, f);
        let mut out = Tensor::zeros(b, f);
        for r in 0..b {
            for c in 0..f {
                let h = (xv.get(r, c) - mean[c]) * inv_std[c];
                xhat.set(r, c, h);
                out.set(r, c, gv.get(0, c) * h + bv.get(0, c));
            }
        }
        let v = self.push(
            out,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            &[x, gamma, beta],
        );
        (v, mean, var)
    }

    /// `gamma · (x - mean) · inv_std + beta` per column with fixed statistics
    /// (batch normalization in predict mode).
    pub fn col_affine(&mut self, x: Var, gamma: Var, beta: Var, mean: &[f64], inv_std: &[f64]) -> Var {
        let xv = self.value(x);
        let (b, f) = xv.shape();
        let (gv, bv) = (self.value(gamma), self.value(beta));
        let mut out = Tensor::zeros(b, f);
        for r in 0..b {
            for c in 0..f {
                out.set(r, c, gv.get(0, c) * (xv.get(r, c) - mean[c]) * inv_std[c] + bv.get(0, c));
            }
        }
        self.push(
            out,
            Op::ColAffine {
                x,
                gamma,
                beta,
                mean: mean.to_vec(),
                inv_std: inv_std.to_vec(),
            },
            &[x, gamma, beta],
        )
    }

    /// Mean squared cosine similarity over ordered pairs of distinct rows.
    /// Rows with norm below [`PULL_AWAY_EPS`] count as orthogonal to
    /// everything. Fewer than two rows give zero.
    pub fn pull_away(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let m = xv.rows();
        let mut normalized = xv.clone();
        let mut norms = vec![0.0; m];
        for (r, n) in norms.iter_mut().enumerate() {
            let row = normalized.row_mut(r);
            let norm = math::sqrt(row.iter().map(|v| v * v).sum());
            *n = norm;
            let inv = if norm >= PULL_AWAY_EPS { 1.0 / norm } else { 0.0 };
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
        let mut gram = Tensor::zeros(m, m);
        gemm(1.0, &normalized, false, &normalized, true, 0.0, &mut gram);
        for i in 0..m {
            gram.set(i, i, 0.0);
        }
        let value = if m < 2 {
            log::warn!("pull-away term over a batch of {m}; returning 0");
            0.0
        } else {
            gram.squared_norm() / (m * (m - 1)) as f64
        };
        self.push(
            Tensor::scalar(value),
            Op::PullAway {
                x,
                normalized,
                norms,
                gram,
            },
            &[x],
        )
    }

    /// Reverse pass from the scalar node `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NnError> {
        let node = self.nodes.get(loss.0).ok_or(NnError::NotRecorded(loss.0))?;
        if node.value.shape() != (1, 1) {
            return Err(NnError::NonScalarLoss(node.value.rows(), node.value.cols()));
        }
        let mut grads: Vec<Option<Tensor>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(dy) = grads[i].take() else { continue };
            self.backprop_node(i, &dy, &mut grads);
            grads[i] = Some(dy);
        }
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, i: usize, dy: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[i];
        let y = &node.value;
        let wants = |v: Var| self.nodes[v.0].requires_grad;
        match &node.op {
            Op::Leaf => {}
            Op::MatMulNT(a, w) => {
                let (av, wv) = (self.value(*a), self.value(*w));
                if wants(*a) {
                    let mut da = Tensor::zeros(av.rows(), av.cols());
                    gemm(1.0, dy, false, wv, false, 0.0, &mut da);
                    accumulate(&mut grads[a.0], da);
                }
                if wants(*w) {
                    let mut dw = Tensor::zeros(wv.rows(), wv.cols());
                    gemm(1.0, dy, true, av, false, 0.0, &mut dw);
                    accumulate(&mut grads[w.0], dw);
                }
            }
            Op::WeightNorm { direction, scale } => {
                let (v, s) = (self.value(*direction), self.value(*scale));
                let mut dv = Tensor::zeros(v.rows(), v.cols());
                let mut ds = Tensor::zeros(1, v.rows());
                for k in 0..v.rows() {
                    let norm = math::sqrt(v.row(k).iter().map(|x| x * x).sum());
                    if norm == 0.0 {
                        continue;
                    }
                    let (vk, gk) = (v.row(k), dy.row(k));
                    let proj: f64 = vk.iter().zip(gk).map(|(a, b)| a * b).sum::<f64>() / norm;
                    ds.set(0, k, proj);
                    let f = s.get(0, k) / norm;
                    for ((d, &g), &x) in dv.row_mut(k).iter_mut().zip(gk).zip(vk) {
                        *d = f * (g - proj * x / norm);
                    }
                }
                if wants(*direction) {
                    accumulate(&mut grads[direction.0], dv);
                }
                if wants(*scale) {
                    accumulate(&mut grads[scale.0], ds);
                }
            }
            Op::AddRow(x, bias) => {
                if wants(*bias) {
                    let mut db = Tensor::zeros(1, dy.cols());
                    for r in 0..dy.rows() {
                        for (d, g) in db.data_mut().iter_mut().zip(dy.row(r)) {
                            *d += g;
                        }
                    }
                    accumulate(&mut grads[bias.0], db);
                }
                if wants(*x) {
                    accumulate(&mut grads[x.0], dy.clone());
                }
            }
            Op::Add(a, b) => {
                if wants(*a) {
                    accumulate(&mut grads[a.0], dy.clone());
                }
                if wants(*b) {
                    accumulate(&mut grads[b.0], dy.clone());
                }
            }
            Op::Sub(a, b) => {
                if wants(*a) {
                    accumulate(&mut grads[a.0], dy.clone());
                }
                if wants(*b) {
                    accumulate(&mut grads[b.0], dy.map(|g| -g));
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if wants(*a) {
                    let d = zip(dy, bv, |g, v| g * v);
                    accumulate(&mut grads[a.0], d);
                }
                if wants(*b) {
                    let d = zip(dy, av, |g, v| g * v);
                    accumulate(&mut grads[b.0], d);
                }
            }
            Op::Affine { x, mul } => {
                if wants(*x) {
                    let m = *mul;
                    accumulate(&mut grads[x.0], dy.map(|g| m * g));
                }
            }
            Op::Elu(x) => {
                if wants(*x) {
                    let d = zip3(dy, self.value(*x), y, |g, xv, yv| if xv > 0.0 { g } else { g * (yv + 1.0) });
                    accumulate(&mut grads[x.0], d);
                }
            }
            Op::Tanh(x) => {
                if wants(*x) {
                    let d = zip(dy, y, |g, yv| g * (1.0 - yv * yv));
                    accumulate(&mut grads[x.0], d);
                }
            }
            Op::Abs(x) => {
                if wants(*x) {
                    let d = zip(dy, self.value(*x), |g, xv| {
                        if xv > 0.0 {
                            g
                        } else if xv < 0.0 {
                            -g
                        } else {
                            0.0
                        }
                    });
                    accumulate(&mut grads[x.0], d);
                }
            }
            Op::Log(x) => {
                if wants(*x) {
                    let d = zip(dy, self.value(*x), |g, xv| if xv >= LOG_FLOOR { g / xv } else { 0.0 });
                    accumulate(&mut grads[x.0], d);
                }
            }
            Op::SoftmaxFake(z) => {
                if wants(*z) {
                    let m = y.cols() - 1;
                    let mut dz = Tensor::zeros(y.rows(), m);
                    for r in 0..y.rows() {
                        let (p, g) = (y.row(r), dy.row(r));
                        let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
                        for (j, d) in dz.row_mut(r).iter_mut().enumerate() {
                            *d = p[j] * (g[j] - dot);
                        }
                    }
                    accumulate(&mut grads[z.0], dz);
                }
            }
            Op::SliceCols { x, start } => {
                if wants(*x) {
                    let xv = self.value(*x);
                    let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                    let w = dy.cols();
                    for r in 0..dy.rows() {
                        dx.row_mut(r)[*start..*start + w].copy_from_slice(dy.row(r));
                    }
                    accumulate(&mut grads[x.0], dx);
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let rows = self.value(*p).rows();
                    if wants(*p) {
                        let chunk = dy.data()[offset * dy.cols()..(offset + rows) * dy.cols()].to_vec();
                        let d = Tensor::from_vec(rows, dy.cols(), chunk).expect("slice of gradient");
                        accumulate(&mut grads[p.0], d);
                    }
                    offset += rows;
                }
            }
            Op::RowSum(x) => {
                if wants(*x) {
                    let xv = self.value(*x);
                    let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                    for r in 0..xv.rows() {
                        let g = dy.get(r, 0);
                        dx.row_mut(r).iter_mut().for_each(|d| *d = g);
                    }
                    accumulate(&mut grads[x.0], dx);
                }
            }
            Op::DivByCol(a, s) => {
                let (av, sv) = (self.value(*a), self.value(*s));
                if wants(*a) {
                    let mut da = dy.clone();
                    for r in 0..da.rows() {
                        let d = sv.get(r, 0);
                        da.row_mut(r).iter_mut().for_each(|g| *g /= d);
                    }
                    accumulate(&mut grads[a.0], da);
                }
                if wants(*s) {
                    let mut ds = Tensor::zeros(sv.rows(), 1);
                    for r in 0..sv.rows() {
                        let d = sv.get(r, 0);
                        let dot: f64 = dy.row(r).iter().zip(av.row(r)).map(|(g, v)| g * v).sum();
                        ds.set(r, 0, -dot / (d * d));
                    }
                    accumulate(&mut grads[s.0], ds);
                }
            }
            Op::Gather { x, cols } => {
                if wants(*x) {
                    let xv = self.value(*x);
                    let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                    for (r, &c) in cols.iter().enumerate() {
                        dx.set(r, c, dy.get(r, 0));
                    }
                    accumulate(&mut grads[x.0], dx);
                }
            }
            Op::Mean(x) => {
                if wants(*x) {
                    let xv = self.value(*x);
                    let g = dy.item() / xv.len() as f64;
                    accumulate(&mut grads[x.0], Tensor::filled(xv.rows(), xv.cols(), g));
                }
            }
            Op::Sum(x) => {
                if wants(*x) {
                    let xv = self.value(*x);
                    accumulate(&mut grads[x.0], Tensor::filled(xv.rows(), xv.cols(), dy.item()));
                }
            }
            Op::MeanRows(x) => {
                if wants(*x) {
                    let xv = self.value(*x);
                    let b = xv.rows() as f64;
                    let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                    for r in 0..xv.rows() {
                        for (d, g) in dx.row_mut(r).iter_mut().zip(dy.data()) {
                            *d = g / b;
                        }
                    }
                    accumulate(&mut grads[x.0], dx);
                }
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let (b, f) = xhat.shape();
                let gv = self.value(*gamma);
                let mut dgamma = Tensor::zeros(1, f);
                let mut dbeta = Tensor::zeros(1, f);
                for r in 0..b {
                    for c in 0..f {
                        dgamma.data_mut()[c] += dy.get(r, c) * xhat.get(r, c);
                        dbeta.data_mut()[c] += dy.get(r, c);
                    }
                }
                if wants(*x) {
                    let mut dx = Tensor::zeros(b, f);
                    let bf = b as f64;
                    for c in 0..f {
                        let g = gv.get(0, c);
                        // dxhat = dy * gamma; sums over the batch
                        let sum_dxhat = dbeta.get(0, c) * g;
                        let sum_dxhat_xhat = dgamma.get(0, c) * g;
                        for r in 0..b {
                            let dxhat = dy.get(r, c) * g;
                            let v = inv_std[c] / bf * (bf * dxhat - sum_dxhat - xhat.get(r, c) * sum_dxhat_xhat);
                            dx.set(r, c, v);
                        }
                    }
                    accumulate(&mut grads[x.0], dx);
                }
                if wants(*gamma) {
                    accumulate(&mut grads[gamma.0], dgamma);
                }
                if wants(*beta) {
                    accumulate(&mut grads[beta.0], dbeta);
                }
            }
            Op::ColAffine {
                x,
                gamma,
                beta,
                mean,
                inv_std,
            } => {
                let xv = self.value(*x);
                let gv = self.value(*gamma);
                let (b, f) = xv.shape();
                if wants(*x) {
                    let mut dx = Tensor::zeros(b, f);
                    for r in 0..b {
                        for c in 0..f {
                            dx.set(r, c, dy.get(r, c) * gv.get(0, c) * inv_std[c]);
                        }
                    }
                    accumulate(&mut grads[x.0], dx);
                }
                if wants(*gamma) || wants(*beta) {
                    let mut dgamma = Tensor::zeros(1, f);
                    let mut dbeta = Tensor::zeros(1, f);
                    for r in 0..b {
                        for c in 0..f {
                            dgamma.data_mut()[c] += dy.get(r, c) * (xv.get(r, c) - mean[c]) * inv_std[c];
                            dbeta.data_mut()[c] += dy.get(r, c);
                        }
                    }
                    if wants(*gamma) {
                        accumulate(&mut grads[gamma.0], dgamma);
                    }
                    if wants(*beta) {
                        accumulate(&mut grads[beta.0], dbeta);
                    }
                }
            }
            Op::PullAway {
                x,
                normalized,
                norms,
                gram,
            } => {
                let m = normalized.rows();
                if !wants(*x) || m < 2 {
                    return;
                }
                let c = 4.0 * dy.item() / (m * (m - 1)) as f64;
                let mut dn = Tensor::zeros(m, normalized.cols());
                gemm(c, gram, false, normalized, false, 0.0, &mut dn);
                let mut dx = Tensor::zeros(m, normalized.cols());
                for r in 0..m {
                    if norms[r] < PULL_AWAY_EPS {
                        continue;
                    }
                    let (n, g) = (normalized.row(r), dn.row(r));
                    let proj: f64 = n.iter().zip(g).map(|(a, b)| a * b).sum();
                    for ((d, &gv), &nv) in dx.row_mut(r).iter_mut().zip(g).zip(n) {
                        *d = (gv - proj * nv) / norms[r];
                    }
                }
                accumulate(&mut grads[x.0], dx);
            }
        }
    }
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    a.assert_same_shape(b);
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_vec(a.rows(), a.cols(), data).expect("same shape")
}

fn zip3(a: &Tensor, b: &Tensor, c: &Tensor, f: impl Fn(f64, f64, f64) -> f64) -> Tensor {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .zip(c.data())
        .map(|((&x, &y), &z)| f(x, y, z))
        .collect();
    Tensor::from_vec(a.rows(), a.cols(), data).expect("same shape")
}
