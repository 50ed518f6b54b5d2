//! Reverse-mode automatic differentiation over a growing operation record.
//!
//! A [`Tape`] owns every intermediate value; [`Var`] is a copyable handle
//! into it. Operations append nodes, so node indices are already a
//! topological order and the backward sweep visits each node exactly once in
//! reverse. Gradients accumulate additively: across fan-out within one sweep
//! and across repeated [`Var::backward`] calls without a reset.
//!
//! Shape violations are contract bugs, not recoverable conditions, and panic
//! with the offending shapes.

use std::cell::RefCell;

use crate::tensor::Tensor;

/// Epsilon inside layer-norm and batch-norm denominators.
pub const NORM_EPS: f64 = 1e-5;

/// Batch statistics emitted by a training-mode batch norm so the caller can
/// maintain running averages (which live outside the tape).
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

enum Op {
    Leaf,
    MatMul { a: usize, b: usize },
    Add { a: usize, b: usize },
    Sub { a: usize, b: usize },
    Mul { a: usize, b: usize },
    AddRow { x: usize, r: usize },
    MulRow { x: usize, r: usize },
    Scale { x: usize, c: f64 },
    AddScalar { x: usize },
    Transpose { x: usize },
    Reshape { x: usize, src_rows: usize, src_cols: usize },
    ConcatRows { a: usize, b: usize },
    ConcatCols { a: usize, b: usize },
    GatherRows { x: usize, idx: Vec<usize> },
    MaxPoolRows { x: usize, argmax: Vec<usize> },
    RowSoftmax { x: usize },
    Relu { x: usize },
    LeakyRelu { x: usize, slope: f64 },
    Sigmoid { x: usize },
    LayerNorm { x: usize, gamma: usize, beta: usize, xhat: Tensor, inv_std: Vec<f64> },
    BatchNormTrain { x: usize, gamma: usize, beta: usize, xhat: Tensor, inv_std: Vec<f64> },
    L2NormalizeRows { x: usize, inv_norm: Vec<f64> },
    Sum { x: usize },
    Mean { x: usize },
    NormL1 { x: usize },
    NormL2 { x: usize },
}

pub struct Tape {
    values: RefCell<Vec<Tensor>>,
    ops: RefCell<Vec<Op>>,
    grads: RefCell<Vec<Option<Tensor>>>,
}

/// Handle to one node of a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            values: RefCell::new(Vec::new()),
            ops: RefCell::new(Vec::new()),
            grads: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.values.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Insert an input node. Every node can carry gradient; a "constant" is
    /// simply a leaf whose gradient the caller never reads.
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf)
    }

    fn push(&self, value: Tensor, op: Op) -> Var<'_> {
        let mut values = self.values.borrow_mut();
        values.push(value);
        self.ops.borrow_mut().push(op);
        self.grads.borrow_mut().push(None);
        Var { tape: self, id: values.len() - 1 }
    }

    fn value_of(&self, id: usize) -> Tensor {
        self.values.borrow()[id].clone()
    }

    fn shape_of(&self, id: usize) -> (usize, usize) {
        self.values.borrow()[id].shape()
    }

    fn add_grad(grads: &mut [Option<Tensor>], id: usize, shape: (usize, usize)) -> &mut Tensor {
        grads[id].get_or_insert_with(|| Tensor::zeros(shape.0, shape.1))
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> Tensor {
        self.tape.value_of(self.id)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.shape_of(self.id)
    }

    /// Accumulated gradient (zeros when nothing has flowed here).
    pub fn grad(&self) -> Tensor {
        let (r, c) = self.shape();
        self.tape.grads.borrow()[self.id].clone().unwrap_or_else(|| Tensor::zeros(r, c))
    }

    /// Clear this node's accumulated gradient.
    pub fn zero_grad(&self) {
        self.tape.grads.borrow_mut()[self.id] = None;
    }

    fn same_tape(&self, other: &Var<'t>) {
        assert!(
            std::ptr::eq(self.tape, other.tape),
            "variables belong to different tapes"
        );
    }

    // ---- forward operations ----

    pub fn matmul(self, other: Var<'t>) -> Var<'t> {
        self.same_tape(&other);
        let values = self.tape.values.borrow();
        let a = &values[self.id];
        let b = &values[other.id];
        assert_eq!(
            a.cols(),
            b.rows(),
            "matmul shape mismatch: {}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        );
        let mut out = Tensor::zeros(a.rows(), b.cols());
        crate::gemm::gemm_nn(a.rows(), a.cols(), b.cols(), a.data(), b.data(), out.data_mut());
        drop(values);
        self.tape.push(out, Op::MatMul { a: self.id, b: other.id })
    }

    fn zip_elementwise(
        self,
        other: Var<'t>,
        name: &str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Var<'t> {
        self.same_tape(&other);
        let values = self.tape.values.borrow();
        let a = &values[self.id];
        let b = &values[other.id];
        assert_eq!(
            a.shape(),
            b.shape(),
            "{name} shape mismatch: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        );
        let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::from_vec(a.rows(), a.cols(), data);
        drop(values);
        self.tape.push(out, op)
    }

    pub fn add(self, other: Var<'t>) -> Var<'t> {
        self.zip_elementwise(other, "add", |x, y| x + y, Op::Add { a: self.id, b: other.id })
    }

    pub fn sub(self, other: Var<'t>) -> Var<'t> {
        self.zip_elementwise(other, "sub", |x, y| x - y, Op::Sub { a: self.id, b: other.id })
    }

    pub fn mul(self, other: Var<'t>) -> Var<'t> {
        self.zip_elementwise(other, "mul", |x, y| x * y, Op::Mul { a: self.id, b: other.id })
    }

    fn broadcast_row(self, row: Var<'t>, name: &str, f: impl Fn(f64, f64) -> f64, op: Op) -> Var<'t> {
        self.same_tape(&row);
        let values = self.tape.values.borrow();
        let x = &values[self.id];
        let r = &values[row.id];
        assert!(
            r.rows() == 1 && r.cols() == x.cols(),
            "{name} broadcast mismatch: {}x{} with row {}x{}",
            x.rows(),
            x.cols(),
            r.rows(),
            r.cols()
        );
        let mut out = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let v = f(x.get(i, j), r.get(0, j));
                out.set(i, j, v);
            }
        }
        drop(values);
        self.tape.push(out, op)
    }

    /// Add a 1×n row to every row of an m×n matrix (bias broadcast).
    pub fn add_row(self, row: Var<'t>) -> Var<'t> {
        self.broadcast_row(row, "add_row", |x, y| x + y, Op::AddRow { x: self.id, r: row.id })
    }

    /// Multiply every row of an m×n matrix elementwise by a 1×n row.
    pub fn mul_row(self, row: Var<'t>) -> Var<'t> {
        self.broadcast_row(row, "mul_row", |x, y| x * y, Op::MulRow { x: self.id, r: row.id })
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        let out = self.tape.values.borrow()[self.id].map(|v| c * v);
        self.tape.push(out, Op::Scale { x: self.id, c })
    }

    pub fn add_scalar(self, c: f64) -> Var<'t> {
        let out = self.tape.values.borrow()[self.id].map(|v| v + c);
        self.tape.push(out, Op::AddScalar { x: self.id })
    }

    pub fn transpose(self) -> Var<'t> {
        let out = self.tape.values.borrow()[self.id].transposed();
        self.tape.push(out, Op::Transpose { x: self.id })
    }

    pub fn reshape(self, rows: usize, cols: usize) -> Var<'t> {
        let values = self.tape.values.borrow();
        let x = &values[self.id];
        assert_eq!(
            x.len(),
            rows * cols,
            "cannot reshape {}x{} to {}x{}",
            x.rows(),
            x.cols(),
            rows,
            cols
        );
        let (src_rows, src_cols) = x.shape();
        let out = Tensor::from_vec(rows, cols, x.data().to_vec());
        drop(values);
        self.tape.push(out, Op::Reshape { x: self.id, src_rows, src_cols })
    }

    /// Stack vertically: [self; other].
    pub fn concat_rows(self, other: Var<'t>) -> Var<'t> {
        self.same_tape(&other);
        let values = self.tape.values.borrow();
        let a = &values[self.id];
        let b = &values[other.id];
        assert_eq!(
            a.cols(),
            b.cols(),
            "concat_rows column mismatch: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        );
        let mut data = Vec::with_capacity(a.len() + b.len());
        data.extend_from_slice(a.data());
        data.extend_from_slice(b.data());
        let out = Tensor::from_vec(a.rows() + b.rows(), a.cols(), data);
        drop(values);
        self.tape.push(out, Op::ConcatRows { a: self.id, b: other.id })
    }

    /// Stack horizontally: [self | other].
    pub fn concat_cols(self, other: Var<'t>) -> Var<'t> {
        self.same_tape(&other);
        let values = self.tape.values.borrow();
        let a = &values[self.id];
        let b = &values[other.id];
        assert_eq!(
            a.rows(),
            b.rows(),
            "concat_cols row mismatch: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        );
        let cols = a.cols() + b.cols();
        let mut data = Vec::with_capacity(a.rows() * cols);
        for i in 0..a.rows() {
            data.extend_from_slice(a.row(i));
            data.extend_from_slice(b.row(i));
        }
        let out = Tensor::from_vec(a.rows(), cols, data);
        drop(values);
        self.tape.push(out, Op::ConcatCols { a: self.id, b: other.id })
    }

    /// Select rows by index (repeats allowed). Indices are data, not
    /// differentiable inputs; the backward pass scatter-adds into the source.
    pub fn gather_rows(self, idx: &[usize]) -> Var<'t> {
        let values = self.tape.values.borrow();
        let x = &values[self.id];
        let mut data = Vec::with_capacity(idx.len() * x.cols());
        for &i in idx {
            assert!(i < x.rows(), "gather index {} out of range for {} rows", i, x.rows());
            data.extend_from_slice(x.row(i));
        }
        let out = Tensor::from_vec(idx.len(), x.cols(), data);
        drop(values);
        self.tape.push(out, Op::GatherRows { x: self.id, idx: idx.to_vec() })
    }

    /// Column-wise max over consecutive groups of `group` rows:
    /// (g·group)×n → g×n. Gradient flows only to each winner (first row on
    /// ties, so the routing is deterministic).
    pub fn max_pool_rows(self, group: usize) -> Var<'t> {
        let values = self.tape.values.borrow();
        let x = &values[self.id];
        assert!(group >= 1, "pool group must be at least 1");
        assert_eq!(
            x.rows() % group,
            0,
            "max_pool_rows: {} rows not divisible by group {}",
            x.rows(),
            group
        );
        let g = x.rows() / group;
        let n = x.cols();
        let mut out = Tensor::zeros(g, n);
        let mut argmax = vec![0usize; g * n];
        for gi in 0..g {
            for j in 0..n {
                let mut best = f64::NEG_INFINITY;
                let mut best_row = gi * group;
                for r in gi * group..(gi + 1) * group {
                    let v = x.get(r, j);
                    if v > best {
                        best = v;
                        best_row = r;
                    }
                }
                out.set(gi, j, best);
                argmax[gi * n + j] = best_row;
            }
        }
        drop(values);
        self.tape.push(out, Op::MaxPoolRows { x: self.id, argmax })
    }

    /// Softmax along each row (max-shifted for stability).
    pub fn row_softmax(self) -> Var<'t> {
        let values = self.tape.values.borrow();
        let x = &values[self.id];
        let mut out = Tensor::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            let row = x.row(i);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..x.cols() {
                let e = (row[j] - m).exp();
                out.set(i, j, e);
                sum += e;
            }
            for j in 0..x.cols() {
                out.set(i, j, out.get(i, j) / sum);
            }
        }
        drop(values);
        self.tape.push(out, Op::RowSoftmax { x: self.id })
    }

    pub fn relu(self) -> Var<'t> {
        let out = self.tape.values.borrow()[self.id].map(|v| if v > 0.0 { v } else { 0.0 });
        self.tape.push(out, Op::Relu { x: self.id })
    }

    pub fn leaky_relu(self, slope: f64) -> Var<'t> {
        let out =
            self.tape.values.borrow()[self.id].map(|v| if v > 0.0 { v } else { slope * v });
        self.tape.push(out, Op::LeakyRelu { x: self.id, slope })
    }

    pub fn sigmoid(self) -> Var<'t> {
        let out = self.tape.values.borrow()[self.id].map(|v| {
            if v >= 0.0 {
                1.0 / (1.0 + (-v).exp())
            } else {
                let e = v.exp();
                e / (1.0 + e)
            }
        });
        self.tape.push(out, Op::Sigmoid { x: self.id })
    }

    /// Per-row standardization with learned per-column affine:
    /// y = gamma ⊙ (x − μ_row)/√(σ²_row + ε) + beta.
    pub fn layer_norm(self, gamma: Var<'t>, beta: Var<'t>) -> Var<'t> {
        self.same_tape(&gamma);
        self.same_tape(&beta);
        let values = self.tape.values.borrow();
        let x = &values[self.id];
        let g = &values[gamma.id];
        let b = &values[beta.id];
        let n = x.cols();
        assert!(
            g.rows() == 1 && g.cols() == n && b.rows() == 1 && b.cols() == n,
            "layer_norm affine shape mismatch: x {}x{}, gamma {}x{}, beta {}x{}",
            x.rows(),
            x.cols(),
            g.rows(),
            g.cols(),
            b.rows(),
            b.cols()
        );
        let mut xhat = Tensor::zeros(x.rows(), n);
        let mut inv_std = vec![0.0; x.rows()];
        let mut out = Tensor::zeros(x.rows(), n);
        for i in 0..x.rows() {
            let row = x.row(i);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + NORM_EPS).sqrt();
            inv_std[i] = inv;
            for j in 0..n {
                let h = (row[j] - mean) * inv;
                xhat.set(i, j, h);
                out.set(i, j, g.get(0, j) * h + b.get(0, j));
            }
        }
        drop(values);
        self.tape.push(
            out,
            Op::LayerNorm { x: self.id, gamma: gamma.id, beta: beta.id, xhat, inv_std },
        )
    }

    /// Per-column standardization over the rows (the batch axis) using batch
    /// statistics, with learned per-column affine. Returns the batch mean and
    /// biased variance so the caller can update running statistics.
    pub fn batch_norm_train(self, gamma: Var<'t>, beta: Var<'t>) -> (Var<'t>, BatchStats) {
        self.same_tape(&gamma);
        self.same_tape(&beta);
        let values = self.tape.values.borrow();
        let x = &values[self.id];
        let g = &values[gamma.id];
        let b = &values[beta.id];
        let (m, n) = x.shape();
        assert!(
            g.rows() == 1 && g.cols() == n && b.rows() == 1 && b.cols() == n,
            "batch_norm affine shape mismatch: x {}x{}, gamma {}x{}, beta {}x{}",
            m,
            n,
            g.rows(),
            g.cols(),
            b.rows(),
            b.cols()
        );
        let mut mean = vec![0.0; n];
        let mut var = vec![0.0; n];
        for i in 0..m {
            for j in 0..n {
                mean[j] += x.get(i, j);
            }
        }
        for v in &mut mean {
            *v /= m as f64;
        }
        for i in 0..m {
            for j in 0..n {
                let d = x.get(i, j) - mean[j];
                var[j] += d * d;
            }
        }
        for v in &mut var {
            *v /= m as f64;
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + NORM_EPS).sqrt()).collect();
        let mut xhat = Tensor::zeros(m, n);
        let mut out = Tensor::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let h = (x.get(i, j) - mean[j]) * inv_std[j];
                xhat.set(i, j, h);
                out.set(i, j, g.get(0, j) * h + b.get(0, j));
            }
        }
        drop(values);
        let stats = BatchStats { mean, var };
        let var_node = self.tape.push(
            out,
            Op::BatchNormTrain { x: self.id, gamma: gamma.id, beta: beta.id, xhat, inv_std },
        );
        (var_node, stats)
    }

    /// Evaluation-mode batch norm: a fixed affine map built from frozen
    /// running statistics, composed from primitive ops (so it is itself
    /// differentiable w.r.t. x, gamma, beta).
    pub fn batch_norm_eval(
        self,
        gamma: Var<'t>,
        beta: Var<'t>,
        running_mean: &[f64],
        running_var: &[f64],
    ) -> Var<'t> {
        let n = self.shape().1;
        assert!(
            running_mean.len() == n && running_var.len() == n,
            "running statistics length {}/{} does not match {} columns",
            running_mean.len(),
            running_var.len(),
            n
        );
        let neg_mean =
            self.tape.leaf(Tensor::from_vec(1, n, running_mean.iter().map(|v| -v).collect()));
        let inv_std = self.tape.leaf(Tensor::from_vec(
            1,
            n,
            running_var.iter().map(|v| 1.0 / (v + NORM_EPS).sqrt()).collect(),
        ));
        self.add_row(neg_mean).mul_row(inv_std).mul_row(gamma).add_row(beta)
    }

    /// Scale each row to unit Euclidean norm.
    pub fn l2_normalize_rows(self) -> Var<'t> {
        let values = self.tape.values.borrow();
        let x = &values[self.id];
        let mut inv_norm = vec![0.0; x.rows()];
        let mut out = Tensor::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            let norm = x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm > 0.0, "cannot normalize a zero row (row {i})");
            let inv = 1.0 / norm;
            inv_norm[i] = inv;
            for j in 0..x.cols() {
                out.set(i, j, x.get(i, j) * inv);
            }
        }
        drop(values);
        self.tape.push(out, Op::L2NormalizeRows { x: self.id, inv_norm })
    }

    pub fn sum(self) -> Var<'t> {
        let total = self.tape.values.borrow()[self.id].data().iter().sum();
        self.tape.push(Tensor::scalar(total), Op::Sum { x: self.id })
    }

    pub fn mean(self) -> Var<'t> {
        let values = self.tape.values.borrow();
        let x = &values[self.id];
        let m = x.data().iter().sum::<f64>() / x.len() as f64;
        drop(values);
        self.tape.push(Tensor::scalar(m), Op::Mean { x: self.id })
    }

    /// Sum of absolute values (L1 norm of the flattened tensor).
    pub fn norm_l1(self) -> Var<'t> {
        let total = self.tape.values.borrow()[self.id].data().iter().map(|v| v.abs()).sum();
        self.tape.push(Tensor::scalar(total), Op::NormL1 { x: self.id })
    }

    /// Euclidean norm of the flattened tensor (Frobenius norm for matrices).
    pub fn norm_l2(self) -> Var<'t> {
        let total: f64 =
            self.tape.values.borrow()[self.id].data().iter().map(|v| v * v).sum::<f64>().sqrt();
        self.tape.push(Tensor::scalar(total), Op::NormL2 { x: self.id })
    }

    // ---- backward ----

    /// Reverse sweep seeding d(self) = 1. Panics unless `self` is scalar.
    ///
    /// Each call propagates through a fresh workspace and then adds its
    /// result into the persistent per-node buffers, so fan-out accumulates
    /// within a sweep and repeated calls accumulate across sweeps without
    /// one sweep's totals re-entering the next propagation.
    pub fn backward(&self) {
        let values = self.tape.values.borrow();
        let ops = self.tape.ops.borrow();
        {
            let v = &values[self.id];
            assert!(
                v.is_scalar(),
                "backward requires a scalar loss, got shape {}x{}",
                v.rows(),
                v.cols()
            );
        }
        let mut local: Vec<Option<Tensor>> = vec![None; self.id + 1];
        local[self.id] = Some(Tensor::scalar(1.0));
        for id in (0..=self.id).rev() {
            let Some(gout) = local[id].clone() else { continue };
            backprop(&ops[id], id, &gout, &values, &mut local);
        }
        let mut grads = self.tape.grads.borrow_mut();
        for (id, g) in local.into_iter().enumerate() {
            if let Some(g) = g {
                match &mut grads[id] {
                    Some(acc) => acc.add_scaled(&g, 1.0),
                    slot => *slot = Some(g),
                }
            }
        }
    }
}

fn backprop(
    op: &Op,
    id: usize,
    gout: &Tensor,
    values: &[Tensor],
    grads: &mut [Option<Tensor>],
) {
    match op {
        Op::Leaf => {}
        Op::MatMul { a, b } => {
            let (am, ak) = values[*a].shape();
            let bn = values[*b].cols();
            {
                let ga = Tape::add_grad(grads, *a, (am, ak));
                crate::gemm::gemm_nt(am, bn, ak, gout.data(), values[*b].data(), ga.data_mut());
            }
            let gb = Tape::add_grad(grads, *b, (ak, bn));
            crate::gemm::gemm_tn(am, ak, bn, values[*a].data(), gout.data(), gb.data_mut());
        }
        Op::Add { a, b } => {
            Tape::add_grad(grads, *a, gout.shape()).add_scaled(gout, 1.0);
            Tape::add_grad(grads, *b, gout.shape()).add_scaled(gout, 1.0);
        }
        Op::Sub { a, b } => {
            Tape::add_grad(grads, *a, gout.shape()).add_scaled(gout, 1.0);
            Tape::add_grad(grads, *b, gout.shape()).add_scaled(gout, -1.0);
        }
        Op::Mul { a, b } => {
            {
                let ga = Tape::add_grad(grads, *a, gout.shape());
                for ((g, &o), &bv) in ga.data_mut().iter_mut().zip(gout.data()).zip(values[*b].data())
                {
                    *g += o * bv;
                }
            }
            let gb = Tape::add_grad(grads, *b, gout.shape());
            for ((g, &o), &av) in gb.data_mut().iter_mut().zip(gout.data()).zip(values[*a].data()) {
                *g += o * av;
            }
        }
        Op::AddRow { x, r } => {
            let (m, n) = gout.shape();
            Tape::add_grad(grads, *x, (m, n)).add_scaled(gout, 1.0);
            let gr = Tape::add_grad(grads, *r, (1, n));
            for i in 0..m {
                for j in 0..n {
                    gr.data_mut()[j] += gout.get(i, j);
                }
            }
        }
        Op::MulRow { x, r } => {
            let (m, n) = gout.shape();
            {
                let gx = Tape::add_grad(grads, *x, (m, n));
                for i in 0..m {
                    for j in 0..n {
                        let v = gout.get(i, j) * values[*r].get(0, j);
                        gx.data_mut()[i * n + j] += v;
                    }
                }
            }
            let gr = Tape::add_grad(grads, *r, (1, n));
            for i in 0..m {
                for j in 0..n {
                    gr.data_mut()[j] += gout.get(i, j) * values[*x].get(i, j);
                }
            }
        }
        Op::Scale { x, c } => {
            Tape::add_grad(grads, *x, gout.shape()).add_scaled(gout, *c);
        }
        Op::AddScalar { x } => {
            Tape::add_grad(grads, *x, gout.shape()).add_scaled(gout, 1.0);
        }
        Op::Transpose { x } => {
            let gt = gout.transposed();
            Tape::add_grad(grads, *x, gt.shape()).add_scaled(&gt, 1.0);
        }
        Op::Reshape { x, src_rows, src_cols } => {
            let back = Tensor::from_vec(*src_rows, *src_cols, gout.data().to_vec());
            Tape::add_grad(grads, *x, (*src_rows, *src_cols)).add_scaled(&back, 1.0);
        }
        Op::ConcatRows { a, b } => {
            let (ar, c) = values[*a].shape();
            let br = values[*b].rows();
            {
                let ga = Tape::add_grad(grads, *a, (ar, c));
                for (g, &o) in ga.data_mut().iter_mut().zip(&gout.data()[..ar * c]) {
                    *g += o;
                }
            }
            let gb = Tape::add_grad(grads, *b, (br, c));
            for (g, &o) in gb.data_mut().iter_mut().zip(&gout.data()[ar * c..]) {
                *g += o;
            }
        }
        Op::ConcatCols { a, b } => {
            let (m, ac) = values[*a].shape();
            let bc = values[*b].cols();
            {
                let ga = Tape::add_grad(grads, *a, (m, ac));
                for i in 0..m {
                    for j in 0..ac {
                        ga.data_mut()[i * ac + j] += gout.get(i, j);
                    }
                }
            }
            let gb = Tape::add_grad(grads, *b, (m, bc));
            for i in 0..m {
                for j in 0..bc {
                    gb.data_mut()[i * bc + j] += gout.get(i, ac + j);
                }
            }
        }
        Op::GatherRows { x, idx } => {
            let (xr, n) = values[*x].shape();
            let gx = Tape::add_grad(grads, *x, (xr, n));
            for (out_row, &src_row) in idx.iter().enumerate() {
                for j in 0..n {
                    gx.data_mut()[src_row * n + j] += gout.get(out_row, j);
                }
            }
        }
        Op::MaxPoolRows { x, argmax } => {
            let (xr, n) = values[*x].shape();
            let gx = Tape::add_grad(grads, *x, (xr, n));
            for (k, &winner) in argmax.iter().enumerate() {
                let j = k % n;
                gx.data_mut()[winner * n + j] += gout.data()[k];
            }
        }
        Op::RowSoftmax { x } => {
            let y = &values[id];
            let (m, n) = y.shape();
            let gx = Tape::add_grad(grads, *x, (m, n));
            for i in 0..m {
                let dot: f64 = (0..n).map(|j| gout.get(i, j) * y.get(i, j)).sum();
                for j in 0..n {
                    gx.data_mut()[i * n + j] += y.get(i, j) * (gout.get(i, j) - dot);
                }
            }
        }
        Op::Relu { x } => {
            let gx = Tape::add_grad(grads, *x, gout.shape());
            for ((g, &o), &v) in gx.data_mut().iter_mut().zip(gout.data()).zip(values[*x].data()) {
                if v > 0.0 {
                    *g += o;
                }
            }
        }
        Op::LeakyRelu { x, slope } => {
            let gx = Tape::add_grad(grads, *x, gout.shape());
            for ((g, &o), &v) in gx.data_mut().iter_mut().zip(gout.data()).zip(values[*x].data()) {
                *g += o * if v > 0.0 { 1.0 } else { *slope };
            }
        }
        Op::Sigmoid { x } => {
            let y = &values[id];
            let gx = Tape::add_grad(grads, *x, gout.shape());
            for ((g, &o), &s) in gx.data_mut().iter_mut().zip(gout.data()).zip(y.data()) {
                *g += o * s * (1.0 - s);
            }
        }
        Op::LayerNorm { x, gamma, beta, xhat, inv_std } => {
            let (m, n) = xhat.shape();
            {
                let gg = Tape::add_grad(grads, *gamma, (1, n));
                for i in 0..m {
                    for j in 0..n {
                        gg.data_mut()[j] += gout.get(i, j) * xhat.get(i, j);
                    }
                }
            }
            {
                let gb = Tape::add_grad(grads, *beta, (1, n));
                for i in 0..m {
                    for j in 0..n {
                        gb.data_mut()[j] += gout.get(i, j);
                    }
                }
            }
            let gx = Tape::add_grad(grads, *x, (m, n));
            let g = &values[*gamma];
            for i in 0..m {
                let mut mean_dh = 0.0;
                let mut mean_dh_xhat = 0.0;
                for j in 0..n {
                    let dh = gout.get(i, j) * g.get(0, j);
                    mean_dh += dh;
                    mean_dh_xhat += dh * xhat.get(i, j);
                }
                mean_dh /= n as f64;
                mean_dh_xhat /= n as f64;
                for j in 0..n {
                    let dh = gout.get(i, j) * g.get(0, j);
                    gx.data_mut()[i * n + j] +=
                        inv_std[i] * (dh - mean_dh - xhat.get(i, j) * mean_dh_xhat);
                }
            }
        }
        Op::BatchNormTrain { x, gamma, beta, xhat, inv_std } => {
            let (m, n) = xhat.shape();
            {
                let gg = Tape::add_grad(grads, *gamma, (1, n));
                for i in 0..m {
                    for j in 0..n {
                        gg.data_mut()[j] += gout.get(i, j) * xhat.get(i, j);
                    }
                }
            }
            {
                let gb = Tape::add_grad(grads, *beta, (1, n));
                for i in 0..m {
                    for j in 0..n {
                        gb.data_mut()[j] += gout.get(i, j);
                    }
                }
            }
            let g = &values[*gamma];
            let mut mean_dh = vec![0.0; n];
            let mut mean_dh_xhat = vec![0.0; n];
            for i in 0..m {
                for j in 0..n {
                    let dh = gout.get(i, j) * g.get(0, j);
                    mean_dh[j] += dh;
                    mean_dh_xhat[j] += dh * xhat.get(i, j);
                }
            }
            for j in 0..n {
                mean_dh[j] /= m as f64;
                mean_dh_xhat[j] /= m as f64;
            }
            let gx = Tape::add_grad(grads, *x, (m, n));
            for i in 0..m {
                for j in 0..n {
                    let dh = gout.get(i, j) * g.get(0, j);
                    gx.data_mut()[i * n + j] +=
                        inv_std[j] * (dh - mean_dh[j] - xhat.get(i, j) * mean_dh_xhat[j]);
                }
            }
        }
        Op::L2NormalizeRows { x, inv_norm } => {
            let y = &values[id];
            let (m, n) = y.shape();
            let gx = Tape::add_grad(grads, *x, (m, n));
            for i in 0..m {
                let dot: f64 = (0..n).map(|j| gout.get(i, j) * y.get(i, j)).sum();
                for j in 0..n {
                    gx.data_mut()[i * n + j] += inv_norm[i] * (gout.get(i, j) - y.get(i, j) * dot);
                }
            }
        }
        Op::Sum { x } => {
            let o = gout.scalar_value();
            let gx = Tape::add_grad(grads, *x, values[*x].shape());
            for g in gx.data_mut() {
                *g += o;
            }
        }
        Op::Mean { x } => {
            let o = gout.scalar_value() / values[*x].len() as f64;
            let gx = Tape::add_grad(grads, *x, values[*x].shape());
            for g in gx.data_mut() {
                *g += o;
            }
        }
        Op::NormL1 { x } => {
            let o = gout.scalar_value();
            let gx = Tape::add_grad(grads, *x, values[*x].shape());
            for (g, &v) in gx.data_mut().iter_mut().zip(values[*x].data()) {
                // Subgradient 0 at v = 0.
                *g += o * if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 };
            }
        }
        Op::NormL2 { x } => {
            let norm = values[id].scalar_value();
            if norm > 0.0 {
                let o = gout.scalar_value() / norm;
                let gx = Tape::add_grad(grads, *x, values[*x].shape());
                for (g, &v) in gx.data_mut().iter_mut().zip(values[*x].data()) {
                    *g += o * v;
                }
            }
        }
    }
}
