//! Minimal reverse-mode automatic differentiation on dense matrices.
//!
//! A [`Tape`] records one forward computation as a flat list of nodes; node
//! inputs always point at earlier indices, so a single reverse sweep
//! propagates gradients. Each tape supports exactly one backward pass, and
//! parameter gradients accumulate into the owning [`ParamStore`].
//!
//! The primitive set is exactly what the evidential multi-view model needs:
//! affine maps, layer normalization, softplus, temperature softmax,
//! elementwise digamma (whose derivative is trigamma), and a handful of
//! structural ops (concatenation, column extraction, reductions, row
//! normalization, row dot products). Cross-view attention is composed from
//! these primitives in [`attention`].

mod attention;
mod params;

pub use attention::{cross_attention, AttentionProjections};
pub use params::{ParamId, ParamStore, Parameter};

use crate::array::DenseArray;
use crate::error::{Result, TmurError};
use crate::special::{digamma_raw, trigamma_raw};

/// Norms below this are treated as zero when row-normalizing.
pub const NORMALIZE_EPS: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul { a: NodeId, b: NodeId },
    AddRow { a: NodeId, bias: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Scale { a: NodeId, factor: f64 },
    Shift { a: NodeId },
    Softplus { a: NodeId },
    Relu { a: NodeId },
    Digamma { a: NodeId },
    SoftmaxRows { a: NodeId, tau: f64 },
    LayerNorm { x: NodeId, gain: NodeId, shift: NodeId, eps: f64 },
    ConcatCols { parts: Vec<NodeId> },
    ExtractCol { a: NodeId, col: usize },
    RowSum { a: NodeId },
    ColMean { a: NodeId },
    MeanAll { a: NodeId },
    RowL2Normalize { a: NodeId },
    RowDot { a: NodeId, b: NodeId },
    MulColVec { a: NodeId, scale: NodeId },
}

struct Node {
    value: DenseArray,
    op: Op,
}

/// Record of one forward computation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value computed at `id` during the forward pass.
    pub fn value(&self, id: NodeId) -> &DenseArray {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: DenseArray, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Constant input; gradients stop here.
    pub fn leaf(&mut self, value: DenseArray) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// Leaf tied to a trainable parameter. `backward` accumulates into the
    /// parameter's gradient buffer.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        self.push(store.get(id).value.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        if ac != br {
            return Err(TmurError::shape(format!(
                "matmul: {ar}x{ac} is incompatible with {br}x{bc}"
            )));
        }
        let value = self.value(a).matmul(self.value(b));
        Ok(self.push(value, Op::MatMul { a, b }))
    }

    /// Broadcast-add a `1 x n` bias row onto every row of `a`.
    pub fn add_row(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (_, n) = self.value(a).shape();
        if self.value(bias).shape() != (1, n) {
            return Err(TmurError::shape(format!(
                "add_row: bias must be 1x{n}, got {:?}",
                self.value(bias).shape()
            )));
        }
        let mut value = self.value(a).clone();
        let rows = value.rows();
        for r in 0..rows {
            for c in 0..n {
                let v = value.get(r, c) + self.value(bias).get(0, c);
                value.set(r, c, v);
            }
        }
        Ok(self.push(value, Op::AddRow { a, bias }))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "add")?;
        let value = self.zip(a, b, |x, y| x + y);
        Ok(self.push(value, Op::Add { a, b }))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "sub")?;
        let value = self.zip(a, b, |x, y| x - y);
        Ok(self.push(value, Op::Sub { a, b }))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "mul")?;
        let value = self.zip(a, b, |x, y| x * y);
        Ok(self.push(value, Op::Mul { a, b }))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let value = self.value(a).map(|x| factor * x);
        self.push(value, Op::Scale { a, factor })
    }

    pub fn shift(&mut self, a: NodeId, offset: f64) -> NodeId {
        let value = self.value(a).map(|x| x + offset);
        self.push(value, Op::Shift { a })
    }

    /// Numerically stable softplus: `max(x, 0) + ln(1 + exp(-|x|))`.
    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(softplus_scalar);
        self.push(value, Op::Softplus { a })
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(|x| x.max(0.0));
        self.push(value, Op::Relu { a })
    }

    /// Elementwise digamma; every entry must be strictly positive.
    pub fn digamma(&mut self, a: NodeId) -> Result<NodeId> {
        if let Some(bad) = self.value(a).data().iter().find(|v| !(**v > 0.0)) {
            return Err(TmurError::domain(format!(
                "digamma node requires positive entries, found {bad}"
            )));
        }
        let value = self.value(a).map(digamma_raw);
        Ok(self.push(value, Op::Digamma { a }))
    }

    /// Row-wise softmax of `a / tau`.
    pub fn softmax_rows(&mut self, a: NodeId, tau: f64) -> Result<NodeId> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(TmurError::domain(format!(
                "softmax temperature must be positive, got {tau}"
            )));
        }
        let src = self.value(a);
        let (rows, cols) = src.shape();
        let mut value = DenseArray::zeros(rows, cols);
        for r in 0..rows {
            let row = src.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for c in 0..cols {
                let e = ((row[c] - max) / tau).exp();
                value.set(r, c, e);
                sum += e;
            }
            for c in 0..cols {
                let v = value.get(r, c) / sum;
                value.set(r, c, v);
            }
        }
        Ok(self.push(value, Op::SoftmaxRows { a, tau }))
    }

    /// Per-row layer normalization with learned gain and shift (both `1 x d`).
    /// Variance is the biased (population) estimate.
    pub fn layer_norm(
        &mut self,
        x: NodeId,
        gain: NodeId,
        shift: NodeId,
        eps: f64,
    ) -> Result<NodeId> {
        let (rows, d) = self.value(x).shape();
        if self.value(gain).shape() != (1, d) || self.value(shift).shape() != (1, d) {
            return Err(TmurError::shape(
                "layer_norm: gain and shift must be 1 x d".to_string(),
            ));
        }
        if !(eps > 0.0) {
            return Err(TmurError::domain("layer_norm eps must be positive"));
        }
        let mut value = DenseArray::zeros(rows, d);
        for r in 0..rows {
            let row = self.value(x).row(r);
            let (mean, inv_std) = row_moments(row, eps);
            for c in 0..d {
                let xhat = (row[c] - mean) * inv_std;
                let v = self.value(gain).get(0, c) * xhat + self.value(shift).get(0, c);
                value.set(r, c, v);
            }
        }
        Ok(self.push(value, Op::LayerNorm { x, gain, shift, eps }))
    }

    /// Concatenate along columns; all parts must share the row count.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(TmurError::shape("concat_cols needs at least one part"));
        }
        let rows = self.value(parts[0]).rows();
        let mut total = 0;
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(TmurError::shape(format!(
                    "concat_cols: row mismatch ({} vs {})",
                    self.value(p).rows(),
                    rows
                )));
            }
            total += self.value(p).cols();
        }
        let mut value = DenseArray::zeros(rows, total);
        let mut offset = 0;
        for &p in parts {
            let part = self.value(p);
            for r in 0..rows {
                for c in 0..part.cols() {
                    value.set(r, offset + c, part.get(r, c));
                }
            }
            offset += part.cols();
        }
        Ok(self.push(
            value,
            Op::ConcatCols {
                parts: parts.to_vec(),
            },
        ))
    }

    /// Column `col` of `a` as a `B x 1` matrix.
    pub fn extract_col(&mut self, a: NodeId, col: usize) -> Result<NodeId> {
        let (rows, cols) = self.value(a).shape();
        if col >= cols {
            return Err(TmurError::shape(format!(
                "extract_col: column {col} out of range for width {cols}"
            )));
        }
        let mut value = DenseArray::zeros(rows, 1);
        for r in 0..rows {
            value.set(r, 0, self.value(a).get(r, col));
        }
        Ok(self.push(value, Op::ExtractCol { a, col }))
    }

    /// Row sums as a `B x 1` matrix.
    pub fn row_sum(&mut self, a: NodeId) -> NodeId {
        let (rows, cols) = self.value(a).shape();
        let mut value = DenseArray::zeros(rows, 1);
        for r in 0..rows {
            let mut s = 0.0;
            for c in 0..cols {
                s += self.value(a).get(r, c);
            }
            value.set(r, 0, s);
        }
        self.push(value, Op::RowSum { a })
    }

    /// Column means as a `1 x n` matrix (mean over the batch).
    pub fn col_mean(&mut self, a: NodeId) -> NodeId {
        let (rows, cols) = self.value(a).shape();
        let mut value = DenseArray::zeros(1, cols);
        for c in 0..cols {
            let mut s = 0.0;
            for r in 0..rows {
                s += self.value(a).get(r, c);
            }
            value.set(0, c, s / rows as f64);
        }
        self.push(value, Op::ColMean { a })
    }

    /// Mean over all entries as a `1 x 1` matrix.
    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let (rows, cols) = self.value(a).shape();
        let sum: f64 = self.value(a).data().iter().sum();
        let value = DenseArray::scalar(sum / (rows * cols) as f64);
        self.push(value, Op::MeanAll { a })
    }

    /// Normalize each row to unit Euclidean norm. Rows with norm below
    /// [`NORMALIZE_EPS`] map to zero.
    pub fn row_l2_normalize(&mut self, a: NodeId) -> NodeId {
        let (rows, cols) = self.value(a).shape();
        let mut value = DenseArray::zeros(rows, cols);
        for r in 0..rows {
            let row = self.value(a).row(r);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm >= NORMALIZE_EPS {
                for c in 0..cols {
                    value.set(r, c, row[c] / norm);
                }
            }
        }
        self.push(value, Op::RowL2Normalize { a })
    }

    /// Per-row dot product of two `B x n` matrices, returned as `B x 1`.
    pub fn row_dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "row_dot")?;
        let (rows, cols) = self.value(a).shape();
        let mut value = DenseArray::zeros(rows, 1);
        for r in 0..rows {
            let mut s = 0.0;
            for c in 0..cols {
                s += self.value(a).get(r, c) * self.value(b).get(r, c);
            }
            value.set(r, 0, s);
        }
        Ok(self.push(value, Op::RowDot { a, b }))
    }

    /// Scale row `r` of `a` by the scalar `scale[r, 0]`.
    pub fn mul_col_vec(&mut self, a: NodeId, scale: NodeId) -> Result<NodeId> {
        let (rows, cols) = self.value(a).shape();
        if self.value(scale).shape() != (rows, 1) {
            return Err(TmurError::shape(format!(
                "mul_col_vec: scale must be {rows}x1, got {:?}",
                self.value(scale).shape()
            )));
        }
        let mut value = DenseArray::zeros(rows, cols);
        for r in 0..rows {
            let s = self.value(scale).get(r, 0);
            for c in 0..cols {
                value.set(r, c, self.value(a).get(r, c) * s);
            }
        }
        Ok(self.push(value, Op::MulColVec { a, scale }))
    }

    /// Reverse sweep from `root`, seeded with gradient `1` (root must be
    /// `1 x 1`). Parameter gradients accumulate into `store`.
    pub fn backward_scalar(&mut self, root: NodeId, store: &mut ParamStore) -> Result<()> {
        if self.value(root).shape() != (1, 1) {
            return Err(TmurError::shape(format!(
                "backward_scalar root must be 1x1, got {:?}",
                self.value(root).shape()
            )));
        }
        self.backward(root, DenseArray::scalar(1.0), store)
    }

    /// Reverse sweep from `root` with an explicit seed gradient. A tape can
    /// be walked backward exactly once.
    pub fn backward(
        &mut self,
        root: NodeId,
        seed: DenseArray,
        store: &mut ParamStore,
    ) -> Result<()> {
        if self.consumed {
            return Err(TmurError::state(
                "backward called twice on the same tape; record a new forward pass first",
            ));
        }
        if seed.shape() != self.value(root).shape() {
            return Err(TmurError::shape(format!(
                "seed gradient shape {:?} does not match root shape {:?}",
                seed.shape(),
                self.value(root).shape()
            )));
        }
        self.consumed = true;

        let mut grads: Vec<Option<DenseArray>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(seed);

        for i in (0..self.nodes.len()).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            // Split borrows: the node being visited is read-only, while
            // gradients of its inputs (strictly earlier indices) are written.
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::Param(pid) => store.accumulate_grad(pid, &g),
                Op::MatMul { a, b } => {
                    let da = g.matmul(&self.nodes[b.0].value.transposed());
                    let db = self.nodes[a.0].value.transposed().matmul(&g);
                    accumulate(&mut grads, a, da);
                    accumulate(&mut grads, b, db);
                }
                Op::AddRow { a, bias } => {
                    let (rows, cols) = g.shape();
                    let mut dbias = DenseArray::zeros(1, cols);
                    for c in 0..cols {
                        let mut s = 0.0;
                        for r in 0..rows {
                            s += g.get(r, c);
                        }
                        dbias.set(0, c, s);
                    }
                    accumulate(&mut grads, a, g);
                    accumulate(&mut grads, bias, dbias);
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, a, g.clone());
                    accumulate(&mut grads, b, g);
                }
                Op::Sub { a, b } => {
                    accumulate(&mut grads, b, g.map(|v| -v));
                    accumulate(&mut grads, a, g);
                }
                Op::Mul { a, b } => {
                    let da = elementwise(&g, &self.nodes[b.0].value, |g, y| g * y);
                    let db = elementwise(&g, &self.nodes[a.0].value, |g, x| g * x);
                    accumulate(&mut grads, a, da);
                    accumulate(&mut grads, b, db);
                }
                Op::Scale { a, factor } => {
                    accumulate(&mut grads, a, g.map(|v| factor * v));
                }
                Op::Shift { a } => {
                    accumulate(&mut grads, a, g);
                }
                Op::Softplus { a } => {
                    let da = elementwise(&g, &self.nodes[a.0].value, |g, x| g * sigmoid(x));
                    accumulate(&mut grads, a, da);
                }
                Op::Relu { a } => {
                    let da =
                        elementwise(&g, &self.nodes[a.0].value, |g, x| if x > 0.0 { g } else { 0.0 });
                    accumulate(&mut grads, a, da);
                }
                Op::Digamma { a } => {
                    let da = elementwise(&g, &self.nodes[a.0].value, |g, x| g * trigamma_raw(x));
                    accumulate(&mut grads, a, da);
                }
                Op::SoftmaxRows { a, tau } => {
                    let y = &self.nodes[i].value;
                    let (rows, cols) = y.shape();
                    let mut da = DenseArray::zeros(rows, cols);
                    for r in 0..rows {
                        let mut dot = 0.0;
                        for c in 0..cols {
                            dot += g.get(r, c) * y.get(r, c);
                        }
                        for c in 0..cols {
                            da.set(r, c, y.get(r, c) * (g.get(r, c) - dot) / tau);
                        }
                    }
                    accumulate(&mut grads, a, da);
                }
                Op::LayerNorm { x, gain, shift, eps } => {
                    let xv = &self.nodes[x.0].value;
                    let gv = &self.nodes[gain.0].value;
                    let (rows, d) = xv.shape();
                    let mut dx = DenseArray::zeros(rows, d);
                    let mut dgain = DenseArray::zeros(1, d);
                    let mut dshift = DenseArray::zeros(1, d);
                    for r in 0..rows {
                        let row = xv.row(r);
                        let (mean, inv_std) = row_moments(row, eps);
                        let mut m1 = 0.0;
                        let mut m2 = 0.0;
                        let mut xhat = vec![0.0; d];
                        let mut dxhat = vec![0.0; d];
                        for c in 0..d {
                            xhat[c] = (row[c] - mean) * inv_std;
                            dxhat[c] = g.get(r, c) * gv.get(0, c);
                            m1 += dxhat[c];
                            m2 += dxhat[c] * xhat[c];
                            dgain.set(0, c, dgain.get(0, c) + g.get(r, c) * xhat[c]);
                            dshift.set(0, c, dshift.get(0, c) + g.get(r, c));
                        }
                        m1 /= d as f64;
                        m2 /= d as f64;
                        for c in 0..d {
                            dx.set(r, c, inv_std * (dxhat[c] - m1 - xhat[c] * m2));
                        }
                    }
                    accumulate(&mut grads, x, dx);
                    accumulate(&mut grads, gain, dgain);
                    accumulate(&mut grads, shift, dshift);
                }
                Op::ConcatCols { parts } => {
                    let mut offset = 0;
                    for &p in &parts {
                        let (rows, cols) = self.nodes[p.0].value.shape();
                        let mut dp = DenseArray::zeros(rows, cols);
                        for r in 0..rows {
                            for c in 0..cols {
                                dp.set(r, c, g.get(r, offset + c));
                            }
                        }
                        accumulate(&mut grads, p, dp);
                        offset += cols;
                    }
                }
                Op::ExtractCol { a, col } => {
                    let (rows, cols) = self.nodes[a.0].value.shape();
                    let mut da = DenseArray::zeros(rows, cols);
                    for r in 0..rows {
                        da.set(r, col, g.get(r, 0));
                    }
                    accumulate(&mut grads, a, da);
                }
                Op::RowSum { a } => {
                    let (rows, cols) = self.nodes[a.0].value.shape();
                    let mut da = DenseArray::zeros(rows, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            da.set(r, c, g.get(r, 0));
                        }
                    }
                    accumulate(&mut grads, a, da);
                }
                Op::ColMean { a } => {
                    let (rows, cols) = self.nodes[a.0].value.shape();
                    let inv = 1.0 / rows as f64;
                    let mut da = DenseArray::zeros(rows, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            da.set(r, c, g.get(0, c) * inv);
                        }
                    }
                    accumulate(&mut grads, a, da);
                }
                Op::MeanAll { a } => {
                    let (rows, cols) = self.nodes[a.0].value.shape();
                    let inv = g.get(0, 0) / (rows * cols) as f64;
                    accumulate(&mut grads, a, DenseArray::filled(rows, cols, inv));
                }
                Op::RowL2Normalize { a } => {
                    let xv = &self.nodes[a.0].value;
                    let yv = &self.nodes[i].value;
                    let (rows, cols) = xv.shape();
                    let mut da = DenseArray::zeros(rows, cols);
                    for r in 0..rows {
                        let norm = xv.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm < NORMALIZE_EPS {
                            continue;
                        }
                        let mut dot = 0.0;
                        for c in 0..cols {
                            dot += g.get(r, c) * yv.get(r, c);
                        }
                        for c in 0..cols {
                            da.set(r, c, (g.get(r, c) - yv.get(r, c) * dot) / norm);
                        }
                    }
                    accumulate(&mut grads, a, da);
                }
                Op::RowDot { a, b } => {
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    let (rows, cols) = av.shape();
                    let mut da = DenseArray::zeros(rows, cols);
                    let mut db = DenseArray::zeros(rows, cols);
                    for r in 0..rows {
                        let gr = g.get(r, 0);
                        for c in 0..cols {
                            da.set(r, c, gr * bv.get(r, c));
                            db.set(r, c, gr * av.get(r, c));
                        }
                    }
                    accumulate(&mut grads, a, da);
                    accumulate(&mut grads, b, db);
                }
                Op::MulColVec { a, scale } => {
                    let av = &self.nodes[a.0].value;
                    let sv = &self.nodes[scale.0].value;
                    let (rows, cols) = av.shape();
                    let mut da = DenseArray::zeros(rows, cols);
                    let mut ds = DenseArray::zeros(rows, 1);
                    for r in 0..rows {
                        let s = sv.get(r, 0);
                        let mut acc = 0.0;
                        for c in 0..cols {
                            da.set(r, c, g.get(r, c) * s);
                            acc += g.get(r, c) * av.get(r, c);
                        }
                        ds.set(r, 0, acc);
                    }
                    accumulate(&mut grads, a, da);
                    accumulate(&mut grads, scale, ds);
                }
            }
        }
        Ok(())
    }

    fn same_shape(&self, a: NodeId, b: NodeId, what: &str) -> Result<()> {
        let sa = self.value(a).shape();
        let sb = self.value(b).shape();
        if sa != sb {
            return Err(TmurError::shape(format!(
                "{what}: shape mismatch {sa:?} vs {sb:?}"
            )));
        }
        Ok(())
    }

    fn zip(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> DenseArray {
        elementwise(self.value(a), self.value(b), f)
    }
}

/// Affine map `x W + b` composed from `matmul` and `add_row`.
pub fn linear(tape: &mut Tape, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
    let xw = tape.matmul(x, w)?;
    tape.add_row(xw, b)
}

fn accumulate(grads: &mut [Option<DenseArray>], id: NodeId, delta: DenseArray) {
    match &mut grads[id.0] {
        Some(g) => {
            debug_assert_eq!(g.shape(), delta.shape());
            for (gv, dv) in g.data_mut().iter_mut().zip(delta.data()) {
                *gv += dv;
            }
        }
        slot => *slot = Some(delta),
    }
}

fn elementwise(a: &DenseArray, b: &DenseArray, f: impl Fn(f64, f64) -> f64) -> DenseArray {
    debug_assert_eq!(a.shape(), b.shape());
    let mut out = DenseArray::zeros(a.rows(), a.cols());
    for ((o, &x), &y) in out.data_mut().iter_mut().zip(a.data()).zip(b.data()) {
        *o = f(x, y);
    }
    out
}

fn softplus_scalar(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn row_moments(row: &[f64], eps: f64) -> (f64, f64) {
    let d = row.len() as f64;
    let mean = row.iter().sum::<f64>() / d;
    let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d;
    (mean, 1.0 / (var + eps).sqrt())
}
