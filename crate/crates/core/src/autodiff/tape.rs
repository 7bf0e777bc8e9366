//! Tape-based reverse-mode differentiation.
//!
//! Every op appends a node holding its forward value and enough context to
//! push gradients to its parents. `backward` walks the tape in reverse,
//! which is a valid reverse topological order because parents always
//! precede children.

use rand::Rng as _;

use super::matrix::{gemm, Matrix};
use super::params::{ParamId, ParamStore};
use super::AutodiffError;
use crate::rng::rng_from;

type Result<T> = std::result::Result<T, AutodiffError>;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Key for the counter-based dropout generator. The op id is supplied by
/// the tape, one per dropout call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DropoutKey {
    pub seed: u64,
    pub epoch: u64,
    pub batch: u64,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    RowGather(Var, Vec<usize>),
    Relu(Var),
    Elu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Dropout(Var, Vec<f64>),
    SegmentSum(Var, Vec<usize>),
    SegmentMean(Var, Vec<usize>, Vec<usize>),
    SegmentSoftmax(Var, Vec<usize>),
    Spmm(Var, SparseRows),
    Sum(Var),
    Mean(Var),
    RowSum(Var),
    Bce(Var, Vec<f64>, f64),
    Focal(Var, Vec<f64>, f64, f64),
}

/// Weighted edge list `(dst, src, w)` used by [`Tape::spmm`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRows {
    pub n_dst: usize,
    pub dst: Vec<usize>,
    pub src: Vec<usize>,
    pub weight: Vec<f64>,
}

impl SparseRows {
    pub fn new(n_dst: usize) -> Self {
        SparseRows {
            n_dst,
            ..Default::default()
        }
    }

    pub fn push(&mut self, dst: usize, src: usize, w: f64) {
        self.dst.push(dst);
        self.src.push(src);
        self.weight.push(w);
    }

    pub fn len(&self) -> usize {
        self.dst.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dst.is_empty()
    }

    /// Dense `n_dst x n_src` form, for oracles.
    pub fn to_dense(&self, n_src: usize) -> Matrix {
        let mut m = Matrix::zeros(self.n_dst, n_src);
        for k in 0..self.len() {
            let (d, s) = (self.dst[k], self.src[k]);
            m.set(d, s, m.get(d, s) + self.weight[k]);
        }
        m
    }
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug)]
pub struct Tape {
    nodes: Vec<Node>,
    train: bool,
    key: DropoutKey,
    next_op: u64,
}

/// Per-node gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

fn shape_err(op: &'static str, a: (usize, usize), b: (usize, usize)) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        left: a,
        right: b,
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn check_segments(op: &'static str, rows: usize, ids: &[usize], n: usize) -> Result<()> {
    if ids.len() != rows {
        return Err(shape_err(op, (rows, 0), (ids.len(), 0)));
    }
    if let Some(&bad) = ids.iter().find(|&&s| s >= n) {
        return Err(AutodiffError::SegmentOutOfRange {
            id: bad,
            segments: n,
        });
    }
    Ok(())
}

fn check_labels(op: &'static str, z: &Matrix, labels: &[f64]) -> Result<()> {
    if z.cols() != 1 || z.rows() != labels.len() {
        return Err(shape_err(op, z.shape(), (labels.len(), 1)));
    }
    if z.rows() == 0 {
        return Err(AutodiffError::EmptyBatch);
    }
    Ok(())
}

impl Tape {
    /// Tape in evaluation mode: dropout is the identity.
    pub fn eval() -> Self {
        Tape {
            nodes: Vec::new(),
            train: false,
            key: DropoutKey::default(),
            next_op: 0,
        }
    }

    pub fn train(key: DropoutKey) -> Self {
        Tape {
            nodes: Vec::new(),
            train: true,
            key,
            next_op: 0,
        }
    }

    pub fn is_train(&self) -> bool {
        self.train
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, vs: &[Var]) -> bool {
        vs.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    /// Input that receives a gradient (used by gradient checks).
    pub fn leaf(&mut self, m: Matrix) -> Var {
        self.push(m, Op::Leaf, true)
    }

    pub fn constant(&mut self, m: Matrix) -> Var {
        self.push(m, Op::Leaf, false)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id), true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(shape_err("matmul", sa, sb));
        }
        let v = self.value(a).matmul(self.value(b));
        let ng = self.ng(&[a, b]);
        Ok(self.push(v, Op::MatMul(a, b), ng))
    }

    fn zip(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_err(op, sa, sb));
        }
        let data = self
            .value(a)
            .as_slice()
            .iter()
            .zip(self.value(b).as_slice())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(Matrix::from_vec(sa.0, sa.1, data))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.zip("add", a, b, |x, y| x + y)?;
        let ng = self.ng(&[a, b]);
        Ok(self.push(v, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.zip("sub", a, b, |x, y| x - y)?;
        let ng = self.ng(&[a, b]);
        Ok(self.push(v, Op::Sub(a, b), ng))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.zip("mul", a, b, |x, y| x * y)?;
        let ng = self.ng(&[a, b]);
        Ok(self.push(v, Op::Mul(a, b), ng))
    }

    /// Adds a `1 x d` row vector to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(bias));
        if sb != (1, sa.1) {
            return Err(shape_err("add_row", sa, sb));
        }
        let mut v = self.value(a).clone();
        let b = self.value(bias).as_slice().to_vec();
        for r in 0..sa.0 {
            for (x, y) in v.row_mut(r).iter_mut().zip(&b) {
                *x += y;
            }
        }
        let ng = self.ng(&[a, bias]);
        Ok(self.push(v, Op::AddRow(a, bias), ng))
    }

    /// Scales row `i` of `a` by `c[i]`, where `c` is `n x 1`.
    pub fn mul_col(&mut self, a: Var, c: Var) -> Result<Var> {
        let (sa, sc) = (self.shape(a), self.shape(c));
        if sc != (sa.0, 1) {
            return Err(shape_err("mul_col", sa, sc));
        }
        let mut v = self.value(a).clone();
        for r in 0..sa.0 {
            let s = self.value(c).as_slice()[r];
            v.row_mut(r).iter_mut().for_each(|x| *x *= s);
        }
        let ng = self.ng(&[a, c]);
        Ok(self.push(v, Op::MulCol(a, c), ng))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x * s);
        let ng = self.ng(&[a]);
        self.push(v, Op::Scale(a, s), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map_or(0, |&p| self.shape(p).0);
        for &p in parts {
            if self.shape(p).0 != rows {
                return Err(shape_err("concat_cols", (rows, 0), self.shape(p)));
            }
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut v = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                v.row_mut(r)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        let ng = self.ng(parts);
        Ok(self.push(v, Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let sa = self.shape(a);
        if start > end || end > sa.1 {
            return Err(shape_err("slice_cols", sa, (start, end)));
        }
        let mut v = Matrix::zeros(sa.0, end - start);
        for r in 0..sa.0 {
            v.row_mut(r)
                .copy_from_slice(&self.value(a).row(r)[start..end]);
        }
        let ng = self.ng(&[a]);
        Ok(self.push(v, Op::SliceCols(a, start), ng))
    }

    pub fn row_gather(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let sa = self.shape(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= sa.0) {
            return Err(shape_err("row_gather", sa, (bad, 0)));
        }
        let v = self.value(a).select_rows(idx);
        let ng = self.ng(&[a]);
        Ok(self.push(v, Op::RowGather(a, idx.to_vec()), ng))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        let ng = self.ng(&[a]);
        self.push(v, Op::Relu(a), ng)
    }

    pub fn elu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { x.exp_m1() });
        let ng = self.ng(&[a]);
        self.push(v, Op::Elu(a), ng)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        let ng = self.ng(&[a]);
        self.push(v, Op::LeakyRelu(a, slope), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        let ng = self.ng(&[a]);
        self.push(v, Op::Sigmoid(a), ng)
    }

    /// Inverted dropout. Identity in eval mode or when `p == 0`.
    pub fn dropout(&mut self, a: Var, p: f64) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(AutodiffError::InvalidProbability(p));
        }
        if !self.train || p == 0.0 {
            return Ok(a);
        }
        let op = self.next_op;
        self.next_op += 1;
        let mut rng = rng_from(&[self.key.seed, self.key.epoch, self.key.batch, op]);
        let keep = 1.0 / (1.0 - p);
        let n = self.value(a).len();
        let mask: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let (r, c) = self.shape(a);
        let data = self
            .value(a)
            .as_slice()
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        let ng = self.ng(&[a]);
        Ok(self.push(Matrix::from_vec(r, c, data), Op::Dropout(a, mask), ng))
    }

    /// Sums rows of `a` into `n` segments by `ids[row]`. Empty segments are 0.
    pub fn segment_sum(&mut self, a: Var, ids: &[usize], n: usize) -> Result<Var> {
        let (rows, cols) = self.shape(a);
        check_segments("segment_sum", rows, ids, n)?;
        let mut v = Matrix::zeros(n, cols);
        for (r, &s) in ids.iter().enumerate() {
            for (o, x) in v.row_mut(s).iter_mut().zip(self.nodes[a.0].value.row(r)) {
                *o += x;
            }
        }
        let ng = self.ng(&[a]);
        Ok(self.push(v, Op::SegmentSum(a, ids.to_vec()), ng))
    }

    pub fn segment_mean(&mut self, a: Var, ids: &[usize], n: usize) -> Result<Var> {
        let (rows, cols) = self.shape(a);
        check_segments("segment_mean", rows, ids, n)?;
        let mut counts = vec![0usize; n];
        for &s in ids {
            counts[s] += 1;
        }
        let mut v = Matrix::zeros(n, cols);
        for (r, &s) in ids.iter().enumerate() {
            let w = 1.0 / counts[s] as f64;
            for (o, x) in v.row_mut(s).iter_mut().zip(self.nodes[a.0].value.row(r)) {
                *o += w * x;
            }
        }
        let ng = self.ng(&[a]);
        Ok(self.push(v, Op::SegmentMean(a, ids.to_vec(), counts), ng))
    }

    /// Softmax over the rows sharing a segment id, independently per column.
    pub fn segment_softmax(&mut self, a: Var, ids: &[usize], n: usize) -> Result<Var> {
        let (rows, cols) = self.shape(a);
        check_segments("segment_softmax", rows, ids, n)?;
        let x = self.value(a);
        let mut max = Matrix::filled(n, cols, f64::NEG_INFINITY);
        for (r, &s) in ids.iter().enumerate() {
            for c in 0..cols {
                max.set(s, c, max.get(s, c).max(x.get(r, c)));
            }
        }
        let mut v = Matrix::zeros(rows, cols);
        let mut denom = Matrix::zeros(n, cols);
        for (r, &s) in ids.iter().enumerate() {
            for c in 0..cols {
                let e = (x.get(r, c) - max.get(s, c)).exp();
                v.set(r, c, e);
                denom.set(s, c, denom.get(s, c) + e);
            }
        }
        for (r, &s) in ids.iter().enumerate() {
            for c in 0..cols {
                v.set(r, c, v.get(r, c) / denom.get(s, c));
            }
        }
        let ng = self.ng(&[a]);
        Ok(self.push(v, Op::SegmentSoftmax(a, ids.to_vec()), ng))
    }

    /// `out[d] = sum_k w_k * a[src_k]` over entries with `dst_k = d`.
    pub fn spmm(&mut self, a: Var, sp: &SparseRows) -> Result<Var> {
        let (rows, cols) = self.shape(a);
        if sp.src.len() != sp.dst.len() || sp.weight.len() != sp.dst.len() {
            return Err(shape_err(
                "spmm",
                (sp.dst.len(), 0),
                (sp.src.len(), sp.weight.len()),
            ));
        }
        if let Some(&bad) = sp.src.iter().find(|&&s| s >= rows) {
            return Err(shape_err("spmm", (rows, cols), (bad, 0)));
        }
        check_segments("spmm", sp.dst.len(), &sp.dst, sp.n_dst)?;
        let mut v = Matrix::zeros(sp.n_dst, cols);
        let x = &self.nodes[a.0].value;
        for k in 0..sp.len() {
            let w = sp.weight[k];
            for (o, xv) in v.row_mut(sp.dst[k]).iter_mut().zip(x.row(sp.src[k])) {
                *o += w * xv;
            }
        }
        let ng = self.ng(&[a]);
        Ok(self.push(v, Op::Spmm(a, sp.clone()), ng))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Matrix::scalar(self.value(a).sum());
        let ng = self.ng(&[a]);
        self.push(v, Op::Sum(a), ng)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let v = Matrix::scalar(if m.is_empty() {
            0.0
        } else {
            m.sum() / m.len() as f64
        });
        let ng = self.ng(&[a]);
        self.push(v, Op::Mean(a), ng)
    }

    /// Per-row sums as an `n x 1` column.
    pub fn row_sum(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let data = (0..m.rows()).map(|r| m.row(r).iter().sum()).collect();
        let v = Matrix::from_vec(m.rows(), 1, data);
        let ng = self.ng(&[a]);
        self.push(v, Op::RowSum(a), ng)
    }

    /// Mean of `-[pw * y * ln s(z) + (1 - y) * ln(1 - s(z))]`.
    pub fn bce_with_logits(&mut self, z: Var, labels: &[f64], pos_weight: f64) -> Result<Var> {
        check_labels("bce_with_logits", self.value(z), labels)?;
        let zs = self.value(z).as_slice();
        let total: f64 = zs
            .iter()
            .zip(labels)
            .map(|(&z, &y)| pos_weight * y * softplus(-z) + (1.0 - y) * softplus(z))
            .sum();
        let v = Matrix::scalar(total / labels.len() as f64);
        let ng = self.ng(&[z]);
        Ok(self.push(v, Op::Bce(z, labels.to_vec(), pos_weight), ng))
    }

    /// Mean of `-a_y (1 - p_y)^gamma ln p_y`, `a_1 = pos_weight`, `a_0 = 1`.
    pub fn focal_loss(
        &mut self,
        z: Var,
        labels: &[f64],
        gamma: f64,
        pos_weight: f64,
    ) -> Result<Var> {
        check_labels("focal_loss", self.value(z), labels)?;
        let total: f64 = self
            .value(z)
            .as_slice()
            .iter()
            .zip(labels)
            .map(|(&z, &y)| {
                let (s, a) = if y > 0.5 { (z, pos_weight) } else { (-z, 1.0) };
                a * sigmoid(-s).powf(gamma) * softplus(-s)
            })
            .sum();
        let v = Matrix::scalar(total / labels.len() as f64);
        let ng = self.ng(&[z]);
        Ok(self.push(v, Op::Focal(z, labels.to_vec(), gamma, pos_weight), ng))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(AutodiffError::NonScalarLoss { shape });
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Matrix::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let nodes = &self.nodes;
        let mut acc = |v: Var, m: Matrix| {
            if !nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(x) => x.add_assign(&m),
                slot => *slot = Some(m),
            }
        };
        let val = |v: Var| &nodes[v.0].value;
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (ma, mb) = (val(*a), val(*b));
                if nodes[a.0].needs_grad {
                    let mut ga = Matrix::zeros(ma.rows(), ma.cols());
                    gemm(false, g, true, mb, &mut ga, 0.0);
                    acc(*a, ga);
                }
                if nodes[b.0].needs_grad {
                    let mut gb = Matrix::zeros(mb.rows(), mb.cols());
                    gemm(true, ma, false, g, &mut gb, 0.0);
                    acc(*b, gb);
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|x| -x));
            }
            Op::AddRow(a, b) => {
                acc(*a, g.clone());
                let mut gb = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, x) in gb.row_mut(0).iter_mut().zip(g.row(r)) {
                        *o += x;
                    }
                }
                acc(*b, gb);
            }
            Op::Mul(a, b) => {
                let (ma, mb) = (val(*a), val(*b));
                let ga = zip_with(g, mb, |x, y| x * y);
                let gb = zip_with(g, ma, |x, y| x * y);
                acc(*a, ga);
                acc(*b, gb);
            }
            Op::MulCol(a, c) => {
                let (ma, mc) = (val(*a), val(*c));
                let mut ga = g.clone();
                let mut gc = Matrix::zeros(mc.rows(), 1);
                for r in 0..g.rows() {
                    let s = mc.as_slice()[r];
                    ga.row_mut(r).iter_mut().for_each(|x| *x *= s);
                    gc.as_mut_slice()[r] = g.row(r).iter().zip(ma.row(r)).map(|(x, y)| x * y).sum();
                }
                acc(*a, ga);
                acc(*c, gc);
            }
            Op::Scale(a, s) => acc(*a, g.map(|x| x * s)),
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = val(p).cols();
                    let mut gp = Matrix::zeros(g.rows(), w);
                    for r in 0..g.rows() {
                        gp.row_mut(r).copy_from_slice(&g.row(r)[off..off + w]);
                    }
                    off += w;
                    acc(p, gp);
                }
            }
            Op::SliceCols(a, start) => {
                let ma = val(*a);
                let mut ga = Matrix::zeros(ma.rows(), ma.cols());
                for r in 0..g.rows() {
                    ga.row_mut(r)[*start..*start + g.cols()].copy_from_slice(g.row(r));
                }
                acc(*a, ga);
            }
            Op::RowGather(a, idx) => {
                let ma = val(*a);
                let mut ga = Matrix::zeros(ma.rows(), ma.cols());
                for (k, &i) in idx.iter().enumerate() {
                    for (o, x) in ga.row_mut(i).iter_mut().zip(g.row(k)) {
                        *o += x;
                    }
                }
                acc(*a, ga);
            }
            Op::Relu(a) => acc(
                *a,
                zip_with(g, val(*a), |g, x| if x > 0.0 { g } else { 0.0 }),
            ),
            Op::Elu(a) => acc(
                *a,
                zip_with(g, val(*a), |g, x| if x > 0.0 { g } else { g * x.exp() }),
            ),
            Op::LeakyRelu(a, s) => acc(
                *a,
                zip_with(g, val(*a), |g, x| if x > 0.0 { g } else { g * s }),
            ),
            Op::Sigmoid(a) => acc(*a, zip_with(g, &node.value, |g, y| g * y * (1.0 - y))),
            Op::Dropout(a, mask) => {
                let data = g.as_slice().iter().zip(mask).map(|(g, m)| g * m).collect();
                acc(*a, Matrix::from_vec(g.rows(), g.cols(), data));
            }
            Op::SegmentSum(a, ids) => acc(*a, g.select_rows(ids)),
            Op::SegmentMean(a, ids, counts) => {
                let mut ga = g.select_rows(ids);
                for (r, &s) in ids.iter().enumerate() {
                    let w = 1.0 / counts[s] as f64;
                    ga.row_mut(r).iter_mut().for_each(|x| *x *= w);
                }
                acc(*a, ga);
            }
            Op::SegmentSoftmax(a, ids) => {
                let y = &node.value;
                let n = ids.iter().max().map_or(0, |m| m + 1);
                let mut dot = Matrix::zeros(n, y.cols());
                for (r, &s) in ids.iter().enumerate() {
                    for c in 0..y.cols() {
                        dot.set(s, c, dot.get(s, c) + y.get(r, c) * g.get(r, c));
                    }
                }
                let mut ga = Matrix::zeros(y.rows(), y.cols());
                for (r, &s) in ids.iter().enumerate() {
                    for c in 0..y.cols() {
                        ga.set(r, c, y.get(r, c) * (g.get(r, c) - dot.get(s, c)));
                    }
                }
                acc(*a, ga);
            }
            Op::Spmm(a, sp) => {
                let ma = val(*a);
                let mut ga = Matrix::zeros(ma.rows(), ma.cols());
                for k in 0..sp.len() {
                    let w = sp.weight[k];
                    for (o, x) in ga.row_mut(sp.src[k]).iter_mut().zip(g.row(sp.dst[k])) {
                        *o += w * x;
                    }
                }
                acc(*a, ga);
            }
            Op::Sum(a) => {
                let (r, c) = val(*a).shape();
                acc(*a, Matrix::filled(r, c, g.item()));
            }
            Op::Mean(a) => {
                let (r, c) = val(*a).shape();
                let n = (r * c).max(1) as f64;
                acc(*a, Matrix::filled(r, c, g.item() / n));
            }
            Op::RowSum(a) => {
                let (r, c) = val(*a).shape();
                let mut ga = Matrix::zeros(r, c);
                for i in 0..r {
                    let gi = g.as_slice()[i];
                    ga.row_mut(i).iter_mut().for_each(|x| *x = gi);
                }
                acc(*a, ga);
            }
            Op::Bce(z, labels, pw) => {
                let scale = g.item() / labels.len() as f64;
                let data = val(*z)
                    .as_slice()
                    .iter()
                    .zip(labels)
                    .map(|(&z, &y)| scale * (pw * y * (sigmoid(z) - 1.0) + (1.0 - y) * sigmoid(z)))
                    .collect();
                acc(*z, Matrix::from_vec(labels.len(), 1, data));
            }
            Op::Focal(z, labels, gamma, pw) => {
                let scale = g.item() / labels.len() as f64;
                let data = val(*z)
                    .as_slice()
                    .iter()
                    .zip(labels)
                    .map(|(&z, &y)| {
                        let (s, a, sign) = if y > 0.5 {
                            (z, *pw, 1.0)
                        } else {
                            (-z, 1.0, -1.0)
                        };
                        let (p, q) = (sigmoid(s), sigmoid(-s));
                        let ds = -a * q.powf(*gamma) * (gamma * p * softplus(-s) + q);
                        scale * sign * ds
                    })
                    .collect();
                acc(*z, Matrix::from_vec(labels.len(), 1, data));
            }
        }
    }

    /// Parameter bindings on this tape, in recording order.
    pub fn params(&self) -> impl Iterator<Item = (Var, ParamId)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Param(id) => Some((Var(i), id)),
                _ => None,
            })
    }
}

fn zip_with(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    let data = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Matrix::from_vec(a.rows(), a.cols(), data)
}
