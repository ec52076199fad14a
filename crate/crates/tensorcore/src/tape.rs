//! Tape-based reverse-mode differentiation.
//!
//! Every operation on a [`Var`] appends a node to its [`Tape`]. Nodes only
//! reference earlier nodes, so the tape is a topological order by
//! construction and [`Tape::backward`] walks it once in reverse.

use std::cell::RefCell;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{shape_err, Result, TensorError};
use crate::ops::{self, Activation, LossKind};
use crate::real::Real;
use crate::tensor::Tensor;

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
enum Op {
    Leaf,
    Conv2d { x: usize, w: usize, b: usize, stride: usize },
    Linear { x: usize, w: usize, b: Option<usize> },
    Act { x: usize, kind: Activation },
    Upsample { x: usize, factor: usize },
    Add { a: usize, b: usize },
    Sub { a: usize, b: usize },
    Mul { a: usize, b: usize },
    Div { a: usize, b: usize },
    AddScalar { x: usize },
    Scale { x: usize, c: f64 },
    Sum { x: usize },
    MeanRows { x: usize },
    ConcatCols { a: usize, b: usize },
    GatherRows { x: usize, idx: Vec<usize> },
    ScatterAddRows { x: usize, idx: Vec<usize> },
    SegmentSoftmax { x: usize, seg: Vec<usize> },
    ScaleRows { x: usize, s: usize },
    Reshape { x: usize },
    StandardizeCols { x: usize, eps: f64 },
    Loss { pred: usize, target: usize, kind: LossKind },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op,
}

/// Records a computation for later differentiation.
pub struct Tape<T> {
    id: u64,
    nodes: RefCell<Vec<Node<T>>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Handle to a recorded value.
#[derive(Clone, Copy)]
pub struct Var<'t, T> {
    tape: &'t Tape<T>,
    idx: usize,
}

impl<T> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var(tape={}, node={})", self.tape.id, self.idx)
    }
}

/// Gradients of a scalar with respect to every node of a tape.
pub struct Gradients<T> {
    tape_id: u64,
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient for `var`, or `None` if the loss does not depend on it.
    pub fn get(&self, var: Var<'_, T>) -> Option<&Tensor<T>> {
        if var.tape.id != self.tape_id {
            return None;
        }
        self.grads.get(var.idx).and_then(|g| g.as_ref())
    }

    /// Gradient for `var`, zero-filled when the loss does not depend on it.
    pub fn get_or_zeros(&self, var: Var<'_, T>) -> Tensor<T> {
        self.get(var).cloned().unwrap_or_else(|| Tensor::zeros(var.shape().as_slice()))
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed), nodes: RefCell::new(Vec::new()) }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Input or parameter node.
    pub fn leaf(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf)
    }

    fn push(&self, value: Tensor<T>, op: Op) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op });
        Var { tape: self, idx: nodes.len() - 1 }
    }

    fn own(&self, v: Var<'_, T>) -> Result<usize> {
        if v.tape.id == self.id {
            Ok(v.idx)
        } else {
            Err(TensorError::ForeignVar)
        }
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var<'_, T>) -> Result<Gradients<T>> {
        let root = self.own(loss)?;
        let nodes = self.nodes.borrow();
        if nodes[root].value.len() != 1 {
            return Err(TensorError::NonScalarLoss(nodes[root].value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..nodes.len()).map(|_| None).collect();
        grads[root] = Some(Tensor::full(nodes[root].value.shape(), T::one()));

        for i in (0..=root).rev() {
            let node = &nodes[i];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            // Interior gradients are consumed; only leaves keep theirs.
            let Some(g) = grads[i].take() else { continue };
            let val = |j: usize| &nodes[j].value;
            match &node.op {
                Op::Leaf => unreachable!(),
                &Op::Conv2d { x, w, b, stride } => {
                    let (dx, dw, db) = ops::conv2d_backward(val(x), val(w), val(b), stride, &g)?;
                    accumulate(&mut grads, x, dx);
                    accumulate(&mut grads, w, dw);
                    accumulate(&mut grads, b, db);
                }
                &Op::Linear { x, w, b } => {
                    let (dx, dw, db) = ops::linear_backward(val(x), val(w), &g);
                    accumulate(&mut grads, x, dx);
                    accumulate(&mut grads, w, dw);
                    if let Some(b) = b {
                        accumulate(&mut grads, b, db);
                    }
                }
                &Op::Act { x, kind } => {
                    let dx = ops::activation_backward(val(x), &node.value, &g, kind);
                    accumulate(&mut grads, x, dx);
                }
                &Op::Upsample { x, factor } => {
                    let dx = ops::upsample_nearest_backward(val(x).shape(), &g, factor);
                    accumulate(&mut grads, x, dx);
                }
                &Op::Add { a, b } => {
                    accumulate(&mut grads, a, g.clone());
                    accumulate(&mut grads, b, g);
                }
                &Op::Sub { a, b } => {
                    accumulate(&mut grads, b, g.map(|v| -v));
                    accumulate(&mut grads, a, g);
                }
                &Op::Mul { a, b } => {
                    let da = zip_map(&g, val(b), |gv, bv| gv * bv);
                    let db = zip_map(&g, val(a), |gv, av| gv * av);
                    accumulate(&mut grads, a, da);
                    accumulate(&mut grads, b, db);
                }
                &Op::Div { a, b } => {
                    let da = zip_map(&g, val(b), |gv, bv| gv / bv);
                    let y = &node.value;
                    let db = Tensor::new(
                        y.shape().to_vec(),
                        g.data()
                            .iter()
                            .zip(y.data())
                            .zip(val(b).data())
                            .map(|((&gv, &yv), &bv)| -gv * yv / bv)
                            .collect(),
                    )?;
                    accumulate(&mut grads, a, da);
                    accumulate(&mut grads, b, db);
                }
                &Op::AddScalar { x } => accumulate(&mut grads, x, g),
                &Op::Scale { x, c } => {
                    let c = T::lit(c);
                    accumulate(&mut grads, x, g.map(|v| v * c));
                }
                &Op::Sum { x } => {
                    let gv = g.item();
                    accumulate(&mut grads, x, Tensor::full(val(x).shape(), gv));
                }
                &Op::MeanRows { x } => {
                    let (n, m) = (val(x).shape()[0], val(x).shape()[1]);
                    let inv = T::one() / T::lit(n as f64);
                    let mut dx = Vec::with_capacity(n * m);
                    for _ in 0..n {
                        dx.extend(g.data().iter().map(|&v| v * inv));
                    }
                    accumulate(&mut grads, x, Tensor::new(vec![n, m], dx)?);
                }
                &Op::ConcatCols { a, b } => {
                    let (n, ca) = (val(a).shape()[0], val(a).shape()[1]);
                    let cb = val(b).shape()[1];
                    let mut da = Vec::with_capacity(n * ca);
                    let mut db = Vec::with_capacity(n * cb);
                    for r in 0..n {
                        let row = &g.data()[r * (ca + cb)..(r + 1) * (ca + cb)];
                        da.extend_from_slice(&row[..ca]);
                        db.extend_from_slice(&row[ca..]);
                    }
                    accumulate(&mut grads, a, Tensor::new(vec![n, ca], da)?);
                    accumulate(&mut grads, b, Tensor::new(vec![n, cb], db)?);
                }
                Op::GatherRows { x, idx } => {
                    let shape = val(*x).shape();
                    let m = shape[1];
                    let mut dx = vec![T::zero(); shape[0] * m];
                    for (r, &src) in idx.iter().enumerate() {
                        for c in 0..m {
                            dx[src * m + c] = dx[src * m + c] + g.data()[r * m + c];
                        }
                    }
                    accumulate(&mut grads, *x, Tensor::new(shape.to_vec(), dx)?);
                }
                Op::ScatterAddRows { x, idx } => {
                    let m = g.shape()[1];
                    let mut dx = Vec::with_capacity(idx.len() * m);
                    for &dst in idx {
                        dx.extend_from_slice(&g.data()[dst * m..(dst + 1) * m]);
                    }
                    accumulate(&mut grads, *x, Tensor::new(val(*x).shape().to_vec(), dx)?);
                }
                Op::SegmentSoftmax { x, seg } => {
                    let y = node.value.data();
                    let groups = seg.iter().copied().max().map_or(0, |m| m + 1);
                    let mut dot = vec![T::zero(); groups];
                    for ((&gv, &yv), &s) in g.data().iter().zip(y).zip(seg) {
                        dot[s] = dot[s] + gv * yv;
                    }
                    let dx: Vec<T> = g
                        .data()
                        .iter()
                        .zip(y)
                        .zip(seg)
                        .map(|((&gv, &yv), &s)| yv * (gv - dot[s]))
                        .collect();
                    accumulate(&mut grads, *x, Tensor::new(val(*x).shape().to_vec(), dx)?);
                }
                &Op::ScaleRows { x, s } => {
                    let (n, m) = (val(x).shape()[0], val(x).shape()[1]);
                    let (xd, sd, gd) = (val(x).data(), val(s).data(), g.data());
                    let mut dx = Vec::with_capacity(n * m);
                    let mut ds = Vec::with_capacity(n);
                    for r in 0..n {
                        let mut acc = T::zero();
                        for c in 0..m {
                            dx.push(gd[r * m + c] * sd[r]);
                            acc = acc + gd[r * m + c] * xd[r * m + c];
                        }
                        ds.push(acc);
                    }
                    accumulate(&mut grads, x, Tensor::new(vec![n, m], dx)?);
                    accumulate(&mut grads, s, Tensor::new(val(s).shape().to_vec(), ds)?);
                }
                &Op::Reshape { x } => {
                    accumulate(&mut grads, x, g.reshape(val(x).shape())?);
                }
                &Op::StandardizeCols { x, eps } => {
                    let (_, inv_std) = ops::standardize_cols(val(x), eps)?;
                    accumulate(&mut grads, x, ops::standardize_cols_backward(&node.value, &inv_std, &g));
                }
                &Op::Loss { pred, target, kind } => {
                    let gv = g.item();
                    accumulate(&mut grads, pred, ops::loss_backward(val(pred), val(target), kind, gv));
                    let dt = ops::loss_backward(val(target), val(pred), kind, gv);
                    accumulate(&mut grads, target, dt);
                }
            }
        }
        Ok(Gradients { tape_id: self.id, grads })
    }
}

fn zip_map<T: Real>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("same shape")
}

fn accumulate<T: Real>(grads: &mut [Option<Tensor<T>>], idx: usize, g: Tensor<T>) {
    match &mut grads[idx] {
        Some(acc) => {
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a = *a + *b;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

fn require_2d(shape: &[usize], op: &'static str) -> Result<(usize, usize)> {
    match *shape {
        [n, m] => Ok((n, m)),
        _ => Err(shape_err(op, format!("expected a matrix, got {shape:?}"))),
    }
}

impl<'t, T: Real> Var<'t, T> {
    pub fn value(&self) -> Tensor<T> {
        self.tape.nodes.borrow()[self.idx].value.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.idx].value.shape().to_vec()
    }

    /// Value of a single-element variable.
    pub fn item(&self) -> T {
        self.tape.nodes.borrow()[self.idx].value.item()
    }

    fn with<R>(&self, f: impl FnOnce(&Tensor<T>) -> R) -> R {
        f(&self.tape.nodes.borrow()[self.idx].value)
    }

    fn other(&self, o: Var<'_, T>) -> Result<usize> {
        self.tape.own(o)
    }

    fn binary(self, o: Var<'_, T>, op: &'static str, f: impl Fn(T, T) -> T, make: impl FnOnce(usize, usize) -> Op) -> Result<Self> {
        let b = self.other(o)?;
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (x, y) = (&nodes[self.idx].value, &nodes[b].value);
            if x.shape() != y.shape() {
                return Err(shape_err(op, format!("{:?} vs {:?}", x.shape(), y.shape())));
            }
            zip_map(x, y, f)
        };
        Ok(self.tape.push(value, make(self.idx, b)))
    }

    pub fn conv2d(self, kernel: Var<'_, T>, bias: Var<'_, T>, stride: usize) -> Result<Self> {
        let (w, b) = (self.other(kernel)?, self.other(bias)?);
        let value = {
            let nodes = self.tape.nodes.borrow();
            ops::conv2d(&nodes[self.idx].value, &nodes[w].value, &nodes[b].value, stride)?
        };
        Ok(self.tape.push(value, Op::Conv2d { x: self.idx, w, b, stride }))
    }

    /// `x W^T + b` for `x` of shape `[D]` or `[N, D]`.
    pub fn linear(self, weight: Var<'_, T>, bias: Option<Var<'_, T>>) -> Result<Self> {
        let w = self.other(weight)?;
        let b = bias.map(|b| self.other(b)).transpose()?;
        let value = {
            let nodes = self.tape.nodes.borrow();
            ops::linear(&nodes[self.idx].value, &nodes[w].value, b.map(|b| &nodes[b].value))?
        };
        Ok(self.tape.push(value, Op::Linear { x: self.idx, w, b }))
    }

    pub fn activation(self, kind: Activation) -> Self {
        let value = self.with(|x| ops::activation(x, kind));
        self.tape.push(value, Op::Act { x: self.idx, kind })
    }

    pub fn relu(self) -> Self {
        self.activation(Activation::Relu)
    }

    pub fn sigmoid(self) -> Self {
        self.activation(Activation::Sigmoid)
    }

    pub fn leaky_relu(self, alpha: f64) -> Self {
        self.activation(Activation::LeakyRelu(alpha))
    }

    pub fn elu(self) -> Self {
        self.activation(Activation::Elu)
    }

    pub fn upsample_nearest(self, factor: usize) -> Result<Self> {
        let value = self.with(|x| ops::upsample_nearest(x, factor))?;
        Ok(self.tape.push(value, Op::Upsample { x: self.idx, factor }))
    }

    pub fn add(self, o: Var<'_, T>) -> Result<Self> {
        self.binary(o, "add", |a, b| a + b, |a, b| Op::Add { a, b })
    }

    pub fn sub(self, o: Var<'_, T>) -> Result<Self> {
        self.binary(o, "sub", |a, b| a - b, |a, b| Op::Sub { a, b })
    }

    pub fn mul(self, o: Var<'_, T>) -> Result<Self> {
        self.binary(o, "mul", |a, b| a * b, |a, b| Op::Mul { a, b })
    }

    pub fn div(self, o: Var<'_, T>) -> Result<Self> {
        self.binary(o, "div", |a, b| a / b, |a, b| Op::Div { a, b })
    }

    pub fn add_scalar(self, c: f64) -> Self {
        let c = T::lit(c);
        let value = self.with(|x| x.map(|v| v + c));
        self.tape.push(value, Op::AddScalar { x: self.idx })
    }

    pub fn scale(self, c: f64) -> Self {
        let cc = T::lit(c);
        let value = self.with(|x| x.map(|v| v * cc));
        self.tape.push(value, Op::Scale { x: self.idx, c })
    }

    /// Sum of all elements as a `[1]` tensor.
    pub fn sum(self) -> Self {
        let value = self.with(|x| Tensor::scalar(x.sum()));
        self.tape.push(value, Op::Sum { x: self.idx })
    }

    /// Column means of an `[N, M]` matrix, shape `[M]`.
    pub fn mean_rows(self) -> Result<Self> {
        let value = self.with(|x| -> Result<Tensor<T>> {
            let (n, m) = require_2d(x.shape(), "mean_rows")?;
            let mut out = vec![T::zero(); m];
            for r in 0..n {
                for (o, &v) in out.iter_mut().zip(&x.data()[r * m..(r + 1) * m]) {
                    *o = *o + v;
                }
            }
            let inv = T::one() / T::lit(n as f64);
            Tensor::new(vec![m], out.into_iter().map(|v| v * inv).collect())
        })?;
        Ok(self.tape.push(value, Op::MeanRows { x: self.idx }))
    }

    pub fn concat_cols(self, o: Var<'_, T>) -> Result<Self> {
        let b = self.other(o)?;
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (x, y) = (&nodes[self.idx].value, &nodes[b].value);
            let (n, ca) = require_2d(x.shape(), "concat_cols")?;
            let (n2, cb) = require_2d(y.shape(), "concat_cols")?;
            if n != n2 {
                return Err(shape_err("concat_cols", format!("{n} vs {n2} rows")));
            }
            let mut data = Vec::with_capacity(n * (ca + cb));
            for r in 0..n {
                data.extend_from_slice(&x.data()[r * ca..(r + 1) * ca]);
                data.extend_from_slice(&y.data()[r * cb..(r + 1) * cb]);
            }
            Tensor::new(vec![n, ca + cb], data)?
        };
        Ok(self.tape.push(value, Op::ConcatCols { a: self.idx, b }))
    }

    /// Rows `idx[i]` of an `[N, M]` matrix, shape `[len(idx), M]`.
    pub fn gather_rows(self, idx: &[usize]) -> Result<Self> {
        let value = self.with(|x| -> Result<Tensor<T>> {
            let (n, m) = require_2d(x.shape(), "gather_rows")?;
            if idx.is_empty() {
                return Err(shape_err("gather_rows", "empty index list"));
            }
            let mut data = Vec::with_capacity(idx.len() * m);
            for &i in idx {
                if i >= n {
                    return Err(shape_err("gather_rows", format!("row {i} of {n}")));
                }
                data.extend_from_slice(&x.data()[i * m..(i + 1) * m]);
            }
            Tensor::new(vec![idx.len(), m], data)
        })?;
        Ok(self.tape.push(value, Op::GatherRows { x: self.idx, idx: idx.to_vec() }))
    }

    /// Sums row `r` of an `[E, M]` matrix into output row `idx[r]`, shape `[n, M]`.
    pub fn scatter_add_rows(self, idx: &[usize], n: usize) -> Result<Self> {
        let value = self.with(|x| -> Result<Tensor<T>> {
            let (e, m) = require_2d(x.shape(), "scatter_add_rows")?;
            if idx.len() != e {
                return Err(shape_err("scatter_add_rows", format!("{} indices for {e} rows", idx.len())));
            }
            let mut out = vec![T::zero(); n * m];
            for (r, &dst) in idx.iter().enumerate() {
                if dst >= n {
                    return Err(shape_err("scatter_add_rows", format!("row {dst} of {n}")));
                }
                for c in 0..m {
                    out[dst * m + c] = out[dst * m + c] + x.data()[r * m + c];
                }
            }
            Tensor::new(vec![n, m], out)
        })?;
        Ok(self.tape.push(value, Op::ScatterAddRows { x: self.idx, idx: idx.to_vec() }))
    }

    /// Softmax over the elements sharing a group id in `seg`.
    pub fn segment_softmax(self, seg: &[usize]) -> Result<Self> {
        let value = self.with(|x| -> Result<Tensor<T>> {
            if seg.len() != x.len() {
                return Err(shape_err("segment_softmax", format!("{} groups for {} scores", seg.len(), x.len())));
            }
            let groups = seg.iter().copied().max().map_or(0, |m| m + 1);
            Tensor::new(x.shape().to_vec(), ops::segment_softmax(x.data(), seg, groups))
        })?;
        Ok(self.tape.push(value, Op::SegmentSoftmax { x: self.idx, seg: seg.to_vec() }))
    }

    /// Multiplies row `r` of an `[N, M]` matrix by `s[r]`.
    pub fn scale_rows(self, s: Var<'_, T>) -> Result<Self> {
        let si = self.other(s)?;
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (x, sv) = (&nodes[self.idx].value, &nodes[si].value);
            let (n, m) = require_2d(x.shape(), "scale_rows")?;
            if sv.len() != n {
                return Err(shape_err("scale_rows", format!("{} scales for {n} rows", sv.len())));
            }
            let data = x.data().iter().enumerate().map(|(i, &v)| v * sv.data()[i / m]).collect();
            Tensor::new(vec![n, m], data)?
        };
        Ok(self.tape.push(value, Op::ScaleRows { x: self.idx, s: si }))
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        let value = self.with(|x| x.clone().reshape(shape))?;
        Ok(self.tape.push(value, Op::Reshape { x: self.idx }))
    }

    /// Per-column standardisation over the rows of an `[N, M]` matrix.
    pub fn standardize_cols(self, eps: f64) -> Result<Self> {
        let value = self.with(|x| ops::standardize_cols(x, eps))?.0;
        Ok(self.tape.push(value, Op::StandardizeCols { x: self.idx, eps }))
    }

    pub fn loss(self, target: Var<'_, T>, kind: LossKind) -> Result<Self> {
        let t = self.other(target)?;
        let value = {
            let nodes = self.tape.nodes.borrow();
            Tensor::scalar(ops::loss(&nodes[self.idx].value, &nodes[t].value, kind)?)
        };
        Ok(self.tape.push(value, Op::Loss { pred: self.idx, target: t, kind }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_sum_gradient() {
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::scalar(3.0));
        let loss = x.mul(x).unwrap().sum();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap().item(), 6.0);
    }

    #[test]
    fn relu_blocks_negative_preactivation() {
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::from_vec(vec![-1.5, 2.0]));
        let loss = x.relu().sum();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap().data(), [0.0, 1.0]);
    }

    #[test]
    fn rejects_foreign_and_non_scalar() {
        let a = Tape::<f64>::new();
        let b = Tape::<f64>::new();
        let x = a.leaf(Tensor::scalar(1.0));
        let y = b.leaf(Tensor::scalar(2.0));
        assert!(matches!(x.add(y), Err(TensorError::ForeignVar)));
        assert!(matches!(b.backward(x), Err(TensorError::ForeignVar)));
        let v = a.leaf(Tensor::from_vec(vec![1.0, 2.0]));
        assert!(matches!(a.backward(v), Err(TensorError::NonScalarLoss(_))));
    }

    #[test]
    fn unused_leaf_has_no_gradient() {
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::scalar(1.0));
        let y = tape.leaf(Tensor::scalar(2.0));
        let g = tape.backward(x.scale(2.0).sum()).unwrap();
        assert!(g.get(y).is_none());
        assert_eq!(g.get_or_zeros(y).item(), 0.0);
    }

    #[test]
    fn shared_subexpression_accumulates() {
        // f = (x * x) + x at x = 2 -> f' = 2x + 1 = 5
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::scalar(2.0));
        let f = x.mul(x).unwrap().add(x).unwrap();
        let g = tape.backward(f).unwrap();
        assert_eq!(g.get(x).unwrap().item(), 5.0);
    }
}
