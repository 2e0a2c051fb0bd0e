//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Each operation appends one node holding its forward value; inputs always
//! have smaller indices than their results, so a single reverse sweep over
//! the node list visits every node after all of its consumers.

use crate::error::{Error, Result};
use crate::nn::store::ParameterStore;
use crate::nn::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValueId(usize);

pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(String, ValueId)>,
}

struct Node {
    value: Tensor,
    op: Op,
}

enum Op {
    Constant,
    Param,
    /// `[r,k] x [k] -> [r]` or `[r,k] x [k,c] -> [r,c]`.
    MatMul(ValueId, ValueId),
    Add(ValueId, ValueId),
    Sub(ValueId, ValueId),
    Mul(ValueId, ValueId),
    Scale(ValueId, f64),
    AddScalar(ValueId),
    Concat(ValueId, ValueId),
    Tanh(ValueId),
    Sigmoid(ValueId),
    /// Masked entries (mask = false) get probability exactly 0.
    Softmax {
        input: ValueId,
        mask: Option<Vec<bool>>,
    },
    Ln(ValueId),
    Dot(ValueId, ValueId),
    Pick(ValueId, usize),
    Stack(Vec<ValueId>),
    /// `sum_i coeffs[i] * items[i]` over equally shaped vectors.
    LinComb {
        coeffs: ValueId,
        items: Vec<ValueId>,
    },
    Sum(ValueId),
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: ValueId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: ValueId) -> f64 {
        self.nodes[id.0].value.scalar_value()
    }

    fn push(&mut self, value: Tensor, op: Op) -> ValueId {
        self.nodes.push(Node { value, op });
        ValueId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, t: Tensor) -> ValueId {
        self.push(t, Op::Constant)
    }

    pub fn scalar_constant(&mut self, v: f64) -> ValueId {
        self.constant(Tensor::scalar(v))
    }

    /// Registers a named parameter from the store. Each name should be
    /// registered once per tape and the returned id reused.
    pub fn param(&mut self, name: &str, store: &ParameterStore) -> ValueId {
        let id = self.push(store.tensor(name).clone(), Op::Param);
        self.params.push((name.to_string(), id));
        id
    }

    pub fn matmul(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(av.shape().len(), 2, "matmul lhs must be rank 2");
        let (r, k) = (av.rows(), av.cols());
        let value = match bv.shape().len() {
            1 => {
                assert_eq!(bv.len(), k, "matmul inner dimension mismatch");
                let mut out = vec![0.0; r];
                for i in 0..r {
                    let row = av.row(i);
                    out[i] = row.iter().zip(bv.data()).map(|(x, y)| x * y).sum();
                }
                Tensor::vector(out)
            }
            2 => {
                assert_eq!(bv.rows(), k, "matmul inner dimension mismatch");
                let c = bv.cols();
                let mut out = vec![0.0; r * c];
                for i in 0..r {
                    for l in 0..k {
                        let x = av.at(i, l);
                        if x == 0.0 {
                            continue;
                        }
                        for j in 0..c {
                            out[i * c + j] += x * bv.at(l, j);
                        }
                    }
                }
                Tensor::matrix(r, c, out)
            }
            _ => panic!("matmul rhs must be rank 1 or 2"),
        };
        self.push(value, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let value = zip_elementwise(&self.nodes[a.0].value, &self.nodes[b.0].value, |x, y| x + y);
        self.push(value, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let value = zip_elementwise(&self.nodes[a.0].value, &self.nodes[b.0].value, |x, y| x - y);
        self.push(value, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let value = zip_elementwise(&self.nodes[a.0].value, &self.nodes[b.0].value, |x, y| x * y);
        self.push(value, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: ValueId, k: f64) -> ValueId {
        let value = map_elementwise(&self.nodes[a.0].value, |x| x * k);
        self.push(value, Op::Scale(a, k))
    }

    pub fn add_scalar(&mut self, a: ValueId, k: f64) -> ValueId {
        let value = map_elementwise(&self.nodes[a.0].value, |x| x + k);
        self.push(value, Op::AddScalar(a))
    }

    /// `1 - x`, elementwise.
    pub fn one_minus(&mut self, a: ValueId) -> ValueId {
        let neg = self.scale(a, -1.0);
        self.add_scalar(neg, 1.0)
    }

    pub fn concat(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(av.shape().len(), 1, "concat expects rank-1 tensors");
        assert_eq!(bv.shape().len(), 1, "concat expects rank-1 tensors");
        let mut data = Vec::with_capacity(av.len() + bv.len());
        data.extend_from_slice(av.data());
        data.extend_from_slice(bv.data());
        self.push(Tensor::vector(data), Op::Concat(a, b))
    }

    pub fn tanh(&mut self, a: ValueId) -> ValueId {
        let value = map_elementwise(&self.nodes[a.0].value, f64::tanh);
        self.push(value, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: ValueId) -> ValueId {
        let value = map_elementwise(&self.nodes[a.0].value, sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    /// Softmax over a vector; entries with `mask[i] == false` receive
    /// probability exactly 0 and the rest renormalize.
    pub fn softmax(&mut self, a: ValueId, mask: Option<&[bool]>) -> Result<ValueId> {
        let input = &self.nodes[a.0].value;
        let probs = softmax_masked(input.data(), mask)?;
        Ok(self.push(
            Tensor::vector(probs),
            Op::Softmax {
                input: a,
                mask: mask.map(|m| m.to_vec()),
            },
        ))
    }

    pub fn ln(&mut self, a: ValueId) -> ValueId {
        let value = map_elementwise(&self.nodes[a.0].value, f64::ln);
        self.push(value, Op::Ln(a))
    }

    pub fn dot(&mut self, a: ValueId, b: ValueId) -> ValueId {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(av.len(), bv.len(), "dot length mismatch");
        let v = av.data().iter().zip(bv.data()).map(|(x, y)| x * y).sum();
        self.push(Tensor::scalar(v), Op::Dot(a, b))
    }

    pub fn pick(&mut self, a: ValueId, index: usize) -> ValueId {
        let v = self.nodes[a.0].value.data()[index];
        self.push(Tensor::scalar(v), Op::Pick(a, index))
    }

    /// Stacks scalar nodes into one vector.
    pub fn stack(&mut self, items: &[ValueId]) -> ValueId {
        let data: Vec<f64> = items.iter().map(|id| self.scalar(*id)).collect();
        self.push(Tensor::vector(data), Op::Stack(items.to_vec()))
    }

    /// Linear combination `sum_i coeffs[i] * items[i]` of equally shaped vectors.
    pub fn lincomb(&mut self, coeffs: ValueId, items: &[ValueId]) -> ValueId {
        let cv = &self.nodes[coeffs.0].value;
        assert_eq!(cv.len(), items.len(), "one coefficient per item");
        assert!(!items.is_empty(), "lincomb of nothing");
        let dim = self.nodes[items[0].0].value.len();
        let mut out = vec![0.0; dim];
        for (i, id) in items.iter().enumerate() {
            let c = cv.data()[i];
            let item = self.nodes[id.0].value.data();
            assert_eq!(item.len(), dim, "lincomb item shape mismatch");
            for (o, x) in out.iter_mut().zip(item) {
                *o += c * x;
            }
        }
        self.push(
            Tensor::vector(out),
            Op::LinComb {
                coeffs,
                items: items.to_vec(),
            },
        )
    }

    /// Unweighted mean of equally shaped vectors.
    pub fn mean_vecs(&mut self, items: &[ValueId]) -> ValueId {
        let n = items.len();
        let coeffs = self.constant(Tensor::vector(vec![1.0 / n as f64; n]));
        self.lincomb(coeffs, items)
    }

    pub fn sum(&mut self, a: ValueId) -> ValueId {
        let v = self.nodes[a.0].value.data().iter().sum();
        self.push(Tensor::scalar(v), Op::Sum(a))
    }

    /// Gradients of a scalar loss with respect to every node that feeds it.
    pub fn backward(&self, loss: ValueId) -> Gradients {
        assert!(
            self.nodes[loss.0].value.is_scalar(),
            "backward requires a scalar loss"
        );
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let Some(grad) = grads[i].take() else {
                continue;
            };
            self.propagate(i, &grad, &mut grads);
            grads[i] = Some(grad);
        }
        Gradients { by_node: grads }
    }

    fn propagate(&self, index: usize, grad: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[index];
        let g = grad.data();
        match &node.op {
            Op::Constant | Op::Param => {}
            Op::MatMul(a, b) => {
                let av = &self.nodes[a.0].value;
                let bv = &self.nodes[b.0].value;
                let (r, k) = (av.rows(), av.cols());
                if bv.shape().len() == 1 {
                    let mut da = vec![0.0; r * k];
                    let mut db = vec![0.0; k];
                    for i in 0..r {
                        let gi = g[i];
                        let row = av.row(i);
                        for j in 0..k {
                            da[i * k + j] += gi * bv.data()[j];
                            db[j] += gi * row[j];
                        }
                    }
                    accumulate(grads, *a, Tensor::matrix(r, k, da));
                    accumulate(grads, *b, Tensor::vector(db));
                } else {
                    let c = bv.cols();
                    let mut da = vec![0.0; r * k];
                    let mut db = vec![0.0; k * c];
                    for i in 0..r {
                        for l in 0..k {
                            let mut acc = 0.0;
                            for j in 0..c {
                                let gij = g[i * c + j];
                                acc += gij * bv.at(l, j);
                                db[l * c + j] += av.at(i, l) * gij;
                            }
                            da[i * k + l] += acc;
                        }
                    }
                    accumulate(grads, *a, Tensor::matrix(r, k, da));
                    accumulate(grads, *b, Tensor::matrix(k, c, db));
                }
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, grad.clone());
                accumulate(grads, *b, grad.clone());
            }
            Op::Sub(a, b) => {
                accumulate(grads, *a, grad.clone());
                accumulate(grads, *b, map_elementwise(grad, |x| -x));
            }
            Op::Mul(a, b) => {
                let da = zip_elementwise(grad, &self.nodes[b.0].value, |x, y| x * y);
                let db = zip_elementwise(grad, &self.nodes[a.0].value, |x, y| x * y);
                accumulate(grads, *a, da);
                accumulate(grads, *b, db);
            }
            Op::Scale(a, k) => {
                accumulate(grads, *a, map_elementwise(grad, |x| x * k));
            }
            Op::AddScalar(a) => {
                accumulate(grads, *a, grad.clone());
            }
            Op::Concat(a, b) => {
                let alen = self.nodes[a.0].value.len();
                accumulate(grads, *a, Tensor::vector(g[..alen].to_vec()));
                accumulate(grads, *b, Tensor::vector(g[alen..].to_vec()));
            }
            Op::Tanh(a) => {
                let da = zip_elementwise(&node.value, grad, |y, gi| (1.0 - y * y) * gi);
                accumulate(grads, *a, da);
            }
            Op::Sigmoid(a) => {
                let da = zip_elementwise(&node.value, grad, |y, gi| y * (1.0 - y) * gi);
                accumulate(grads, *a, da);
            }
            Op::Softmax { input, mask } => {
                let y = node.value.data();
                let allowed = |i: usize| mask.as_ref().map_or(true, |m| m[i]);
                let inner: f64 = (0..y.len())
                    .filter(|&i| allowed(i))
                    .map(|i| g[i] * y[i])
                    .sum();
                let mut dx = vec![0.0; y.len()];
                for (i, d) in dx.iter_mut().enumerate() {
                    if allowed(i) {
                        *d = y[i] * (g[i] - inner);
                    }
                }
                accumulate(grads, *input, Tensor::vector(dx));
            }
            Op::Ln(a) => {
                let da = zip_elementwise(grad, &self.nodes[a.0].value, |gi, x| gi / x);
                accumulate(grads, *a, da);
            }
            Op::Dot(a, b) => {
                let gs = grad.scalar_value();
                let da = map_elementwise(&self.nodes[b.0].value, |x| gs * x);
                let db = map_elementwise(&self.nodes[a.0].value, |x| gs * x);
                accumulate(grads, *a, da);
                accumulate(grads, *b, db);
            }
            Op::Pick(a, index) => {
                let mut dx = Tensor::zeros_like(&self.nodes[a.0].value);
                dx.data_mut()[*index] = grad.scalar_value();
                accumulate(grads, *a, dx);
            }
            Op::Stack(items) => {
                for (i, id) in items.iter().enumerate() {
                    accumulate(grads, *id, Tensor::scalar(g[i]));
                }
            }
            Op::LinComb { coeffs, items } => {
                let cv = &self.nodes[coeffs.0].value;
                let mut dc = vec![0.0; items.len()];
                for (i, id) in items.iter().enumerate() {
                    let item = self.nodes[id.0].value.data();
                    dc[i] = g.iter().zip(item).map(|(x, y)| x * y).sum();
                    let c = cv.data()[i];
                    accumulate(grads, *id, map_elementwise(grad, |x| c * x));
                }
                accumulate(grads, *coeffs, Tensor::vector(dc));
            }
            Op::Sum(a) => {
                let gs = grad.scalar_value();
                let mut dx = Tensor::zeros_like(&self.nodes[a.0].value);
                dx.fill(gs);
                accumulate(grads, *a, dx);
            }
        }
    }

    /// Adds the gradients of every registered parameter into the store.
    pub fn accumulate_param_grads(&self, grads: &Gradients, store: &mut ParameterStore) {
        for (name, id) in &self.params {
            if let Some(g) = &grads.by_node[id.0] {
                store.add_grad(name, g);
            }
        }
    }
}

pub struct Gradients {
    by_node: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: ValueId) -> Option<&Tensor> {
        self.by_node[id.0].as_ref()
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: ValueId, delta: Tensor) {
    match &mut grads[id.0] {
        Some(existing) => existing.add_assign(&delta),
        slot @ None => *slot = Some(delta),
    }
}

fn map_elementwise(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(t.shape().to_vec(), t.data().iter().map(|&x| f(x)).collect())
}

fn zip_elementwise(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    assert_eq!(a.shape(), b.shape(), "elementwise shape mismatch");
    Tensor::new(
        a.shape().to_vec(),
        a.data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect(),
    )
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable masked softmax over a plain slice. Masked entries
/// (mask = false) come out exactly 0.
pub fn softmax_masked(scores: &[f64], mask: Option<&[bool]>) -> Result<Vec<f64>> {
    if let Some(m) = mask {
        assert_eq!(m.len(), scores.len(), "mask length mismatch");
    }
    let allowed = |i: usize| mask.map_or(true, |m| m[i]);
    let max = (0..scores.len())
        .filter(|&i| allowed(i))
        .map(|i| scores[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::InvalidState(
            "softmax over a fully masked vector".into(),
        ));
    }
    let mut out = vec![0.0; scores.len()];
    let mut total = 0.0;
    for (i, o) in out.iter_mut().enumerate() {
        if allowed(i) {
            let e = (scores[i] - max).exp();
            *o = e;
            total += e;
        }
    }
    for o in &mut out {
        *o /= total;
    }
    Ok(out)
}
