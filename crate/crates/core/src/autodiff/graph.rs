//! Tape-based reverse mode. Nodes are appended in evaluation order, so the
//! tape is already topologically sorted and `backward` walks it once in
//! reverse.

use super::real::Dual;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Softplus(Var),
    Exp(Var),
    Log(Var),
    SumAll(Var),
    SumCols(Var),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    BernoulliLogLik(Var, Var),
    /// Elementwise kernel; `partials[k][e]` is `∂out[e]/∂inputs[k][e]`.
    Pointwise {
        inputs: Vec<Var>,
        partials: Vec<Vec<f64>>,
    },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients keyed by node; absent for nodes that do not require grad.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
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

    fn shape2(&self, v: Var) -> (usize, usize) {
        let t = &self.nodes[v.0].value;
        (t.rows(), t.cols())
    }

    fn push(
        &mut self,
        op: Op,
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        requires_grad: bool,
    ) -> Var {
        let value = Tensor::matrix(rows, cols, data).expect("graph ops produce valid shapes");
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Adds a matrix leaf; gradient tracking follows the tensor's flag.
    pub fn leaf(&mut self, t: Tensor) -> Result<Var> {
        if !t.is_matrix() {
            return Err(Error::shape(
                "Graph::leaf",
                "2-D tensor",
                format!("{:?}", t.shape()),
            ));
        }
        let rg = t.requires_grad();
        self.nodes.push(Node {
            op: Op::Leaf,
            value: t,
            requires_grad: rg,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Result<Var> {
        self.leaf(Tensor::matrix(rows, cols, data)?)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(usize, usize)> {
        let (sa, sb) = (self.shape2(a), self.shape2(b));
        if sa != sb {
            return Err(Error::shape(op, format!("{sa:?}"), format!("{sb:?}")));
        }
        Ok(sa)
    }

    /// `[n, k] · [k, m]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, k) = self.shape2(a);
        let (k2, m) = self.shape2(b);
        if k != k2 {
            return Err(Error::shape(
                "matmul",
                format!("[_, {k}] x [{k}, _]"),
                format!("[{k2}, {m}]"),
            ));
        }
        let mut out = vec![0.0; n * m];
        {
            let (x, w) = (self.value(a).data(), self.value(b).data());
            for i in 0..n {
                let orow = &mut out[i * m..(i + 1) * m];
                for p in 0..k {
                    let xv = x[i * k + p];
                    if xv == 0.0 {
                        continue;
                    }
                    for (o, wv) in orow.iter_mut().zip(&w[p * m..(p + 1) * m]) {
                        *o += xv * wv;
                    }
                }
            }
        }
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(Op::MatMul(a, b), n, m, out, rg))
    }

    /// `x + 1·bᵀ` with `x: [n, m]`, `b: [1, m]`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (n, m) = self.shape2(x);
        if self.shape2(b) != (1, m) {
            return Err(Error::shape(
                "add_bias",
                format!("[1, {m}]"),
                format!("{:?}", self.shape2(b)),
            ));
        }
        let bias = self.value(b).data();
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_mut(m) {
            add_into(row, bias);
        }
        let rg = self.requires_grad(x) || self.requires_grad(b);
        Ok(self.push(Op::AddBias(x, b), n, m, out, rg))
    }

    fn binary(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        node: Op,
    ) -> Result<Var> {
        let (n, m) = self.same_shape(op, a, b)?;
        let out = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(node, n, m, out, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let (n, m) = self.shape2(x);
        let out = self.value(x).data().iter().map(|&v| f(v)).collect();
        let rg = self.requires_grad(x);
        self.push(op, n, m, out, rg)
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        self.unary(x, |v| s * v, Op::Scale(x, s))
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.scale(x, -1.0)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, f64::tanh, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, Op::Sigmoid(x))
    }

    /// `ln(1 + eˣ)` in the overflow-free form.
    pub fn softplus(&mut self, x: Var) -> Var {
        self.unary(x, softplus, Op::Softplus(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(x, f64::exp, Op::Exp(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.unary(x, f64::ln, Op::Log(x))
    }

    /// Sum of every element, `[1, 1]`.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.requires_grad(x);
        self.push(Op::SumAll(x), 1, 1, vec![s], rg)
    }

    /// Per-row sums, `[n, 1]`.
    pub fn sum_cols(&mut self, x: Var) -> Var {
        let (n, m) = self.shape2(x);
        let out = self
            .value(x)
            .data()
            .chunks(m)
            .map(|r| r.iter().sum())
            .collect();
        let rg = self.requires_grad(x);
        self.push(Op::SumCols(x), n, 1, out, rg)
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let (n, m) = self.shape2(x);
        if !(start < end && end <= m) {
            return Err(Error::shape(
                "slice_cols",
                format!("0 <= start < end <= {m}"),
                format!("{start}..{end}"),
            ));
        }
        let src = self.value(x).data();
        let out = (0..n)
            .flat_map(|i| src[i * m + start..i * m + end].iter().copied())
            .collect();
        let rg = self.requires_grad(x);
        Ok(self.push(Op::SliceCols(x, start), n, end - start, out, rg))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::shape("concat_cols", "at least one input", 0));
        };
        let n = self.shape2(first).0;
        let mut width = 0;
        for &p in parts {
            let (r, c) = self.shape2(p);
            if r != n {
                return Err(Error::shape("concat_cols", format!("{n} rows"), r));
            }
            width += c;
        }
        let mut out = Vec::with_capacity(n * width);
        for i in 0..n {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(i));
            }
        }
        let rg = parts.iter().any(|&p| self.requires_grad(p));
        Ok(self.push(Op::ConcatCols(parts.to_vec()), n, width, out, rg))
    }

    /// Per-row `Σ_j t ℓ - softplus(ℓ)`, the Bernoulli log-likelihood of
    /// `targets` under `logits`, `[n, 1]`.
    pub fn bernoulli_log_likelihood(&mut self, logits: Var, targets: Var) -> Result<Var> {
        let (n, m) = self.same_shape("bernoulli_log_likelihood", logits, targets)?;
        let (l, t) = (self.value(logits).data(), self.value(targets).data());
        let out = (0..n)
            .map(|i| {
                let r = i * m..(i + 1) * m;
                l[r.clone()]
                    .iter()
                    .zip(&t[r])
                    .map(|(&l, &t)| t * l - softplus(l))
                    .sum()
            })
            .collect();
        let rg = self.requires_grad(logits) || self.requires_grad(targets);
        Ok(self.push(Op::BernoulliLogLik(logits, targets), n, 1, out, rg))
    }

    /// Applies `f` elementwise to same-shaped inputs, producing `M` outputs.
    /// Partials come from forward-mode duals, one slot per input.
    pub fn pointwise<const N: usize, const M: usize>(
        &mut self,
        inputs: [Var; N],
        f: impl Fn([Dual<N>; N]) -> [Dual<N>; M],
    ) -> Result<[Var; M]> {
        let (n, m) = self.shape2(inputs[0]);
        for &v in &inputs[1..] {
            self.same_shape("pointwise", inputs[0], v)?;
        }
        let len = n * m;
        let track: [bool; N] = std::array::from_fn(|k| self.requires_grad(inputs[k]));
        let rg = track.iter().any(|&b| b);
        let mut values = vec![vec![0.0; len]; M];
        let mut partials = vec![vec![vec![0.0; if rg { len } else { 0 }]; N]; M];
        for e in 0..len {
            let args: [Dual<N>; N] =
                std::array::from_fn(|k| Dual::var(self.value(inputs[k]).data()[e], k));
            let outs = f(args);
            for (j, o) in outs.iter().enumerate() {
                values[j][e] = o.v;
                if rg {
                    for (p, &dk) in partials[j].iter_mut().zip(&o.d) {
                        p[e] = dk;
                    }
                }
            }
        }
        let mut out = [Var(0); M];
        for (j, (vals, parts)) in values.into_iter().zip(partials).enumerate() {
            let op = Op::Pointwise {
                inputs: inputs.to_vec(),
                partials: parts,
            };
            out[j] = self.push(op, n, m, vals, rg);
        }
        Ok(out)
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let rv = &self.nodes[root.0].value;
        if rv.len() != 1 {
            return Err(Error::shape(
                "backward",
                "scalar root",
                format!("{:?}", rv.shape()),
            ));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        if self.nodes[root.0].requires_grad {
            grads[root.0] = Some(vec![1.0]);
        }
        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        let grads = grads
            .into_iter()
            .zip(&self.nodes)
            .map(|(g, node)| {
                g.map(|d| {
                    Tensor::new(node.value.shape().to_vec(), d).expect("gradient has node shape")
                })
            })
            .collect();
        Ok(Gradients { grads })
    }

    /// Accumulates `f(k)` for `k in 0..len` into the gradient of `v`.
    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl Fn(usize) -> f64) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let len = self.nodes[v.0].value.len();
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
        for (k, s) in slot.iter_mut().enumerate() {
            *s += f(k);
        }
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let y = node.value.data();
        match node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (n, k) = self.shape2(a);
                let m = self.shape2(b).1;
                let (x, w) = (self.value(a).data(), self.value(b).data());
                if self.requires_grad(a) {
                    let mut da = vec![0.0; n * k];
                    for i in 0..n {
                        let grow = &g[i * m..(i + 1) * m];
                        for p in 0..k {
                            da[i * k + p] = grow
                                .iter()
                                .zip(&w[p * m..(p + 1) * m])
                                .map(|(u, v)| u * v)
                                .sum();
                        }
                    }
                    self.accumulate(grads, a, |e| da[e]);
                }
                if self.requires_grad(b) {
                    let slot = grads[b.0].get_or_insert_with(|| vec![0.0; k * m]);
                    for i in 0..n {
                        let grow = &g[i * m..(i + 1) * m];
                        for p in 0..k {
                            let xv = x[i * k + p];
                            if xv == 0.0 {
                                continue;
                            }
                            for (s, gv) in slot[p * m..(p + 1) * m].iter_mut().zip(grow) {
                                *s += xv * gv;
                            }
                        }
                    }
                }
            }
            Op::AddBias(x, b) => {
                self.accumulate(grads, x, |e| g[e]);
                if self.requires_grad(b) {
                    let m = self.shape2(b).1;
                    let slot = grads[b.0].get_or_insert_with(|| vec![0.0; m]);
                    for row in g.chunks(m) {
                        add_into(slot, row);
                    }
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, a, |e| g[e]);
                self.accumulate(grads, b, |e| g[e]);
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, a, |e| g[e]);
                self.accumulate(grads, b, |e| -g[e]);
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                self.accumulate(grads, a, |e| g[e] * bv[e]);
                self.accumulate(grads, b, |e| g[e] * av[e]);
            }
            Op::Scale(x, s) => self.accumulate(grads, x, |e| s * g[e]),
            Op::Tanh(x) => self.accumulate(grads, x, |e| g[e] * (1.0 - y[e] * y[e])),
            Op::Sigmoid(x) => self.accumulate(grads, x, |e| g[e] * y[e] * (1.0 - y[e])),
            Op::Softplus(x) => {
                let xv = self.value(x).data();
                self.accumulate(grads, x, |e| g[e] * sigmoid(xv[e]))
            }
            Op::Exp(x) => self.accumulate(grads, x, |e| g[e] * y[e]),
            Op::Log(x) => {
                let xv = self.value(x).data();
                self.accumulate(grads, x, |e| g[e] / xv[e])
            }
            Op::SumAll(x) => self.accumulate(grads, x, |_| g[0]),
            Op::SumCols(x) => {
                let m = self.shape2(x).1;
                self.accumulate(grads, x, |e| g[e / m])
            }
            Op::SliceCols(x, start) => {
                let m = self.shape2(x).1;
                let w = node.value.cols();
                self.accumulate(grads, x, |e| {
                    let (i, j) = (e / m, e % m);
                    if j >= start && j < start + w {
                        g[i * w + j - start]
                    } else {
                        0.0
                    }
                })
            }
            Op::ConcatCols(ref parts) => {
                let width = node.value.cols();
                let mut offset = 0;
                for &p in parts {
                    let w = self.shape2(p).1;
                    self.accumulate(grads, p, |e| g[(e / w) * width + offset + e % w]);
                    offset += w;
                }
            }
            Op::BernoulliLogLik(l, t) => {
                let m = self.shape2(l).1;
                let (lv, tv) = (self.value(l).data(), self.value(t).data());
                self.accumulate(grads, l, |e| g[e / m] * (tv[e] - sigmoid(lv[e])));
                self.accumulate(grads, t, |e| g[e / m] * lv[e]);
            }
            Op::Pointwise {
                ref inputs,
                ref partials,
            } => {
                for (&v, p) in inputs.iter().zip(partials) {
                    self.accumulate(grads, v, |e| g[e] * p[e]);
                }
            }
        }
    }
}
