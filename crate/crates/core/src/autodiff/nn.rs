use rand::Rng;

use super::graph::{Gradients, Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named parameter tensors in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.values.push(value.with_requires_grad(true));
        ParamId(self.values.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.values
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.values
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Copies every parameter onto `g` as a leaf.
    pub fn bind(&self, g: &mut Graph) -> Bindings {
        Bindings(
            self.values
                .iter()
                .map(|t| g.leaf(t.clone()).expect("parameters are matrices"))
                .collect(),
        )
    }

    /// Copies every parameter onto `g` as a constant (inference only).
    pub fn bind_frozen(&self, g: &mut Graph) -> Bindings {
        Bindings(
            self.values
                .iter()
                .map(|t| {
                    g.leaf(t.clone().with_requires_grad(false))
                        .expect("parameters are matrices")
                })
                .collect(),
        )
    }
}

/// Graph handles of a bound [`ParamSet`].
#[derive(Debug, Clone)]
pub struct Bindings(Vec<Var>);

impl Bindings {
    pub fn var(&self, id: ParamId) -> Var {
        self.0[id.0]
    }

    /// Gradient per parameter, zeros where the loss does not depend on it.
    pub fn collect(&self, grads: &Gradients, params: &ParamSet) -> Vec<Tensor> {
        self.0
            .iter()
            .zip(params.tensors())
            .map(|(&v, p)| {
                grads
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(p.shape().to_vec()))
            })
            .collect()
    }
}

/// Uniform on `±√(6/(fan_in + fan_out))`, shape `[fan_in, fan_out]`.
pub fn glorot_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor::matrix(fan_in, fan_out, data).expect("positive fan sizes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Self {
        let w = params.push(format!("{name}.w"), glorot_uniform(rng, fan_in, fan_out));
        let b = params.push(format!("{name}.b"), Tensor::zeros(vec![1, fan_out]));
        Linear {
            w,
            b,
            fan_in,
            fan_out,
        }
    }

    pub fn forward(&self, g: &mut Graph, bind: &Bindings, x: Var) -> Result<Var> {
        let h = g.matmul(x, bind.var(self.w))?;
        g.add_bias(h, bind.var(self.b))
    }
}

/// Stack of linear layers with `tanh` between them; the last layer is linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    /// `sizes = [input, hidden..., output]`.
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        sizes: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::shape(
                "Mlp::new",
                "at least two positive sizes",
                format!("{sizes:?}"),
            ));
        }
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(params, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Ok(Mlp { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out
    }

    pub fn forward(&self, g: &mut Graph, bind: &Bindings, x: Var) -> Result<Var> {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(g, bind, h)?;
            if i + 1 < self.layers.len() {
                h = g.tanh(h);
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = glorot_uniform(&mut rng, 784, 200);
        let limit = (6.0f64 / 984.0).sqrt();
        assert!(w.data().iter().all(|v| v.abs() < limit));
        let mean = w.data().iter().sum::<f64>() / w.len() as f64;
        assert!(mean.abs() < 1e-3);
    }

    #[test]
    fn mlp_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamSet::new();
        let mlp = Mlp::new(&mut ps, "enc", &[6, 4, 3], &mut rng).unwrap();
        assert_eq!(ps.names(), &["enc.0.w", "enc.0.b", "enc.1.w", "enc.1.b"]);
        assert_eq!(ps.num_scalars(), 6 * 4 + 4 + 4 * 3 + 3);
        assert!(ps.get(mlp.layers[0].b).data().iter().all(|&b| b == 0.0));
        let mut g = Graph::new();
        let bind = ps.bind(&mut g);
        let x = g.constant(2, 6, vec![0.5; 12]).unwrap();
        let y = mlp.forward(&mut g, &bind, x).unwrap();
        assert_eq!(g.value(y).shape(), &[2, 3]);
        assert!(Mlp::new(&mut ps, "bad", &[3], &mut rng).is_err());
    }
}
