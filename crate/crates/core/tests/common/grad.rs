//! Central-difference gradient checks.

use gmvae_core::autodiff::*;
use gmvae_core::vae::{elbo, elbo_and_grads, FrozenNoise, ModelKind, Noise, Vae, VaeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest `|a − b| / max(|a|, |b|, floor)` over all entries.
fn max_rel_err(analytic: &[Tensor], numeric: &[Vec<f64>], floor: f64) -> f64 {
    let mut worst = 0.0f64;
    for (a, n) in analytic.iter().zip(numeric) {
        for (x, y) in a.data().iter().zip(n) {
            worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(floor));
        }
    }
    worst
}

fn central_differences(
    params: &mut ParamSet,
    h: f64,
    mut f: impl FnMut(&ParamSet) -> f64,
) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..params.len() {
        let mut g = vec![0.0; params.tensors()[i].len()];
        for (j, gj) in g.iter_mut().enumerate() {
            let orig = params.tensors()[i].data()[j];
            let step = h * orig.abs().max(1.0);
            params.tensors_mut()[i].data_mut()[j] = orig + step;
            let up = f(params);
            params.tensors_mut()[i].data_mut()[j] = orig - step;
            let down = f(params);
            params.tensors_mut()[i].data_mut()[j] = orig;
            *gj = (up - down) / (2.0 * step);
        }
        out.push(g);
    }
    out
}

struct Net {
    params: ParamSet,
    mlp: Mlp,
    x: Tensor,
    y: Tensor,
}

fn net() -> Net {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut params = ParamSet::new();
    let mlp = Mlp::new(&mut params, "net", &[5, 7, 6, 4], &mut rng).unwrap();
    let x = Tensor::matrix(3, 5, (0..15).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let y = Tensor::matrix(3, 2, (0..6).map(|i| (i % 2) as f64).collect()).unwrap();
    Net { params, mlp, x, y }
}

/// Exercises every op: the MLP (matmul, add_bias, tanh), then slices,
/// concat, pointwise, and the elementwise and reduction ops.
fn loss(net: &Net, g: &mut Graph, bind: &Bindings) -> Var {
    let x = g.leaf(net.x.clone()).unwrap();
    let y = g.leaf(net.y.clone()).unwrap();
    let out = net.mlp.forward(g, bind, x).unwrap();
    let a = g.slice_cols(out, 0, 2).unwrap();
    let b = g.slice_cols(out, 2, 4).unwrap();
    let ll = g.bernoulli_log_likelihood(a, y).unwrap();
    let s = g.sigmoid(b);
    let sp = g.softplus(a);
    let prod = g.mul(s, sp).unwrap();
    let e = g.exp(b);
    let l = g.log(e);
    let diff = g.sub(prod, l).unwrap();
    let [p] = g
        .pointwise([a, b], |[u, v]| [(u * v).sin_like() + u.sq() * 0.25])
        .unwrap();
    let cat = g.concat_cols(&[diff, p]).unwrap();
    let t = g.tanh(cat);
    let rs = g.sum_cols(t);
    let tot = g.add(rs, ll).unwrap();
    let n = g.neg(tot);
    let sum = g.sum(n);
    g.scale(sum, 0.5)
}

trait SinLike {
    fn sin_like(self) -> Self;
}

impl<T: Real> SinLike for T {
    /// A smooth bounded map built from the `Real` primitives.
    fn sin_like(self) -> Self {
        self.tanh() * self.cosh().recip()
    }
}

/// Worst relative error of the MLP gradients.
pub fn mlp_gradcheck() -> f64 {
    let mut n = net();
    let mut g = Graph::new();
    let bind = n.params.bind(&mut g);
    let root = loss(&n, &mut g, &bind);
    let grads = bind.collect(&g.backward(root).unwrap(), &n.params);
    let params = n.params.clone();
    let n_ref = Net {
        params: ParamSet::new(),
        mlp: n.mlp.clone(),
        x: n.x.clone(),
        y: n.y.clone(),
    };
    let numeric = central_differences(&mut n.params, 1e-6, |p| {
        let mut g = Graph::new();
        let b = p.bind_frozen(&mut g);
        let r = loss(&n_ref, &mut g, &b);
        g.value(r).item().expect("scalar loss")
    });
    assert_eq!(params.len(), grads.len());
    max_rel_err(&grads, &numeric, 1e-4)
}

fn tiny(kind: ModelKind) -> Vae {
    let cfg = VaeConfig {
        hidden: 6,
        input_dim: 8,
        kind,
        ..VaeConfig::new(2, 1.0, 1, 23)
    };
    Vae::new(cfg).unwrap().0
}

fn toy_batch() -> Tensor {
    Tensor::matrix(
        4,
        8,
        (0..32)
            .map(|i| ((i * 3 + i / 8) % 4 < 2) as u8 as f64)
            .collect(),
    )
    .unwrap()
}

pub fn elbo_gradcheck(kind: ModelKind, h: f64) -> f64 {
    let mut m = tiny(kind);
    let x = toy_batch();
    let fz = FrozenNoise::draw(&mut ChaCha8Rng::seed_from_u64(31), &m, x.rows());
    let (_, grads) = elbo_and_grads(&m, &x, Noise::Frozen(&fz)).unwrap();
    let cfg = m.config.clone();
    let (enc, dec) = (m.encoder.clone(), m.decoder.clone());
    let numeric = central_differences(&mut m.params, h, |p| {
        let probe = Vae {
            config: cfg.clone(),
            params: p.clone(),
            encoder: enc.clone(),
            decoder: dec.clone(),
        };
        -elbo(&probe, &x, Noise::Frozen(&fz)).unwrap().elbo
    });
    max_rel_err(&grads, &numeric, 1e-3)
}
