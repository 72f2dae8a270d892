use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ModelKind, VaeConfig};
use super::kernels::{decoder_head, encoder_head};
use crate::autodiff::{Bindings, Graph, Mlp, ParamSet, Real, Tensor, Var};
use crate::error::{Error, Result};
use crate::hyperbolic::Curvature;
use crate::pgm::PgmNormalParams;

/// Link for γ²: `exp(raw)` clamped to `[1e-8, 1e8]`, kept in log form.
pub const LN_GAMMA2_MIN: f64 = -18.420_680_743_952_367;
pub const LN_GAMMA2_MAX: f64 = 18.420_680_743_952_367;

/// Encoder MLP followed by the latent head, and a decoder MLP emitting
/// Bernoulli logits. Both networks have two `tanh` hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Vae {
    pub config: VaeConfig,
    pub params: ParamSet,
    pub encoder: Mlp,
    pub decoder: Mlp,
}

/// Per-factor PGM parameters for a batch, row-major `[rows, n_factors]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    pub rows: usize,
    pub n_factors: usize,
    pub alpha: Vec<f64>,
    pub ln_beta: Vec<f64>,
    pub ln_gamma2: Vec<f64>,
}

impl EncoderOutput {
    pub fn beta(&self) -> Vec<f64> {
        self.ln_beta.iter().map(|v| v.exp()).collect()
    }

    pub fn gamma2(&self) -> Vec<f64> {
        self.ln_gamma2.iter().map(|v| v.exp()).collect()
    }

    /// Variational distribution of row `i`.
    pub fn params(&self, i: usize, c: Curvature) -> Result<PgmNormalParams> {
        let r = i * self.n_factors..(i + 1) * self.n_factors;
        PgmNormalParams::from_ln(
            &self.alpha[r.clone()],
            &self.ln_beta[r.clone()],
            &self.ln_gamma2[r],
            c,
        )
    }
}

/// Diagonal Gaussian posterior of the Euclidean baseline, `[rows, latent]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub rows: usize,
    pub dim: usize,
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Gm(EncoderOutput),
    Euclidean(GaussianPosterior),
}

/// Points `(μ, σ)` per factor, stored as `(μ, ln σ)`, `[rows, n_factors]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub rows: usize,
    pub n_factors: usize,
    pub mu: Vec<f64>,
    pub ln_sigma: Vec<f64>,
}

impl LatentSample {
    pub fn new(rows: usize, n_factors: usize, mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if let Some(s) = sigma.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::domain(
                "LatentSample::new",
                format!("σ must be positive, got {s}"),
            ));
        }
        let ln_sigma = sigma.iter().map(|s| s.ln()).collect();
        LatentSample::from_ln(rows, n_factors, mu, ln_sigma)
    }

    pub fn from_ln(
        rows: usize,
        n_factors: usize,
        mu: Vec<f64>,
        ln_sigma: Vec<f64>,
    ) -> Result<Self> {
        let n = rows * n_factors;
        if mu.len() != n || ln_sigma.len() != n {
            return Err(Error::shape(
                "LatentSample",
                n,
                format!("μ: {}, ln σ: {}", mu.len(), ln_sigma.len()),
            ));
        }
        if mu.iter().chain(&ln_sigma).any(|v| !v.is_finite()) {
            return Err(Error::domain(
                "LatentSample",
                "μ and σ must be finite with σ > 0",
            ));
        }
        Ok(LatentSample {
            rows,
            n_factors,
            mu,
            ln_sigma,
        })
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.ln_sigma.iter().map(|v| v.exp()).collect()
    }

    /// The manifold origin `(0, 1)` in every factor.
    pub fn origin(rows: usize, n_factors: usize) -> Self {
        LatentSample {
            rows,
            n_factors,
            mu: vec![0.0; rows * n_factors],
            ln_sigma: vec![0.0; rows * n_factors],
        }
    }
}

/// Graph handles of the latent posterior.
#[derive(Debug, Clone, Copy)]
pub(crate) enum PosteriorVars {
    Gm {
        alpha: Var,
        ln_beta: Var,
        ln_gamma2: Var,
    },
    Euclidean {
        mean: Var,
        log_var: Var,
    },
}

pub(crate) fn check_finite(op: &'static str, t: &Tensor) -> Result<()> {
    if let Some(i) = t.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::non_finite(
            op,
            format!("element {i} of {:?} is {}", t.shape(), t.data()[i]),
        ));
    }
    Ok(())
}

impl Vae {
    /// Glorot-initialised model; the generator is seeded from `config.seed`
    /// and returned so training can continue the same stream.
    pub fn new(config: VaeConfig) -> Result<(Self, ChaCha8Rng)> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let vae = Vae::with_rng(config, &mut rng)?;
        Ok((vae, rng))
    }

    pub fn with_rng(config: VaeConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let mut params = ParamSet::new();
        let h = config.hidden;
        let encoder = Mlp::new(
            &mut params,
            "encoder",
            &[config.input_dim, h, h, config.encoder_out()],
            rng,
        )?;
        let decoder = Mlp::new(
            &mut params,
            "decoder",
            &[config.latent_dim(), h, h, config.input_dim],
            rng,
        )?;
        Ok(Vae {
            config,
            params,
            encoder,
            decoder,
        })
    }

    /// Sets the decoder output bias to the logit of each pixel's mean
    /// (clamped to `[1e-3, 1 - 1e-3]`), so an untrained decoder already
    /// predicts the marginal pixel frequencies.
    pub fn init_output_bias(&mut self, pixel_mean: &[f64]) -> Result<()> {
        if pixel_mean.len() != self.config.input_dim {
            return Err(Error::shape(
                "init_output_bias",
                self.config.input_dim,
                pixel_mean.len(),
            ));
        }
        let name = format!("decoder.{}.b", self.decoder.layers.len() - 1);
        let i = self
            .params
            .names()
            .iter()
            .position(|n| *n == name)
            .expect("decoder output bias exists");
        for (b, &p) in self.params.tensors_mut()[i]
            .data_mut()
            .iter_mut()
            .zip(pixel_mean)
        {
            let p = p.clamp(1e-3, 1.0 - 1e-3);
            *b = (p / (1.0 - p)).ln();
        }
        Ok(())
    }

    pub fn curvature(&self) -> Curvature {
        self.config.curvature()
    }

    pub(crate) fn check_input(&self, x: &Tensor) -> Result<()> {
        if !x.is_matrix() || x.cols() != self.config.input_dim {
            return Err(Error::shape(
                "Vae",
                format!("[_, {}]", self.config.input_dim),
                format!("{:?}", x.shape()),
            ));
        }
        Ok(())
    }

    pub(crate) fn encode_vars(
        &self,
        g: &mut Graph,
        bind: &Bindings,
        x: Var,
    ) -> Result<PosteriorVars> {
        let out = self.encoder.forward(g, bind, x)?;
        check_finite("encode", g.value(out))?;
        let f = self.config.n_factors;
        match self.config.kind {
            ModelKind::Gm => {
                let u1 = g.slice_cols(out, 0, f)?;
                let u2 = g.slice_cols(out, f, 2 * f)?;
                let raw = g.slice_cols(out, 2 * f, 3 * f)?;
                let c = self.config.curvature;
                let [alpha, ln_beta] = g.pointwise([u1, u2], |[a, b]| {
                    let (alpha, ln_beta) = encoder_head(a, b, c);
                    [alpha, ln_beta]
                })?;
                let [ln_gamma2] =
                    g.pointwise([raw], |[r]| [r.clamp_val(LN_GAMMA2_MIN, LN_GAMMA2_MAX)])?;
                for v in [alpha, ln_beta] {
                    check_finite("encode", g.value(v))?;
                }
                Ok(PosteriorVars::Gm {
                    alpha,
                    ln_beta,
                    ln_gamma2,
                })
            }
            ModelKind::Euclidean => {
                let d = self.config.latent_dim();
                let mean = g.slice_cols(out, 0, d)?;
                let log_var = g.slice_cols(out, d, 2 * d)?;
                Ok(PosteriorVars::Euclidean { mean, log_var })
            }
        }
    }

    /// Decoder input from GM latents: `[v₁ block | v₂ block]`.
    pub(crate) fn gm_features(&self, g: &mut Graph, mu: Var, ln_sigma: Var) -> Result<Var> {
        let c = self.config.curvature;
        let [v1, v2] = g.pointwise([mu, ln_sigma], |[m, s]| {
            let (v1, v2) = decoder_head(m, s, c);
            [v1, v2]
        })?;
        g.concat_cols(&[v1, v2])
    }

    pub(crate) fn decode_vars(&self, g: &mut Graph, bind: &Bindings, features: Var) -> Result<Var> {
        let logits = self.decoder.forward(g, bind, features)?;
        check_finite("decode", g.value(logits))?;
        Ok(logits)
    }

    /// Deterministic posterior parameters for a batch of inputs.
    pub fn posterior(&self, x: &Tensor) -> Result<Posterior> {
        self.check_input(x)?;
        let mut g = Graph::new();
        let bind = self.params.bind_frozen(&mut g);
        let xv = g.leaf(x.clone().with_requires_grad(false))?;
        let rows = x.rows();
        Ok(match self.encode_vars(&mut g, &bind, xv)? {
            PosteriorVars::Gm {
                alpha,
                ln_beta,
                ln_gamma2,
            } => Posterior::Gm(EncoderOutput {
                rows,
                n_factors: self.config.n_factors,
                alpha: g.value(alpha).data().to_vec(),
                ln_beta: g.value(ln_beta).data().to_vec(),
                ln_gamma2: g.value(ln_gamma2).data().to_vec(),
            }),
            PosteriorVars::Euclidean { mean, log_var } => Posterior::Euclidean(GaussianPosterior {
                rows,
                dim: self.config.latent_dim(),
                mean: g.value(mean).data().to_vec(),
                log_var: g.value(log_var).data().to_vec(),
            }),
        })
    }

    /// GM encoder: `(α, β, γ²)` per factor.
    pub fn encode(&self, x: &Tensor) -> Result<EncoderOutput> {
        match self.posterior(x)? {
            Posterior::Gm(out) => Ok(out),
            Posterior::Euclidean(_) => Err(Error::Config(
                "encode needs a gm model; use posterior".into(),
            )),
        }
    }

    /// GM decoder: Bernoulli logits for latent points.
    pub fn decode(&self, z: &LatentSample) -> Result<Tensor> {
        if self.config.kind != ModelKind::Gm {
            return Err(Error::Config(
                "decode needs a gm model; use decode_features".into(),
            ));
        }
        if z.n_factors != self.config.n_factors {
            return Err(Error::shape("decode", self.config.n_factors, z.n_factors));
        }
        let mut g = Graph::new();
        let bind = self.params.bind_frozen(&mut g);
        let mu = g.constant(z.rows, z.n_factors, z.mu.clone())?;
        let ls = g.constant(z.rows, z.n_factors, z.ln_sigma.clone())?;
        let feats = self.gm_features(&mut g, mu, ls)?;
        let logits = self.decode_vars(&mut g, &bind, feats)?;
        Ok(g.value(logits).clone())
    }

    /// Decoder applied to raw Euclidean latent vectors `[rows, 2 · n_factors]`.
    pub fn decode_features(&self, z: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let bind = self.params.bind_frozen(&mut g);
        let zv = g.leaf(z.clone().with_requires_grad(false))?;
        let logits = self.decode_vars(&mut g, &bind, zv)?;
        Ok(g.value(logits).clone())
    }
}
