//! Single-sample ELBO, `E_q[ln p(x|z)] − KL(q ‖ K(0, I, I))`, as a graph.

use rand::{Rng, RngCore};

use super::config::ModelKind;
use super::kernels::{
    gamma_sample_shape_grad, gamma_shape, gaussian_kl_to_std, gaussian_reparam, pgm_kl_to_prior,
    pgm_reparam,
};
use super::model::{PosteriorVars, Vae};
use crate::autodiff::{Bindings, Graph, Real, Tensor, Var};
use crate::error::{Error, Result};
use crate::sampling::{sample_gamma_unit, sample_standard_normal};
use crate::special::gamma_p_inv;

/// Noise held fixed across evaluations: standard normals `eps` and Gamma
/// CDF levels `u` (unused by the Euclidean model). With `u` fixed, the
/// Gamma draw is `X = P⁻¹(a, u)`, whose shape derivative is exactly what the
/// implicit rule estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenNoise {
    pub eps: Vec<f64>,
    pub u: Vec<f64>,
}

impl FrozenNoise {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, model: &Vae, rows: usize) -> Self {
        let (n_eps, n_u) = match model.config.kind {
            ModelKind::Gm => (rows * model.config.n_factors, rows * model.config.n_factors),
            ModelKind::Euclidean => (rows * model.config.latent_dim(), 0),
        };
        FrozenNoise {
            eps: (0..n_eps).map(|_| sample_standard_normal(rng)).collect(),
            u: (0..n_u)
                .map(|_| rng.random_range(1e-6..1.0 - 1e-6))
                .collect(),
        }
    }
}

pub enum Noise<'a> {
    Random(&'a mut dyn RngCore),
    Frozen(&'a FrozenNoise),
}

/// Batch means and per-example terms; `elbo = recon − kl` row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct ElboTerms {
    pub elbo: f64,
    pub recon: f64,
    pub kl: f64,
    pub recon_per_example: Vec<f64>,
    pub kl_per_example: Vec<f64>,
}

impl ElboTerms {
    pub fn elbo_per_example(&self) -> Vec<f64> {
        self.recon_per_example
            .iter()
            .zip(&self.kl_per_example)
            .map(|(r, k)| r - k)
            .collect()
    }
}

/// Graph for one batch; `loss = −mean ELBO`.
pub struct ElboGraph {
    pub graph: Graph,
    pub bind: Bindings,
    pub loss: Var,
    pub terms: ElboTerms,
}

fn check_noise(op: &'static str, noise: &Noise<'_>, eps: usize, u: usize) -> Result<()> {
    if let Noise::Frozen(f) = noise {
        if f.eps.len() != eps || f.u.len() != u {
            return Err(Error::shape(
                op,
                format!("eps {eps}, u {u}"),
                format!("eps {}, u {}", f.eps.len(), f.u.len()),
            ));
        }
    }
    Ok(())
}

/// Builds the ELBO graph for a batch `x: [rows, input_dim]` of binary targets.
/// Parameters are bound with gradient tracking when `track` is set.
pub fn elbo_graph(model: &Vae, x: &Tensor, mut noise: Noise<'_>, track: bool) -> Result<ElboGraph> {
    model.check_input(x)?;
    let rows = x.rows();
    let c = model.config.curvature;
    let mut g = Graph::new();
    let bind = if track {
        model.params.bind(&mut g)
    } else {
        model.params.bind_frozen(&mut g)
    };
    let xv = g.leaf(x.clone().with_requires_grad(false))?;
    let (features, kl_elems) = match model.encode_vars(&mut g, &bind, xv)? {
        PosteriorVars::Gm {
            alpha,
            ln_beta,
            ln_gamma2,
        } => {
            let f = model.config.n_factors;
            let n = rows * f;
            check_noise("elbo", &noise, n, n)?;
            let lg2 = g.value(ln_gamma2).data().to_vec();
            let mut eps = vec![0.0; n];
            let mut xs = vec![0.0; n];
            let mut dx = vec![0.0; n];
            for e in 0..n {
                let a = gamma_shape(lg2[e], c);
                let (ep, xg) = match &mut noise {
                    Noise::Random(rng) => {
                        let ep = sample_standard_normal(rng);
                        (ep, sample_gamma_unit(rng, a))
                    }
                    Noise::Frozen(fz) => (fz.eps[e], gamma_p_inv(a, fz.u[e])),
                };
                eps[e] = ep;
                xs[e] = xg;
                dx[e] = gamma_sample_shape_grad(a, xg);
            }
            let eps_v = g.constant(rows, f, eps)?;
            let x_v = g.constant(rows, f, xs)?;
            let dx_v = g.constant(rows, f, dx)?;
            let [mu, ln_sigma] = g.pointwise(
                [alpha, ln_beta, ln_gamma2, eps_v, x_v, dx_v],
                |[al, lb, lg, ep, xg, dxa]| {
                    let (mu, ls) = pgm_reparam(al, lb, lg, ep.val(), xg.val(), dxa.val(), c);
                    [mu, ls]
                },
            )?;
            let [kl] = g.pointwise([alpha, ln_beta, ln_gamma2], |[al, lb, lg]| {
                [pgm_kl_to_prior(al, lb, lg, c)]
            })?;
            (model.gm_features(&mut g, mu, ln_sigma)?, kl)
        }
        PosteriorVars::Euclidean { mean, log_var } => {
            let d = model.config.latent_dim();
            let n = rows * d;
            check_noise("elbo", &noise, n, 0)?;
            let eps: Vec<f64> = match &mut noise {
                Noise::Random(rng) => (0..n).map(|_| sample_standard_normal(rng)).collect(),
                Noise::Frozen(fz) => fz.eps.clone(),
            };
            let eps_v = g.constant(rows, d, eps)?;
            let [z] = g.pointwise([mean, log_var, eps_v], |[m, lv, ep]| {
                [gaussian_reparam(m, lv, ep.val())]
            })?;
            let [kl] = g.pointwise([mean, log_var], |[m, lv]| [gaussian_kl_to_std(m, lv)])?;
            (z, kl)
        }
    };
    let logits = model.decode_vars(&mut g, &bind, features)?;
    let recon = g.bernoulli_log_likelihood(logits, xv)?;
    let kl = g.sum_cols(kl_elems);
    let per_row = g.sub(recon, kl)?;
    let total = g.sum(per_row);
    let loss = g.scale(total, -1.0 / rows as f64);

    let recon_per_example = g.value(recon).data().to_vec();
    let kl_per_example = g.value(kl).data().to_vec();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let terms = ElboTerms {
        elbo: -g.value(loss).data()[0],
        recon: mean(&recon_per_example),
        kl: mean(&kl_per_example),
        recon_per_example,
        kl_per_example,
    };
    if !terms.elbo.is_finite() {
        return Err(Error::non_finite(
            "elbo",
            format!("recon {} kl {}", terms.recon, terms.kl),
        ));
    }
    Ok(ElboGraph {
        graph: g,
        bind,
        loss,
        terms,
    })
}

/// Forward-only ELBO estimate.
pub fn elbo(model: &Vae, x: &Tensor, noise: Noise<'_>) -> Result<ElboTerms> {
    Ok(elbo_graph(model, x, noise, false)?.terms)
}

/// ELBO terms plus the gradient of `−mean ELBO` for every parameter.
pub fn elbo_and_grads(
    model: &Vae,
    x: &Tensor,
    noise: Noise<'_>,
) -> Result<(ElboTerms, Vec<Tensor>)> {
    let eg = elbo_graph(model, x, noise, true)?;
    let grads = eg.graph.backward(eg.loss)?;
    let grads = eg.bind.collect(&grads, &model.params);
    Ok((eg.terms, grads))
}
