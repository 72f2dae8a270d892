//! Importance-weighted log-likelihood estimates.
//!
//! Input `i` draws its samples from `ChaCha8Rng::seed_from_u64(seed)` with
//! the stream set to `i + 1`, so estimates do not depend on how inputs are
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Posterior, Vae};
use super::LatentSample;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::pgm::{factorize_factor, log_density_factor, sample_factor_ln, PgmFactor};
use crate::sampling::sample_standard_normal;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// The generator used for input `index`.
pub fn input_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softplus(l: f64) -> f64 {
    l.max(0.0) + (-l.abs()).exp().ln_1p()
}

/// `Σ x·l − softplus(l)` per row of `logits`.
fn bernoulli_rows(logits: &Tensor, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    logits
        .data()
        .chunks(d)
        .map(|row| row.iter().zip(x).map(|(&l, &t)| t * l - softplus(l)).sum())
        .collect()
}

fn gaussian_ln_pdf(z: f64, mean: f64, log_var: f64) -> f64 {
    -0.5 * (LN_2PI + log_var + (z - mean).powi(2) * (-log_var).exp())
}

/// `ln w` for `k` posterior draws of row `row`.
fn log_weights(
    model: &Vae,
    post: &Posterior,
    x: &[f64],
    row: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    match post {
        Posterior::Gm(out) => {
            let f = out.n_factors;
            let c = model.curvature();
            let prior = PgmFactor {
                alpha: 0.0,
                ln_beta: 0.0,
                ln_gamma2: 0.0,
            };
            let q: Vec<PgmFactor> = (0..f)
                .map(|j| PgmFactor {
                    alpha: out.alpha[row * f + j],
                    ln_beta: out.ln_beta[row * f + j],
                    ln_gamma2: out.ln_gamma2[row * f + j],
                })
                .collect();
            let parts: Vec<_> = q.iter().map(|qf| factorize_factor(qf, c)).collect();
            let mut mu = Vec::with_capacity(k * f);
            let mut ls = Vec::with_capacity(k * f);
            let mut ratio = vec![0.0; k];
            for r in ratio.iter_mut() {
                for (qf, (normal, gamma)) in q.iter().zip(&parts) {
                    let (m, s) = sample_factor_ln(normal, gamma, rng);
                    *r += log_density_factor(m, s, &prior, c) - log_density_factor(m, s, qf, c);
                    mu.push(m);
                    ls.push(s);
                }
            }
            let logits = model.decode(&LatentSample::from_ln(k, f, mu, ls)?)?;
            Ok(bernoulli_rows(&logits, x)
                .iter()
                .zip(&ratio)
                .map(|(a, b)| a + b)
                .collect())
        }
        Posterior::Euclidean(gp) => {
            let d = gp.dim;
            let mean = &gp.mean[row * d..(row + 1) * d];
            let lv = &gp.log_var[row * d..(row + 1) * d];
            let mut z = Vec::with_capacity(k * d);
            let mut ratio = vec![0.0; k];
            for r in ratio.iter_mut() {
                for (&m, &v) in mean.iter().zip(lv) {
                    let zz = m + (0.5 * v).exp() * sample_standard_normal(rng);
                    *r += gaussian_ln_pdf(zz, 0.0, 0.0) - gaussian_ln_pdf(zz, m, v);
                    z.push(zz);
                }
            }
            let logits = model.decode_features(&Tensor::matrix(k, d, z)?)?;
            Ok(bernoulli_rows(&logits, x)
                .iter()
                .zip(&ratio)
                .map(|(a, b)| a + b)
                .collect())
        }
    }
}

/// Per-row estimates of `ln p(x) ≈ ln (1/k) Σ wᵢ`. Rows are spread over
/// `threads` scoped worker threads (0 means one per available core).
pub fn iwae_log_likelihood(
    model: &Vae,
    x: &Tensor,
    k: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::domain("iwae_log_likelihood", "k must be at least 1"));
    }
    let post = model.posterior(x)?;
    let rows = x.rows();
    let d = x.cols();
    let threads = match threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    }
    .clamp(1, rows.max(1));
    let ln_k = (k as f64).ln();
    let one = |i: usize| -> Result<f64> {
        let mut rng = input_rng(seed, i);
        let lw = log_weights(model, &post, &x.data()[i * d..(i + 1) * d], i, k, &mut rng)?;
        Ok(log_sum_exp(&lw) - ln_k)
    };
    let mut out = vec![0.0; rows];
    let chunk = rows.div_ceil(threads).max(1);
    std::thread::scope(|s| -> Result<()> {
        let handles: Vec<_> = out
            .chunks_mut(chunk)
            .enumerate()
            .map(|(ci, slot)| {
                let one = &one;
                s.spawn(move || -> Result<()> {
                    for (j, v) in slot.iter_mut().enumerate() {
                        *v = one(ci * chunk + j)?;
                    }
                    Ok(())
                })
            })
            .collect();
        for h in handles {
            h.join().expect("iwae worker panicked")?;
        }
        Ok(())
    })?;
    Ok(out)
}
