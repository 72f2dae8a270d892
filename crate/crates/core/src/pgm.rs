//! Pseudo Gaussian manifold (PGM) normal distribution over products of
//! Gaussian manifolds.
//!
//! Each factor has density (w.r.t. Lebesgue measure on `(μ, σ)`, divided by
//! the volume element)
//!
//! ```text
//! K_c(μ, σ; α, β, γ²) = (σ/β)³ / Z(c, γ²) · exp(-G_KL((μ, σ), (α, β)) / γ²)
//! ```
//!
//! Multiplied by `√det g` it factorises into `N(μ; α, βγ)` times
//! `Gamma(σ²; 1/(4cγ²) + 1, 1/(4cβ²γ²))` (a density in `σ²`). Sampling and
//! the closed-form KL both go through that factorisation.
//!
//! Scale parameters are stored as `ln β` and `ln γ²`; every formula below is
//! written in those coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hyperbolic::{Curvature, GaussianPoint};
use crate::manifold::{gm_kl_ln, ln_sqrt_det_metric};
use crate::sampling::{sample_gamma_unit, sample_standard_normal};
use crate::special::{digamma, gamma_ln_pdf_unit, ln_gamma, ln_gamma_tail};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Parameters of one PGM factor in log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgmFactor {
    pub alpha: f64,
    pub ln_beta: f64,
    pub ln_gamma2: f64,
}

impl PgmFactor {
    pub fn beta(&self) -> f64 {
        self.ln_beta.exp()
    }

    pub fn gamma2(&self) -> f64 {
        self.ln_gamma2.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgmNormalParams {
    factors: Vec<PgmFactor>,
    curvature: Curvature,
}

impl PgmNormalParams {
    pub fn new(alpha: &[f64], beta: &[f64], gamma2: &[f64], curvature: Curvature) -> Result<Self> {
        if let Some(b) = beta.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::domain(
                "PgmNormalParams::new",
                format!("β must be positive, got {b}"),
            ));
        }
        if let Some(g) = gamma2.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::domain(
                "PgmNormalParams::new",
                format!("γ² must be positive, got {g}"),
            ));
        }
        let ln_beta: Vec<f64> = beta.iter().map(|b| b.ln()).collect();
        let ln_gamma2: Vec<f64> = gamma2.iter().map(|g| g.ln()).collect();
        Self::from_ln(alpha, &ln_beta, &ln_gamma2, curvature)
    }

    pub fn from_ln(
        alpha: &[f64],
        ln_beta: &[f64],
        ln_gamma2: &[f64],
        curvature: Curvature,
    ) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return Err(Error::domain(
                "PgmNormalParams",
                "at least one factor is required",
            ));
        }
        if ln_beta.len() != n || ln_gamma2.len() != n {
            return Err(Error::shape(
                "PgmNormalParams",
                format!("{n} factors"),
                format!("ln β: {}, ln γ²: {}", ln_beta.len(), ln_gamma2.len()),
            ));
        }
        let factors = alpha
            .iter()
            .zip(ln_beta)
            .zip(ln_gamma2)
            .map(|((&alpha, &ln_beta), &ln_gamma2)| PgmFactor {
                alpha,
                ln_beta,
                ln_gamma2,
            })
            .collect::<Vec<_>>();
        if factors
            .iter()
            .any(|f| !(f.alpha.is_finite() && f.ln_beta.is_finite() && f.ln_gamma2.is_finite()))
        {
            return Err(Error::domain(
                "PgmNormalParams",
                "parameters must be finite",
            ));
        }
        Ok(PgmNormalParams { factors, curvature })
    }

    /// `K(0, I, I)`.
    pub fn prior(n_factors: usize, curvature: Curvature) -> Self {
        PgmNormalParams {
            factors: vec![
                PgmFactor {
                    alpha: 0.0,
                    ln_beta: 0.0,
                    ln_gamma2: 0.0,
                };
                n_factors
            ],
            curvature,
        }
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn factors(&self) -> &[PgmFactor] {
        &self.factors
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub mean: f64,
    pub ln_std: f64,
}

impl NormalParams {
    pub fn std(&self) -> f64 {
        self.ln_std.exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) * (-self.ln_std).exp();
        -HALF_LN_2PI - self.ln_std - 0.5 * z * z
    }
}

/// Shape/rate Gamma, density `b^a/Γ(a) z^{a-1} e^{-bz}`; the rate is kept
/// as `ln b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    shape: f64,
    ln_rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::domain(
                "GammaParams::new",
                format!("rate must be positive, got {rate}"),
            ));
        }
        Self::from_ln_rate(shape, rate.ln())
    }

    pub fn from_ln_rate(shape: f64, ln_rate: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::domain(
                "GammaParams",
                format!("shape must be positive, got {shape}"),
            ));
        }
        if !ln_rate.is_finite() {
            return Err(Error::domain(
                "GammaParams",
                format!("ln rate must be finite, got {ln_rate}"),
            ));
        }
        Ok(GammaParams { shape, ln_rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.ln_rate.exp()
    }

    pub fn ln_rate(&self) -> f64 {
        self.ln_rate
    }

    pub fn mean(&self) -> f64 {
        self.shape * (-self.ln_rate).exp()
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        if z.is_nan() || z <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let b = self.rate();
        gamma_ln_pdf_unit(self.shape, b * z) + self.ln_rate
    }
}

fn check_positive(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(
            op,
            format!("{name} must be positive, got {v}"),
        ))
    }
}

/// `ln Z(c, γ²)`.
pub fn log_norm_factor(gamma2: f64, c: Curvature) -> Result<f64> {
    check_positive("log_norm_factor", "γ²", gamma2)?;
    Ok(log_norm_factor_ln(gamma2.ln(), c))
}

/// `ln Z` from `ln γ²`. With `k = 1/(4cγ²)`, the terms `ln Γ(k) + k(1 - ln k)`
/// collapse to `-½ ln k + ½ ln 2π + tail(k)` for large `k`, which keeps
/// the result accurate for tiny `γ²`.
pub fn log_norm_factor_ln(ln_gamma2: f64, c: Curvature) -> f64 {
    let ln_4c = (4.0 * c.get()).ln();
    let ln_k = -ln_4c - ln_gamma2;
    let k = ln_k.exp();
    let gamma_terms = if k >= 10.0 {
        -0.5 * ln_k + HALF_LN_2PI + ln_gamma_tail(k)
    } else {
        ln_gamma(k) + k * (1.0 - ln_k)
    };
    HALF_LN_2PI - 0.5 * c.get().ln() - std::f64::consts::LN_2 + 0.5 * ln_gamma2 + gamma_terms
}

/// Log density of one factor at `(μ, e^{ln σ})`.
pub fn log_density_factor(mu: f64, ln_sigma: f64, f: &PgmFactor, c: Curvature) -> f64 {
    3.0 * (ln_sigma - f.ln_beta)
        - log_norm_factor_ln(f.ln_gamma2, c)
        - gm_kl_ln(mu, ln_sigma, f.alpha, f.ln_beta, c) * (-f.ln_gamma2).exp()
}

fn check_points(
    op: &'static str,
    points: &[GaussianPoint],
    params: &PgmNormalParams,
) -> Result<()> {
    if points.len() != params.n_factors() {
        return Err(Error::shape(
            op,
            format!("{} factors", params.n_factors()),
            points.len(),
        ));
    }
    Ok(())
}

/// Log density with respect to the volume measure `√det g dμ dσ`, summed over factors.
pub fn log_density(points: &[GaussianPoint], params: &PgmNormalParams) -> Result<f64> {
    check_points("log_density", points, params)?;
    Ok(points
        .iter()
        .zip(params.factors())
        .map(|(p, f)| log_density_factor(p.mu(), p.sigma().ln(), f, params.curvature))
        .sum())
}

/// Log density with respect to the Lebesgue measure `dμ dσ`
/// (`log_density + ln √det g`).
pub fn log_density_lebesgue(points: &[GaussianPoint], params: &PgmNormalParams) -> Result<f64> {
    let base = log_density(points, params)?;
    Ok(base
        + points
            .iter()
            .map(|p| ln_sqrt_det_metric(p.sigma().ln(), params.curvature))
            .sum::<f64>())
}

/// Normal and Gamma parts of one factor.
pub fn factorize_factor(f: &PgmFactor, c: Curvature) -> (NormalParams, GammaParams) {
    let ln_4c = (4.0 * c.get()).ln();
    let normal = NormalParams {
        mean: f.alpha,
        ln_std: f.ln_beta + 0.5 * f.ln_gamma2,
    };
    let gamma = GammaParams {
        shape: (-ln_4c - f.ln_gamma2).exp() + 1.0,
        ln_rate: -ln_4c - 2.0 * f.ln_beta - f.ln_gamma2,
    };
    (normal, gamma)
}

pub fn factorize(params: &PgmNormalParams) -> Vec<(NormalParams, GammaParams)> {
    params
        .factors()
        .iter()
        .map(|f| factorize_factor(f, params.curvature))
        .collect()
}

/// Draws `count` samples; each is one `(μ, σ)` per factor.
pub fn sample<R: Rng + ?Sized>(
    params: &PgmNormalParams,
    rng: &mut R,
    count: usize,
) -> Vec<Vec<GaussianPoint>> {
    let parts = factorize(params);
    (0..count)
        .map(|_| {
            parts
                .iter()
                .map(|(normal, gamma)| {
                    let (mu, ln_sigma) = sample_factor_ln(normal, gamma, rng);
                    GaussianPoint::new(mu, ln_sigma.exp()).expect("sampled σ is positive")
                })
                .collect()
        })
        .collect()
}

/// One draw as `(μ, ln σ)`; `σ² = X/b` with `X ~ Gamma(a, 1)`.
pub fn sample_factor_ln<R: Rng + ?Sized>(
    normal: &NormalParams,
    gamma: &GammaParams,
    rng: &mut R,
) -> (f64, f64) {
    let eps = sample_standard_normal(rng);
    let x = sample_gamma_unit(rng, gamma.shape);
    (
        normal.mean + normal.std() * eps,
        0.5 * (x.ln() - gamma.ln_rate),
    )
}

/// `KL(Gamma(a₁, b₁) ‖ Gamma(a₂, b₂))`.
pub fn gamma_kl(p: &GammaParams, q: &GammaParams) -> f64 {
    let (a1, a2) = (p.shape, q.shape);
    let d_ln_b = p.ln_rate - q.ln_rate;
    let kl = a2 * d_ln_b - (ln_gamma(a1) - ln_gamma(a2))
        + (a1 - a2) * digamma(a1)
        + (-d_ln_b).exp_m1() * a1;
    kl.max(0.0)
}

fn check_compatible(p: &PgmNormalParams, q: &PgmNormalParams) -> Result<()> {
    if p.curvature != q.curvature {
        return Err(Error::domain(
            "kl_divergence",
            format!(
                "curvature mismatch: {} vs {}",
                p.curvature.get(),
                q.curvature.get()
            ),
        ));
    }
    if p.n_factors() != q.n_factors() {
        return Err(Error::shape("kl_divergence", p.n_factors(), q.n_factors()));
    }
    Ok(())
}

/// Normal-KL plus Gamma-KL for one factor pair.
pub fn kl_divergence_factor(p: &PgmFactor, q: &PgmFactor, c: Curvature) -> f64 {
    let (pn, pg) = factorize_factor(p, c);
    let (qn, qg) = factorize_factor(q, c);
    crate::manifold::gaussian_kl_ln(pn.mean, pn.ln_std, qn.mean, qn.ln_std).max(0.0)
        + gamma_kl(&pg, &qg)
}

/// Closed-form KL between the manifold-measure densities of two PGM normals.
pub fn kl_divergence(p: &PgmNormalParams, q: &PgmNormalParams) -> Result<f64> {
    check_compatible(p, q)?;
    Ok(p.factors()
        .iter()
        .zip(q.factors())
        .map(|(a, b)| kl_divergence_factor(a, b, p.curvature))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub standard_error: f64,
}

/// Monte Carlo `E_p[ln p - ln q]`. The volume element cancels in the ratio.
pub fn mc_kl_estimate(
    p: &PgmNormalParams,
    q: &PgmNormalParams,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_compatible(p, q)?;
    if n_samples < 1000 {
        return Err(Error::domain(
            "mc_kl_estimate",
            format!("need at least 1000 samples, got {n_samples}"),
        ));
    }
    let c = p.curvature;
    let parts = factorize(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n_samples {
        let mut diff = 0.0;
        for ((normal, gamma), (fp, fq)) in parts.iter().zip(p.factors().iter().zip(q.factors())) {
            let (mu, ln_sigma) = sample_factor_ln(normal, gamma, &mut rng);
            diff +=
                log_density_factor(mu, ln_sigma, fp, c) - log_density_factor(mu, ln_sigma, fq, c);
        }
        let delta = diff - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (diff - mean);
    }
    let var = m2 / (n_samples - 1) as f64;
    Ok(McEstimate {
        estimate: mean,
        standard_error: (var / n_samples as f64).sqrt(),
    })
}
