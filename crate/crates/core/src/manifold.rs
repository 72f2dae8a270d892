//! The Gaussian manifold `G_c`: univariate Gaussians `(μ, σ)` with metric
//! `diag(1/σ², 1/(cσ²))`, constant sectional curvature `-c`.

use crate::error::{Error, Result};
use crate::hyperbolic::{Curvature, GaussianPoint};

/// Diagonal metric at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTensor2 {
    pub g11: f64,
    pub g22: f64,
}

impl MetricTensor2 {
    pub fn det(&self) -> f64 {
        self.g11 * self.g22
    }

    /// `½ vᵀ g v`.
    pub fn half_quadratic_form(&self, dmu: f64, dsigma: f64) -> f64 {
        0.5 * dmu * dmu * self.g11 + 0.5 * dsigma * dsigma * self.g22
    }
}

/// `Γᵏ_ij`, indexed `[k][i][j]` with coordinate 0 = μ and 1 = σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelSymbols(pub [[[f64; 2]; 2]; 2]);

impl ChristoffelSymbols {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.0[k][i][j]
    }
}

pub fn metric_tensor(p: GaussianPoint, c: Curvature) -> MetricTensor2 {
    let s2 = p.sigma() * p.sigma();
    MetricTensor2 {
        g11: 1.0 / s2,
        g22: 1.0 / (c.get() * s2),
    }
}

/// `√det g = 1/(√c σ²)`, the volume element converting Lebesgue densities
/// on `(μ, σ)` into manifold-measure densities.
pub fn sqrt_det_metric(p: GaussianPoint, c: Curvature) -> f64 {
    1.0 / (c.sqrt() * p.sigma() * p.sigma())
}

/// `ln √det g`, computed from `ln σ`.
pub fn ln_sqrt_det_metric(ln_sigma: f64, c: Curvature) -> f64 {
    -0.5 * c.get().ln() - 2.0 * ln_sigma
}

pub fn christoffel(p: GaussianPoint, c: Curvature) -> ChristoffelSymbols {
    let inv = 1.0 / p.sigma();
    ChristoffelSymbols([
        [[0.0, -inv], [-inv, 0.0]],
        [[c.get() * inv, 0.0], [0.0, -inv]],
    ])
}

/// `Rm(μ, σ, σ, μ)` contracted from the Christoffel symbols. Every symbol is
/// proportional to `1/σ`, so `∂_μ Γ = 0` and `∂_σ Γ = -Γ/σ`.
pub fn riemann_mssm(p: GaussianPoint, c: Curvature) -> f64 {
    let g = metric_tensor(p, c);
    let gamma = christoffel(p, c);
    let sigma = p.sigma();
    let d_sigma = |k: usize, i: usize, j: usize| -gamma.get(k, i, j) / sigma;
    let metric_row = [g.g11, 0.0];
    (0..2)
        .map(|m| {
            let mut bracket = 0.0 - d_sigma(m, 0, 1);
            for q in 0..2 {
                bracket += gamma.get(q, 1, 1) * gamma.get(m, 0, q)
                    - gamma.get(q, 0, 1) * gamma.get(m, 1, q);
            }
            metric_row[m] * bracket
        })
        .sum()
}

/// Sectional curvature; the closed form `Rm/det g = (-1/σ⁴)/(1/(cσ⁴))`
/// reduces to `-c` at every point.
pub fn sectional_curvature(_p: GaussianPoint, c: Curvature) -> f64 {
    -c.get()
}

fn check_sigma(op: &'static str, s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(op, format!("σ must be positive, got {s}")))
    }
}

/// `KL(N(m1, s1) ‖ N(m2, s2))`, parameterised by standard deviations.
pub fn gaussian_kl(m1: f64, s1: f64, m2: f64, s2: f64) -> Result<f64> {
    check_sigma("gaussian_kl", s1)?;
    check_sigma("gaussian_kl", s2)?;
    Ok(gaussian_kl_ln(m1, s1.ln(), m2, s2.ln()))
}

/// `KL(N(m1, e^{l1}) ‖ N(m2, e^{l2}))` from log standard deviations.
pub fn gaussian_kl_ln(m1: f64, ln_s1: f64, m2: f64, ln_s2: f64) -> f64 {
    let ratio = (2.0 * (ln_s1 - ln_s2)).exp();
    let dm = m1 - m2;
    (ln_s2 - ln_s1) + 0.5 * ratio + 0.5 * dm * dm * (-2.0 * ln_s2).exp() - 0.5
}

/// Curvature-extended KL, `KL(N(√(2c)μ₁, σ₁) ‖ N(√(2c)μ₂, σ₂)) / 2c`.
pub fn gm_kl(p: GaussianPoint, q: GaussianPoint, c: Curvature) -> f64 {
    gm_kl_ln(p.mu(), p.sigma().ln(), q.mu(), q.sigma().ln(), c)
}

/// [`gm_kl`] from log standard deviations, written as
/// `(r - 1 - ln r)/(4c) + Δμ²/(2σ₂²)` with `r = σ₁²/σ₂²`.
pub fn gm_kl_ln(mu1: f64, ln_s1: f64, mu2: f64, ln_s2: f64, c: Curvature) -> f64 {
    let ln_r = 2.0 * (ln_s1 - ln_s2);
    let dm = mu1 - mu2;
    (ln_r.exp_m1() - ln_r) / (4.0 * c.get()) + 0.5 * dm * dm * (-2.0 * ln_s2).exp()
}

/// `G_KL((μ+dμ, σ+dσ), (μ, σ)) - ½ (dμ, dσ) g (dμ, dσ)ᵀ`, third order in `dσ`.
/// Evaluated in increments so the `dμ` parts cancel exactly.
pub fn kl_quadratic_residual(
    base: GaussianPoint,
    dmu: f64,
    dsigma: f64,
    c: Curvature,
) -> Result<f64> {
    let sigma = base.sigma();
    check_sigma("kl_quadratic_residual", sigma + dsigma)?;
    let g = metric_tensor(base, c);
    let u = dsigma / sigma;
    // r - 1 - ln r with r = (1 + u)².
    let spread = u * (2.0 + u) - 2.0 * u.ln_1p();
    let kl = spread / (4.0 * c.get()) + 0.5 * dmu * dmu * g.g11;
    Ok(kl - g.half_quadratic_form(dmu, dsigma))
}
