//! Per-element latent maps, written once over [`Real`] so the same code
//! gives values (`f64`) and partials (`Dual`).

use crate::autodiff::Real;
use crate::special::{gamma_ln_pdf_unit, gamma_p};

/// Below this `c‖v‖²` the encoder head uses the direct `cosh − ρ sinh` form.
const SMALL_ARG2: f64 = 1.0;
/// Below this the `sinh(a)/a`, `cosh(a)` series replace the closed forms.
const SERIES_ARG2: f64 = 1e-8;

/// Encoder head: the tangent vector `(u₁, u₂)` at the Lorentz origin,
/// exponentiated and mapped through `T_c`, returned as `(α, ln β)`.
///
/// With `a = √c‖u‖`, `ρ = u₁/‖u‖` and `D = cosh a − ρ sinh a`:
/// `β = 1/D`, `α = −(u₂/‖u‖) sinh a/(√c D)`. For large `a`, `D` is
/// evaluated as `½eᵃ(1 − ρ + e^{−2a}(1 + ρ))` with `1 ∓ ρ` formed without
/// cancellation.
pub fn encoder_head<T: Real>(u1: T, u2: T, c: f64) -> (T, T) {
    let sc = c.sqrt();
    let a2 = (u1 * u1 + u2 * u2) * c;
    if a2.val() < SMALL_ARG2 {
        let (cosh, sinhc) = if a2.val() < SERIES_ARG2 {
            (
                a2 * (a2 / 24.0 + 0.5) + 1.0,
                a2 * (a2 / 120.0 + 1.0 / 6.0) + 1.0,
            )
        } else {
            let a = a2.sqrt();
            (a.cosh(), a.sinh() / a)
        };
        let d = cosh - u1 * sinhc * sc;
        return (-(u2 * sinhc) / d, -d.ln());
    }
    let r = (u1 * u1 + u2 * u2).sqrt();
    let a = r * sc;
    let (omr, opr) = if u1.val() > 0.0 {
        (u2 * u2 / (r * (r + u1)), (r + u1) / r)
    } else {
        ((r - u1) / r, u2 * u2 / (r * (r - u1)))
    };
    let e = (a * -2.0).exp();
    let inner = omr + e * opr;
    let ln_inner = if omr.val() > 0.0 && inner.val() > 0.0 {
        inner.ln()
    } else {
        opr.ln() - a * 2.0
    };
    let ln_d = a + ln_inner - std::f64::consts::LN_2;
    let alpha = -(u2 / r) * (T::cst(1.0) - e) * (-ln_inner).exp() / sc;
    (alpha, -ln_d)
}

/// Decoder head: `(μ, e^{ln σ})` through `T_c⁻¹`, then the log map at the
/// Lorentz origin. Returns the spatial part of the tangent vector.
pub fn decoder_head<T: Real>(mu: T, ln_sigma: T, c: f64) -> (T, T) {
    let sc = c.sqrt();
    let inv_s = (-ln_sigma).exp();
    // (σ − 1/σ + cμ²/σ) / (2√c)
    let x = (ln_sigma.sinh() * 2.0 + mu * mu * inv_s * c) / (2.0 * sc);
    let y = -(mu * inv_s);
    let s2 = (x * x + y * y) * c;
    let k = if s2.val() < 1e-12 {
        T::cst(1.0) - s2 / 6.0
    } else {
        let s = s2.sqrt();
        s.asinh() / s
    };
    (k * x, k * y)
}

/// Shape `a = 1/(4cγ²) + 1` of the `σ²` Gamma factor.
pub fn gamma_shape<T: Real>(ln_gamma2: T, c: f64) -> T {
    (-ln_gamma2 - (4.0 * c).ln()).exp() + 1.0
}

/// `ln b` of the `σ²` Gamma factor, `b = 1/(4cβ²γ²)`.
pub fn gamma_ln_rate<T: Real>(ln_beta: T, ln_gamma2: T, c: f64) -> T {
    -(ln_beta * 2.0) - ln_gamma2 - (4.0 * c).ln()
}

/// `dX/da` for `X ~ Gamma(a, 1)` held at fixed CDF level:
/// `−(∂P/∂a)/p(X)`, with `∂P/∂a` by central differences.
pub fn gamma_sample_shape_grad(a: f64, x: f64) -> f64 {
    let h = 1e-4 * a.max(1.0);
    let dp_da = (gamma_p(a + h, x) - gamma_p(a - h, x)) / (2.0 * h);
    let pdf = gamma_ln_pdf_unit(a, x).exp();
    let g = -dp_da / pdf;
    if g.is_finite() {
        g
    } else {
        0.0
    }
}

/// Reparameterised draw `(μ, ln σ)` from one PGM factor given standard
/// normal `eps` and a unit-rate Gamma draw `x` (with `dx_da = dX/da`).
/// `μ = α + βγ·eps`; `σ² = X/b`, where `X` moves with the shape through
/// `dx_da` and `b` carries `β`, `γ²` exactly.
pub fn pgm_reparam<T: Real>(
    alpha: T,
    ln_beta: T,
    ln_gamma2: T,
    eps: f64,
    x: f64,
    dx_da: f64,
    c: f64,
) -> (T, T) {
    let a = gamma_shape(ln_gamma2, c);
    let x = (a - a.val()) * dx_da + x;
    let ln_sigma = (x.ln() - gamma_ln_rate(ln_beta, ln_gamma2, c)) * 0.5;
    let mu = alpha + (ln_beta + ln_gamma2 * 0.5).exp() * eps;
    (mu, ln_sigma)
}

/// `KL(K(α, β, γ²) ‖ K(0, 1, 1))` for one factor: the Normal part plus the
/// Gamma part of the factorisation, each clamped at zero.
pub fn pgm_kl_to_prior<T: Real>(alpha: T, ln_beta: T, ln_gamma2: T, c: f64) -> T {
    // Normal(α, βγ) against Normal(0, 1).
    let ln_s = ln_beta + ln_gamma2 * 0.5;
    let normal = -ln_s + ((ln_s * 2.0).exp() + alpha * alpha) * 0.5 - 0.5;
    // Gamma(a₁, b₁) against Gamma(a₂, b₂) with a₂ = 1/(4c) + 1, b₂ = 1/(4c).
    let a1 = gamma_shape(ln_gamma2, c);
    let a2 = 1.0 / (4.0 * c) + 1.0;
    let ln_b2 = -(4.0 * c).ln();
    let d_ln_b = gamma_ln_rate(ln_beta, ln_gamma2, c) - ln_b2;
    let gamma = d_ln_b * a2 - (a1.ln_gamma() - crate::special::ln_gamma(a2))
        + (a1 - a2) * a1.digamma()
        + (-d_ln_b).exp_m1() * a1;
    normal.max_val(0.0) + gamma.max_val(0.0)
}

/// Location-scale draw `m + e^{lv/2}·eps`.
pub fn gaussian_reparam<T: Real>(mean: T, log_var: T, eps: f64) -> T {
    mean + (log_var * 0.5).exp() * eps
}

/// `KL(N(m, e^{lv}) ‖ N(0, 1))` per coordinate.
pub fn gaussian_kl_to_std<T: Real>(mean: T, log_var: T) -> T {
    ((mean * mean + log_var.exp() - 1.0) - log_var) * 0.5
}
