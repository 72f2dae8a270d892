//! Independent oracles shared by the integration tests. Nothing here calls
//! the quantity it is used to check.
#![allow(dead_code)]

pub mod grad;

use gmvae_core::hyperbolic::{Curvature, GaussianPoint};
use gmvae_core::manifold::metric_tensor;
use gmvae_core::pgm::PgmFactor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Normal as NormalDist};
use statrs::distribution::{Continuous, Gamma, Normal};

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let dp = {
                    let (mut q0, mut q1) = (1.0, z);
                    for k in 2..=n {
                        let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                        q0 = q1;
                        q1 = q2;
                    }
                    n as f64 * (z * q1 - q0) / (z * z - 1.0)
                };
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[lo, hi]`: `(nodes, weights)`.
pub fn composite_rule(lo: f64, hi: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Gaussian curvature of `E dμ² + G dσ²` by the Brioschi formula, every
/// derivative a central difference of the metric components.
pub fn brioschi_fd(mu: f64, sigma: f64, c: Curvature) -> f64 {
    let e = |m: f64, s: f64| metric_tensor(GaussianPoint::new(m, s).unwrap(), c).g11;
    let g = |m: f64, s: f64| metric_tensor(GaussianPoint::new(m, s).unwrap(), c).g22;
    let h = 1e-4 * sigma;
    let g_u = |m: f64, s: f64| (g(m + h, s) - g(m - h, s)) / (2.0 * h);
    let e_v = |m: f64, s: f64| (e(m, s + h) - e(m, s - h)) / (2.0 * h);
    let w = |m: f64, s: f64| (e(m, s) * g(m, s)).sqrt();
    let a = |m: f64, s: f64| g_u(m, s) / w(m, s);
    let b = |m: f64, s: f64| e_v(m, s) / w(m, s);
    let da = (a(mu + h, sigma) - a(mu - h, sigma)) / (2.0 * h);
    let db = (b(mu, sigma + h) - b(mu, sigma - h)) / (2.0 * h);
    -(da + db) / (2.0 * w(mu, sigma))
}

/// Shape and rate of the Gamma law of `σ²` for a factor, from the
/// parameters directly.
pub fn gamma_shape_rate(f: &PgmFactor, c: f64) -> (f64, f64) {
    let (b2, g2) = (f.beta().powi(2), f.gamma2());
    (1.0 / (4.0 * c * g2) + 1.0, 1.0 / (4.0 * c * b2 * g2))
}

/// `ln [N(μ; α, βγ) · Gamma(σ²; a, b) · 2σ]`, a Lebesgue density on `(μ, σ)`
/// built from statrs.
pub fn factorized_ln_lebesgue(mu: f64, sigma: f64, f: &PgmFactor, c: f64) -> f64 {
    let (a, b) = gamma_shape_rate(f, c);
    let n = Normal::new(f.alpha, f.beta() * f.gamma2().sqrt()).unwrap();
    let g = Gamma::new(a, b).unwrap();
    n.ln_pdf(mu) + g.ln_pdf(sigma * sigma) + (2.0 * sigma).ln()
}

/// `ln √det g = −½ ln c − 2 ln σ`.
pub fn ln_volume_element(sigma: f64, c: f64) -> f64 {
    -0.5 * c.ln() - 2.0 * sigma.ln()
}

/// Monte Carlo `E_p[ln p − ln q]` with rand_distr draws and statrs densities.
/// Returns `(mean, standard error)`.
pub fn mc_kl_oracle(p: &[PgmFactor], q: &[PgmFactor], c: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samplers: Vec<_> = p
        .iter()
        .map(|f| {
            let (a, b) = gamma_shape_rate(f, c);
            (
                NormalDist::new(f.alpha, f.beta() * f.gamma2().sqrt()).unwrap(),
                GammaDist::new(a, 1.0 / b).unwrap(),
            )
        })
        .collect();
    let dens = |fs: &[PgmFactor]| -> Vec<(Normal, Gamma)> {
        fs.iter()
            .map(|f| {
                let (a, b) = gamma_shape_rate(f, c);
                (
                    Normal::new(f.alpha, f.beta() * f.gamma2().sqrt()).unwrap(),
                    Gamma::new(a, b).unwrap(),
                )
            })
            .collect()
    };
    let (dp, dq) = (dens(p), dens(q));
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n {
        let mut d = 0.0;
        for (k, (ns, gs)) in samplers.iter().enumerate() {
            let mu = ns.sample(&mut rng);
            let s2 = gs.sample(&mut rng);
            d += dp[k].0.ln_pdf(mu) + dp[k].1.ln_pdf(s2) - dq[k].0.ln_pdf(mu) - dq[k].1.ln_pdf(s2);
        }
        let delta = d - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (d - mean);
    }
    (mean, (m2 / (n - 1) as f64 / n as f64).sqrt())
}

/// `∫∫ exp(ln_density(μ, σ)) · √det g dμ dσ` for one factor, over
/// `μ ∈ α ± 12βγ` and a wide window in `ln σ`.
pub fn integrate_factor(f: &PgmFactor, c: f64, ln_density: impl Fn(f64, f64) -> f64) -> f64 {
    let (a, b) = gamma_shape_rate(f, c);
    let sd = f.beta() * f.gamma2().sqrt();
    let (mus, wm) = composite_rule(f.alpha - 12.0 * sd, f.alpha + 12.0 * sd, 8, 20);
    // ln σ = ½(ln X − ln b), X ~ Gamma(a, 1).
    let lo = 0.5 * (a.ln() - 12.0 / a.sqrt() - 36.0 / a - b.ln());
    let hi = 0.5 * (a.ln() + 12.0 / a.sqrt() + 4.0 / a - b.ln());
    let (ss, ws) = composite_rule(lo, hi, 40, 20);
    let mut total = 0.0;
    for (s, w_s) in ss.iter().zip(&ws) {
        let sigma = s.exp();
        let vol = (ln_volume_element(sigma, c)).exp() * sigma;
        let mut inner = 0.0;
        for (mu, w_m) in mus.iter().zip(&wm) {
            inner += w_m * ln_density(*mu, sigma).exp();
        }
        total += w_s * vol * inner;
    }
    total
}
