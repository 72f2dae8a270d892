//! Geodesic walks inside one latent factor.

use super::model::Vae;
use super::LatentSample;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::hyperbolic::{iso_g_to_l, iso_l_to_g, lorentz_exp, lorentz_log, GaussianPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct Traversal {
    pub factor: usize,
    /// Interpolation parameter per step, `0` to `1`.
    pub t: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Bernoulli logits, `[steps, input_dim]`.
    pub logits: Tensor,
}

impl Traversal {
    pub fn steps(&self) -> usize {
        self.t.len()
    }

    /// Mean per-pixel Bernoulli entropy (nats) of each reconstruction.
    pub fn mean_entropy(&self) -> Vec<f64> {
        let d = self.logits.cols();
        self.logits
            .data()
            .chunks(d)
            .map(|row| row.iter().map(|&l| bernoulli_entropy(l)).sum::<f64>() / d as f64)
            .collect()
    }
}

/// Entropy of `Bernoulli(sigmoid(l))`: `softplus(l) − l·sigmoid(l)`.
pub fn bernoulli_entropy(l: f64) -> f64 {
    let softplus = l.max(0.0) + (-l.abs()).exp().ln_1p();
    let sig = if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    };
    softplus - l * sig
}

/// Points on the geodesic from `a` to `b`: `exp_a(t · log_a(b))` in the
/// Lorentz model, mapped back. The endpoints are returned exactly.
pub fn geodesic_path(
    a: GaussianPoint,
    b: GaussianPoint,
    steps: usize,
    c: f64,
) -> Result<Vec<GaussianPoint>> {
    if steps < 2 {
        return Err(Error::domain(
            "geodesic_path",
            format!("need at least 2 steps, got {steps}"),
        ));
    }
    let cv = crate::hyperbolic::Curvature::new(c)?;
    let la = iso_g_to_l(a, cv)?;
    let v = lorentz_log(la, iso_g_to_l(b, cv)?, cv)?;
    (0..steps)
        .map(|i| match i {
            0 => Ok(a),
            _ if i == steps - 1 => Ok(b),
            _ => {
                let t = i as f64 / (steps - 1) as f64;
                iso_l_to_g(lorentz_exp(la, v.scale(t), cv)?, cv)
            }
        })
        .collect()
}

/// Decodes `steps` points along the geodesic from `base`'s point in
/// `factor` to `end`, holding every other factor of `base` fixed.
pub fn latent_traversal(
    model: &Vae,
    base: &LatentSample,
    factor: usize,
    end: GaussianPoint,
    steps: usize,
) -> Result<Traversal> {
    let f = model.config.n_factors;
    if base.rows != 1 || base.n_factors != f {
        return Err(Error::shape(
            "latent_traversal",
            format!("1 row × {f} factors"),
            format!("{} × {}", base.rows, base.n_factors),
        ));
    }
    if factor >= f {
        return Err(Error::domain(
            "latent_traversal",
            format!("factor {factor} out of range 0..{f}"),
        ));
    }
    let start = GaussianPoint::new(base.mu[factor], base.ln_sigma[factor].exp())?;
    let path = geodesic_path(start, end, steps, model.config.curvature)?;
    let mut mu = Vec::with_capacity(steps * f);
    let mut ls = Vec::with_capacity(steps * f);
    for p in &path {
        let mut m = base.mu.clone();
        let mut s = base.ln_sigma.clone();
        m[factor] = p.mu();
        s[factor] = if p == &start {
            base.ln_sigma[factor]
        } else {
            p.sigma().ln()
        };
        mu.extend(m);
        ls.extend(s);
    }
    let logits = model.decode(&LatentSample::from_ln(steps, f, mu, ls)?)?;
    Ok(Traversal {
        factor,
        t: (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect(),
        mu: path.iter().map(|p| p.mu()).collect(),
        sigma: path.iter().map(|p| p.sigma()).collect(),
        logits,
    })
}

/// Encodes one input, then walks `factor` from `(α, β)` to `(α, β·e^span)`
/// with the remaining factors at their encoder means.
pub fn traverse_beta(
    model: &Vae,
    x: &Tensor,
    factor: usize,
    steps: usize,
    ln_beta_span: f64,
) -> Result<Traversal> {
    if x.rows() != 1 {
        return Err(Error::shape("traverse_beta", "1 row", x.rows()));
    }
    let enc = model.encode(x)?;
    if factor >= enc.n_factors {
        return Err(Error::domain(
            "traverse_beta",
            format!("factor {factor} out of range 0..{}", enc.n_factors),
        ));
    }
    let base = LatentSample::from_ln(1, enc.n_factors, enc.alpha.clone(), enc.ln_beta.clone())?;
    let end = GaussianPoint::new(
        enc.alpha[factor],
        (enc.ln_beta[factor] + ln_beta_span).exp(),
    )?;
    latent_traversal(model, &base, factor, end, steps)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either side is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
