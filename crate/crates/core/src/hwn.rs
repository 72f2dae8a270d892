//! Hyperbolic wrapped normal on products of 2-D Lorentz models, kept as the
//! baseline for the stability comparison.
//!
//! No finiteness guards here: `cosh`/`sinh` overflow is allowed to surface
//! as non-finite samples and densities.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hyperbolic::{
    lift_tangent, lorentz_exp_unchecked, lorentz_inner, lorentz_origin, parallel_transport,
    Curvature, LorentzPoint, LorentzTangent,
};
use crate::sampling::sample_standard_normal;

/// Symmetric positive-definite 2×2 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cov2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Cov2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Result<Self> {
        let det = xx * yy - xy * xy;
        if !(xx > 0.0 && det > 0.0 && det.is_finite()) {
            return Err(Error::domain(
                "Cov2::new",
                format!("[[{xx}, {xy}], [{xy}, {yy}]] is not positive definite"),
            ));
        }
        Ok(Cov2 { xx, xy, yy })
    }

    pub fn isotropic(var: f64) -> Result<Self> {
        Cov2::new(var, 0.0, var)
    }

    fn cholesky(&self) -> [f64; 3] {
        let l11 = self.xx.sqrt();
        let l21 = self.xy / l11;
        let l22 = (self.yy - l21 * l21).sqrt();
        [l11, l21, l22]
    }

    fn ln_pdf(&self, v: [f64; 2]) -> f64 {
        let det = self.xx * self.yy - self.xy * self.xy;
        let quad =
            (self.yy * v[0] * v[0] - 2.0 * self.xy * v[0] * v[1] + self.xx * v[1] * v[1]) / det;
        -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwnParams {
    pub means: Vec<LorentzPoint>,
    pub covs: Vec<Cov2>,
    pub curvature: Curvature,
}

impl HwnParams {
    pub fn new(means: Vec<LorentzPoint>, covs: Vec<Cov2>, curvature: Curvature) -> Result<Self> {
        if means.len() != covs.len() || means.is_empty() {
            return Err(Error::shape("HwnParams::new", means.len(), covs.len()));
        }
        Ok(HwnParams {
            means,
            covs,
            curvature,
        })
    }
}

/// Pushes a tangent sample at the origin to `mean`: transport, then exp.
pub fn hwn_push_forward(mean: LorentzPoint, v: [f64; 2], c: Curvature) -> LorentzPoint {
    let u = parallel_transport(lift_tangent(v, c), mean, c);
    lorentz_exp_unchecked(mean, u.coords(), c)
}

pub fn hwn_sample<R: Rng + ?Sized>(params: &HwnParams, rng: &mut R) -> Vec<LorentzPoint> {
    let c = params.curvature;
    params
        .means
        .iter()
        .zip(&params.covs)
        .map(|(&mean, cov)| {
            let [l11, l21, l22] = cov.cholesky();
            let (e1, e2) = (sample_standard_normal(rng), sample_standard_normal(rng));
            hwn_push_forward(mean, [l11 * e1, l21 * e1 + l22 * e2], c)
        })
        .collect()
}

/// Log map without constraint checks (NaN/inf propagate).
fn log_unchecked(base: LorentzPoint, y: LorentzPoint, c: Curvature) -> [f64; 3] {
    let cv = c.get();
    let beta = (-cv * lorentz_inner(base.coords(), y.coords())).max(1.0);
    let w = [
        y.t - beta * base.t,
        y.x - beta * base.x,
        y.y - beta * base.y,
    ];
    let s = (cv * lorentz_inner(w, w).max(0.0)).sqrt();
    let k = if s < 1e-6 {
        1.0 - s * s / 6.0
    } else {
        s.asinh() / s
    };
    [k * w[0], k * w[1], k * w[2]]
}

/// `ln N(v; 0, Σ) - ln(sinh(√c r)/(√c r))` per factor, summed.
pub fn hwn_log_density(z: &[LorentzPoint], params: &HwnParams) -> Result<f64> {
    if z.len() != params.means.len() {
        return Err(Error::shape("hwn_log_density", params.means.len(), z.len()));
    }
    let c = params.curvature;
    let origin = lorentz_origin(c);
    Ok(z.iter()
        .zip(params.means.iter().zip(&params.covs))
        .map(|(&zi, (&mean, cov))| {
            let u = log_unchecked(mean, zi, c);
            let u = LorentzTangent {
                dt: u[0],
                dx: u[1],
                dy: u[2],
                base: mean,
            };
            let r = u.norm();
            let v = parallel_transport(u, origin, c);
            let s = c.sqrt() * r;
            let ln_jac = if s < 1e-6 {
                s * s / 6.0
            } else {
                (s.sinh() / s).ln()
            };
            cov.ln_pdf([v.dx, v.dy]) - ln_jac
        })
        .sum())
}
