//! Random variates used by the samplers.

use rand::Rng;
use rand_distr::StandardNormal;

/// `Gamma(shape, 1)` by Marsaglia–Tsang rejection. Shapes below one are
/// boosted to `shape + 1` and scaled by `U^{1/shape}`.
pub fn sample_gamma_unit<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let boosted = sample_gamma_unit(rng, shape + 1.0);
        let u: f64 = rng.random();
        return boosted * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x: f64 = rng.sample(StandardNormal);
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u: f64 = rng.random();
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

pub fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
