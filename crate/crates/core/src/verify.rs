//! Distance-preservation check for the isometries between the Gaussian
//! manifold, the Lorentz model and the Poincaré disk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::hyperbolic::{
    fisher_rao_distance, iso_g_to_l, iso_g_to_p, iso_l_to_p, lorentz_distance, poincare_distance,
    Curvature, GaussianPoint,
};

pub const DEFAULT_CURVATURES: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];
pub const DEFAULT_PAIRS: usize = 1000;
pub const ISOMETRY_TOLERANCE: f64 = 1e-9;

/// Mean `|Δd|` per route for one curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsometryReport {
    pub curvature: f64,
    pub pairs: usize,
    /// Fisher-Rao vs Lorentz distance after `T_c⁻¹`.
    pub gaussian_lorentz: f64,
    /// Fisher-Rao vs Poincaré distance after the G→P map.
    pub gaussian_poincare: f64,
    /// Lorentz vs Poincaré distance after the L→P map.
    pub lorentz_poincare: f64,
}

impl IsometryReport {
    pub fn worst(&self) -> f64 {
        self.gaussian_lorentz
            .max(self.gaussian_poincare)
            .max(self.lorentz_poincare)
    }

    pub fn passes(&self) -> bool {
        self.worst() <= ISOMETRY_TOLERANCE
    }
}

/// `μ ~ U[-100, 100]`, `σ ~ U(0, 100]`.
pub fn random_gaussian_point<R: Rng + ?Sized>(rng: &mut R) -> GaussianPoint {
    let mu = rng.random_range(-100.0..=100.0);
    let sigma = 100.0 * (1.0 - rng.random::<f64>());
    GaussianPoint::new(mu, sigma).expect("σ in (0, 100]")
}

pub fn verify_isometries(
    curvatures: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<Vec<IsometryReport>> {
    let mut out = Vec::with_capacity(curvatures.len());
    for &cv in curvatures {
        let c = Curvature::new(cv)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sums = [0.0; 3];
        for _ in 0..pairs {
            let (g1, g2) = (
                random_gaussian_point(&mut rng),
                random_gaussian_point(&mut rng),
            );
            let (l1, l2) = (iso_g_to_l(g1, c)?, iso_g_to_l(g2, c)?);
            let d_g = fisher_rao_distance(g1, g2, c);
            let d_l = lorentz_distance(l1, l2, c)?;
            let d_p = poincare_distance(iso_g_to_p(g1, c)?, iso_g_to_p(g2, c)?, c);
            let d_lp = poincare_distance(iso_l_to_p(l1, c)?, iso_l_to_p(l2, c)?, c);
            sums[0] += (d_g - d_l).abs();
            sums[1] += (d_g - d_p).abs();
            sums[2] += (d_l - d_lp).abs();
        }
        let n = pairs.max(1) as f64;
        out.push(IsometryReport {
            curvature: cv,
            pairs,
            gaussian_lorentz: sums[0] / n,
            gaussian_poincare: sums[1] / n,
            lorentz_poincare: sums[2] / n,
        });
    }
    Ok(out)
}
