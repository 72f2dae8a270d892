//! The PGM normal against quadrature, statrs densities and Monte Carlo.

mod common;

use common::*;
use gmvae_core::hyperbolic::{Curvature, GaussianPoint};
use gmvae_core::manifold::{gm_kl, kl_quadratic_residual, metric_tensor};
use gmvae_core::pgm::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn curv(c: f64) -> Curvature {
    Curvature::new(c).unwrap()
}

fn random_factor<R: Rng>(rng: &mut R) -> PgmFactor {
    PgmFactor {
        alpha: rng.random_range(-2.0..2.0),
        ln_beta: rng.random_range(0.2f64..5.0).ln(),
        ln_gamma2: rng.random_range(0.05f64..4.0).ln(),
    }
}

#[test]
fn gauss_legendre_oracle_is_exact_on_polynomials() {
    let (x, w) = gauss_legendre(10);
    let int = |k: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
    assert!((int(0) - 2.0).abs() < 1e-14);
    assert!((int(18) - 2.0 / 19.0).abs() < 1e-14);
    let (n, w) = composite_rule(0.0, 3.0, 7, 12);
    let e: f64 = n.iter().zip(&w).map(|(x, w)| w * (-x).exp()).sum();
    assert!((e - (1.0 - (-3f64).exp())).abs() < 1e-14);
}

#[test]
fn density_normalizes_under_volume_measure() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &c in &[0.5, 1.0, 1.5] {
        for _ in 0..10 {
            let f = random_factor(&mut rng);
            let z = integrate_factor(&f, c, |mu, s| log_density_factor(mu, s.ln(), &f, curv(c)));
            assert!((z - 1.0).abs() < 1e-6, "c={c} {f:?}: {z}");
        }
    }
}

#[test]
fn factorization_matches_statrs_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let c = [0.5, 1.0, 1.5][rng.random_range(0..3)];
        let f = random_factor(&mut rng);
        let (mu, sigma) = (rng.random_range(-5.0..5.0), rng.random_range(0.05..8.0));
        let params =
            PgmNormalParams::from_ln(&[f.alpha], &[f.ln_beta], &[f.ln_gamma2], curv(c)).unwrap();
        let ours =
            log_density_lebesgue(&[GaussianPoint::new(mu, sigma).unwrap()], &params).unwrap();
        let oracle = factorized_ln_lebesgue(mu, sigma, &f, c);
        // Relative agreement of the densities themselves.
        assert!(
            (ours - oracle).abs() <= 1e-9,
            "{f:?} at ({mu}, {sigma}): {ours} vs {oracle}"
        );
    }
}

#[test]
fn closed_form_kl_within_monte_carlo_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..20 {
        let c = [0.5, 1.0, 1.5][i % 3];
        let p = [random_factor(&mut rng), random_factor(&mut rng)];
        let q = [random_factor(&mut rng), random_factor(&mut rng)];
        let pp = PgmNormalParams::from_ln(
            &[p[0].alpha, p[1].alpha],
            &[p[0].ln_beta, p[1].ln_beta],
            &[p[0].ln_gamma2, p[1].ln_gamma2],
            curv(c),
        )
        .unwrap();
        let qq = PgmNormalParams::from_ln(
            &[q[0].alpha, q[1].alpha],
            &[q[0].ln_beta, q[1].ln_beta],
            &[q[0].ln_gamma2, q[1].ln_gamma2],
            curv(c),
        )
        .unwrap();
        let kl = kl_divergence(&pp, &qq).unwrap();
        let (m, se) = mc_kl_oracle(&p, &q, c, 200_000, 100 + i as u64);
        assert!(
            (kl - m).abs() < 4.0 * se,
            "pair {i}: closed {kl}, MC {m} ± {se}"
        );
    }
}

#[test]
fn quadratic_residual_is_third_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let c = curv([0.5, 1.0, 1.5][rng.random_range(0..3)]);
        let base =
            GaussianPoint::new(rng.random_range(-3.0..3.0), rng.random_range(0.1..5.0)).unwrap();
        let dmu = rng.random_range(-0.1..0.1);
        let ds = 0.1 * base.sigma();
        let r1 = kl_quadratic_residual(base, dmu, ds, c).unwrap();
        let r2 = kl_quadratic_residual(base, dmu, ds / 2.0, c).unwrap();
        let ratio = r1 / r2;
        assert!((6.0..=10.0).contains(&ratio), "ratio {ratio}");
        assert_eq!(kl_quadratic_residual(base, dmu, 0.0, c).unwrap(), 0.0);
        // The residual is the KL minus the quadratic form, computed directly.
        let moved = GaussianPoint::new(base.mu() + dmu, base.sigma() + ds).unwrap();
        let g = metric_tensor(base, c);
        let direct = gm_kl(moved, base, c) - 0.5 * (g.g11 * dmu * dmu + g.g22 * ds * ds);
        assert!(
            (direct - r1).abs() < 1e-12 * (1.0 + dmu * dmu * g.g11),
            "{direct} vs {r1}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kl_nonnegative_and_zero_on_self(
        a in -3.0f64..3.0, lb in -5.0f64..5.0, lg in -8.0f64..8.0,
        a2 in -3.0f64..3.0, lb2 in -5.0f64..5.0, lg2 in -8.0f64..8.0,
        c in prop::sample::select(vec![0.5, 1.0, 1.5]),
    ) {
        let p = PgmFactor { alpha: a, ln_beta: lb, ln_gamma2: lg };
        let q = PgmFactor { alpha: a2, ln_beta: lb2, ln_gamma2: lg2 };
        let kl = kl_divergence_factor(&p, &q, curv(c));
        prop_assert!(kl.is_finite());
        prop_assert!(kl >= -1e-12 * (1.0 + kl.abs()));
        prop_assert_eq!(kl_divergence_factor(&p, &p, curv(c)), 0.0);
    }

    #[test]
    fn log_density_peaks_near_mode(
        a in -3.0f64..3.0, lb in -2.0f64..2.0, lg in -3.0f64..1.0,
        dm in -1.0f64..1.0, ds in -1.0f64..1.0,
    ) {
        // The Normal part peaks at μ = α for every σ.
        let f = PgmFactor { alpha: a, ln_beta: lb, ln_gamma2: lg };
        let c = curv(1.0);
        let s = lb + ds;
        prop_assert!(log_density_factor(a, s, &f, c) >= log_density_factor(a + dm, s, &f, c));
    }
}
