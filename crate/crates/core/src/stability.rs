//! Finite/non-finite sweeps over the quantities each latent distribution
//! needs during training: the PGM KL to the prior, the Poincaré distance
//! near the rim, and the wrapped-normal log density at large tangent norms.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hwn::{hwn_log_density, hwn_push_forward, Cov2, HwnParams};
use crate::hyperbolic::{lorentz_origin, poincare_distance, Curvature, PoincarePoint};
use crate::pgm::{kl_divergence, PgmNormalParams};

pub const CSV_HEADER: &str = "kind,param1,param2,value,finite";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepKind {
    /// KL from a PGM normal to `K(0, I, I)` at `c = 1`; grid over `(ln β, ln γ²)`.
    PgmKl,
    /// Distance from `((1 - δ)/√c, 0)` to the disk centre; grid over `(δ, c)`.
    PoincareDist,
    /// Wrapped-normal log density at the push-forward of a tangent of norm
    /// `r` from the origin; grid over `(r, c)`.
    HwnLogpdf,
}

impl SweepKind {
    pub const ALL: [SweepKind; 3] = [
        SweepKind::PgmKl,
        SweepKind::PoincareDist,
        SweepKind::HwnLogpdf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::PgmKl => "pgm_kl",
            SweepKind::PoincareDist => "poincare_dist",
            SweepKind::HwnLogpdf => "hwn_logpdf",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub param1: Vec<f64>,
    pub param2: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl GridSpec {
    pub fn default_for(kind: SweepKind) -> GridSpec {
        match kind {
            SweepKind::PgmKl => GridSpec {
                param1: linspace(-20.0, 20.0, 81),
                param2: linspace(-10.0, 10.0, 41),
            },
            SweepKind::PoincareDist => GridSpec {
                param1: (1..=18).map(|k| 10f64.powi(-k)).collect(),
                param2: vec![0.5, 1.0, 1.5],
            },
            SweepKind::HwnLogpdf => GridSpec {
                param1: vec![
                    0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0,
                    600.0, 700.0, 710.0, 720.0, 750.0, 800.0, 1000.0,
                ],
                param2: vec![0.5, 1.0, 1.5],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Finite,
    NonFinite,
    /// A typed domain/constraint error was raised instead of a value.
    Guarded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub param1: f64,
    pub param2: f64,
    pub value: Option<f64>,
}

impl SweepRow {
    pub fn outcome(&self) -> Outcome {
        match self.value {
            None => Outcome::Guarded,
            Some(v) if v.is_finite() => Outcome::Finite,
            Some(_) => Outcome::NonFinite,
        }
    }
}

/// PGM mean used by the KL sweep.
const PGM_SWEEP_ALPHA: f64 = 1.0;

fn evaluate(kind: SweepKind, p1: f64, p2: f64) -> Result<f64> {
    match kind {
        SweepKind::PgmKl => {
            let c = Curvature::new(1.0)?;
            let q = PgmNormalParams::from_ln(&[PGM_SWEEP_ALPHA], &[p1], &[p2], c)?;
            kl_divergence(&q, &PgmNormalParams::prior(1, c))
        }
        SweepKind::PoincareDist => {
            let c = Curvature::new(p2)?;
            let p = PoincarePoint::new_unchecked((1.0 - p1) / c.sqrt(), 0.0);
            Ok(poincare_distance(
                p,
                PoincarePoint::new_unchecked(0.0, 0.0),
                c,
            ))
        }
        SweepKind::HwnLogpdf => {
            let c = Curvature::new(p2)?;
            let origin = lorentz_origin(c);
            let params = HwnParams::new(vec![origin], vec![Cov2::isotropic(1.0)?], c)?;
            let z = hwn_push_forward(origin, [p1, 0.0], c);
            hwn_log_density(&[z], &params)
        }
    }
}

/// Evaluates `kind` on every grid point. Errors become [`Outcome::Guarded`] rows.
pub fn stability_sweep(kind: SweepKind, grid: &GridSpec) -> Vec<SweepRow> {
    grid.param1
        .iter()
        .flat_map(|&p1| grid.param2.iter().map(move |&p2| (p1, p2)))
        .map(|(param1, param2)| SweepRow {
            kind,
            param1,
            param2,
            value: evaluate(kind, param1, param2).ok(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub total: usize,
    pub finite: usize,
    pub non_finite: usize,
    pub guarded: usize,
}

impl SweepSummary {
    pub fn finite_fraction(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.finite as f64 / self.total as f64
    }
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    rows.iter().fold(SweepSummary::default(), |mut s, r| {
        s.total += 1;
        match r.outcome() {
            Outcome::Finite => s.finite += 1,
            Outcome::NonFinite => s.non_finite += 1,
            Outcome::Guarded => s.guarded += 1,
        }
        s
    })
}

/// Writes `kind,param1,param2,value,finite` rows; guarded rows carry the value `error`.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let value = match r.value {
            Some(v) => format!("{v:e}"),
            None => "error".to_string(),
        };
        let finite = r.outcome() == Outcome::Finite;
        writeln!(
            out,
            "{},{:e},{:e},{},{}",
            r.kind, r.param1, r.param2, value, finite
        )?;
    }
    Ok(())
}
