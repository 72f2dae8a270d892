use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::Curvature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// PGM-normal posterior on a product of Gaussian manifolds.
    Gm,
    /// Diagonal Gaussian posterior of width `2 · n_factors`.
    Euclidean,
}

fn default_hidden() -> usize {
    200
}

fn default_batch() -> usize {
    100
}

fn default_lr() -> f64 {
    1e-3
}

fn default_input_dim() -> usize {
    784
}

fn default_kind() -> ModelKind {
    ModelKind::Gm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaeConfig {
    pub n_factors: usize,
    pub curvature: f64,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_input_dim")]
    pub input_dim: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default = "default_kind")]
    pub kind: ModelKind,
}

impl VaeConfig {
    /// 784-pixel inputs, two hidden layers of 200, batch 100, Adam at 1e-3.
    pub fn new(n_factors: usize, curvature: f64, epochs: usize, seed: u64) -> Self {
        VaeConfig {
            n_factors,
            curvature,
            hidden: default_hidden(),
            input_dim: default_input_dim(),
            batch_size: default_batch(),
            lr: default_lr(),
            epochs,
            seed,
            kind: ModelKind::Gm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_factors", self.n_factors),
            ("hidden", self.hidden),
            ("input_dim", self.input_dim),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        Curvature::new(self.curvature).map_err(|_| {
            Error::Config(format!(
                "curvature must be positive, got {}",
                self.curvature
            ))
        })?;
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }

    pub fn curvature(&self) -> Curvature {
        Curvature::new(self.curvature).expect("validated curvature")
    }

    /// Total manifold dimension, two per factor.
    pub fn latent_dim(&self) -> usize {
        2 * self.n_factors
    }

    /// Encoder output width: `(v₁, v₂, raw γ²)` per factor, or mean and
    /// log-variance per latent coordinate.
    pub fn encoder_out(&self) -> usize {
        match self.kind {
            ModelKind::Gm => 3 * self.n_factors,
            ModelKind::Euclidean => 2 * self.latent_dim(),
        }
    }
}
