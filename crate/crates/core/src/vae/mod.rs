//! Gaussian Manifold VAE and its Euclidean baseline.

mod config;
mod elbo;
mod iwae;
pub mod kernels;
mod model;
mod train;
mod traverse;

pub use config::{ModelKind, VaeConfig};
pub use elbo::{elbo, elbo_and_grads, elbo_graph, ElboGraph, ElboTerms, FrozenNoise, Noise};
pub use iwae::{input_rng, iwae_log_likelihood, log_sum_exp};
pub use model::{
    EncoderOutput, GaussianPosterior, LatentSample, Posterior, Vae, LN_GAMMA2_MAX, LN_GAMMA2_MIN,
};
pub use train::{
    checkpoint_path, evaluate_elbo, train, train_epoch, ElboSummary, EpochMetrics, TrainOptions,
    TrainState, METRICS_HEADER,
};
pub use traverse::{
    bernoulli_entropy, geodesic_path, latent_traversal, spearman, traverse_beta, Traversal,
};
