//! Gaussian-manifold geometry, the pseudo Gaussian manifold (PGM) normal
//! distribution, and a Gaussian Manifold VAE trained with a small
//! reverse-mode differentiation engine.

pub mod autodiff;
pub mod cli;
pub mod data;
pub mod error;
pub mod hwn;
pub mod hyperbolic;
pub mod manifold;
pub mod pgm;
pub mod sampling;
pub mod special;
pub mod stability;
pub mod vae;
pub mod verify;

pub use error::{Error, Result};
