//! Reverse-mode differentiation over dense matrices, plus the layers and
//! optimizer the VAEs need.

mod adam;
mod graph;
mod nn;
mod real;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use graph::{Gradients, Graph, Var};
pub use nn::{glorot_uniform, Bindings, Linear, Mlp, ParamId, ParamSet};
pub use real::{Dual, Real};
pub use tensor::Tensor;
