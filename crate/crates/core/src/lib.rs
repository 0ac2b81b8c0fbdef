//! Post-processing of code-model attention into visual attention and
//! code-traversal interaction matrices, eye-tracking ground truth, traversal
//! baselines and agreement statistics.
//!
//! Numeric kernels are generic over [`Scalar`] (`f32` or `f64`) and accumulate
//! in `f64`. The `*64` aliases below are what the command-line driver uses.

pub mod data;
pub mod error;
pub mod gaze;
pub mod interaction;
pub mod metrics;
pub mod scalar;
pub mod traversal;
pub mod visual;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type AttentionTensor32 = data::AttentionTensor<f32>;
pub type AttentionTensor64 = data::AttentionTensor<f64>;
pub type InteractionMatrix64 = data::InteractionMatrix<f64>;
pub type VisualAttention64 = data::VisualAttention<f64>;
