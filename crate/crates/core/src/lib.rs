//! Driver fatigue and distraction detection: a depthwise-separable CNN
//! trained from scratch, a landmark-based PERCLOS estimator, image
//! preprocessing and augmentation, and evaluation metrics.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f32`, the precision used by the weight file.

pub mod config;
pub mod error;
pub mod fatigue;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod synth;
pub mod tensor;
pub mod train;
pub mod vision;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor32 = tensor::Tensor<f32>;
pub type Weights32 = model::ModelWeights<f32>;
