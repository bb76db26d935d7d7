//! Measurement, prediction and analysis of how memorable individual images
//! are to trainable machines.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: a small reverse-mode autodiff engine, machines, SGD.
//! - [`data`]: images, datasets, rotations, episode sampling, loaders.
//! - [`metrics`]: calibration error, accuracy, Spearman correlation.
//! - [`measurer`]: the observe / discriminate / detect episode protocol.
//! - [`attributes`]: per-image pixel statistics.
//! - [`predictor`]: pixel-to-score regressor.
//! - [`analysis`]: decile grouping, correlations, label rankings,
//!   cross-run consistency.

pub mod analysis;
pub mod attributes;
pub mod data;
pub mod error;
pub mod measurer;
pub mod metrics;
pub mod predictor;
pub mod scores;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
