//! Multi-head multimodal deep interest network for rating prediction.
//!
//! The crate is organised bottom-up:
//!
//! - [`autograd`]: reverse-mode differentiation over dense `f64` tensors,
//!   plus the Adam optimizer.
//! - [`image_features`]: colour and clarity statistics of poster images.
//! - [`pipeline`]: MovieLens ingestion, leakage-free feature engineering
//!   and the seeded train/test split.
//! - [`model`]: the attention + multi-head residual network and the four
//!   baselines it is compared against.
//! - [`metrics`]: ROC-AUC, average precision, thresholded scores and CSV
//!   exports of the curves.

pub mod autograd;
pub mod gradcheck;
pub mod kernels;
pub mod image_features;
pub mod numfmt;
pub mod pipeline;
pub mod metrics;
pub mod model;
pub mod synthetic;
