//! Uncertainty-aware signal conversion and classification.
//!
//! A conversion model draws many candidate solutions `x` for one observation
//! `y`; a classifier trained on the `x` space is then applied to every
//! candidate and the scores are averaged (the expected-score classifier).
//! Around that core the crate provides:
//!
//! - [`toyworld`]: an analytic Gaussian-mixture world with exact posteriors,
//!   used as the ground-truth oracle for everything else;
//! - [`diffusion`]: a linear noise schedule, a deterministic DDIM sampler, an
//!   exact analytic denoiser and a small trainable MLP denoiser;
//! - [`classify`]: expected/single-score classifiers, logistic regression,
//!   class-balanced batching and a strategy-comparison harness;
//! - [`calibrate`]: selective classification with a Hoeffding-bound threshold;
//! - [`metrics`]: RMSE, Fréchet distance, AUROC, risk-coverage, mutual
//!   information and ensemble-uncertainty summaries;
//! - [`select`]: picking one representative candidate for display;
//! - [`sigproc`]: resampling, zero-phase Butterworth bandpass, detrending and
//!   normalization, plus synthetic quasi-periodic signals.

// `!(x > 0.0)`-style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod classify;
pub mod dataset;
pub mod diffusion;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod select;
pub mod signal;
pub mod sigproc;
pub mod toyworld;

pub use error::{Error, Result};
pub use rng::{RngStream, StreamRng};
pub use signal::{LabeledSignal, PosteriorEnsemble, ScoreSet, Signal};
