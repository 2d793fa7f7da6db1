//! Variance-preserving diffusion: the noise schedule, deterministic DDIM
//! sampling over any [`DenoiserModel`], the exact denoiser of a
//! [`GmmWorld`](crate::toyworld::GmmWorld) posterior and a small trainable
//! MLP denoiser.

mod analytic;
mod ddim;
mod mlp;
mod sampler;
mod schedule;

pub use analytic::{analytic_gmm_denoiser, AnalyticGmmDenoiser};
pub use ddim::{ddim_sample, ddim_step, ddim_update, diffuse, forward_noising, DenoiserModel};
pub use mlp::{train_mlp_denoiser, LossTrace, MlpCheckpoint, MlpDenoiser, MlpGradient, TrainConfig};
pub use sampler::{AnalyticDdimSampler, ChannelSampler, ExactPosteriorSampler, ModelDdimSampler, PosteriorSampler};
pub use schedule::{NoiseSchedule, ScheduleParams};
