use super::{analytic_gmm_denoiser, ddim_sample, DenoiserModel, NoiseSchedule};
use crate::error::Result;
use crate::rng::RngStream;
use crate::signal::PosteriorEnsemble;
use crate::toyworld::GmmWorld;

/// A conversion model `g(y, z)`: draws `k` candidate solutions for `y`.
pub trait PosteriorSampler: Send + Sync {
    fn sample(&self, y: &[f64], stream: RngStream, k: usize) -> Result<PosteriorEnsemble>;
}

/// Exact i.i.d. draws from a world's posterior.
#[derive(Debug, Clone)]
pub struct ExactPosteriorSampler {
    pub world: GmmWorld,
}

impl PosteriorSampler for ExactPosteriorSampler {
    fn sample(&self, y: &[f64], stream: RngStream, k: usize) -> Result<PosteriorEnsemble> {
        let samples = self.world.posterior_given_y(y)?.sample(stream, k);
        PosteriorEnsemble::from_vectors(y.to_vec(), samples)
    }
}

/// The world's forward channel `x -> y`, used as the reverse direction of a
/// cycle. The "condition" here is `x`.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    pub world: GmmWorld,
}

impl PosteriorSampler for ChannelSampler {
    fn sample(&self, x: &[f64], stream: RngStream, k: usize) -> Result<PosteriorEnsemble> {
        let mut rng = stream.rng();
        let samples = (0..k).map(|_| self.world.observe(x, &mut rng)).collect();
        PosteriorEnsemble::from_vectors(x.to_vec(), samples)
    }
}

/// DDIM over the exact analytic denoiser of a world.
#[derive(Debug, Clone)]
pub struct AnalyticDdimSampler {
    pub world: GmmWorld,
    pub schedule: NoiseSchedule,
}

impl PosteriorSampler for AnalyticDdimSampler {
    fn sample(&self, y: &[f64], stream: RngStream, k: usize) -> Result<PosteriorEnsemble> {
        let den = analytic_gmm_denoiser(&self.world, y, &self.schedule)?;
        ddim_sample(&den, y, stream, &self.schedule, k)
    }
}

/// DDIM over a trained denoiser.
#[derive(Debug, Clone)]
pub struct ModelDdimSampler<D> {
    pub model: D,
    pub schedule: NoiseSchedule,
}

impl<D: DenoiserModel> PosteriorSampler for ModelDdimSampler<D> {
    fn sample(&self, y: &[f64], stream: RngStream, k: usize) -> Result<PosteriorEnsemble> {
        ddim_sample(&self.model, y, stream, &self.schedule, k)
    }
}
