use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::{DenoiserModel, NoiseSchedule};
use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, softmax_log};
use crate::toyworld::{GmmWorld, PosteriorGmm};

/// One component of the diffused posterior at a fixed noise level.
#[derive(Debug)]
struct Diffused {
    log_weight: f64,
    mean: DVector<f64>,
    precision: DMatrix<f64>,
    log_det: f64,
}

/// Exact noise predictor for a Gaussian-mixture posterior.
///
/// At level `ab` the posterior component `N(m, S)` diffuses to
/// `N(sqrt(ab) m, ab S + (1 - ab) I)`, and the ideal prediction is
/// `eps* = -sqrt(1 - ab) * grad log p_t(x_t)`.
#[derive(Debug)]
pub struct AnalyticGmmDenoiser {
    posterior: PosteriorGmm,
    schedule: NoiseSchedule,
    cache: Vec<OnceLock<Vec<Diffused>>>,
}

/// Exact denoiser of `world`'s posterior given `y`.
pub fn analytic_gmm_denoiser(world: &GmmWorld, y: &[f64], schedule: &NoiseSchedule) -> Result<AnalyticGmmDenoiser> {
    Ok(AnalyticGmmDenoiser::from_posterior(
        world.posterior_given_y(y)?,
        schedule.clone(),
    ))
}

impl AnalyticGmmDenoiser {
    pub fn from_posterior(posterior: PosteriorGmm, schedule: NoiseSchedule) -> Self {
        let cache = (0..schedule.n_train_steps()).map(|_| OnceLock::new()).collect();
        Self {
            posterior,
            schedule,
            cache,
        }
    }

    pub fn posterior(&self) -> &PosteriorGmm {
        &self.posterior
    }

    fn diffuse_components(&self, alpha_bar: f64) -> Result<Vec<Diffused>> {
        let d = self.posterior.dim();
        let root = alpha_bar.sqrt();
        let p = &self.posterior;
        p.weights()
            .iter()
            .zip(p.means())
            .zip(p.covs())
            .filter(|((w, _), _)| **w > 0.0)
            .map(|((w, m), s)| {
                let cov = s * alpha_bar + DMatrix::identity(d, d) * (1.0 - alpha_bar);
                let chol = cov
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::numerical("diffused covariance is not positive definite"))?;
                let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                Ok(Diffused {
                    log_weight: w.ln(),
                    mean: DVector::from_iterator(d, m.iter().map(|v| root * v)),
                    precision: chol.inverse(),
                    log_det,
                })
            })
            .collect()
    }

    fn eps_from(components: &[Diffused], x_t: &[f64], alpha_bar: f64) -> Vec<f64> {
        let x = DVector::from_column_slice(x_t);
        let pulls: Vec<DVector<f64>> = components.iter().map(|c| &c.precision * (&x - &c.mean)).collect();
        let log_r: Vec<f64> = components
            .iter()
            .zip(&pulls)
            .map(|(c, pull)| c.log_weight - 0.5 * (c.log_det + (&x - &c.mean).dot(pull)))
            .collect();
        debug_assert!(log_sum_exp(&log_r).is_finite());
        let r = softmax_log(&log_r);
        let mut out = DVector::zeros(x.len());
        for (ri, pull) in r.iter().zip(&pulls) {
            out.axpy(*ri, pull, 1.0);
        }
        out *= (1.0 - alpha_bar).sqrt();
        out.iter().copied().collect()
    }

    /// Ideal noise prediction at an arbitrary level `alpha_bar` in `(0, 1)`.
    pub fn epsilon_at(&self, x_t: &[f64], alpha_bar: f64) -> Result<Vec<f64>> {
        if !(alpha_bar > 0.0 && alpha_bar < 1.0) {
            return Err(Error::invalid("alpha_bar must lie in (0, 1)"));
        }
        Ok(Self::eps_from(&self.diffuse_components(alpha_bar)?, x_t, alpha_bar))
    }
}

impl DenoiserModel for AnalyticGmmDenoiser {
    fn x_dim(&self) -> usize {
        self.posterior.dim()
    }

    fn predict(&self, x_t: &[f64], _y: &[f64], step: usize) -> Vec<f64> {
        let ab = self.schedule.alpha_bar(step);
        // alpha_bar < 1 for every schedule step, so the diffused covariances
        // are at least (1 - ab) I and always factor.
        let comps = self.cache[step].get_or_init(|| {
            self.diffuse_components(ab)
                .expect("diffused covariance is positive definite")
        });
        Self::eps_from(comps, x_t, ab)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::ddim_sample;
    use crate::metrics::{fit_gaussian, frechet_distance};
    use crate::rng::RngStream;
    use crate::toyworld::{presets, CovarianceSpec, WorldSpec};

    fn gaussian_posterior(mean: f64, var: f64) -> PosteriorGmm {
        PosteriorGmm::new(vec![1.0], vec![vec![mean]], vec![DMatrix::from_element(1, 1, var)]).unwrap()
    }

    #[test]
    fn standard_normal_half_level() {
        let den = AnalyticGmmDenoiser::from_posterior(gaussian_posterior(0.0, 1.0), NoiseSchedule::default());
        for x in [-2.0, 0.3, 1.7] {
            let eps = den.epsilon_at(&[x], 0.5).unwrap()[0];
            assert!((eps - 0.5f64.sqrt() * x).abs() < 1e-12);
        }
    }

    #[test]
    fn score_zero_at_mode() {
        let den = AnalyticGmmDenoiser::from_posterior(gaussian_posterior(1.3, 0.4), NoiseSchedule::default());
        let ab: f64 = 0.999_999;
        let eps = den.epsilon_at(&[ab.sqrt() * 1.3], ab).unwrap()[0];
        assert!(eps.abs() < 1e-12);
    }

    #[test]
    fn midpoint_of_symmetric_mixture() {
        let p = PosteriorGmm::new(
            vec![0.5, 0.5],
            vec![vec![-1.0, 2.0], vec![3.0, 0.0]],
            vec![DMatrix::identity(2, 2) * 0.3; 2],
        )
        .unwrap();
        let den = AnalyticGmmDenoiser::from_posterior(p, NoiseSchedule::default());
        for ab in [0.1f64, 0.5, 0.9] {
            let mid = [ab.sqrt(), ab.sqrt()];
            let eps = den.epsilon_at(&mid, ab).unwrap();
            assert!(eps.iter().all(|v| v.abs() < 1e-12), "{eps:?}");
        }
    }

    #[test]
    fn predict_matches_uncached() {
        let w = presets::xor_2d();
        let s = NoiseSchedule::default();
        let den = analytic_gmm_denoiser(&w, &[0.4, -0.9], &s).unwrap();
        let a = den.predict(&[0.1, 0.2], &[], 500);
        let b = den.epsilon_at(&[0.1, 0.2], s.alpha_bar(500)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_gaussian_chains_land_near_posterior() {
        // prior N(0, 1), unit noise, y = 1: posterior N(0.5, 0.5)
        let w = GmmWorld::from_spec(WorldSpec {
            weights: vec![1.0],
            means: vec![vec![0.0]],
            covariances: vec![CovarianceSpec::Diagonal(vec![1.0])],
            component_class: vec![1],
            channel_sigma: 1.0,
        })
        .unwrap();
        let s = NoiseSchedule::default();
        let den = analytic_gmm_denoiser(&w, &[1.0], &s).unwrap();
        let ens = ddim_sample(&den, &[1.0], RngStream::new(77, 0), &s, 1000).unwrap();
        let sd = 0.5f64.sqrt();
        let inside = ens.vectors().filter(|x| (x[0] - 0.5).abs() <= 4.0 * sd).count();
        assert!(inside >= 999, "{inside} of 1000");
    }

    #[test]
    fn symmetric_world_mean() {
        let w = presets::symmetric_1d();
        let s = NoiseSchedule::default();
        let den = analytic_gmm_denoiser(&w, &[0.0], &s).unwrap();
        let ens = ddim_sample(&den, &[0.0], RngStream::new(9, 0), &s, 10_000).unwrap();
        assert!(ens.mean()[0].abs() < 0.05, "{}", ens.mean()[0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let w = presets::xor_2d();
        let s = NoiseSchedule::default();
        let den = analytic_gmm_denoiser(&w, &[1.0, 1.0], &s).unwrap();
        let a = ddim_sample(&den, &[1.0, 1.0], RngStream::new(3, 4), &s, 1).unwrap();
        let b = ddim_sample(&den, &[1.0, 1.0], RngStream::new(3, 4), &s, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ddim_matches_exact_posterior_2d() {
        let w = presets::xor_2d();
        let s = NoiseSchedule::default();
        let y = [0.8, -0.3];
        let den = analytic_gmm_denoiser(&w, &y, &s).unwrap();
        let ens = ddim_sample(&den, &y, RngStream::new(10, 0), &s, 5000).unwrap();
        let exact = den.posterior().sample(RngStream::new(10, 1), 5000);
        let fd = frechet_distance(
            &fit_gaussian(&ens.vectors().collect::<Vec<_>>()).unwrap(),
            &fit_gaussian(&exact).unwrap(),
        )
        .unwrap();
        assert!(fd < 0.05, "FD {fd}");
    }
}
