use rayon::prelude::*;

use super::NoiseSchedule;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::signal::PosteriorEnsemble;

/// Conditional noise predictor `eps(x_t, y, t)`.
pub trait DenoiserModel: Send + Sync {
    /// Length of the `x` vectors this model denoises.
    fn x_dim(&self) -> usize;

    fn predict(&self, x_t: &[f64], y: &[f64], step: usize) -> Vec<f64>;
}

impl<T: DenoiserModel + ?Sized> DenoiserModel for &T {
    fn x_dim(&self) -> usize {
        (**self).x_dim()
    }

    fn predict(&self, x_t: &[f64], y: &[f64], step: usize) -> Vec<f64> {
        (**self).predict(x_t, y, step)
    }
}

/// `sqrt(ab) x0 + sqrt(1 - ab) eps`.
pub fn diffuse(x0: &[f64], eps: &[f64], alpha_bar: f64) -> Vec<f64> {
    let (a, s) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    x0.iter().zip(eps).map(|(x, e)| a * x + s * e).collect()
}

/// Noised `x_t` at `step` together with the noise that produced it.
pub fn forward_noising(
    x0: &[f64],
    step: usize,
    stream: RngStream,
    schedule: &NoiseSchedule,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if step >= schedule.n_train_steps() {
        return Err(Error::invalid(format!(
            "step {step} outside 0..{}",
            schedule.n_train_steps()
        )));
    }
    let eps = stream.rng().gaussian_vec(x0.len());
    Ok((diffuse(x0, &eps, schedule.alpha_bar(step)), eps))
}

/// Deterministic DDIM update between two `alpha_bar` levels.
pub fn ddim_update(x_t: &[f64], eps_hat: &[f64], ab_t: f64, ab_prev: f64) -> Result<Vec<f64>> {
    if !(ab_t > 0.0) {
        return Err(Error::invalid(format!("alpha_bar {ab_t} must be positive")));
    }
    let noise_t = (1.0 - ab_t).sqrt();
    let inv = 1.0 / ab_t.sqrt();
    let (a_prev, s_prev) = (ab_prev.sqrt(), (1.0 - ab_prev).max(0.0).sqrt());
    Ok(x_t
        .iter()
        .zip(eps_hat)
        .map(|(x, e)| {
            let x0_hat = (x - noise_t * e) * inv;
            a_prev * x0_hat + s_prev * e
        })
        .collect())
}

/// One DDIM step from `step` to `prev` (`None` is the clean end point).
pub fn ddim_step(
    x_t: &[f64],
    eps_hat: &[f64],
    step: usize,
    prev: Option<usize>,
    schedule: &NoiseSchedule,
) -> Result<Vec<f64>> {
    if step >= schedule.n_train_steps() {
        return Err(Error::invalid(format!("step {step} outside the schedule")));
    }
    if prev.is_some_and(|p| p >= step) {
        return Err(Error::invalid("previous step must precede the current step"));
    }
    if x_t.len() != eps_hat.len() {
        return Err(Error::invalid("x_t and eps_hat differ in length"));
    }
    ddim_update(x_t, eps_hat, schedule.alpha_bar(step), schedule.alpha_bar_prev(prev))
}

fn run_chain<D: DenoiserModel + ?Sized>(
    denoiser: &D,
    y: &[f64],
    stream: RngStream,
    schedule: &NoiseSchedule,
) -> Result<Vec<f64>> {
    let mut x = stream.rng().gaussian_vec(denoiser.x_dim());
    for (step, prev) in schedule.sampling_pairs() {
        let eps = denoiser.predict(&x, y, step);
        if eps.len() != x.len() || eps.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        x = ddim_step(&x, &eps, step, prev, schedule)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
    }
    Ok(x)
}

/// `k` independent DDIM chains conditioned on `y`. Chain `i` starts from
/// `x_T ~ N(0, I)` drawn from `stream.split(i)`, so the result does not
/// depend on how chains are scheduled over threads.
pub fn ddim_sample<D: DenoiserModel + ?Sized>(
    denoiser: &D,
    y: &[f64],
    stream: RngStream,
    schedule: &NoiseSchedule,
    k: usize,
) -> Result<PosteriorEnsemble> {
    if k == 0 {
        return Err(Error::invalid("ddim_sample needs k >= 1"));
    }
    let samples = (0..k)
        .into_par_iter()
        .map(|i| run_chain(denoiser, y, stream.split(i as u64), schedule))
        .collect::<Result<Vec<_>>>()?;
    PosteriorEnsemble::from_vectors(y.to_vec(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::ScheduleParams;

    #[test]
    fn alpha_bar_one_is_identity() {
        let x0 = [0.3, -1.2];
        assert_eq!(diffuse(&x0, &[5.0, 7.0], 1.0), x0.to_vec());
    }

    #[test]
    fn forward_variance() {
        let s = NoiseSchedule::default();
        let step = 500;
        let n = 100_000;
        let zero = vec![0.0; n];
        let (x_t, _) = forward_noising(&zero, step, RngStream::new(5, 0), &s).unwrap();
        let var = x_t.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let target = 1.0 - s.alpha_bar(step);
        assert!((var / target - 1.0).abs() < 0.02, "{var} vs {target}");
    }

    #[test]
    fn forward_eps_reproduces() {
        let s = NoiseSchedule::default();
        let x0 = [1.0, 2.0, -3.0];
        let (x_t, eps) = forward_noising(&x0, 321, RngStream::new(1, 2), &s).unwrap();
        assert_eq!(diffuse(&x0, &eps, s.alpha_bar(321)), x_t);
        assert!(forward_noising(&x0, 1000, RngStream::new(1, 2), &s).is_err());
    }

    #[test]
    fn noiseless_step() {
        let s = NoiseSchedule::default();
        let x0 = [0.7, -0.2];
        let x_t: Vec<f64> = x0.iter().map(|v| s.alpha_bar(99).sqrt() * v).collect();
        let x_prev = ddim_step(&x_t, &[0.0, 0.0], 99, Some(89), &s).unwrap();
        for (p, v) in x_prev.iter().zip(x0) {
            assert!((p - s.alpha_bar(89).sqrt() * v).abs() < 1e-14);
        }
    }

    #[test]
    fn x0_recovery() {
        let s = NoiseSchedule::default();
        let x0 = [0.25, -4.0, 1.5];
        let eps = [1.1, -0.3, 0.8];
        let x_t = diffuse(&x0, &eps, s.alpha_bar(799));
        let back = ddim_step(&x_t, &eps, 799, None, &s).unwrap();
        for (b, v) in back.iter().zip(x0) {
            assert!((b - v).abs() < 1e-12);
        }
        assert!(ddim_step(&x_t, &eps, 799, Some(799), &s).is_err());
    }

    #[test]
    fn zero_alpha_bar_rejected() {
        assert!(ddim_update(&[1.0], &[0.0], 0.0, 0.5).is_err());
    }

    struct Nan;

    impl DenoiserModel for Nan {
        fn x_dim(&self) -> usize {
            1
        }

        fn predict(&self, _: &[f64], _: &[f64], step: usize) -> Vec<f64> {
            vec![if step < 500 { f64::NAN } else { 0.0 }]
        }
    }

    #[test]
    fn non_finite_reports_step() {
        let s = NoiseSchedule::new(ScheduleParams::default()).unwrap();
        match ddim_sample(&Nan, &[0.0], RngStream::new(0, 0), &s, 2) {
            Err(Error::NonFinite { step }) => assert_eq!(step, 499),
            other => panic!("unexpected {other:?}"),
        }
    }
}
