use crate::error::{Error, Result};
use crate::signal::Signal;

/// Largest supported `target / source` rate ratio.
pub const MAX_UPSAMPLE_RATIO: f64 = 4.0;

/// Zero crossings of the sinc kernel on each side, in units of the cutoff.
const HALF_ZEROS: f64 = 16.0;
const KAISER_BETA: f64 = 8.6;

/// Modified Bessel function of the first kind, order 0 (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum, mut k) = (1.0, 1.0, 1.0);
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Band-limited resampling with a Kaiser-windowed sinc. The cutoff is the
/// lower of the two Nyquist frequencies; weights are normalized per output
/// sample so constant signals pass unchanged. Output length is
/// `round(d * target / source)`.
pub fn resample(signal: &Signal, target_rate_hz: f64) -> Result<Signal> {
    let source = signal.sample_rate_hz();
    if !(target_rate_hz > 0.0 && target_rate_hz.is_finite()) {
        return Err(Error::invalid(format!("target rate {target_rate_hz} must be positive")));
    }
    if target_rate_hz == source {
        return Ok(signal.clone());
    }
    let ratio = target_rate_hz / source;
    if ratio > MAX_UPSAMPLE_RATIO {
        return Err(Error::invalid(format!(
            "upsampling by {ratio:.3} exceeds the supported factor {MAX_UPSAMPLE_RATIO}"
        )));
    }
    let x = signal.values();
    let n_out = (x.len() as f64 * ratio).round() as usize;
    if n_out == 0 {
        return Err(Error::invalid("resampled signal would be empty"));
    }
    let cutoff = ratio.min(1.0);
    let half_width = HALF_ZEROS / cutoff;
    let norm = bessel_i0(KAISER_BETA);
    let out = (0..n_out)
        .map(|j| {
            let t = j as f64 / ratio;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(x.len() - 1);
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (i, v) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let tau = i as f64 - t;
                let r = tau / half_width;
                let window = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm;
                let w = sinc(cutoff * tau) * window;
                acc += w * v;
                wsum += w;
            }
            acc / wsum
        })
        .collect();
    Signal::new(out, target_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::super::spectrum;
    use super::*;

    #[test]
    fn identity_rate() {
        let s = Signal::new(vec![1.0, -2.0, 3.5], 100.0).unwrap();
        assert_eq!(resample(&s, 100.0).unwrap(), s);
    }

    #[test]
    fn downsampled_sine() {
        let s = Signal::new(spectrum::sine(5.0, 250.0, 2500), 250.0).unwrap();
        let r = resample(&s, 125.0).unwrap();
        assert_eq!(r.len(), 1250);
        assert_eq!(r.sample_rate_hz(), 125.0);
        let peak = spectrum::peak(r.values(), 125.0, 1.0, 20.0, 0.01);
        assert!((peak - 5.0).abs() <= 0.1, "peak {peak}");
        let amp = spectrum::amplitude(r.values(), 125.0, 5.0);
        assert!((amp - 1.0).abs() < 0.02, "amplitude {amp}");
    }

    #[test]
    fn upsampled_sine_matches_analytic() {
        let s = Signal::new(spectrum::sine(3.0, 100.0, 1000), 100.0).unwrap();
        let r = resample(&s, 250.0).unwrap();
        let truth = spectrum::sine(3.0, 250.0, 2500);
        // compare away from the edges
        let err = r.values()[200..2300]
            .iter()
            .zip(&truth[200..2300])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn dc_preserved() {
        let s = Signal::new(vec![2.75; 333], 360.0).unwrap();
        for target in [125.0, 500.0, 90.0] {
            let r = resample(&s, target).unwrap();
            assert!(r.values().iter().all(|v| (v - 2.75).abs() < 1e-6));
        }
    }

    #[test]
    fn rejects_large_upsampling() {
        let s = Signal::new(vec![0.0; 10], 10.0).unwrap();
        assert!(resample(&s, 41.0).is_err());
        assert!(resample(&s, 0.0).is_err());
    }
}
