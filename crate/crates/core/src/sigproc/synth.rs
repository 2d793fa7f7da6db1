use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveKind {
    /// Narrow Gaussian spikes (ECG-like).
    Spiky,
    /// Raised-cosine pulses (PPG-like).
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub kind: WaveKind,
    pub rate_hz: f64,
    pub duration_s: f64,
    pub beat_hz: f64,
    /// Standard deviation of each beat's onset, as a fraction of the period.
    pub jitter: f64,
    pub noise_std: f64,
}

/// Spike width (Gaussian sd) and pulse width (full support), as fractions
/// of the beat period.
const SPIKE_WIDTH: f64 = 0.04;
const PULSE_WIDTH: f64 = 0.6;

fn template(kind: WaveKind, dt: f64, period: f64) -> f64 {
    match kind {
        WaveKind::Spiky => {
            let w = SPIKE_WIDTH * period;
            (-0.5 * (dt / w).powi(2)).exp()
        }
        WaveKind::Smooth => {
            let half = PULSE_WIDTH * period / 2.0;
            if dt.abs() < half {
                0.5 * (1.0 + (PI * dt / half).cos())
            } else {
                0.0
            }
        }
    }
}

/// A pulse train with one template per beat, per-beat onset jitter and
/// additive white noise. Deterministic given `stream`.
pub fn synth_quasiperiodic(config: &SynthConfig, stream: RngStream) -> Result<Signal> {
    let SynthConfig {
        kind,
        rate_hz,
        duration_s,
        beat_hz,
        jitter,
        noise_std,
    } = *config;
    if !(rate_hz > 0.0 && duration_s > 0.0 && beat_hz > 0.0) {
        return Err(Error::invalid("rate, duration and beat frequency must be positive"));
    }
    if !(jitter >= 0.0 && noise_std >= 0.0) {
        return Err(Error::invalid("jitter and noise must be non-negative"));
    }
    let n = (rate_hz * duration_s).round() as usize;
    if n == 0 {
        return Err(Error::invalid("signal would be empty"));
    }
    let period = 1.0 / beat_hz;
    let mut beat_rng = stream.split(0).rng();
    let n_beats = (duration_s * beat_hz).ceil() as usize + 2;
    let onsets: Vec<f64> = (0..n_beats)
        .map(|b| (b as f64 - 1.0) * period + jitter * period * beat_rng.gaussian())
        .collect();
    let mut noise_rng = stream.split(1).rng();
    let values = (0..n)
        .map(|i| {
            let t = i as f64 / rate_hz;
            let clean: f64 = onsets.iter().map(|&o| template(kind, t - o, period)).sum();
            clean + noise_std * noise_rng.gaussian()
        })
        .collect();
    Signal::new(values, rate_hz)
}

#[cfg(test)]
mod tests {
    use super::super::spectrum;
    use super::*;

    fn config(kind: WaveKind, jitter: f64, noise_std: f64) -> SynthConfig {
        SynthConfig {
            kind,
            rate_hz: 125.0,
            duration_s: 16.0,
            beat_hz: 1.25,
            jitter,
            noise_std,
        }
    }

    #[test]
    fn exact_period_without_jitter() {
        for kind in [WaveKind::Spiky, WaveKind::Smooth] {
            let s = synth_quasiperiodic(&config(kind, 0.0, 0.0), RngStream::new(1, 0)).unwrap();
            let x = s.values();
            let m = x.iter().sum::<f64>() / x.len() as f64;
            let acf = |lag: usize| -> f64 { (0..x.len() - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum() };
            let best = (50..150).max_by(|&a, &b| acf(a).total_cmp(&acf(b))).unwrap();
            assert!((best as i64 - 100).abs() <= 1, "{kind:?}: lag {best}");
        }
    }

    #[test]
    fn spectral_peak_at_beat_rate() {
        for kind in [WaveKind::Spiky, WaveKind::Smooth] {
            let s = synth_quasiperiodic(&config(kind, 0.02, 0.05), RngStream::new(2, 0)).unwrap();
            let x = s.values();
            let m = x.iter().sum::<f64>() / x.len() as f64;
            let centred: Vec<f64> = x.iter().map(|v| v - m).collect();
            let resolution = 1.0 / 16.0;
            let peak = spectrum::peak(&centred, 125.0, 0.5, 20.0, resolution / 4.0);
            assert!((peak - 1.25).abs() <= resolution, "{kind:?}: {peak}");
        }
    }

    #[test]
    fn reproducible() {
        let c = config(WaveKind::Smooth, 0.05, 0.1);
        let a = synth_quasiperiodic(&c, RngStream::new(3, 0)).unwrap();
        assert_eq!(a, synth_quasiperiodic(&c, RngStream::new(3, 0)).unwrap());
        assert_ne!(a, synth_quasiperiodic(&c, RngStream::new(4, 0)).unwrap());
    }

    #[test]
    fn rejects_bad_params() {
        let mut c = config(WaveKind::Spiky, 0.0, 0.0);
        c.beat_hz = 0.0;
        assert!(synth_quasiperiodic(&c, RngStream::new(0, 0)).is_err());
    }
}
