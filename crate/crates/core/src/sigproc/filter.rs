use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::signal::Signal;

type C64 = Complex<f64>;

/// Second-order section `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: C64) -> C64 {
        let z2 = z_inv * z_inv;
        (C64::from(self.b[0]) + z_inv * self.b[1] + z2 * self.b[2])
            / (C64::from(1.0) + z_inv * self.a[0] + z2 * self.a[1])
    }
}

/// Digital Butterworth bandpass as cascaded biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassDesign {
    pub sections: Vec<Biquad>,
    pub rate_hz: f64,
    /// Largest pole radius, which sets the decay time.
    pub max_pole_radius: f64,
}

impl BandpassDesign {
    /// Bilinear-transform design of an order-`order` Butterworth bandpass
    /// (`2 order` poles) with prewarped band edges and unit gain at the
    /// centre frequency.
    pub fn new(rate_hz: f64, low_hz: f64, high_hz: f64, order: usize) -> Result<Self> {
        let nyquist = rate_hz / 2.0;
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) {
            return Err(Error::invalid(format!(
                "band {low_hz}..{high_hz} Hz must satisfy 0 < low < high < Nyquist ({nyquist} Hz)"
            )));
        }
        if order == 0 {
            return Err(Error::invalid("filter order must be positive"));
        }
        let fs2 = 2.0 * rate_hz;
        let w1 = fs2 * (PI * low_hz / rate_hz).tan();
        let w2 = fs2 * (PI * high_hz / rate_hz).tan();
        let bw = w2 - w1;
        let w0_sq = w1 * w2;

        let mut poles = Vec::with_capacity(2 * order);
        for k in 0..order {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let p = C64::from_polar(1.0, theta) * (bw / 2.0);
            let root = (p * p - w0_sq).sqrt();
            for s in [p + root, p - root] {
                poles.push((C64::from(fs2) + s) / (C64::from(fs2) - s));
            }
        }
        let max_pole_radius = poles.iter().map(|p| p.norm()).fold(0.0, f64::max);

        // conjugate pairs first, then the real poles paired in sorted order
        let tol = 1e-10;
        let mut sections = Vec::with_capacity(order);
        let mut reals: Vec<f64> = Vec::new();
        for p in &poles {
            if p.im > tol {
                sections.push(Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [-2.0 * p.re, p.norm_sqr()],
                });
            } else if p.im.abs() <= tol {
                reals.push(p.re);
            }
        }
        reals.sort_by(f64::total_cmp);
        for pair in reals.chunks(2) {
            let (r1, r2) = (pair[0], pair.get(1).copied().unwrap_or(0.0));
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [-(r1 + r2), r1 * r2],
            });
        }
        if sections.len() != order {
            return Err(Error::numerical("bandpass poles did not pair into biquads"));
        }
        let mut design = Self {
            sections,
            rate_hz,
            max_pole_radius,
        };
        // the analog centre sqrt(w1 w2) maps back to this digital frequency
        let centre_hz = rate_hz / PI * (w0_sq.sqrt() / fs2).atan();
        let gain = design.magnitude(centre_hz);
        for b in design.sections[0].b.iter_mut() {
            *b /= gain;
        }
        Ok(design)
    }

    /// `|H(e^{i w})|` at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let z_inv = C64::from_polar(1.0, -2.0 * PI * freq_hz / self.rate_hz);
        self.sections
            .iter()
            .fold(C64::from(1.0), |acc, s| acc * s.response(z_inv))
            .norm()
    }

    /// Samples for the slowest pole to decay by `factor`.
    pub fn decay_length(&self, factor: f64) -> usize {
        (factor.ln() / self.max_pole_radius.ln()).ceil() as usize
    }

    /// Causal filtering, transposed direct form II per section.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * out + z2;
                z2 = s.b[2] * input - s.a[1] * out;
                *v = out;
            }
        }
        y
    }
}

/// Zero-phase Butterworth bandpass: forward then backward filtering, so the
/// magnitude response is squared and the phase is zero.
///
/// Both ends are padded by odd reflection over `3 x` the settling length
/// (samples for the slowest pole to decay to 1e-3), capped at `d - 1`. Each
/// pass runs on until its response has decayed below 1e-12, which makes the
/// whole operation a symmetric two-sided convolution.
pub fn butterworth_bandpass_zerophase(signal: &Signal, low_hz: f64, high_hz: f64, order: usize) -> Result<Signal> {
    let design = BandpassDesign::new(signal.sample_rate_hz(), low_hz, high_hz, order)?;
    let x = signal.values();
    let n = x.len();
    let pad = (3 * design.decay_length(1e-3)).min(n.saturating_sub(1));
    let tail = design.decay_length(1e-12);

    let mut ext = Vec::with_capacity(n + 2 * pad + tail);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
    let len = ext.len();

    ext.resize(len + tail, 0.0);
    let mut forward = design.apply(&ext);
    forward.reverse();
    forward.resize(len + 2 * tail, 0.0);
    let mut both = design.apply(&forward);
    both.reverse();
    // `both[tail + i]` is the output at padded index i
    signal.with_values(both[tail + pad..tail + pad + n].to_vec())
}
