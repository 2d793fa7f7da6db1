//! Value types shared across the crate. All are immutable after construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample rate attached to vectors that have no physical time axis.
pub const UNIT_RATE_HZ: f64 = 1.0;

/// A finite, non-empty real sequence with a positive sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignal")]
pub struct Signal {
    values: Vec<f64>,
    sample_rate_hz: f64,
}

#[derive(Deserialize)]
struct RawSignal {
    values: Vec<f64>,
    sample_rate_hz: f64,
}

impl TryFrom<RawSignal> for Signal {
    type Error = Error;
    fn try_from(raw: RawSignal) -> Result<Self> {
        Signal::new(raw.values, raw.sample_rate_hz)
    }
}

impl Signal {
    pub fn new(values: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("signal must have at least one sample"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("signal value {i} is not finite")));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(Self { values, sample_rate_hz })
    }

    /// A signal over an abstract vector space (unit sample rate).
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Self::new(values, UNIT_RATE_HZ)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.sample_rate_hz
    }

    /// New signal with the same rate and different values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.sample_rate_hz)
    }
}

/// A signal together with its multi-label binary annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSignal {
    signal: Signal,
    labels: Vec<u8>,
}

impl LabeledSignal {
    pub fn new(signal: Signal, labels: Vec<u8>) -> Result<Self> {
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(Error::invalid(format!("label {i} is {}, expected 0 or 1", labels[i])));
        }
        Ok(Self { signal, labels })
    }

    pub fn signal(&self) -> &Signal {
        &self.signal
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn has_label(&self, label: usize) -> bool {
        self.labels.get(label).copied() == Some(1)
    }
}

/// One observation and the `K` candidate solutions drawn for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEnsemble {
    condition: Signal,
    samples: Vec<Signal>,
}

impl PosteriorEnsemble {
    pub fn new(condition: Signal, samples: Vec<Signal>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::invalid("ensemble needs at least one sample"));
        };
        let d = first.len();
        if let Some(i) = samples.iter().position(|s| s.len() != d) {
            return Err(Error::invalid(format!(
                "ensemble sample {i} has length {}, expected {d}",
                samples[i].len()
            )));
        }
        Ok(Self { condition, samples })
    }

    /// Build from raw vectors over an abstract space.
    pub fn from_vectors(condition: Vec<f64>, samples: Vec<Vec<f64>>) -> Result<Self> {
        let condition = Signal::from_vec(condition)?;
        let samples = samples.into_iter().map(Signal::from_vec).collect::<Result<Vec<_>>>()?;
        Self::new(condition, samples)
    }

    pub fn condition(&self) -> &Signal {
        &self.condition
    }

    pub fn samples(&self) -> &[Signal] {
        &self.samples
    }

    pub fn k(&self) -> usize {
        self.samples.len()
    }

    /// Dimension of the sample space.
    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(Signal::values)
    }

    /// Coordinate-wise mean of the samples.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for s in self.vectors() {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        let k = self.k() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        mean
    }
}

/// Classifier scores, one per ensemble sample, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    scores: Vec<f64>,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid("score set is empty"));
        }
        if let Some(i) = scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::invalid(format!("score {i} = {} outside [0, 1]", scores[i])));
        }
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}
