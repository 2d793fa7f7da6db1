//! Signal preparation: resampling, zero-phase Butterworth bandpass,
//! detrending and z-normalization, and synthetic quasi-periodic signals for
//! end-to-end runs without recorded data.

mod filter;
mod normalize;
mod resample;
mod synth;

pub use filter::{butterworth_bandpass_zerophase, BandpassDesign, Biquad};
pub use normalize::{detrend, znormalize};
pub use resample::{resample, MAX_UPSAMPLE_RATIO};
pub use synth::{synth_quasiperiodic, SynthConfig, WaveKind};
