use std::path::{Path, PathBuf};

use esc_core::dataset::{read_dataset, write_dataset, SignalDataset};
use esc_core::sigproc::{
    butterworth_bandpass_zerophase, detrend, resample, synth_quasiperiodic, znormalize, SynthConfig,
};
use esc_core::{RngStream, Signal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{default_true, resolve, seeded};
use crate::{run_dir, CliError, CommonArgs};

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum Input {
    Dataset(PathBuf),
    /// `n` synthetic signals; signal `i` uses `(seed, 0).split(i)`.
    Synth {
        config: SynthConfig,
        n: usize,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Band {
    low_hz: f64,
    high_hz: f64,
    #[serde(default = "default_order")]
    order: usize,
}

fn default_order() -> usize {
    4
}

/// Steps run in field order: resample, bandpass, detrend, znormalize.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PreprocessConfig {
    #[serde(default)]
    seed: u64,
    input: Input,
    #[serde(default)]
    target_rate_hz: Option<f64>,
    #[serde(default)]
    bandpass: Option<Band>,
    #[serde(default)]
    detrend: bool,
    #[serde(default = "default_true")]
    znormalize: bool,
}
seeded!(PreprocessConfig);

pub(crate) fn run(cfg: &PreprocessConfig, base: &Path, args: &CommonArgs) -> Result<PathBuf, CliError> {
    let (signals, labels) = match &cfg.input {
        Input::Dataset(p) => {
            let data = read_dataset(&resolve(base, p))?;
            (data.signals()?, data.labels().map(<[_]>::to_vec))
        }
        Input::Synth { config, n } => {
            let signals = (0..*n)
                .into_par_iter()
                .map(|i| synth_quasiperiodic(config, RngStream::new(cfg.seed, 0).split(i as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            (signals, None)
        }
    };
    let processed: Vec<Signal> = signals.par_iter().map(|s| process(s, cfg)).collect::<Result<_, _>>()?;
    let dir = run_dir("preprocess", cfg, args)?;
    if matches!(cfg.input, Input::Synth { .. }) {
        write_dataset(&dir.join("raw.csv"), &SignalDataset::from_signals(&signals)?)?;
    }
    let rows = processed.iter().map(|s| s.values().to_vec()).collect();
    write_dataset(
        &dir.join("processed.csv"),
        &SignalDataset::new(rows, labels, processed[0].sample_rate_hz())?,
    )?;
    Ok(dir)
}

fn process(s: &Signal, cfg: &PreprocessConfig) -> Result<Signal, esc_core::Error> {
    let mut s = match cfg.target_rate_hz {
        Some(r) => resample(s, r)?,
        None => s.clone(),
    };
    if let Some(b) = &cfg.bandpass {
        s = butterworth_bandpass_zerophase(&s, b.low_hz, b.high_hz, b.order)?;
    }
    if cfg.detrend {
        s = detrend(&s)?;
    }
    if cfg.znormalize {
        s = znormalize(&s)?;
    }
    Ok(s)
}
