use std::path::{Path, PathBuf};

use esc_core::diffusion::{
    AnalyticDdimSampler, ExactPosteriorSampler, NoiseSchedule, PosteriorSampler, ScheduleParams,
};
use esc_core::toyworld::{presets, GmmWorld, WorldSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Configs carry a `seed` that `--seed` may override.
pub(crate) trait Seeded: DeserializeOwned + Serialize {
    fn seed_mut(&mut self) -> &mut u64;
}

macro_rules! seeded {
    ($($t:ty),*) => {
        $(impl $crate::config::Seeded for $t {
            fn seed_mut(&mut self) -> &mut u64 {
                &mut self.seed
            }
        })*
    };
}
pub(crate) use seeded;

pub(crate) fn load<T: Seeded>(path: &Path, seed: Option<u64>) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let mut cfg: T = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))?;
    if let Some(s) = seed {
        *cfg.seed_mut() = s;
    }
    Ok(cfg)
}

/// Relative paths in a config are relative to the config file.
pub(crate) fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub(crate) enum WorldSource {
    /// `symmetric_1d`, `xor_2d` or `waveform_8d`.
    Preset(String),
    /// A world spec JSON file.
    File(PathBuf),
    Spec(WorldSpec),
}

impl WorldSource {
    pub(crate) fn build(&self, base: &Path) -> Result<GmmWorld, CliError> {
        match self {
            WorldSource::Preset(name) => match name.as_str() {
                "symmetric_1d" => Ok(presets::symmetric_1d()),
                "xor_2d" => Ok(presets::xor_2d()),
                "waveform_8d" => Ok(presets::waveform_8d()),
                other => Err(CliError::Config(format!(
                    "unknown world preset {other:?} (expected symmetric_1d, xor_2d or waveform_8d)"
                ))),
            },
            WorldSource::File(p) => {
                let path = resolve(base, p);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read world file {}: {e}", path.display())))?;
                Ok(GmmWorld::from_json(&text)?)
            }
            WorldSource::Spec(spec) => Ok(GmmWorld::from_spec(spec.clone())?),
        }
    }
}

/// Posterior sampler over a known world.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub(crate) enum SamplerSpec {
    #[default]
    Exact,
    Ddim(ScheduleParams),
}

impl SamplerSpec {
    pub(crate) fn build(&self, world: &GmmWorld) -> Result<Box<dyn PosteriorSampler>, CliError> {
        Ok(match self {
            SamplerSpec::Exact => Box::new(ExactPosteriorSampler { world: world.clone() }),
            SamplerSpec::Ddim(p) => Box::new(AnalyticDdimSampler {
                world: world.clone(),
                schedule: NoiseSchedule::new(*p)?,
            }),
        })
    }
}

pub(crate) fn default_threshold() -> f64 {
    esc_core::classify::DEFAULT_DECISION_THRESHOLD
}

pub(crate) fn default_true() -> bool {
    true
}
