use std::path::{Path, PathBuf};

use esc_core::dataset::{read_dataset, write_ensemble};
use esc_core::diffusion::{
    AnalyticDdimSampler, MlpDenoiser, ModelDdimSampler, NoiseSchedule, PosteriorSampler, ScheduleParams,
};
use esc_core::metrics::{fit_gaussian, frechet_distance};
use esc_core::toyworld::GmmWorld;
use esc_core::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{resolve, seeded, WorldSource};
use crate::output::write_json;
use crate::{run_dir, CliError, CommonArgs};

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum DenoiserSpec {
    /// Exact denoiser of a world, sampled with DDIM.
    Analytic {
        world: WorldSource,
        #[serde(default)]
        schedule: ScheduleParams,
    },
    /// A trained checkpoint; its own schedule is used.
    Checkpoint(PathBuf),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ConvertConfig {
    #[serde(default)]
    seed: u64,
    /// Dataset of observations `y`.
    input: PathBuf,
    denoiser: DenoiserSpec,
    k: usize,
    /// Only the first `limit` rows.
    #[serde(default)]
    limit: Option<usize>,
}
seeded!(ConvertConfig);

/// Row `i` is sampled from `(seed, 0).split(i)`; the analytic path's oracle
/// draws come from `(seed, 1).split(i)`.
pub(crate) fn run(cfg: &ConvertConfig, base: &Path, args: &CommonArgs) -> Result<PathBuf, CliError> {
    if cfg.k == 0 {
        return Err(CliError::Config("k must be at least 1".into()));
    }
    let data = read_dataset(&resolve(base, &cfg.input))?;
    let rows = &data.rows()[..cfg.limit.unwrap_or(usize::MAX).min(data.len())];
    let (sampler, world): (Box<dyn PosteriorSampler>, Option<GmmWorld>) = match &cfg.denoiser {
        DenoiserSpec::Analytic { world, schedule } => {
            let world = world.build(base)?;
            if world.dim() != data.d() {
                return Err(CliError::Config(format!(
                    "world has dimension {} but the signals have {}",
                    world.dim(),
                    data.d()
                )));
            }
            let sampler = AnalyticDdimSampler {
                world: world.clone(),
                schedule: NoiseSchedule::new(*schedule)?,
            };
            (Box::new(sampler), Some(world))
        }
        DenoiserSpec::Checkpoint(path) => {
            let (model, schedule) = MlpDenoiser::load_json(&resolve(base, path))?;
            if model.y_dim() != data.d() {
                return Err(CliError::Config(format!(
                    "checkpoint expects conditions of length {} but the signals have {}",
                    model.y_dim(),
                    data.d()
                )));
            }
            (Box::new(ModelDdimSampler { model, schedule }), None)
        }
    };
    let dir = run_dir("convert", cfg, args)?;
    std::fs::create_dir_all(dir.join("ensembles")).map_err(esc_core::Error::from)?;
    let fds: Vec<Option<f64>> = rows
        .par_iter()
        .enumerate()
        .map(|(i, y)| {
            let ens = sampler.sample(y, RngStream::new(cfg.seed, 0).split(i as u64), cfg.k)?;
            write_ensemble(&dir.join("ensembles").join(format!("ensemble_{i:05}.csv")), &ens)?;
            match &world {
                Some(w) if cfg.k >= 2 => {
                    let exact = w
                        .posterior_given_y(y)?
                        .sample(RngStream::new(cfg.seed, 1).split(i as u64), cfg.k);
                    let fd = frechet_distance(
                        &fit_gaussian(&ens.vectors().collect::<Vec<_>>())?,
                        &fit_gaussian(&exact)?,
                    )?;
                    Ok(Some(fd))
                }
                _ => Ok(None),
            }
        })
        .collect::<Result<_, esc_core::Error>>()?;
    let defined: Vec<f64> = fds.iter().flatten().copied().collect();
    let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    write_json(
        &dir.join("report.json"),
        &json!({
            "n_conditions": rows.len(),
            "k": cfg.k,
            "fd_vs_oracle": fds,
            "mean_fd_vs_oracle": mean,
        }),
    )?;
    Ok(dir)
}
