use std::path::{Path, PathBuf};

use esc_core::classify::{train_logistic, LogisticConfig};
use esc_core::dataset::read_dataset;
use esc_core::diffusion::{train_mlp_denoiser, LossTrace, NoiseSchedule, ScheduleParams, TrainConfig};
use esc_core::RngStream;
use serde::{Deserialize, Serialize};

use crate::config::{resolve, seeded, WorldSource};
use crate::output::{indexed_csv, write_json, write_text};
use crate::{run_dir, CliError, CommonArgs};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelKind {
    Denoiser,
    Classifier,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Space {
    #[default]
    X,
    Y,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum Source {
    /// `n` joint draws from a world.
    World { world: WorldSource, n: usize },
    /// Row-paired datasets; labels come from `x`.
    Files { x: PathBuf, y: PathBuf },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TrainCommandConfig {
    #[serde(default)]
    seed: u64,
    model: ModelKind,
    source: Source,
    #[serde(default)]
    schedule: ScheduleParams,
    #[serde(default)]
    denoiser: TrainConfig,
    #[serde(default)]
    classifier: LogisticConfig,
    /// Input space of the classifier.
    #[serde(default)]
    space: Space,
    #[serde(default)]
    label_index: usize,
}
seeded!(TrainCommandConfig);

type Pairs = (Vec<Vec<f64>>, Vec<Vec<f64>>, Option<Vec<u8>>);

fn load_pairs(cfg: &TrainCommandConfig, base: &Path) -> Result<Pairs, CliError> {
    match &cfg.source {
        Source::World { world, n } => {
            let world = world.build(base)?;
            let draws = world.sample_joint(RngStream::new(cfg.seed, 0), *n);
            Ok((
                draws.iter().map(|s| s.x.clone()).collect(),
                draws.iter().map(|s| s.y.clone()).collect(),
                Some(draws.iter().map(|s| s.c).collect()),
            ))
        }
        Source::Files { x, y } => {
            let dx = read_dataset(&resolve(base, x))?;
            let dy = read_dataset(&resolve(base, y))?;
            if dx.len() != dy.len() {
                return Err(CliError::Config(format!(
                    "x has {} rows but y has {}",
                    dx.len(),
                    dy.len()
                )));
            }
            let labels = match dx.labels() {
                Some(l) if cfg.label_index < dx.n_labels() => Some(l.iter().map(|r| r[cfg.label_index]).collect()),
                Some(_) => {
                    return Err(CliError::Config(format!(
                        "label_index {} out of range ({} labels)",
                        cfg.label_index,
                        dx.n_labels()
                    )))
                }
                None => None,
            };
            Ok((dx.rows().to_vec(), dy.rows().to_vec(), labels))
        }
    }
}

/// Stream 0 draws world data (if any), stream 1 drives training.
pub(crate) fn run(cfg: &TrainCommandConfig, base: &Path, args: &CommonArgs) -> Result<PathBuf, CliError> {
    let (xs, ys, labels) = load_pairs(cfg, base)?;
    let dir = run_dir("train", cfg, args)?;
    let stream = RngStream::new(cfg.seed, 1);
    match cfg.model {
        ModelKind::Denoiser => {
            let schedule = NoiseSchedule::new(cfg.schedule)?;
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = xs.into_iter().zip(ys).collect();
            let (model, trace) = train_mlp_denoiser(&pairs, &schedule, &cfg.denoiser, stream)?;
            model.save_json(&schedule, &dir.join("model.json"))?;
            write_loss_trace(&dir.join("loss_trace.csv"), &trace)?;
        }
        ModelKind::Classifier => {
            let labels = labels.ok_or_else(|| CliError::Config("classifier training needs labels".into()))?;
            let inputs = match cfg.space {
                Space::X => xs,
                Space::Y => ys,
            };
            let (model, trace) = train_logistic(&inputs, &labels, &cfg.classifier, stream)?;
            write_json(&dir.join("model.json"), &model)?;
            write_text(
                &dir.join("loss_trace.csv"),
                &indexed_csv(&["iteration", "train_loss"], trace.iter().map(|&l| vec![l])),
            )?;
        }
    }
    Ok(dir)
}

/// One row per epoch: `epoch,train_loss,validation_loss`.
pub(crate) fn write_loss_trace(path: &Path, trace: &LossTrace) -> Result<(), CliError> {
    write_text(
        path,
        &indexed_csv(
            &["epoch", "train_loss", "validation_loss"],
            trace.train.iter().zip(&trace.validation).map(|(&t, &v)| vec![t, v]),
        ),
    )
}
