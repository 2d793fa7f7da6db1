use std::path::{Path, PathBuf};

use esc_core::classify::{
    strategy_harness, train_logistic, ClassifierModel, ExactXClassifier, ExactYClassifier, HarnessConfig,
    LogisticConfig, PairedItem,
};
use esc_core::dataset::{write_dataset, SignalDataset};
use esc_core::diffusion::{train_mlp_denoiser, ModelDdimSampler, NoiseSchedule, ScheduleParams, TrainConfig};
use esc_core::signal::UNIT_RATE_HZ;
use esc_core::RngStream;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{train::write_loss_trace, write_strategy_outputs};
use crate::config::{default_threshold, default_true, seeded, SamplerSpec, WorldSource};
use crate::output::write_json;
use crate::{run_dir, CliError, CommonArgs};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ToyworldConfig {
    #[serde(default)]
    seed: u64,
    world: WorldSource,
    #[serde(default = "default_items")]
    n_items: usize,
    #[serde(default = "default_k")]
    k: usize,
    /// Sampler of the oracle pipeline.
    #[serde(default)]
    sampler: SamplerSpec,
    #[serde(default = "default_threshold")]
    decision_threshold: f64,
    #[serde(default = "default_true")]
    plots: bool,
    /// Adds the trained pipeline: MLP denoiser + DDIM and logistic classifiers.
    #[serde(default)]
    trained: Option<TrainedPipeline>,
}
seeded!(ToyworldConfig);

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainedPipeline {
    #[serde(default = "default_train")]
    n_train: usize,
    /// Evaluated on the first `n_items` test items (DDIM through an MLP is
    /// the slow part).
    #[serde(default = "default_trained_items")]
    n_items: usize,
    #[serde(default = "default_trained_k")]
    k: usize,
    #[serde(default)]
    schedule: ScheduleParams,
    #[serde(default)]
    denoiser: TrainConfig,
    #[serde(default)]
    classifier: LogisticConfig,
}

fn default_items() -> usize {
    1000
}
fn default_k() -> usize {
    100
}
fn default_train() -> usize {
    5000
}
fn default_trained_items() -> usize {
    100
}
fn default_trained_k() -> usize {
    50
}

/// Streams under the seed: 0 test data, 1 oracle harness, 2 training data,
/// 3 denoiser training, 4/5 x/y classifiers, 6 trained harness.
pub(crate) fn run(cfg: &ToyworldConfig, base: &Path, args: &CommonArgs) -> Result<PathBuf, CliError> {
    let world = cfg.world.build(base)?;
    world.require_both_classes()?;
    if cfg.n_items == 0 {
        return Err(CliError::Config("n_items must be at least 1".into()));
    }
    let dir = run_dir("toyworld", cfg, args)?;
    let seed = cfg.seed;
    let items: Vec<PairedItem> = world
        .sample_joint(RngStream::new(seed, 0), cfg.n_items)
        .into_iter()
        .map(PairedItem::from)
        .collect();
    let labels: Vec<Vec<u8>> = items.iter().map(|it| it.labels.clone()).collect();
    write_dataset(
        &dir.join("data_x.csv"),
        &SignalDataset::new(
            items.iter().map(|it| it.x.clone()).collect(),
            Some(labels.clone()),
            UNIT_RATE_HZ,
        )?,
    )?;
    write_dataset(
        &dir.join("data_y.csv"),
        &SignalDataset::new(
            items.iter().map(|it| it.y.clone()).collect(),
            Some(labels),
            UNIT_RATE_HZ,
        )?,
    )?;

    let fx = ExactXClassifier { world: world.clone() };
    let fy = ExactYClassifier { world: world.clone() };
    let sampler = cfg.sampler.build(&world)?;
    let harness = HarnessConfig {
        k: cfg.k,
        decision_threshold: cfg.decision_threshold,
    };
    let results = strategy_harness(
        &items,
        sampler.as_ref(),
        &[&fx],
        &[&fy],
        &harness,
        RngStream::new(seed, 1),
    )?;
    let exact = write_strategy_outputs(&dir.join("exact"), &results, cfg.plots)?;

    let trained = match &cfg.trained {
        None => None,
        Some(t) => Some(run_trained(t, &world, &items, cfg, &dir.join("trained"))?),
    };
    write_json(
        &dir.join("summary.json"),
        &json!({ "exact": exact, "trained": trained }),
    )?;
    Ok(dir)
}

fn run_trained(
    t: &TrainedPipeline,
    world: &esc_core::toyworld::GmmWorld,
    items: &[PairedItem],
    cfg: &ToyworldConfig,
    dir: &Path,
) -> Result<serde_json::Value, CliError> {
    let seed = cfg.seed;
    let train = world.sample_joint(RngStream::new(seed, 2), t.n_train);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = train.iter().map(|s| (s.x.clone(), s.y.clone())).collect();
    let schedule = NoiseSchedule::new(t.schedule)?;
    let (model, trace) = train_mlp_denoiser(&pairs, &schedule, &t.denoiser, RngStream::new(seed, 3))?;
    let xs: Vec<Vec<f64>> = train.iter().map(|s| s.x.clone()).collect();
    let ys: Vec<Vec<f64>> = train.iter().map(|s| s.y.clone()).collect();
    let cs: Vec<u8> = train.iter().map(|s| s.c).collect();
    let (fx, _) = train_logistic(&xs, &cs, &t.classifier, RngStream::new(seed, 4))?;
    let (fy, _) = train_logistic(&ys, &cs, &t.classifier, RngStream::new(seed, 5))?;
    std::fs::create_dir_all(dir).map_err(esc_core::Error::from)?;
    model.save_json(&schedule, &dir.join("denoiser.json"))?;
    write_json(&dir.join("classifiers.json"), &json!({ "f_x": fx, "f_y": fy }))?;
    write_loss_trace(&dir.join("loss_trace.csv"), &trace)?;

    let sampler = ModelDdimSampler { model, schedule };
    let harness = HarnessConfig {
        k: t.k,
        decision_threshold: cfg.decision_threshold,
    };
    let n = t.n_items.min(items.len());
    let (fx, fy): (&dyn ClassifierModel, &dyn ClassifierModel) = (&fx, &fy);
    let results = strategy_harness(&items[..n], &sampler, &[fx], &[fy], &harness, RngStream::new(seed, 6))?;
    write_strategy_outputs(dir, &results, cfg.plots)
}
