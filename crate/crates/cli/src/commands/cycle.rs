use std::path::{Path, PathBuf};

use esc_core::classify::PairedItem;
use esc_core::dataset::format_f64;
use esc_core::diffusion::ChannelSampler;
use esc_core::metrics::cycle_consistency;
use esc_core::toyworld::GmmWorld;
use esc_core::RngStream;
use serde::{Deserialize, Serialize};

use crate::config::{seeded, SamplerSpec, WorldSource};
use crate::output::{write_json, write_text};
use crate::{run_dir, CliError, CommonArgs};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CycleConfig {
    #[serde(default)]
    seed: u64,
    world: WorldSource,
    /// Replaces the world's channel noise.
    #[serde(default)]
    channel_sigma: Option<f64>,
    #[serde(default = "default_items")]
    n_items: usize,
    #[serde(default = "default_k")]
    k: usize,
    /// Forward `y -> x` sampler; the reverse direction is the world's channel.
    #[serde(default)]
    sampler: SamplerSpec,
}
seeded!(CycleConfig);

fn default_items() -> usize {
    200
}
fn default_k() -> usize {
    50
}

/// Items from `(seed, 0)`, conversions from `(seed, 1)`.
pub(crate) fn run(cfg: &CycleConfig, base: &Path, args: &CommonArgs) -> Result<PathBuf, CliError> {
    let mut world = cfg.world.build(base)?;
    if let Some(s) = cfg.channel_sigma {
        let mut spec = world.spec().clone();
        spec.channel_sigma = s;
        world = GmmWorld::from_spec(spec)?;
    }
    let forward = cfg.sampler.build(&world)?;
    let reverse = ChannelSampler { world: world.clone() };
    let dir = run_dir("cycle", cfg, args)?;
    let items: Vec<PairedItem> = world
        .sample_joint(RngStream::new(cfg.seed, 0), cfg.n_items)
        .into_iter()
        .map(PairedItem::from)
        .collect();
    let report = cycle_consistency(&items, forward.as_ref(), &reverse, cfg.k, RngStream::new(cfg.seed, 1))?;
    write_json(&dir.join("cycle.json"), &report)?;
    write_text(
        &dir.join("cycle.csv"),
        &format!(
            "comparison,fd\ndirect_vs_truth,{}\ncycle_vs_truth,{}\ncycle_vs_direct,{}\n",
            format_f64(report.fd_direct),
            format_f64(report.fd_cycle),
            format_f64(report.fd_cycle_vs_direct)
        ),
    )?;
    Ok(dir)
}
