use std::path::{Path, PathBuf};

use esc_core::classify::{ExactXClassifier, PairedItem};
use esc_core::dataset::format_f64;
use esc_core::select::{select_all, selection_quality};
use esc_core::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{default_threshold, seeded, SamplerSpec, WorldSource};
use crate::output::{write_json, write_text};
use crate::{run_dir, CliError, CommonArgs};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SelectConfig {
    #[serde(default)]
    seed: u64,
    world: WorldSource,
    #[serde(default = "default_items")]
    n_items: usize,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default)]
    sampler: SamplerSpec,
    #[serde(default = "default_threshold")]
    decision_threshold: f64,
}
seeded!(SelectConfig);

fn default_items() -> usize {
    200
}
fn default_k() -> usize {
    100
}

/// Items come from `(seed, 0)`; item `i`'s ensemble from `(seed, 1).split(i)`,
/// the same draw the quality comparison uses.
pub(crate) fn run(cfg: &SelectConfig, base: &Path, args: &CommonArgs) -> Result<PathBuf, CliError> {
    let world = cfg.world.build(base)?;
    let sampler = cfg.sampler.build(&world)?;
    let clf = ExactXClassifier { world: world.clone() };
    let dir = run_dir("select", cfg, args)?;
    let items: Vec<PairedItem> = world
        .sample_joint(RngStream::new(cfg.seed, 0), cfg.n_items)
        .into_iter()
        .map(PairedItem::from)
        .collect();
    let stream = RngStream::new(cfg.seed, 1);
    let per_item: Vec<String> = items
        .par_iter()
        .enumerate()
        .map(|(i, it)| {
            let ens = sampler.sample(&it.y, stream.split(i as u64), cfg.k)?;
            let (sel, fallback) = select_all(&ens, &clf, cfg.decision_threshold)?;
            Ok(sel
                .iter()
                .map(|s| {
                    format!(
                        "{i},{},{},{},{}\n",
                        s.strategy,
                        s.selected_index,
                        format_f64(s.selected_score),
                        u8::from(fallback)
                    )
                })
                .collect())
        })
        .collect::<Result<_, esc_core::Error>>()?;
    write_text(
        &dir.join("selections.csv"),
        &(String::from("item_index,strategy,selected_index,selected_score,fallback\n") + &per_item.concat()),
    )?;
    let quality = selection_quality(&items, sampler.as_ref(), &clf, cfg.k, cfg.decision_threshold, stream)?;
    let mut csv = String::from("strategy,rmse,fd\n");
    for q in &quality {
        csv.push_str(&format!("{},{},{}\n", q.strategy, format_f64(q.rmse), format_f64(q.fd)));
    }
    write_text(&dir.join("quality.csv"), &csv)?;
    write_json(&dir.join("quality.json"), &quality)?;
    Ok(dir)
}
