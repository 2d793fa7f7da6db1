use std::path::{Path, PathBuf};

use esc_core::classify::read_strategy_results_csv;
use esc_core::dataset::{read_dataset, read_ensemble};
use esc_core::metrics::{ensemble_containment, fit_gaussian, frechet_distance, pca_uncertainty_curve, rmse};
use esc_core::PosteriorEnsemble;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::write_strategy_outputs;
use crate::config::{default_true, resolve, seeded};
use crate::output::{write_curve, write_json};
use crate::{run_dir, CliError, CommonArgs};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetPair {
    name: String,
    a: PathBuf,
    b: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleMetrics {
    /// Directory of `ensemble_*.csv` bundles, matched to `truth` rows in
    /// file-name order.
    dir: PathBuf,
    truth: PathBuf,
    #[serde(default = "default_pcs")]
    pc_counts: Vec<usize>,
    #[serde(default = "default_quantile")]
    coord_quantile: f64,
    #[serde(default = "default_quantile")]
    histogram_quantile: f64,
}

fn default_pcs() -> Vec<usize> {
    vec![1, 2, 3, 4, 5]
}
fn default_quantile() -> f64 {
    0.95
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct MetricsConfig {
    #[serde(default)]
    seed: u64,
    /// Long-format strategy results.
    #[serde(default)]
    results: Option<PathBuf>,
    /// Row-paired datasets compared by FD and mean RMSE.
    #[serde(default)]
    distances: Vec<DatasetPair>,
    #[serde(default)]
    ensembles: Option<EnsembleMetrics>,
    #[serde(default = "default_true")]
    plots: bool,
}
seeded!(MetricsConfig);

pub(crate) fn run(cfg: &MetricsConfig, base: &Path, args: &CommonArgs) -> Result<PathBuf, CliError> {
    if cfg.results.is_none() && cfg.distances.is_empty() && cfg.ensembles.is_none() {
        return Err(CliError::Config(
            "nothing to compute: set results, distances or ensembles".into(),
        ));
    }
    let results = cfg
        .results
        .as_ref()
        .map(|p| read_strategy_results_csv(&resolve(base, p)))
        .transpose()?;
    let dir = run_dir("metrics", cfg, args)?;
    let strategies = results
        .map(|r| write_strategy_outputs(&dir.join("strategies"), &r, cfg.plots))
        .transpose()?;
    let distances = cfg
        .distances
        .iter()
        .map(|d| distance_row(d, base))
        .collect::<Result<Vec<_>, _>>()?;
    let ensembles = cfg
        .ensembles
        .as_ref()
        .map(|e| ensemble_metrics(e, base, &dir))
        .transpose()?;
    write_json(
        &dir.join("summary.json"),
        &json!({ "strategies": strategies, "distances": distances, "ensembles": ensembles }),
    )?;
    Ok(dir)
}

fn distance_row(d: &DatasetPair, base: &Path) -> Result<Value, CliError> {
    let a = read_dataset(&resolve(base, &d.a))?;
    let b = read_dataset(&resolve(base, &d.b))?;
    if a.len() != b.len() || a.d() != b.d() {
        return Err(CliError::Config(format!("{}: datasets differ in shape", d.name)));
    }
    let total: f64 = a
        .rows()
        .iter()
        .zip(b.rows())
        .map(|(x, y)| rmse(x, y))
        .sum::<Result<f64, _>>()?;
    let fd = frechet_distance(&fit_gaussian(a.rows())?, &fit_gaussian(b.rows())?)?;
    Ok(json!({ "name": d.name, "fd": fd, "mean_rmse": total / a.len() as f64 }))
}

fn ensemble_metrics(e: &EnsembleMetrics, base: &Path, out: &Path) -> Result<Value, CliError> {
    let dir = resolve(base, &e.dir);
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|err| CliError::Config(format!("cannot list {}: {err}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|en| en.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv")
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("ensemble_"))
        })
        .collect();
    files.sort();
    let ensembles: Vec<PosteriorEnsemble> = files.iter().map(|p| read_ensemble(p)).collect::<Result<_, _>>()?;
    let truth = read_dataset(&resolve(base, &e.truth))?;
    if ensembles.is_empty() || ensembles.len() > truth.len() {
        return Err(CliError::Config(format!(
            "{} ensembles for {} ground-truth rows",
            ensembles.len(),
            truth.len()
        )));
    }
    let items: Vec<(&PosteriorEnsemble, &[f64])> = ensembles
        .iter()
        .zip(truth.rows())
        .map(|(en, t)| (en, t.as_slice()))
        .collect();
    let curve = pca_uncertainty_curve(&items, &e.pc_counts, e.coord_quantile)?;
    write_curve(&out.join("pca_uncertainty.csv"), &curve, "n_components", "uncertainty")?;
    let containment = ensemble_containment(&items, e.histogram_quantile)?;
    Ok(json!({ "n_ensembles": items.len(), "containment": containment, "pca_uncertainty": curve.points() }))
}
