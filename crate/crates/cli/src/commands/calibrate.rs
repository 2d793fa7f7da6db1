use std::path::{Path, PathBuf};

use esc_core::calibrate::{calibrate_lambda, default_lambda_grid, CalibrationConfig};
use esc_core::classify::{decide, read_strategy_results_csv, Strategy, StrategyResult};
use serde::{Deserialize, Serialize};

use crate::config::{default_threshold, resolve, seeded};
use crate::output::{write_json, write_text};
use crate::{run_dir, CliError, CommonArgs};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CalibrateConfig {
    #[serde(default)]
    seed: u64,
    /// Long-format strategy results used for calibration.
    scores: PathBuf,
    #[serde(default = "default_strategy")]
    strategy: Strategy,
    #[serde(default)]
    label_index: usize,
    alpha: f64,
    delta: f64,
    #[serde(default = "default_lambda_grid")]
    lambda_grid: Vec<f64>,
    #[serde(default = "default_threshold")]
    decision_threshold: f64,
    /// Results to apply the calibrated threshold to.
    #[serde(default)]
    deploy: Option<PathBuf>,
}
seeded!(CalibrateConfig);

fn default_strategy() -> Strategy {
    Strategy::Esc
}

fn pick(path: &Path, cfg: &CalibrateConfig) -> Result<StrategyResult, CliError> {
    read_strategy_results_csv(path)?
        .into_iter()
        .find(|r| r.strategy == cfg.strategy && r.label_index == cfg.label_index)
        .ok_or_else(|| {
            CliError::Config(format!(
                "{} has no rows for {} label {}",
                path.display(),
                cfg.strategy,
                cfg.label_index
            ))
        })
}

/// Writes `calibration.json`; on FAILED the report is still written, every
/// deployed item is abstained on and the command exits with code 3.
pub(crate) fn run(cfg: &CalibrateConfig, base: &Path, args: &CommonArgs) -> Result<PathBuf, CliError> {
    let calib = CalibrationConfig {
        alpha: cfg.alpha,
        delta: cfg.delta,
        lambda_grid: cfg.lambda_grid.clone(),
        decision_threshold: cfg.decision_threshold,
    };
    calib.validate()?;
    let data = pick(&resolve(base, &cfg.scores), cfg)?;
    let deploy = cfg.deploy.as_ref().map(|p| pick(&resolve(base, p), cfg)).transpose()?;
    let dir = run_dir("calibrate", cfg, args)?;
    let outcome = calibrate_lambda(&data.scores, &data.true_labels, &calib)?;
    let report = dir.join("calibration.json");
    write_json(&report, &outcome.to_json())?;
    if let Some(d) = deploy {
        let mut csv = String::from("item_index,score,accepted,decision,true_label\n");
        for (i, (&s, &t)) in d.scores.iter().zip(&d.true_labels).enumerate() {
            let accepted = outcome.accepts(s);
            let decision = if accepted {
                decide(s, cfg.decision_threshold).to_string()
            } else {
                "abstain".into()
            };
            csv.push_str(&format!(
                "{i},{},{},{decision},{t}\n",
                esc_core::dataset::format_f64(s),
                u8::from(accepted)
            ));
        }
        write_text(&dir.join("deployment.csv"), &csv)?;
    }
    if outcome.failed() {
        return Err(CliError::CalibrationFailed(report));
    }
    Ok(dir)
}
