pub(crate) mod calibrate;
pub(crate) mod convert;
pub(crate) mod cycle;
pub(crate) mod metrics;
pub(crate) mod preprocess;
pub(crate) mod select;
pub(crate) mod toyworld;
pub(crate) mod train;

use std::path::Path;

use esc_core::classify::{strategy_results_csv, Strategy, StrategyResult};
use esc_core::metrics::{auroc_gaps, rc_curve, roc_of, summarize_strategies};
use serde_json::{json, Value};

use crate::output::{write_curve, write_text};
use crate::svg::{line_chart, Series};
use crate::CliError;

/// Writes the long-format results, ROC/RC curves per strategy and label and
/// optional plots; returns the summary JSON.
pub(crate) fn write_strategy_outputs(dir: &Path, results: &[StrategyResult], plots: bool) -> Result<Value, CliError> {
    write_text(&dir.join("strategies.csv"), &strategy_results_csv(results))?;
    let summaries = summarize_strategies(results)?;
    let mut roc_series = Vec::new();
    let mut rc_series = Vec::new();
    for r in results {
        let tag = format!("{}_label{}", r.strategy, r.label_index);
        if let Some(roc) = roc_of(r)? {
            write_curve(&dir.join(format!("roc_{tag}.csv")), &roc, "fpr", "tpr")?;
            roc_series.push((tag.clone(), roc.points().to_vec()));
        }
        let rc = rc_curve(r)?;
        write_curve(&dir.join(format!("rc_{tag}.csv")), &rc, "coverage", "risk")?;
        rc_series.push((tag, rc.points().to_vec()));
    }
    if plots {
        write_text(
            &dir.join("roc.svg"),
            &line_chart(
                "ROC",
                "false positive rate",
                "true positive rate",
                &as_series(&roc_series),
            ),
        )?;
        write_text(
            &dir.join("rc.svg"),
            &line_chart("Risk-coverage", "coverage", "selective risk", &as_series(&rc_series)),
        )?;
    }
    let gaps = auroc_gaps(&summaries, Strategy::Esc, Strategy::OriginalY).unwrap_or_default();
    let max_gap = gaps
        .iter()
        .map(|g| g.1)
        .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))));
    Ok(json!({
        "n_items": results.first().map_or(0, |r| r.scores.len()),
        "strategies": summaries,
        "auroc_gap_esc_vs_original_y": gaps
            .iter()
            .map(|(l, g)| json!({"label_index": l, "gap": g}))
            .collect::<Vec<_>>(),
        "max_auroc_gap_esc_vs_original_y": max_gap,
    }))
}

fn as_series(v: &[(String, Vec<(f64, f64)>)]) -> Vec<Series<'_>> {
    v.iter()
        .map(|(n, p)| Series {
            name: n.clone(),
            points: p,
        })
        .collect()
}
