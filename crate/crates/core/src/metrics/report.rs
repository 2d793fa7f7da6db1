use serde::{Deserialize, Serialize};

use super::{aurc, auroc, confusion_metrics, risk_coverage, roc_curve, CurvePoints};
use crate::calibrate::confidence;
use crate::classify::{Strategy, StrategyResult};
use crate::error::{Error, Result};

/// Metrics of one strategy on one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub label_index: usize,
    /// `None` when the labels are all one class.
    pub auroc: Option<f64>,
    pub aurc: f64,
    pub tpr: f64,
    pub tnr: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroRow {
    /// Mean over the labels with a defined AUROC.
    pub auroc: Option<f64>,
    pub aurc: f64,
    pub tpr: f64,
    pub tnr: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub labels: Vec<LabelRow>,
    #[serde(rename = "macro")]
    pub macro_row: MacroRow,
}

/// Per-label and macro rows for every strategy present, in input order.
pub fn summarize_strategies(results: &[StrategyResult]) -> Result<Vec<StrategySummary>> {
    let mut out: Vec<StrategySummary> = Vec::new();
    for r in results {
        let row = label_row(r)?;
        match out.iter_mut().find(|s| s.strategy == r.strategy) {
            Some(s) => s.labels.push(row),
            None => out.push(StrategySummary {
                strategy: r.strategy,
                labels: vec![row],
                macro_row: MacroRow {
                    auroc: None,
                    aurc: 0.0,
                    tpr: 0.0,
                    tnr: 0.0,
                    f1: 0.0,
                },
            }),
        }
    }
    for s in &mut out {
        let n = s.labels.len() as f64;
        let mean = |f: fn(&LabelRow) -> f64| s.labels.iter().map(f).sum::<f64>() / n;
        let defined: Vec<f64> = s.labels.iter().filter_map(|l| l.auroc).collect();
        s.macro_row = MacroRow {
            auroc: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
            aurc: mean(|l| l.aurc),
            tpr: mean(|l| l.tpr),
            tnr: mean(|l| l.tnr),
            f1: mean(|l| l.f1),
        };
    }
    Ok(out)
}

fn label_row(r: &StrategyResult) -> Result<LabelRow> {
    let cm = confusion_metrics(&r.decisions, &r.true_labels)?;
    Ok(LabelRow {
        label_index: r.label_index,
        auroc: auroc_if_defined(&r.scores, &r.true_labels)?,
        aurc: aurc(&rc_curve(r)?)?,
        tpr: cm.tpr,
        tnr: cm.tnr,
        f1: cm.f1,
    })
}

fn auroc_if_defined(scores: &[f64], labels: &[u8]) -> Result<Option<f64>> {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == labels.len() {
        return Ok(None);
    }
    auroc(scores, labels).map(Some)
}

/// ROC curve of one result; `None` when the labels are all one class.
pub fn roc_of(r: &StrategyResult) -> Result<Option<CurvePoints>> {
    let pos = r.true_labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == r.true_labels.len() {
        return Ok(None);
    }
    roc_curve(&r.scores, &r.true_labels).map(Some)
}

/// Risk-coverage curve with confidence `max(s, 1 - s)`.
pub fn rc_curve(r: &StrategyResult) -> Result<CurvePoints> {
    let conf: Vec<f64> = r.scores.iter().map(|&s| confidence(s)).collect();
    risk_coverage(&r.decisions, &r.true_labels, &conf)
}

/// `|AUROC(a) - AUROC(b)|` per label, for labels where both are defined.
pub fn auroc_gaps(summaries: &[StrategySummary], a: Strategy, b: Strategy) -> Result<Vec<(usize, f64)>> {
    let find = |s: Strategy| {
        summaries
            .iter()
            .find(|x| x.strategy == s)
            .ok_or_else(|| Error::invalid(format!("no results for {s}")))
    };
    let (sa, sb) = (find(a)?, find(b)?);
    Ok(sa
        .labels
        .iter()
        .filter_map(|la| {
            let lb = sb.labels.iter().find(|l| l.label_index == la.label_index)?;
            Some((la.label_index, (la.auroc? - lb.auroc?).abs()))
        })
        .collect())
}
