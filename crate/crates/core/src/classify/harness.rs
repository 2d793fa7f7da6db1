use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decide, esc_score, ssc_mean_score, ssc_random_score, ClassifierModel, DEFAULT_DECISION_THRESHOLD};
use crate::dataset::format_f64;
use crate::diffusion::PosteriorSampler;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::toyworld::JointSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    OriginalX,
    OriginalY,
    SscMean,
    SscRandom,
    Esc,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::OriginalX,
        Strategy::OriginalY,
        Strategy::SscMean,
        Strategy::SscRandom,
        Strategy::Esc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::OriginalX => "ORIGINAL_X",
            Strategy::OriginalY => "ORIGINAL_Y",
            Strategy::SscMean => "SSC_MEAN",
            Strategy::SscRandom => "SSC_RANDOM",
            Strategy::Esc => "ESC",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown strategy {s:?}")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluation item: the hidden source `x`, its observation `y` and the
/// per-label ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedItem {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub labels: Vec<u8>,
}

impl From<JointSample> for PairedItem {
    fn from(s: JointSample) -> Self {
        Self {
            x: s.x,
            y: s.y,
            labels: vec![s.c],
        }
    }
}

/// Scores and decisions of one strategy on one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub label_index: usize,
    pub scores: Vec<f64>,
    pub decisions: Vec<u8>,
    pub true_labels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub k: usize,
    pub decision_threshold: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            k: 100,
            decision_threshold: DEFAULT_DECISION_THRESHOLD,
        }
    }
}

/// Scores every item under all five strategies, one result per
/// `(strategy, label)`, ordered strategy-major.
///
/// `f_x[l]` / `f_y[l]` classify label `l` from `x` / `y`. Item `i` draws its
/// ensemble from `stream.split(i).split(0)` and its SSC_RANDOM index from
/// `stream.split(i).split(1)`.
pub fn strategy_harness(
    items: &[PairedItem],
    sampler: &dyn PosteriorSampler,
    f_x: &[&dyn ClassifierModel],
    f_y: &[&dyn ClassifierModel],
    config: &HarnessConfig,
    stream: RngStream,
) -> Result<Vec<StrategyResult>> {
    let n_labels = f_x.len();
    if n_labels == 0 || f_y.len() != n_labels {
        return Err(Error::invalid("need one x- and one y-classifier per label"));
    }
    if config.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if let Some(i) = items.iter().position(|it| it.labels.len() != n_labels) {
        return Err(Error::invalid(format!("item {i} does not carry {n_labels} labels")));
    }
    // per item: [label][strategy] scores
    let per_item: Vec<Vec<[f64; 5]>> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let item_stream = stream.split(i as u64);
            let ensemble = sampler.sample(&item.y, item_stream.split(0), config.k)?;
            (0..n_labels)
                .map(|l| {
                    let (esc, _) = esc_score(&ensemble, f_x[l])?;
                    Ok([
                        f_x[l].score(&item.x).clamp(0.0, 1.0),
                        f_y[l].score(&item.y).clamp(0.0, 1.0),
                        ssc_mean_score(&ensemble, f_x[l]),
                        ssc_random_score(&ensemble, item_stream.split(1), f_x[l]),
                        esc,
                    ])
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(5 * n_labels);
    for (si, strategy) in Strategy::ALL.into_iter().enumerate() {
        for l in 0..n_labels {
            let scores: Vec<f64> = per_item.iter().map(|s| s[l][si]).collect();
            results.push(StrategyResult {
                strategy,
                label_index: l,
                decisions: scores.iter().map(|&s| decide(s, config.decision_threshold)).collect(),
                scores,
                true_labels: items.iter().map(|it| it.labels[l]).collect(),
            });
        }
    }
    Ok(results)
}

/// Long-format CSV: `item_index,strategy,label_index,score,decision,true_label`.
pub fn strategy_results_csv(results: &[StrategyResult]) -> String {
    let mut out = String::from("item_index,strategy,label_index,score,decision,true_label\n");
    for r in results {
        for (i, ((s, d), t)) in r.scores.iter().zip(&r.decisions).zip(&r.true_labels).enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{d},{t}\n",
                r.strategy,
                r.label_index,
                format_f64(*s)
            ));
        }
    }
    out
}

#[derive(Deserialize)]
struct ResultRow {
    item_index: usize,
    strategy: String,
    label_index: usize,
    score: f64,
    decision: u8,
    true_label: u8,
}

/// Reads the long-format CSV back; groups keep their order of first
/// appearance and each must list items `0..n` in order.
pub fn read_strategy_results_csv(path: &Path) -> Result<Vec<StrategyResult>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::at(path, e))?;
    let mut out: Vec<StrategyResult> = Vec::new();
    for (row_no, row) in reader.deserialize::<ResultRow>().enumerate() {
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            row: row_no + 1,
            column: 0,
            message,
        };
        let row = row.map_err(|e| parse_err(e.to_string()))?;
        let strategy: Strategy = row.strategy.parse().map_err(|e: Error| parse_err(e.to_string()))?;
        if row.decision > 1 || row.true_label > 1 || !(0.0..=1.0).contains(&row.score) {
            return Err(parse_err(
                "score must lie in [0, 1] and decision/label in {0, 1}".into(),
            ));
        }
        let group = match out
            .iter_mut()
            .position(|r| r.strategy == strategy && r.label_index == row.label_index)
        {
            Some(g) => g,
            None => {
                out.push(StrategyResult {
                    strategy,
                    label_index: row.label_index,
                    scores: Vec::new(),
                    decisions: Vec::new(),
                    true_labels: Vec::new(),
                });
                out.len() - 1
            }
        };
        let g = &mut out[group];
        if row.item_index != g.scores.len() {
            return Err(parse_err(format!(
                "item_index {} out of order (expected {})",
                row.item_index,
                g.scores.len()
            )));
        }
        g.scores.push(row.score);
        g.decisions.push(row.decision);
        g.true_labels.push(row.true_label);
    }
    if out.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "no result rows".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{ExactXClassifier, ExactYClassifier};
    use crate::diffusion::ExactPosteriorSampler;
    use crate::metrics::auroc;
    use crate::toyworld::presets;

    fn run(n: usize, k: usize) -> Vec<StrategyResult> {
        let world = presets::xor_2d();
        let items: Vec<PairedItem> = world
            .sample_joint(RngStream::new(31, 0), n)
            .into_iter()
            .map(PairedItem::from)
            .collect();
        let sampler = ExactPosteriorSampler { world: world.clone() };
        let fx = ExactXClassifier { world: world.clone() };
        let fy = ExactYClassifier { world };
        let cfg = HarnessConfig {
            k,
            ..HarnessConfig::default()
        };
        strategy_harness(&items, &sampler, &[&fx], &[&fy], &cfg, RngStream::new(31, 1)).unwrap()
    }

    fn auc(results: &[StrategyResult], s: Strategy) -> f64 {
        let r = results.iter().find(|r| r.strategy == s).unwrap();
        auroc(&r.scores, &r.true_labels).unwrap()
    }

    #[test]
    fn exact_oracle_ordering() {
        let results = run(2000, 200);
        assert_eq!(results.len(), 5);
        let x = auc(&results, Strategy::OriginalX);
        let y = auc(&results, Strategy::OriginalY);
        let esc = auc(&results, Strategy::Esc);
        let random = auc(&results, Strategy::SscRandom);
        assert!(x >= esc - 0.01, "x {x} esc {esc}");
        assert!((esc - y).abs() <= 0.01, "esc {esc} y {y}");
        assert!(esc >= random, "esc {esc} random {random}");
    }

    #[test]
    fn csv_layout() {
        let results = run(3, 5);
        let csv = strategy_results_csv(&results);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "item_index,strategy,label_index,score,decision,true_label");
        assert_eq!(lines.len(), 1 + 5 * 3);
        assert!(lines[1].starts_with("0,ORIGINAL_X,0,"));
        assert!(lines[15].starts_with("2,ESC,0,"));
    }

    #[test]
    fn deterministic_across_runs() {
        assert_eq!(run(20, 10), run(20, 10));
    }

    #[test]
    fn results_csv_round_trip() {
        let world = presets::xor_2d();
        let items: Vec<PairedItem> = world
            .sample_joint(RngStream::new(4, 0), 12)
            .into_iter()
            .map(PairedItem::from)
            .collect();
        let fx = ExactXClassifier { world: world.clone() };
        let fy = ExactYClassifier { world: world.clone() };
        let sampler = ExactPosteriorSampler { world };
        let cfg = HarnessConfig {
            k: 5,
            ..HarnessConfig::default()
        };
        let res = strategy_harness(&items, &sampler, &[&fx], &[&fy], &cfg, RngStream::new(5, 0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, strategy_results_csv(&res)).unwrap();
        assert_eq!(read_strategy_results_csv(&path).unwrap(), res);
        assert_eq!("SSC_MEAN".parse::<Strategy>().unwrap(), Strategy::SscMean);
        assert!("esc".parse::<Strategy>().is_err());
    }
}
