//! Evaluation quantities for conversion quality, classification and
//! uncertainty.

mod convergence;
mod cycle;
mod distance;
mod information;
mod ranking;
mod report;
mod uncertainty;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use convergence::{esc_convergence_curve, ConvergenceCurve};
pub use cycle::{cycle_consistency, CycleReport};
pub use distance::{fit_gaussian, frechet_distance, rmse, GaussianSummary};
pub use information::mutual_information;
pub use ranking::{aurc, auroc, confusion_metrics, risk_coverage, roc_curve, ConfusionMetrics};
pub use report::{auroc_gaps, rc_curve, roc_of, summarize_strategies, LabelRow, MacroRow, StrategySummary};
pub use uncertainty::{ensemble_containment, pca_uncertainty_curve, quantile, score_interval_sizes};

/// A sampled curve with non-decreasing `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoints {
    points: Vec<(f64, f64)>,
}

impl CurvePoints {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::invalid("curve x values must be non-decreasing"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Two-column CSV with the given header names.
    pub fn to_csv(&self, x_name: &str, y_name: &str) -> String {
        let mut out = format!("{x_name},{y_name}\n");
        for (x, y) in &self.points {
            out.push_str(&format!(
                "{},{}\n",
                crate::dataset::format_f64(*x),
                crate::dataset::format_f64(*y)
            ));
        }
        out
    }
}
