//! Selective classification with a distribution-free risk guarantee.
//!
//! Items are accepted when their confidence `max(s, 1 - s)` exceeds a
//! threshold `lambda`. [`calibrate_lambda`] picks the smallest grid value
//! whose empirical selective risk plus a Hoeffding radius stays below the
//! target risk `alpha`.
//!
//! The radius uses the full calibration size `m` for every `lambda`, even
//! though the risk at `lambda` is estimated from only the selected items.
//! A per-`lambda` effective sample size would give a different (wider) bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::classify::{decide, DEFAULT_DECISION_THRESHOLD};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::toyworld::GmmWorld;

/// `max(s, 1 - s)`.
pub fn confidence(score: f64) -> f64 {
    score.max(1.0 - score)
}

/// Empirical selective risk at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectiveRisk {
    /// No item has confidence above the threshold.
    Empty,
    Value {
        risk: f64,
        n_selected: usize,
    },
}

impl SelectiveRisk {
    pub fn n_selected(&self) -> usize {
        match self {
            SelectiveRisk::Empty => 0,
            SelectiveRisk::Value { n_selected, .. } => *n_selected,
        }
    }

    pub fn risk(&self) -> Option<f64> {
        match self {
            SelectiveRisk::Empty => None,
            SelectiveRisk::Value { risk, .. } => Some(*risk),
        }
    }
}

/// Error rate among items with `confidence > lambda`.
pub fn empirical_selective_risk(
    decisions: &[u8],
    labels: &[u8],
    confidences: &[f64],
    lambda: f64,
) -> Result<SelectiveRisk> {
    if decisions.len() != labels.len() || decisions.len() != confidences.len() {
        return Err(Error::invalid("decisions, labels and confidences differ in length"));
    }
    let (mut selected, mut wrong) = (0usize, 0usize);
    for ((&d, &c), &k) in decisions.iter().zip(labels).zip(confidences) {
        if k > lambda {
            selected += 1;
            wrong += usize::from(d != c);
        }
    }
    Ok(if selected == 0 {
        SelectiveRisk::Empty
    } else {
        SelectiveRisk::Value {
            risk: wrong as f64 / selected as f64,
            n_selected: selected,
        }
    })
}

/// `sqrt(ln(1 / delta) / (2 m))`.
pub fn hoeffding_radius(m: usize, delta: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("hoeffding_radius needs m >= 1"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta {delta} outside (0, 1]")));
    }
    Ok(((1.0 / delta).ln() / (2.0 * m as f64)).sqrt())
}

/// 101 equally spaced points on `[0.5, 1]`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=100).map(|i| 0.5 + 0.5 * i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub alpha: f64,
    pub delta: f64,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub decision_threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_DECISION_THRESHOLD
}

impl CalibrationConfig {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            delta,
            lambda_grid: default_lambda_grid(),
            decision_threshold: DEFAULT_DECISION_THRESHOLD,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `alpha = 1` is accepted as the vacuous level.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta {} outside (0, 1)", self.delta)));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::invalid("lambda grid is empty"));
        }
        if self.lambda_grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::invalid("lambda grid values must lie in [0, 1]"));
        }
        if self.lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("lambda grid must be strictly increasing"));
        }
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return Err(Error::invalid("decision threshold must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub lambda: f64,
    pub risk: SelectiveRisk,
    /// `risk + r_delta`; `None` for an empty selection.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub alpha: f64,
    pub delta: f64,
    pub m: usize,
    pub radius: f64,
    /// `None` when calibration failed.
    pub lambda_hat: Option<f64>,
    /// Fraction of the calibration set accepted at `lambda_hat` (0 when
    /// failed, since every item is then abstained on).
    pub coverage: f64,
    pub trace: Vec<TracePoint>,
}

impl CalibrationOutcome {
    pub fn failed(&self) -> bool {
        self.lambda_hat.is_none()
    }

    /// Whether an item with this score is accepted at deployment.
    pub fn accepts(&self, score: f64) -> bool {
        self.lambda_hat.is_some_and(|l| confidence(score) > l)
    }

    /// `{alpha, delta, m, lambda_hat | "FAILED", coverage, trace}`.
    pub fn to_json(&self) -> serde_json::Value {
        let trace: Vec<serde_json::Value> = self
            .trace
            .iter()
            .map(|t| {
                json!({
                    "lambda": t.lambda,
                    "risk": t.risk.risk(),
                    "bound": t.bound,
                    "n_selected": t.risk.n_selected(),
                })
            })
            .collect();
        json!({
            "alpha": self.alpha,
            "delta": self.delta,
            "m": self.m,
            "lambda_hat": self.lambda_hat.map_or(json!("FAILED"), |l| json!(l)),
            "coverage": self.coverage,
            "trace": trace,
        })
    }
}

/// Smallest `lambda` in the grid with `R(lambda) + r_delta < alpha`.
pub fn calibrate_lambda(scores: &[f64], labels: &[u8], config: &CalibrationConfig) -> Result<CalibrationOutcome> {
    config.validate()?;
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(Error::invalid(
            "calibration set must be non-empty with one label per score",
        ));
    }
    if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::invalid("scores must lie in [0, 1]"));
    }
    let m = scores.len();
    let radius = hoeffding_radius(m, config.delta)?;
    let decisions: Vec<u8> = scores.iter().map(|&s| decide(s, config.decision_threshold)).collect();
    let kappa: Vec<f64> = scores.iter().map(|&s| confidence(s)).collect();
    let trace = config
        .lambda_grid
        .iter()
        .map(|&lambda| {
            let risk = empirical_selective_risk(&decisions, labels, &kappa, lambda)?;
            Ok(TracePoint {
                lambda,
                risk,
                bound: risk.risk().map(|r| r + radius),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let hit = trace.iter().find(|t| t.bound.is_some_and(|b| b < config.alpha));
    Ok(CalibrationOutcome {
        alpha: config.alpha,
        delta: config.delta,
        m,
        radius,
        lambda_hat: hit.map(|t| t.lambda),
        coverage: hit.map_or(0.0, |t| t.risk.n_selected() as f64 / m as f64),
        trace,
    })
}

/// Produces scored, labeled items for the guarantee audit.
pub trait ScoredSource: Send + Sync {
    /// `n` fresh `(score, label)` pairs.
    fn draw(&self, stream: RngStream, n: usize) -> Result<(Vec<f64>, Vec<u8>)>;
}

/// The exact `P(C = 1 | y)` on fresh draws from a world.
#[derive(Debug, Clone)]
pub struct ExactOracleSource {
    pub world: GmmWorld,
}

impl ScoredSource for ExactOracleSource {
    fn draw(&self, stream: RngStream, n: usize) -> Result<(Vec<f64>, Vec<u8>)> {
        let joint = self.world.sample_joint(stream, n);
        Ok(joint.iter().map(|s| (self.world.class_posterior_y(&s.y), s.c)).unzip())
    }
}

/// Scores drawn uniformly at random, independent of the true labels.
#[derive(Debug, Clone)]
pub struct RandomScoreSource {
    pub world: GmmWorld,
}

impl ScoredSource for RandomScoreSource {
    fn draw(&self, stream: RngStream, n: usize) -> Result<(Vec<f64>, Vec<u8>)> {
        let labels = self
            .world
            .sample_joint(stream.split(0), n)
            .iter()
            .map(|s| s.c)
            .collect();
        let mut rng = stream.split(1).rng();
        Ok(((0..n).map(|_| rng.uniform()).collect(), labels))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub calibration: CalibrationConfig,
    /// Calibration set size.
    pub m: usize,
    /// Test set size used to measure the true selective risk.
    pub n_test: usize,
    pub n_trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub n_trials: usize,
    pub n_failed: usize,
    /// Non-failed trials whose test selective risk is below `alpha`.
    pub n_valid: usize,
    /// `n_valid / (n_trials - n_failed)`; 1 when every trial failed.
    pub validity_rate: f64,
}

/// Repeats calibrate-then-test on fresh data and reports how often the
/// certified risk level holds on the test set.
///
/// Trial `t` draws calibration data from `stream.split(t).split(0)` and test
/// data from `stream.split(t).split(1)`. A trial whose test selection is
/// empty has no selective errors and counts as valid.
pub fn audit_guarantee(source: &dyn ScoredSource, config: &AuditConfig, stream: RngStream) -> Result<AuditReport> {
    config.calibration.validate()?;
    if config.n_trials < 100 {
        return Err(Error::invalid("the audit needs at least 100 trials"));
    }
    if config.m == 0 || config.n_test == 0 {
        return Err(Error::invalid("calibration and test sizes must be positive"));
    }
    let outcomes: Vec<Option<bool>> = (0..config.n_trials)
        .into_par_iter()
        .map(|t| {
            let trial = stream.split(t as u64);
            let (cal_scores, cal_labels) = source.draw(trial.split(0), config.m)?;
            let outcome = calibrate_lambda(&cal_scores, &cal_labels, &config.calibration)?;
            let Some(lambda) = outcome.lambda_hat else {
                return Ok(None);
            };
            let (scores, labels) = source.draw(trial.split(1), config.n_test)?;
            let decisions: Vec<u8> = scores
                .iter()
                .map(|&s| decide(s, config.calibration.decision_threshold))
                .collect();
            let kappa: Vec<f64> = scores.iter().map(|&s| confidence(s)).collect();
            let risk = empirical_selective_risk(&decisions, &labels, &kappa, lambda)?;
            Ok(Some(risk.risk().is_none_or(|r| r < config.calibration.alpha)))
        })
        .collect::<Result<_>>()?;
    let n_failed = outcomes.iter().filter(|o| o.is_none()).count();
    let n_valid = outcomes.iter().filter(|o| **o == Some(true)).count();
    let n_ok = config.n_trials - n_failed;
    Ok(AuditReport {
        n_trials: config.n_trials,
        n_failed,
        n_valid,
        validity_rate: if n_ok == 0 { 1.0 } else { n_valid as f64 / n_ok as f64 },
    })
}
