//! Classifiers over the `x` space and the ways of turning them into a
//! classifier of `y`: the expected score over a posterior ensemble (ESC) and
//! the single-score baselines (SSC).

mod balanced;
mod harness;
mod logistic;
mod scores;

pub use balanced::{balanced_batches, BalancedBatch};
pub use harness::{
    read_strategy_results_csv, strategy_harness, strategy_results_csv, HarnessConfig, PairedItem, Strategy,
    StrategyResult,
};
pub use logistic::{train_logistic, LogisticClassifier, LogisticConfig};
pub use scores::{
    decide, esc_score, ssc_mean_score, ssc_random_score, ClassifierModel, ExactXClassifier, ExactYClassifier,
    DEFAULT_DECISION_THRESHOLD,
};
