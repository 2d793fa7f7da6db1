use serde::{Deserialize, Serialize};

use super::ClassifierModel;
use crate::error::{Error, Result};
use crate::rng::RngStream;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `sigmoid(w . x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticClassifier {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::invalid("logistic parameters must be finite"));
        }
        Ok(Self { weights, bias })
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Mean binary cross-entropy and its gradient (weights, then bias).
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], labels: &[u8]) -> (f64, Vec<f64>) {
        let n = xs.len() as f64;
        let mut grad = vec![0.0; self.weights.len() + 1];
        let mut loss = 0.0;
        for (x, &c) in xs.iter().zip(labels) {
            let z = self.logit(x);
            let c = f64::from(c);
            loss += softplus(z) - c * z;
            let r = sigmoid(z) - c;
            for (g, v) in grad.iter_mut().zip(x) {
                *g += r * v;
            }
            *grad.last_mut().expect("bias slot") += r;
        }
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    pub fn loss(&self, xs: &[Vec<f64>], labels: &[u8]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(labels)
            .map(|(x, &c)| {
                let z = self.logit(x);
                softplus(z) - f64::from(c) * z
            })
            .sum();
        total / xs.len() as f64
    }
}

impl ClassifierModel for LogisticClassifier {
    fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Standard deviation of the initial weights.
    pub init_scale: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            learning_rate: 0.5,
            init_scale: 0.01,
        }
    }
}

/// Full-batch gradient descent on the mean binary cross-entropy. Returns the
/// model and the loss before each iteration.
pub fn train_logistic(
    xs: &[Vec<f64>],
    labels: &[u8],
    config: &LogisticConfig,
    stream: RngStream,
) -> Result<(LogisticClassifier, Vec<f64>)> {
    if xs.is_empty() || xs.len() != labels.len() {
        return Err(Error::invalid("training set must be non-empty with one label per row"));
    }
    let d = xs[0].len();
    if xs.iter().any(|x| x.len() != d || x.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("training rows must be finite and of equal length"));
    }
    if labels.iter().any(|&c| c > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::invalid("both classes must be present"));
    }
    let mut rng = stream.rng();
    let mut model = LogisticClassifier {
        weights: (0..d).map(|_| config.init_scale * rng.gaussian()).collect(),
        bias: 0.0,
    };
    let mut trace = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let (loss, grad) = model.loss_and_gradient(xs, labels);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch: it, loss });
        }
        trace.push(loss);
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= config.learning_rate * g;
        }
        model.bias -= config.learning_rate * grad[d];
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_data_is_learned() {
        let xs: Vec<Vec<f64>> = (0..200).map(|i| vec![-2.0 + 4.0 * i as f64 / 199.0]).collect();
        let labels: Vec<u8> = xs.iter().map(|x| u8::from(x[0] > 0.3)).collect();
        let (m, trace) = train_logistic(&xs, &labels, &LogisticConfig::default(), RngStream::new(1, 0)).unwrap();
        let acc = xs
            .iter()
            .zip(&labels)
            .filter(|(x, &c)| u8::from(m.score(x) > 0.5) == c)
            .count() as f64
            / xs.len() as f64;
        assert!(acc >= 0.99, "accuracy {acc}");
        assert!(trace.last().unwrap() < &trace[0]);
    }

    #[test]
    fn zero_iterations_keep_init() {
        let xs = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let cfg = LogisticConfig {
            iterations: 0,
            ..LogisticConfig::default()
        };
        let (a, trace) = train_logistic(&xs, &[0, 1], &cfg, RngStream::new(2, 0)).unwrap();
        let mut rng = RngStream::new(2, 0).rng();
        let expected: Vec<f64> = (0..2).map(|_| cfg.init_scale * rng.gaussian()).collect();
        assert_eq!(a.weights, expected);
        assert_eq!(a.bias, 0.0);
        assert!(trace.is_empty());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn gradient_matches_finite_differences() {
        let mut rng = RngStream::new(3, 0).rng();
        let d = 19;
        let xs: Vec<Vec<f64>> = (0..50).map(|_| rng.gaussian_vec(d)).collect();
        let labels: Vec<u8> = (0..50).map(|_| u8::from(rng.bernoulli(0.4))).collect();
        let model = LogisticClassifier::new(rng.gaussian_vec(d), 0.2).unwrap();
        let (_, grad) = model.loss_and_gradient(&xs, &labels);
        let h = 1e-5;
        for i in 0..=d {
            let shifted = |delta: f64| {
                let mut m = model.clone();
                if i < d {
                    m.weights[i] += delta;
                } else {
                    m.bias += delta;
                }
                m.loss(&xs, &labels)
            };
            let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
            let rel = (grad[i] - numeric).abs() / (grad[i].abs() + numeric.abs()).max(1e-8);
            assert!(rel < 1e-6, "coordinate {i}: {} vs {numeric}", grad[i]);
        }
    }

    #[test]
    fn needs_both_classes() {
        let xs = vec![vec![0.0], vec![1.0]];
        assert!(train_logistic(&xs, &[1, 1], &LogisticConfig::default(), RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let m = LogisticClassifier::new(vec![1.0], 0.0).unwrap();
        assert_eq!(m.score(&[1e4]), 1.0);
        assert_eq!(m.score(&[-1e4]), 0.0);
        assert!(m.loss(&[vec![1e4]], &[0]).is_finite());
    }
}
