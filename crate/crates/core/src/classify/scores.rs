use crate::rng::RngStream;
use crate::signal::{PosteriorEnsemble, ScoreSet};
use crate::toyworld::GmmWorld;
use crate::Result;

pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;

/// A probabilistic binary classifier: `score(x)` in `[0, 1]`.
pub trait ClassifierModel: Send + Sync {
    fn score(&self, x: &[f64]) -> f64;
}

impl<T: ClassifierModel + ?Sized> ClassifierModel for &T {
    fn score(&self, x: &[f64]) -> f64 {
        (**self).score(x)
    }
}

/// The Bayes classifier `P(C = 1 | X = x)` of a world.
#[derive(Debug, Clone)]
pub struct ExactXClassifier {
    pub world: GmmWorld,
}

impl ClassifierModel for ExactXClassifier {
    fn score(&self, x: &[f64]) -> f64 {
        self.world.class_posterior_x(x)
    }
}

/// The Bayes classifier `P(C = 1 | Y = y)` of a world.
#[derive(Debug, Clone)]
pub struct ExactYClassifier {
    pub world: GmmWorld,
}

impl ClassifierModel for ExactYClassifier {
    fn score(&self, y: &[f64]) -> f64 {
        self.world.class_posterior_y(y)
    }
}

fn clamp_score(s: f64) -> f64 {
    s.clamp(0.0, 1.0)
}

/// Mean classifier score over the ensemble, with the individual scores.
pub fn esc_score<C: ClassifierModel + ?Sized>(ensemble: &PosteriorEnsemble, classifier: &C) -> Result<(f64, ScoreSet)> {
    let scores = ScoreSet::new(ensemble.vectors().map(|x| clamp_score(classifier.score(x))).collect())?;
    Ok((scores.mean(), scores))
}

/// Score of the coordinate-wise ensemble mean.
pub fn ssc_mean_score<C: ClassifierModel + ?Sized>(ensemble: &PosteriorEnsemble, classifier: &C) -> f64 {
    clamp_score(classifier.score(&ensemble.mean()))
}

/// Score of one ensemble member chosen uniformly with `stream`.
pub fn ssc_random_score<C: ClassifierModel + ?Sized>(
    ensemble: &PosteriorEnsemble,
    stream: RngStream,
    classifier: &C,
) -> f64 {
    let i = stream.rng().index(ensemble.k());
    clamp_score(classifier.score(ensemble.samples()[i].values()))
}

/// 1 when `score > threshold` (strictly), else 0.
pub fn decide(score: f64, threshold: f64) -> u8 {
    u8::from(score > threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::LogisticClassifier;
    use proptest::prelude::*;

    /// Returns the first coordinate as the score.
    struct First;

    impl ClassifierModel for First {
        fn score(&self, x: &[f64]) -> f64 {
            x[0]
        }
    }

    fn ens(samples: &[f64]) -> PosteriorEnsemble {
        PosteriorEnsemble::from_vectors(vec![0.0], samples.iter().map(|s| vec![*s]).collect()).unwrap()
    }

    #[test]
    fn esc_is_the_mean() {
        let (s, set) = esc_score(&ens(&[0.2, 0.4, 0.9]), &First).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
        assert_eq!(set.scores(), &[0.2, 0.4, 0.9]);
        let (s, _) = esc_score(&ens(&[0.7; 5]), &First).unwrap();
        assert!((s - 0.7).abs() < 1e-15);
    }

    #[test]
    fn single_sample_variants_agree() {
        let e = ens(&[0.35]);
        let (esc, _) = esc_score(&e, &First).unwrap();
        assert_eq!(ssc_mean_score(&e, &First), esc);
        assert_eq!(ssc_random_score(&e, RngStream::new(1, 1), &First), esc);
    }

    #[test]
    fn ssc_mean_differs_under_nonlinearity() {
        let (w, a, b) = (2.0, 1.5, 0.3);
        let sigma = |z: f64| 1.0 / (1.0 + (-z).exp());
        let clf = LogisticClassifier::new(vec![w], b).unwrap();
        let e = ens(&[-a, a]);
        let mean = ssc_mean_score(&e, &clf);
        let (esc, _) = esc_score(&e, &clf).unwrap();
        assert!((mean - sigma(b)).abs() < 1e-15);
        assert!((esc - (sigma(w * a + b) + sigma(-w * a + b)) / 2.0).abs() < 1e-15);
        assert!((mean - esc).abs() > 0.01);
    }

    #[test]
    fn ssc_random_reproducible() {
        let e = ens(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let s = RngStream::new(11, 3);
        assert_eq!(ssc_random_score(&e, s, &First), ssc_random_score(&e, s, &First));
    }

    #[test]
    fn decide_is_strict() {
        assert_eq!(decide(0.5, 0.5), 0);
        assert_eq!(decide(0.51, 0.5), 1);
        assert_eq!(decide(0.0, 0.0), 0);
    }

    proptest! {
        #[test]
        fn esc_order_invariant(mut v in proptest::collection::vec(0.0f64..1.0, 1..30), seed in 0u64..100) {
            let (a, _) = esc_score(&ens(&v), &First).unwrap();
            RngStream::new(seed, 0).rng().shuffle(&mut v);
            let (b, _) = esc_score(&ens(&v), &First).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
