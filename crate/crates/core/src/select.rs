//! Picking one representative candidate from an ensemble for display.
//!
//! Candidates are first restricted to those whose own decision agrees with
//! the ESC decision; the selectors then return an actual ensemble member,
//! never an average. Ties go to the lowest index.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{decide, esc_score, ClassifierModel, PairedItem};
use crate::diffusion::PosteriorSampler;
use crate::error::{Error, Result};
use crate::metrics::{fit_gaussian, frechet_distance, rmse};
use crate::rng::RngStream;
use crate::signal::{PosteriorEnsemble, ScoreSet};

pub const DEFAULT_KDE_BINS: usize = 64;
pub const MIN_BANDWIDTH: f64 = 1e-3;

/// Ensemble members kept by [`agreement_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    /// Indices into the ensemble, ascending.
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    /// Set when no member agreed and the full ensemble was kept instead.
    pub fallback: bool,
}

/// Members with `decide(score) == esc_decision`, or all members (flagged)
/// if none agree.
pub fn agreement_filter(
    scores: &ScoreSet,
    ensemble: &PosteriorEnsemble,
    esc_decision: u8,
    decision_threshold: f64,
) -> Result<Filtered> {
    if scores.len() != ensemble.k() {
        return Err(Error::invalid("score set and ensemble differ in size"));
    }
    let indices: Vec<usize> = (0..scores.len())
        .filter(|&i| decide(scores.scores()[i], decision_threshold) == esc_decision)
        .collect();
    let (indices, fallback) = if indices.is_empty() {
        ((0..scores.len()).collect(), true)
    } else {
        (indices, false)
    };
    Ok(Filtered {
        scores: indices.iter().map(|&i| scores.scores()[i]).collect(),
        indices,
        fallback,
    })
}

/// Gaussian-kernel density of scores on the bin centres of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl KdeEstimate {
    /// Grid point of highest density (first on ties).
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (i, d) in self.density.iter().enumerate() {
            if *d > self.density[best] {
                best = i;
            }
        }
        self.grid[best]
    }
}

/// `1.06 * sd * k^(-1/5)` with the sample (n - 1) standard deviation,
/// floored at [`MIN_BANDWIDTH`].
pub fn silverman_bandwidth(scores: &[f64]) -> f64 {
    let k = scores.len() as f64;
    let sd = if scores.len() < 2 {
        0.0
    } else {
        let m = scores.iter().sum::<f64>() / k;
        (scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    };
    (1.06 * sd * k.powf(-0.2)).max(MIN_BANDWIDTH)
}

/// KDE on `bins` centres `(i + 0.5) / bins`. `bandwidth = None` uses
/// [`silverman_bandwidth`].
pub fn kde(scores: &[f64], bins: usize, bandwidth: Option<f64>) -> Result<KdeEstimate> {
    if scores.is_empty() {
        return Err(Error::invalid("kde of an empty score set"));
    }
    if bins == 0 {
        return Err(Error::invalid("kde needs at least one bin"));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::invalid(format!("bandwidth {h} must be positive"))),
        None => silverman_bandwidth(scores),
    };
    let norm = 1.0 / (scores.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..bins).map(|i| (i as f64 + 0.5) / bins as f64).collect();
    let density = grid
        .iter()
        .map(|g| norm * scores.iter().map(|s| (-0.5 * ((g - s) / h).powi(2)).exp()).sum::<f64>())
        .collect();
    Ok(KdeEstimate {
        grid,
        density,
        bandwidth: h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    MostLikely,
    Expected,
    MinMax,
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 3] = [Self::MostLikely, Self::Expected, Self::MinMax];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MostLikely => "most_likely",
            Self::Expected => "expected",
            Self::MinMax => "min_max",
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The chosen member: `selected_index` indexes the full ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub strategy: SelectionStrategy,
    pub selected_index: usize,
    pub selected_score: f64,
}

fn argmin_by(scores: &[f64], key: impl Fn(f64) -> f64) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if key(s) < key(scores[best]) {
            best = i;
        }
    }
    best
}

fn pick(filtered: &Filtered, strategy: SelectionStrategy, j: usize) -> Selection {
    Selection {
        strategy,
        selected_index: filtered.indices[j],
        selected_score: filtered.scores[j],
    }
}

fn non_empty(filtered: &Filtered) -> Result<()> {
    if filtered.scores.is_empty() || filtered.scores.len() != filtered.indices.len() {
        return Err(Error::invalid("selection needs a non-empty filtered set"));
    }
    Ok(())
}

/// Member whose score is nearest the KDE mode.
pub fn most_likely(filtered: &Filtered, kde: &KdeEstimate) -> Result<Selection> {
    non_empty(filtered)?;
    let mode = kde.mode();
    Ok(pick(
        filtered,
        SelectionStrategy::MostLikely,
        argmin_by(&filtered.scores, |s| (s - mode).abs()),
    ))
}

/// Member whose score is nearest the mean filtered score.
pub fn expected(filtered: &Filtered) -> Result<Selection> {
    non_empty(filtered)?;
    let mean = filtered.scores.iter().sum::<f64>() / filtered.scores.len() as f64;
    Ok(pick(
        filtered,
        SelectionStrategy::Expected,
        argmin_by(&filtered.scores, |s| (s - mean).abs()),
    ))
}

/// Highest-scoring member for a positive decision, lowest for a negative.
pub fn minmax(filtered: &Filtered, esc_decision: u8) -> Result<Selection> {
    non_empty(filtered)?;
    let j = if esc_decision == 1 {
        argmin_by(&filtered.scores, |s| -s)
    } else {
        argmin_by(&filtered.scores, |s| s)
    };
    Ok(pick(filtered, SelectionStrategy::MinMax, j))
}

/// All three selections for one ensemble, plus whether the agreement filter
/// fell back to the full ensemble.
pub fn select_all<C: ClassifierModel + ?Sized>(
    ensemble: &PosteriorEnsemble,
    classifier: &C,
    decision_threshold: f64,
) -> Result<(Vec<Selection>, bool)> {
    let (esc, scores) = esc_score(ensemble, classifier)?;
    let decision = decide(esc, decision_threshold);
    let filtered = agreement_filter(&scores, ensemble, decision, decision_threshold)?;
    let density = kde(&filtered.scores, DEFAULT_KDE_BINS, None)?;
    Ok((
        vec![
            most_likely(&filtered, &density)?,
            expected(&filtered)?,
            minmax(&filtered, decision)?,
        ],
        filtered.fallback,
    ))
}

/// Quality of one selection strategy against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionQuality {
    pub strategy: SelectionStrategy,
    /// Mean per-item RMSE between selection and ground truth.
    pub rmse: f64,
    /// Fréchet distance between the selected set and the ground-truth set.
    pub fd: f64,
}

/// Compares the three strategies on paired items: per item draw `k`
/// candidates from `stream.split(i)`, select, and score the selections
/// against the true `x`.
pub fn selection_quality(
    items: &[PairedItem],
    sampler: &dyn PosteriorSampler,
    classifier: &dyn ClassifierModel,
    k: usize,
    decision_threshold: f64,
    stream: RngStream,
) -> Result<Vec<SelectionQuality>> {
    if items.len() < 2 {
        return Err(Error::invalid("selection_quality needs at least two items"));
    }
    let chosen: Vec<Vec<Vec<f64>>> = items
        .par_iter()
        .enumerate()
        .map(|(i, it)| {
            let ens = sampler.sample(&it.y, stream.split(i as u64), k)?;
            let (sel, _) = select_all(&ens, classifier, decision_threshold)?;
            Ok(sel
                .iter()
                .map(|s| ens.samples()[s.selected_index].values().to_vec())
                .collect())
        })
        .collect::<Result<_>>()?;
    let truth = fit_gaussian(&items.iter().map(|it| it.x.as_slice()).collect::<Vec<_>>())?;
    SelectionStrategy::ALL
        .iter()
        .enumerate()
        .map(|(j, &strategy)| {
            let picked: Vec<&[f64]> = chosen.iter().map(|c| c[j].as_slice()).collect();
            let total: f64 = picked
                .iter()
                .zip(items)
                .map(|(p, it)| rmse(p, &it.x))
                .sum::<Result<f64>>()?;
            Ok(SelectionQuality {
                strategy,
                rmse: total / items.len() as f64,
                fd: frechet_distance(&fit_gaussian(&picked)?, &truth)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ExactXClassifier;
    use crate::diffusion::ExactPosteriorSampler;
    use crate::toyworld::presets;

    fn filtered(scores: &[f64]) -> Filtered {
        Filtered {
            indices: (0..scores.len()).collect(),
            scores: scores.to_vec(),
            fallback: false,
        }
    }

    fn ens_of(scores: &[f64]) -> (ScoreSet, PosteriorEnsemble) {
        let e = PosteriorEnsemble::from_vectors(vec![0.0], scores.iter().map(|s| vec![*s]).collect()).unwrap();
        (ScoreSet::new(scores.to_vec()).unwrap(), e)
    }

    #[test]
    fn filter_cases() {
        let (s, e) = ens_of(&[0.2, 0.4, 0.9]);
        let esc = s.mean();
        assert!((esc - 0.5).abs() < 1e-15);
        let f = agreement_filter(&s, &e, decide(esc, 0.5), 0.5).unwrap();
        assert_eq!(f.scores, vec![0.2, 0.4]);
        assert_eq!(f.indices, vec![0, 1]);
        let (s, e) = ens_of(&[0.6, 0.7]);
        assert_eq!(agreement_filter(&s, &e, 1, 0.5).unwrap().indices, vec![0, 1]);
        let (s, e) = ens_of(&[0.3]);
        let f = agreement_filter(&s, &e, 0, 0.5).unwrap();
        assert_eq!((f.indices.clone(), f.fallback), (vec![0], false));
        let f = agreement_filter(&s, &e, 1, 0.5).unwrap();
        assert!(f.fallback);
        assert_eq!(f.indices, vec![0]);
    }

    #[test]
    fn kde_cases() {
        let k = kde(&[0.3], 64, None).unwrap();
        let nearest = k
            .grid
            .iter()
            .copied()
            .fold(0.0, |b: f64, g| if (g - 0.3).abs() < (b - 0.3).abs() { g } else { b });
        assert_eq!(k.mode(), nearest);
        let bimodal: Vec<f64> = [0.2; 50].iter().chain([0.8; 50].iter()).copied().collect();
        let k = kde(&bimodal, 64, None).unwrap();
        for i in 0..64 {
            assert!((k.density[i] - k.density[63 - i]).abs() < 1e-9);
        }
        let k = kde(&[0.4; 10], 64, None).unwrap();
        assert_eq!(k.bandwidth, MIN_BANDWIDTH);
        assert!(k.density.iter().all(|d| d.is_finite() && *d >= 0.0));
    }

    #[test]
    fn most_likely_cases() {
        let f = filtered(&[0.1, 0.1, 0.1, 0.9]);
        let sel = most_likely(&f, &kde(&f.scores, 64, None).unwrap()).unwrap();
        assert_eq!(sel.selected_score, 0.1);
        assert_eq!(sel.selected_index, 0);
        let f = filtered(&[0.5; 4]);
        assert_eq!(
            most_likely(&f, &kde(&f.scores, 64, None).unwrap())
                .unwrap()
                .selected_index,
            0
        );
        let f = filtered(&[0.77]);
        assert_eq!(
            most_likely(&f, &kde(&f.scores, 64, None).unwrap())
                .unwrap()
                .selected_index,
            0
        );
    }

    #[test]
    fn expected_cases() {
        assert_eq!(expected(&filtered(&[0.2, 0.4, 0.9])).unwrap().selected_score, 0.4);
        assert_eq!(expected(&filtered(&[0.3; 3])).unwrap().selected_index, 0);
        // mean 0.5, 0.25 and 0.75 equidistant
        assert_eq!(expected(&filtered(&[0.25, 0.75])).unwrap().selected_index, 0);
    }

    #[test]
    fn minmax_cases() {
        assert_eq!(minmax(&filtered(&[0.6, 0.9, 0.7]), 1).unwrap().selected_score, 0.9);
        assert_eq!(minmax(&filtered(&[0.2, 0.05]), 0).unwrap().selected_score, 0.05);
        assert_eq!(minmax(&filtered(&[0.3]), 1).unwrap().selected_index, 0);
    }

    #[test]
    fn selection_returns_members() {
        let world = presets::xor_2d();
        let sampler = ExactPosteriorSampler { world: world.clone() };
        let ens = sampler.sample(&[0.5, 0.5], RngStream::new(1, 0), 50).unwrap();
        let fx = ExactXClassifier { world };
        let (sel, _) = select_all(&ens, &fx, 0.5).unwrap();
        for s in sel {
            assert!(s.selected_index < 50);
            assert_eq!(fx.score(ens.samples()[s.selected_index].values()), s.selected_score);
        }
    }

    #[test]
    fn quality_harness_runs() {
        let world = presets::xor_2d();
        let items: Vec<PairedItem> = world
            .sample_joint(RngStream::new(2, 0), 200)
            .into_iter()
            .map(PairedItem::from)
            .collect();
        let sampler = ExactPosteriorSampler { world: world.clone() };
        let fx = ExactXClassifier { world };
        let q = selection_quality(&items, &sampler, &fx, 50, 0.5, RngStream::new(2, 1)).unwrap();
        assert_eq!(q.len(), 3);
        assert!(q.iter().all(|r| r.rmse.is_finite() && r.fd >= 0.0));
    }
}
