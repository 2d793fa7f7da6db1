use serde::{Deserialize, Serialize};

use super::CurvePoints;
use crate::error::{Error, Result};

fn check_binary(labels: &[u8]) -> Result<(usize, usize)> {
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((pos, labels.len() - pos))
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability
/// that a random positive outscores a random negative, ties counting one half.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("auroc: scores and labels differ in length"));
    }
    let (n_pos, n_neg) = check_binary(labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("auroc needs both classes"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("auroc: NaN score"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64 * mid;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// ROC curve `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one point per distinct
/// score threshold.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<CurvePoints> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("roc_curve: scores and labels differ in length"));
    }
    let (n_pos, n_neg) = check_binary(labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("roc_curve needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (idx, &k) in order.iter().enumerate() {
        if labels[k] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = order.get(idx + 1).is_none_or(|&next| scores[next] != scores[k]);
        if last_of_group {
            points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        }
    }
    CurvePoints::new(points)
}

/// Risk-coverage curve: items sorted by confidence (descending, ties by
/// index); point `k` is `(k / n, error rate among the top k)`.
pub fn risk_coverage(decisions: &[u8], labels: &[u8], confidences: &[f64]) -> Result<CurvePoints> {
    let n = decisions.len();
    if n == 0 || labels.len() != n || confidences.len() != n {
        return Err(Error::invalid(
            "risk_coverage: inputs must be non-empty and of equal length",
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| confidences[b].total_cmp(&confidences[a]).then(a.cmp(&b)));
    let mut errors = 0usize;
    let points = order
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            errors += usize::from(decisions[k] != labels[k]);
            let covered = i + 1;
            (covered as f64 / n as f64, errors as f64 / covered as f64)
        })
        .collect();
    CurvePoints::new(points)
}

/// Mean selective risk over the coverage points of a risk-coverage curve.
pub fn aurc(curve: &CurvePoints) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::invalid("aurc: empty curve"));
    }
    Ok(curve.ys().iter().sum::<f64>() / curve.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub tpr: f64,
    pub tnr: f64,
    pub f1: f64,
    /// Set when some rate had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

pub fn confusion_metrics(decisions: &[u8], labels: &[u8]) -> Result<ConfusionMetrics> {
    if decisions.is_empty() || decisions.len() != labels.len() {
        return Err(Error::invalid(
            "confusion_metrics: inputs must be non-empty and of equal length",
        ));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&d, &l) in decisions.iter().zip(labels) {
        match (d, l) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fn_ += 1,
            _ => return Err(Error::invalid("decisions and labels must be 0 or 1")),
        }
    }
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let tpr = ratio(tp, tp + fn_);
    let tnr = ratio(tn, tn + fp);
    let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
    Ok(ConfusionMetrics {
        tp,
        fp,
        tn,
        fn_,
        tpr,
        tnr,
        f1,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn auroc_cases() {
        assert_eq!(auroc(&[0.1, 0.9], &[0, 1]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.3; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert!(auroc(&[0.1, 0.2], &[1, 1]).is_err());
    }

    #[test]
    fn roc_curve_endpoints() {
        let c = roc_curve(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_eq!(c.points().first(), Some(&(0.0, 0.0)));
        assert_eq!(c.points().last(), Some(&(1.0, 1.0)));
        // trapezoid area equals the rank statistic
        let area: f64 = c
            .points()
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum();
        assert!((area - 0.75).abs() < 1e-12);
    }

    #[test]
    fn risk_coverage_cases() {
        let conf = [0.9, 0.8, 0.7, 0.6];
        let all_right = risk_coverage(&[1, 0, 1, 0], &[1, 0, 1, 0], &conf).unwrap();
        assert_eq!(aurc(&all_right).unwrap(), 0.0);
        let c = risk_coverage(&[1, 0, 1, 0], &[1, 0, 0, 1], &conf).unwrap();
        assert_eq!(c.ys(), vec![0.0, 0.0, 1.0 / 3.0, 0.5]);
        assert!((aurc(&c).unwrap() - 0.208_333_333_333).abs() < 1e-6);
        let all_wrong = risk_coverage(&[1, 1], &[0, 0], &[0.5, 0.7]).unwrap();
        assert_eq!(aurc(&all_wrong).unwrap(), 1.0);
    }

    #[test]
    fn confusion_cases() {
        let m = confusion_metrics(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!((m.tpr, m.tnr, m.f1), (1.0, 1.0, 1.0));
        let m = confusion_metrics(&[0, 0, 0, 0], &[1, 1, 0, 0]).unwrap();
        assert_eq!((m.tpr, m.tnr, m.f1), (0.0, 1.0, 0.0));
        // TP=2 FP=1 FN=1 TN=4
        let m = confusion_metrics(&[1, 1, 1, 0, 0, 0, 0, 0], &[1, 1, 0, 1, 0, 0, 0, 0]).unwrap();
        assert!((m.tpr - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.tnr - 0.8).abs() < 1e-12);
        assert!((m.f1 - 0.6667).abs() < 1e-4);
        let m = confusion_metrics(&[0, 0], &[0, 0]).unwrap();
        assert!(m.degenerate);
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn auroc_invariant_under_monotone_maps(
            scores in proptest::collection::vec(0.0f64..1.0, 4..40),
            seed in 0u64..1000,
        ) {
            let labels: Vec<u8> = (0..scores.len()).map(|i| u8::from((i as u64 * 7 + seed).is_multiple_of(3))).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let a = auroc(&scores, &labels).unwrap();
            let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 2.0).collect();
            let b = auroc(&mapped, &labels).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn correctness_confidence_minimizes_aurc(bits in proptest::collection::vec(0u8..2, 1..=7)) {
            // decisions all 1, labels = bits: item correct iff bit = 1
            let n = bits.len();
            let decisions = vec![1u8; n];
            let oracle_conf: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
            let best = aurc(&risk_coverage(&decisions, &bits, &oracle_conf).unwrap()).unwrap();
            for perm in permutations(n) {
                let conf: Vec<f64> = perm.iter().map(|&p| p as f64).collect();
                let v = aurc(&risk_coverage(&decisions, &bits, &conf).unwrap()).unwrap();
                prop_assert!(best <= v + 1e-12);
            }
        }
    }
}
