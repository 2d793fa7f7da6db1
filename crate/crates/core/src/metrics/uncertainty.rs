use nalgebra::DMatrix;
use rayon::prelude::*;

use super::CurvePoints;
use crate::error::{Error, Result};
use crate::signal::{PosteriorEnsemble, ScoreSet};

/// Quantile of already sorted data with linear interpolation between order
/// statistics (position `(n - 1) q`).
pub fn quantile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::invalid("quantile of an empty set"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile level {q} outside [0, 1]")));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Width of the central `mass` interval of each score set.
pub fn score_interval_sizes(score_sets: &[ScoreSet], mass: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&mass) {
        return Err(Error::invalid(format!("interval mass {mass} outside [0, 1]")));
    }
    score_sets
        .iter()
        .map(|s| {
            let v = sorted(s.scores());
            Ok(quantile(&v, 0.5 + mass / 2.0)? - quantile(&v, 0.5 - mass / 2.0)?)
        })
        .collect()
}

/// Principal directions of an ensemble, sorted by decreasing spread. Only
/// directions with non-negligible spread are returned.
fn principal_directions(ensemble: &PosteriorEnsemble, mean: &[f64]) -> Vec<Vec<f64>> {
    let (k, d) = (ensemble.k(), ensemble.dim());
    let centered = DMatrix::from_fn(k, d, |i, j| ensemble.samples()[i].values()[j] - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let s = &svd.singular_values;
    let s_max = s.iter().copied().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..s.len()).filter(|&i| s[i] > 1e-12 * s_max.max(1.0)).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .map(|i| v_t.row(i).iter().copied().collect())
        .collect()
}

/// Mean (over items) of the `coord_quantile` quantile of absolute residuals
/// after projecting the centred ground truth onto the top `n` principal
/// components of its ensemble, for each `n` in `pc_counts`.
pub fn pca_uncertainty_curve(
    items: &[(&PosteriorEnsemble, &[f64])],
    pc_counts: &[usize],
    coord_quantile: f64,
) -> Result<CurvePoints> {
    if items.is_empty() {
        return Err(Error::invalid("pca_uncertainty_curve: no items"));
    }
    let max_n = pc_counts.iter().copied().max().unwrap_or(0);
    for (i, (ens, gt)) in items.iter().enumerate() {
        if ens.k() <= max_n {
            return Err(Error::invalid(format!(
                "item {i}: ensemble size {} must exceed the largest component count {max_n}",
                ens.k()
            )));
        }
        if gt.len() != ens.dim() {
            return Err(Error::invalid(format!(
                "item {i}: ground truth length does not match the ensemble"
            )));
        }
    }
    let per_item: Vec<Vec<f64>> = items
        .par_iter()
        .map(|(ens, gt)| {
            let mean = ens.mean();
            let dirs = principal_directions(ens, &mean);
            let centered: Vec<f64> = gt.iter().zip(&mean).map(|(g, m)| g - m).collect();
            pc_counts
                .iter()
                .map(|&n| {
                    let mut residual = centered.clone();
                    for dir in dirs.iter().take(n) {
                        let coef: f64 = centered.iter().zip(dir).map(|(a, b)| a * b).sum();
                        for (r, v) in residual.iter_mut().zip(dir) {
                            *r -= coef * v;
                        }
                    }
                    let abs: Vec<f64> = residual.iter().map(|r| r.abs()).collect();
                    quantile(&sorted(&abs), coord_quantile)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut points: Vec<(f64, f64)> = pc_counts
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let mean = per_item.iter().map(|v| v[j]).sum::<f64>() / items.len() as f64;
            (n as f64, mean)
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    CurvePoints::new(points)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Fraction of items whose ground truth lies within the
/// `histogram_quantile` quantile of the ensemble's pairwise distances from
/// its nearest sample.
pub fn ensemble_containment(items: &[(&PosteriorEnsemble, &[f64])], histogram_quantile: f64) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::invalid("ensemble_containment: no items"));
    }
    let contained: Vec<bool> = items
        .par_iter()
        .enumerate()
        .map(|(i, (ens, gt))| {
            if ens.k() < 3 {
                return Err(Error::invalid(format!(
                    "item {i}: containment needs at least 3 samples"
                )));
            }
            if gt.len() != ens.dim() {
                return Err(Error::invalid(format!(
                    "item {i}: ground truth length does not match the ensemble"
                )));
            }
            let samples = ens.samples();
            let mut pairwise = Vec::with_capacity(samples.len() * (samples.len() - 1) / 2);
            for a in 0..samples.len() {
                for b in a + 1..samples.len() {
                    pairwise.push(euclid(samples[a].values(), samples[b].values()));
                }
            }
            let threshold = quantile(&sorted(&pairwise), histogram_quantile)?;
            let nearest = samples
                .iter()
                .map(|s| euclid(s.values(), gt))
                .fold(f64::INFINITY, f64::min);
            Ok(nearest <= threshold)
        })
        .collect::<Result<_>>()?;
    Ok(contained.iter().filter(|&&c| c).count() as f64 / items.len() as f64)
}
