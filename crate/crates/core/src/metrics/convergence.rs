use rayon::prelude::*;

use super::CurvePoints;
use crate::classify::{decide, ClassifierModel, PairedItem};
use crate::diffusion::PosteriorSampler;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// ESC behaviour as a function of the ensemble size `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCurve {
    /// `accuracy(ORIGINAL_X) - accuracy(ESC with K samples)`, averaged over
    /// repeats.
    pub gap: CurvePoints,
    /// Standard deviation of the ESC score across repeats, averaged over
    /// items.
    pub score_std: CurvePoints,
}

/// ESC accuracy gap and score spread for each `K` in `k_grid`.
///
/// Repeat `r` draws one ensemble of size `max(k_grid)` per item from
/// `stream.split(r).split(i)`; smaller `K` use its first `K` members.
#[allow(clippy::too_many_arguments)]
pub fn esc_convergence_curve(
    items: &[PairedItem],
    label_index: usize,
    sampler: &dyn PosteriorSampler,
    f_x: &dyn ClassifierModel,
    k_grid: &[usize],
    repeats: usize,
    decision_threshold: f64,
    stream: RngStream,
) -> Result<ConvergenceCurve> {
    if k_grid.is_empty() || k_grid[0] == 0 || k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("k_grid must be positive and strictly increasing"));
    }
    if repeats == 0 || items.is_empty() {
        return Err(Error::invalid("need at least one repeat and one item"));
    }
    if items.iter().any(|it| label_index >= it.labels.len()) {
        return Err(Error::invalid(format!("label {label_index} missing from some item")));
    }
    let k_max = *k_grid.last().expect("non-empty");
    let n = items.len() as f64;
    let x_correct = items
        .iter()
        .filter(|it| decide(f_x.score(&it.x), decision_threshold) == it.labels[label_index])
        .count() as f64;
    let x_accuracy = x_correct / n;

    // esc[r][i][g]
    let esc: Vec<Vec<Vec<f64>>> = (0..repeats)
        .map(|r| {
            let rep = stream.split(r as u64);
            items
                .par_iter()
                .enumerate()
                .map(|(i, it)| {
                    let ens = sampler.sample(&it.y, rep.split(i as u64), k_max)?;
                    let mut prefix = 0.0;
                    let mut out = Vec::with_capacity(k_grid.len());
                    let mut g = 0;
                    for (j, x) in ens.vectors().enumerate() {
                        prefix += f_x.score(x).clamp(0.0, 1.0);
                        if j + 1 == k_grid[g] {
                            out.push(prefix / k_grid[g] as f64);
                            g += 1;
                        }
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;

    let mut gap = Vec::with_capacity(k_grid.len());
    let mut spread = Vec::with_capacity(k_grid.len());
    for (g, &k) in k_grid.iter().enumerate() {
        let mut acc = 0.0;
        for rep in &esc {
            let correct = rep
                .iter()
                .zip(items)
                .filter(|(s, it)| decide(s[g], decision_threshold) == it.labels[label_index])
                .count() as f64;
            acc += correct / n;
        }
        gap.push((k as f64, x_accuracy - acc / repeats as f64));
        let std = if repeats > 1 {
            (0..items.len())
                .map(|i| {
                    let vals: Vec<f64> = esc.iter().map(|rep| rep[i][g]).collect();
                    let m = vals.iter().sum::<f64>() / repeats as f64;
                    (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt()
                })
                .sum::<f64>()
                / n
        } else {
            0.0
        };
        spread.push((k as f64, std));
    }
    Ok(ConvergenceCurve {
        gap: CurvePoints::new(gap)?,
        score_std: CurvePoints::new(spread)?,
    })
}
