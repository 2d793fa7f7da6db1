use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};
use crate::signal::LabeledSignal;

/// Indices into the training set: `2b` entries, alternating the positive and
/// negative example drawn for `sampled_labels[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedBatch {
    pub sampled_labels: Vec<usize>,
    pub indices: Vec<usize>,
}

impl BalancedBatch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn pick(pool: &[usize], rng: &mut StreamRng) -> usize {
    pool[rng.index(pool.len())]
}

/// Class-balanced batches for multi-label data.
///
/// Each of the `b` draws picks a label `L` uniformly, one example positive
/// for `L` and one negative for `L`. When `L` is not the major label `l`,
/// the negative is drawn from examples with `C_l = B`, `B ~ Bernoulli(p_l)`;
/// if that pool is empty it falls back to all negatives for `L`.
pub fn balanced_batches(
    items: &[LabeledSignal],
    b: usize,
    major_label: usize,
    major_ratio: f64,
    n_batches: usize,
    stream: RngStream,
) -> Result<Vec<BalancedBatch>> {
    let Some(first) = items.first() else {
        return Err(Error::Sampling("training set is empty".into()));
    };
    let n_labels = first.labels().len();
    if n_labels == 0 || items.iter().any(|it| it.labels().len() != n_labels) {
        return Err(Error::invalid("every item needs the same non-zero number of labels"));
    }
    if b == 0 {
        return Err(Error::invalid("batch half size must be positive"));
    }
    if major_label >= n_labels {
        return Err(Error::invalid(format!(
            "major label {major_label} outside 0..{n_labels}"
        )));
    }
    if !(0.0..=1.0).contains(&major_ratio) {
        return Err(Error::invalid("major label ratio must lie in [0, 1]"));
    }
    let mut positives = vec![Vec::new(); n_labels];
    // negatives[L][v]: C_L = 0 and C_major = v
    let mut negatives = vec![[Vec::new(), Vec::new()]; n_labels];
    for (i, it) in items.iter().enumerate() {
        let major = usize::from(it.has_label(major_label));
        for (l, &c) in it.labels().iter().enumerate() {
            if c == 1 {
                positives[l].push(i);
            } else {
                negatives[l][major].push(i);
            }
        }
    }
    for l in 0..n_labels {
        if positives[l].is_empty() {
            return Err(Error::Sampling(format!("label {l} has no positive example")));
        }
        if negatives[l].iter().all(Vec::is_empty) {
            return Err(Error::Sampling(format!("label {l} has no negative example")));
        }
    }
    let all_negatives: Vec<Vec<usize>> = negatives
        .iter()
        .map(|[a, b]| {
            let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
            v.sort_unstable();
            v
        })
        .collect();

    let mut rng = stream.rng();
    let batches = (0..n_batches)
        .map(|_| {
            let mut batch = BalancedBatch {
                sampled_labels: Vec::with_capacity(b),
                indices: Vec::with_capacity(2 * b),
            };
            for _ in 0..b {
                let l = rng.index(n_labels);
                let pos = pick(&positives[l], &mut rng);
                let neg = if l == major_label {
                    pick(&all_negatives[l], &mut rng)
                } else {
                    let bit = usize::from(rng.bernoulli(major_ratio));
                    let pool = &negatives[l][bit];
                    if pool.is_empty() {
                        pick(&all_negatives[l], &mut rng)
                    } else {
                        pick(pool, &mut rng)
                    }
                };
                batch.sampled_labels.push(l);
                batch.indices.push(pos);
                batch.indices.push(neg);
            }
            batch
        })
        .collect();
    Ok(batches)
}
