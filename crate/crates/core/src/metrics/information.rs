use crate::error::{Error, Result};

fn bin_indices(values: &[f64], bins: usize) -> Vec<usize> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    values
        .iter()
        .map(|&v| {
            if width > 0.0 {
                (((v - lo) / width) as usize).min(bins - 1)
            } else {
                0
            }
        })
        .collect()
}

/// Plug-in mutual information in nats between paired samples, each axis
/// binned into equal-width bins over its observed range.
pub fn mutual_information(u: &[f64], u_bins: usize, v: &[f64], v_bins: usize) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid("mutual_information: sample lengths differ"));
    }
    if u.len() < 100 {
        return Err(Error::invalid("mutual_information needs at least 100 pairs"));
    }
    if u_bins == 0 || v_bins == 0 {
        return Err(Error::invalid("mutual_information: bin counts must be positive"));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::invalid("mutual_information: non-finite sample"));
    }
    let bu = bin_indices(u, u_bins);
    let bv = bin_indices(v, v_bins);
    let mut joint = vec![0usize; u_bins * v_bins];
    let mut mu = vec![0usize; u_bins];
    let mut mv = vec![0usize; v_bins];
    for (&i, &j) in bu.iter().zip(&bv) {
        joint[i * v_bins + j] += 1;
        mu[i] += 1;
        mv[j] += 1;
    }
    let n = u.len() as f64;
    let mut mi = 0.0;
    for i in 0..u_bins {
        for j in 0..v_bins {
            let c = joint[i * v_bins + j];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (mu[i] as f64 * mv[j] as f64)).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}
