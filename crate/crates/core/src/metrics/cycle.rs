use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_gaussian, frechet_distance};
use crate::classify::PairedItem;
use crate::diffusion::PosteriorSampler;
use crate::error::{Error, Result};
use crate::rng::RngStream;

type DirectAndCycle = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Fréchet distances of pooled direct and cycle ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub n_items: usize,
    pub k: usize,
    /// Direct `y -> x` ensembles vs the true `x`.
    pub fd_direct: f64,
    /// `x -> y -> x` ensembles vs the true `x`.
    pub fd_cycle: f64,
    pub fd_cycle_vs_direct: f64,
}

/// Runs `y -> x` directly and `x -> y_hat -> x` through the reverse sampler.
///
/// Item `i` uses `stream.split(i)`: `split(0)` for the direct ensemble,
/// `split(1)` for the single reverse draw and `split(2)` for the cycle
/// ensemble.
pub fn cycle_consistency(
    items: &[PairedItem],
    forward: &dyn PosteriorSampler,
    reverse: &dyn PosteriorSampler,
    k: usize,
    stream: RngStream,
) -> Result<CycleReport> {
    if items.len() < 2 && k < 2 {
        return Err(Error::invalid("cycle report needs at least two pooled samples"));
    }
    let per_item: Vec<DirectAndCycle> = items
        .par_iter()
        .enumerate()
        .map(|(i, it)| {
            let s = stream.split(i as u64);
            let direct = forward.sample(&it.y, s.split(0), k)?;
            let y_hat = reverse.sample(&it.x, s.split(1), 1)?;
            let cycle = forward.sample(y_hat.samples()[0].values(), s.split(2), k)?;
            let rows = |e: &crate::signal::PosteriorEnsemble| e.vectors().map(<[f64]>::to_vec).collect();
            Ok((rows(&direct), rows(&cycle)))
        })
        .collect::<Result<_>>()?;
    let direct: Vec<&[f64]> = per_item.iter().flat_map(|(d, _)| d.iter().map(Vec::as_slice)).collect();
    let cycle: Vec<&[f64]> = per_item.iter().flat_map(|(_, c)| c.iter().map(Vec::as_slice)).collect();
    let truth = fit_gaussian(&items.iter().map(|it| it.x.as_slice()).collect::<Vec<_>>())?;
    let (gd, gc) = (fit_gaussian(&direct)?, fit_gaussian(&cycle)?);
    Ok(CycleReport {
        n_items: items.len(),
        k,
        fd_direct: frechet_distance(&gd, &truth)?,
        fd_cycle: frechet_distance(&gc, &truth)?,
        fd_cycle_vs_direct: frechet_distance(&gc, &gd)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{ChannelSampler, ExactPosteriorSampler};
    use crate::toyworld::presets;

    #[test]
    fn near_identity_channel_keeps_cycle_close_to_direct() {
        let mut spec = presets::xor_2d().spec().clone();
        spec.channel_sigma = 0.01;
        let world = crate::toyworld::GmmWorld::from_spec(spec).unwrap();
        let items: Vec<PairedItem> = world
            .sample_joint(RngStream::new(5, 0), 400)
            .into_iter()
            .map(PairedItem::from)
            .collect();
        let fwd = ExactPosteriorSampler { world: world.clone() };
        let rev = ChannelSampler { world };
        let r = cycle_consistency(&items, &fwd, &rev, 20, RngStream::new(6, 0)).unwrap();
        assert!(r.fd_cycle <= 2.0 * r.fd_direct.max(1e-3), "{r:?}");
        assert!(r.fd_cycle_vs_direct < 1e-2, "{r:?}");
    }

    #[test]
    fn deterministic() {
        let world = presets::xor_2d();
        let items: Vec<PairedItem> = world
            .sample_joint(RngStream::new(1, 0), 30)
            .into_iter()
            .map(PairedItem::from)
            .collect();
        let fwd = ExactPosteriorSampler { world: world.clone() };
        let rev = ChannelSampler { world };
        let a = cycle_consistency(&items, &fwd, &rev, 10, RngStream::new(2, 0)).unwrap();
        let b = cycle_consistency(&items, &fwd, &rev, 10, RngStream::new(2, 0)).unwrap();
        assert_eq!(a, b);
    }
}
