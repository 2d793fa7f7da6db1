//! Analytic Gaussian-mixture world used as ground truth.
//!
//! `x` follows a Gaussian mixture, the observation is `y = x + sigma * xi`
//! with isotropic standard-normal `xi`, and each mixture component carries a
//! binary class. Everything of interest is available in closed form: the
//! posterior `p(x | y)` is again a mixture (Gaussian conditioning per
//! component), and the class posteriors given `x` or `y` are sums of
//! component responsibilities.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, psd_factor, softmax_log, GaussianLogPdf};
use crate::rng::{RngStream, StreamRng};

/// Largest dimension for which non-diagonal covariances are accepted.
pub const MAX_FULL_COV_DIM: usize = 16;

/// A covariance given either as a full matrix or as its diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovarianceSpec {
    Full(Vec<Vec<f64>>),
    Diagonal(Vec<f64>),
}

/// On-disk form of a [`GmmWorld`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<CovarianceSpec>,
    pub component_class: Vec<u8>,
    pub channel_sigma: f64,
}

#[derive(Debug, Clone)]
struct Component {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    cov_factor: DMatrix<f64>,
    prior: GaussianLogPdf,
    evidence: GaussianLogPdf,
    gain: DMatrix<f64>,
    post_cov: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct GmmWorld {
    spec: WorldSpec,
    log_weights: Vec<f64>,
    components: Vec<Component>,
}

/// One draw from the joint distribution of `(x, y, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub c: u8,
    pub component: usize,
}

fn to_matrix(spec: &CovarianceSpec, d: usize, k: usize) -> Result<DMatrix<f64>> {
    match spec {
        CovarianceSpec::Diagonal(diag) => {
            if diag.len() != d {
                return Err(Error::invalid(format!(
                    "covariances[{k}]: diagonal has length {}, expected {d}",
                    diag.len()
                )));
            }
            Ok(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
        }
        CovarianceSpec::Full(rows) => {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::invalid(format!("covariances[{k}]: expected a {d}x{d} matrix")));
            }
            Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
        }
    }
}

impl GmmWorld {
    pub fn from_spec(spec: WorldSpec) -> Result<Self> {
        let m = spec.weights.len();
        if m == 0 {
            return Err(Error::invalid("weights: world needs at least one component"));
        }
        if spec.means.len() != m || spec.covariances.len() != m || spec.component_class.len() != m {
            return Err(Error::invalid(format!(
                "weights/means/covariances/component_class must all have {m} entries"
            )));
        }
        if let Some(k) = spec.weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid(format!("weights[{k}] must be positive")));
        }
        let total: f64 = spec.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
        }
        if let Some(k) = spec.component_class.iter().position(|&c| c > 1) {
            return Err(Error::invalid(format!("component_class[{k}] must be 0 or 1")));
        }
        if !(spec.channel_sigma.is_finite() && spec.channel_sigma >= 0.0) {
            return Err(Error::invalid("channel_sigma must be a non-negative finite number"));
        }
        let d = spec.means[0].len();
        if d == 0 {
            return Err(Error::invalid("means[0]: dimension must be at least 1"));
        }
        let noise = spec.channel_sigma * spec.channel_sigma;
        let mut components = Vec::with_capacity(m);
        for k in 0..m {
            if spec.means[k].len() != d {
                return Err(Error::invalid(format!(
                    "means[{k}] has length {}, expected {d}",
                    spec.means[k].len()
                )));
            }
            if spec.means[k].iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("means[{k}] is not finite")));
            }
            let cov = to_matrix(&spec.covariances[k], d, k)?;
            if !is_symmetric(&cov, 1e-12) {
                return Err(Error::invalid(format!("covariances[{k}] is not symmetric")));
            }
            let off_diagonal = &cov - DMatrix::from_diagonal(&cov.diagonal());
            if d > MAX_FULL_COV_DIM && off_diagonal.abs().max() > 0.0 {
                return Err(Error::invalid(format!(
                    "covariances[{k}]: only diagonal covariances are supported above d = {MAX_FULL_COV_DIM}"
                )));
            }
            let min_eig = cov.clone().symmetric_eigen().eigenvalues.min();
            if !(min_eig > 0.0) {
                return Err(Error::invalid(format!(
                    "covariances[{k}] is not positive definite (min eigenvalue {min_eig:e})"
                )));
            }
            let mean = DVector::from_column_slice(&spec.means[k]);
            let marg = &cov + DMatrix::identity(d, d) * noise;
            let marg_inv = marg
                .clone()
                .cholesky()
                .ok_or_else(|| Error::numerical(format!("covariances[{k}] + sigma^2 I is singular")))?
                .inverse();
            let gain = &cov * &marg_inv;
            let post_cov = crate::linalg::symmetrize(&(&cov - &gain * &cov));
            components.push(Component {
                cov_factor: psd_factor(&cov)?,
                prior: GaussianLogPdf::new(&mean, &cov)?,
                evidence: GaussianLogPdf::new(&mean, &marg)?,
                mean,
                cov,
                gain,
                post_cov,
            });
        }
        Ok(Self {
            log_weights: spec.weights.iter().map(|w| w.ln()).collect(),
            spec,
            components,
        })
    }

    pub fn spec(&self) -> &WorldSpec {
        &self.spec
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.spec)?)
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn channel_sigma(&self) -> f64 {
        self.spec.channel_sigma
    }

    pub fn component_class(&self) -> &[u8] {
        &self.spec.component_class
    }

    /// Errors unless both classes are represented among the components.
    pub fn require_both_classes(&self) -> Result<()> {
        let ones = self.spec.component_class.iter().filter(|&&c| c == 1).count();
        if ones == 0 || ones == self.n_components() {
            return Err(Error::invalid("component_class: world needs a component of each class"));
        }
        Ok(())
    }

    fn draw_component(&self, rng: &mut StreamRng) -> usize {
        categorical(&self.spec.weights, rng)
    }

    fn draw_x(&self, k: usize, rng: &mut StreamRng) -> Vec<f64> {
        let c = &self.components[k];
        let z = DVector::from_vec(rng.gaussian_vec(self.dim()));
        (&c.mean + &c.cov_factor * z).iter().copied().collect()
    }

    /// Draws `y` given `x` through the channel.
    pub fn observe(&self, x: &[f64], rng: &mut StreamRng) -> Vec<f64> {
        let s = self.spec.channel_sigma;
        x.iter().map(|v| v + s * rng.gaussian()).collect()
    }

    /// `n` joint draws; item `i` uses `stream.split(i)`.
    pub fn sample_joint(&self, stream: RngStream, n: usize) -> Vec<JointSample> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.split(i as u64).rng();
                let k = self.draw_component(&mut rng);
                let x = self.draw_x(k, &mut rng);
                let y = self.observe(&x, &mut rng);
                JointSample {
                    x,
                    y,
                    c: self.spec.component_class[k],
                    component: k,
                }
            })
            .collect()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector has length {}, world dimension is {}",
                v.len(),
                self.dim()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("vector is not finite"));
        }
        Ok(())
    }

    fn posterior_log_weights(&self, y: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| lw + c.evidence.log_pdf(y))
            .collect()
    }

    /// Exact `p(x | y)`.
    pub fn posterior_given_y(&self, y: &[f64]) -> Result<PosteriorGmm> {
        self.check_len(y)?;
        let weights = softmax_log(&self.posterior_log_weights(y));
        let yv = DVector::from_column_slice(y);
        let means = self
            .components
            .iter()
            .map(|c| (&c.mean + &c.gain * (&yv - &c.mean)).iter().copied().collect())
            .collect();
        let covs = self.components.iter().map(|c| c.post_cov.clone()).collect();
        PosteriorGmm::new(weights, means, covs)
    }

    fn class_one_mass(&self, resp: &[f64]) -> f64 {
        resp.iter()
            .zip(&self.spec.component_class)
            .filter(|(_, &c)| c == 1)
            .map(|(r, _)| r)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// `P(C = 1 | x)` under the prior mixture.
    pub fn class_posterior_x(&self, x: &[f64]) -> f64 {
        let log_r: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| lw + c.prior.log_pdf(x))
            .collect();
        self.class_one_mass(&softmax_log(&log_r))
    }

    /// `P(C = 1 | y)`.
    pub fn class_posterior_y(&self, y: &[f64]) -> f64 {
        self.class_one_mass(&softmax_log(&self.posterior_log_weights(y)))
    }

    /// Component means and covariances, for callers building their own
    /// closed-form quantities.
    pub fn component(&self, k: usize) -> (&DVector<f64>, &DMatrix<f64>) {
        (&self.components[k].mean, &self.components[k].cov)
    }
}

impl Serialize for GmmWorld {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GmmWorld {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = WorldSpec::deserialize(d)?;
        GmmWorld::from_spec(spec).map_err(serde::de::Error::custom)
    }
}

fn categorical(weights: &[f64], rng: &mut StreamRng) -> usize {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// Exact posterior mixture `p(x | y)` for one observation.
#[derive(Debug, Clone)]
pub struct PosteriorGmm {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Vec<DMatrix<f64>>,
    factors: Vec<DMatrix<f64>>,
}

impl PosteriorGmm {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covs: Vec<DMatrix<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != covs.len() {
            return Err(Error::invalid(
                "posterior mixture arrays must be non-empty and equally long",
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("posterior weights must form a simplex"));
        }
        let factors = covs.iter().map(psd_factor).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            weights,
            means,
            covs,
            factors,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn covs(&self) -> &[DMatrix<f64>] {
        &self.covs
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Posterior mean `sum_k w_k m_k` (the MMSE estimate).
    pub fn mmse_estimate(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (w, m) in self.weights.iter().zip(&self.means) {
            for (o, v) in out.iter_mut().zip(m) {
                *o += w * v;
            }
        }
        out
    }

    /// One draw along with its mixture component.
    pub fn draw(&self, rng: &mut StreamRng) -> (usize, Vec<f64>) {
        let k = categorical(&self.weights, rng);
        let z = DVector::from_vec(rng.gaussian_vec(self.dim()));
        let dx = &self.factors[k] * z;
        (k, self.means[k].iter().zip(dx.iter()).map(|(m, e)| m + e).collect())
    }

    /// `k` i.i.d. exact draws from the start of `stream`.
    pub fn sample(&self, stream: RngStream, k: usize) -> Vec<Vec<f64>> {
        let mut rng = stream.rng();
        (0..k).map(|_| self.draw(&mut rng).1).collect()
    }
}

/// Ready-made worlds at desk scale.
pub mod presets {
    use super::*;

    /// 1-D, two equal components at -2 and +2 with unit variance and unit
    /// channel noise. Class 1 is the right component.
    pub fn symmetric_1d() -> GmmWorld {
        GmmWorld::from_spec(WorldSpec {
            weights: vec![0.5, 0.5],
            means: vec![vec![-2.0], vec![2.0]],
            covariances: vec![CovarianceSpec::Diagonal(vec![1.0]); 2],
            component_class: vec![0, 1],
            channel_sigma: 1.0,
        })
        .expect("valid preset")
    }

    /// 2-D, four correlated components in an XOR class layout (diagonal
    /// quadrants share a class), so no linear rule separates the classes.
    pub fn xor_2d() -> GmmWorld {
        GmmWorld::from_spec(WorldSpec {
            weights: vec![0.3, 0.2, 0.25, 0.25],
            means: vec![vec![1.5, 1.5], vec![-1.5, -1.5], vec![1.5, -1.5], vec![-1.5, 1.5]],
            covariances: vec![
                CovarianceSpec::Full(vec![vec![1.0, 0.3], vec![0.3, 0.8]]),
                CovarianceSpec::Full(vec![vec![0.7, -0.2], vec![-0.2, 1.1]]),
                CovarianceSpec::Full(vec![vec![0.9, 0.0], vec![0.0, 0.6]]),
                CovarianceSpec::Full(vec![vec![0.8, 0.25], vec![0.25, 0.9]]),
            ],
            component_class: vec![1, 1, 0, 0],
            channel_sigma: 1.0,
        })
        .expect("valid preset")
    }

    /// 8-D, two components with AR(1)-correlated covariances, like two
    /// smooth waveform families observed through moderate noise.
    pub fn waveform_8d() -> GmmWorld {
        let d: i32 = 8;
        let cov = |scale: f64, rho: f64| {
            CovarianceSpec::Full(
                (0..d)
                    .map(|i| (0..d).map(|j| scale * rho.powi((i - j).abs())).collect())
                    .collect(),
            )
        };
        let shape: Vec<f64> = (0..d)
            .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / d as f64).sin())
            .collect();
        GmmWorld::from_spec(WorldSpec {
            weights: vec![0.5, 0.5],
            means: vec![
                shape.iter().map(|v| 1.2 * v).collect(),
                shape.iter().map(|v| -1.2 * v).collect(),
            ],
            covariances: vec![cov(0.5, 0.6), cov(0.4, 0.4)],
            component_class: vec![1, 0],
            channel_sigma: 0.5,
        })
        .expect("valid preset")
    }
}
