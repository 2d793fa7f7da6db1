use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a linear beta schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleParams {
    pub n_train_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub ddim_stride: usize,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            n_train_steps: 1000,
            beta_start: 1e-6,
            beta_end: 1e-2,
            ddim_stride: 10,
        }
    }
}

/// Linear `beta` schedule with cumulative `alpha_bar` and a strided DDIM
/// sub-sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleParams", into = "ScheduleParams")]
pub struct NoiseSchedule {
    params: ScheduleParams,
    betas: Vec<f64>,
    alphas_bar: Vec<f64>,
}

impl TryFrom<ScheduleParams> for NoiseSchedule {
    type Error = Error;

    fn try_from(p: ScheduleParams) -> Result<Self> {
        Self::new(p)
    }
}

impl From<NoiseSchedule> for ScheduleParams {
    fn from(s: NoiseSchedule) -> Self {
        s.params
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::new(ScheduleParams::default()).expect("default schedule is valid")
    }
}

impl NoiseSchedule {
    pub fn new(params: ScheduleParams) -> Result<Self> {
        let ScheduleParams {
            n_train_steps: n,
            beta_start,
            beta_end,
            ddim_stride,
        } = params;
        if n == 0 {
            return Err(Error::invalid("schedule needs at least one step"));
        }
        if !(beta_start > 0.0 && beta_end < 1.0) {
            return Err(Error::invalid("betas must lie in (0, 1)"));
        }
        if n > 1 && !(beta_start < beta_end) {
            return Err(Error::invalid(
                "betas must be strictly increasing (beta_start < beta_end)",
            ));
        }
        if ddim_stride == 0 || n % ddim_stride != 0 {
            return Err(Error::invalid(format!(
                "n_train_steps {n} is not divisible by ddim_stride {ddim_stride}"
            )));
        }
        let betas: Vec<f64> = (0..n)
            .map(|i| {
                if n == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        let mut alphas_bar = Vec::with_capacity(n);
        let mut acc = 1.0;
        for b in &betas {
            acc *= 1.0 - b;
            alphas_bar.push(acc);
        }
        Ok(Self {
            params,
            betas,
            alphas_bar,
        })
    }

    /// Same betas, different DDIM stride.
    pub fn with_stride(&self, ddim_stride: usize) -> Result<Self> {
        Self::new(ScheduleParams {
            ddim_stride,
            ..self.params
        })
    }

    pub fn params(&self) -> ScheduleParams {
        self.params
    }

    pub fn n_train_steps(&self) -> usize {
        self.params.n_train_steps
    }

    pub fn ddim_stride(&self) -> usize {
        self.params.ddim_stride
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas_bar(&self) -> &[f64] {
        &self.alphas_bar
    }

    pub fn alpha_bar(&self, step: usize) -> f64 {
        self.alphas_bar[step]
    }

    /// `alpha_bar` of an optional previous step; `None` is the clean end
    /// point with `alpha_bar = 1`.
    pub fn alpha_bar_prev(&self, prev: Option<usize>) -> f64 {
        prev.map_or(1.0, |p| self.alphas_bar[p])
    }

    /// Number of DDIM steps `n_train_steps / ddim_stride`.
    pub fn n_sampling_steps(&self) -> usize {
        self.params.n_train_steps / self.params.ddim_stride
    }

    /// DDIM timesteps in ascending order: `stride - 1, 2 stride - 1, ...,
    /// n_train_steps - 1`.
    pub fn ddim_timesteps(&self) -> Vec<usize> {
        let s = self.params.ddim_stride;
        (1..=self.n_sampling_steps()).map(|i| i * s - 1).collect()
    }

    /// `(step, previous step)` pairs in sampling order, from the noisiest
    /// step down to the final jump to `alpha_bar = 1`.
    pub fn sampling_pairs(&self) -> Vec<(usize, Option<usize>)> {
        let ts = self.ddim_timesteps();
        (0..ts.len())
            .rev()
            .map(|i| (ts[i], i.checked_sub(1).map(|j| ts[j])))
            .collect()
    }
}
