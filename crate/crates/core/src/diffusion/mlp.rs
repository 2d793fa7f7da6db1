use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{diffuse, DenoiserModel, NoiseSchedule, ScheduleParams};
use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};

const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    /// `out x in`
    w: DMatrix<f64>,
    b: DVector<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn silu(z: f64) -> f64 {
    z * sigmoid(z)
}

fn silu_grad(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 + z * (1.0 - s))
}

/// Sinusoidal embedding of an integer step: `sin(t f_j)` then `cos(t f_j)`
/// with geometric frequencies `f_j = 10000^(-j / half)`.
fn time_embedding(step: usize, width: usize, out: &mut [f64]) {
    let half = width / 2;
    for j in 0..half {
        let f = (-(10_000f64.ln()) * j as f64 / half as f64).exp();
        let a = step as f64 * f;
        out[j] = a.sin();
        out[half + j] = a.cos();
    }
}

/// Fully connected noise predictor on `[x_t, y, emb(t)]` with SiLU hidden
/// layers and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpDenoiser {
    x_dim: usize,
    y_dim: usize,
    t_emb: usize,
    layers: Vec<Dense>,
}

/// Gradient of the loss with respect to every weight and bias.
#[derive(Debug, Clone)]
pub struct MlpGradient {
    layers: Vec<Dense>,
}

impl MlpGradient {
    /// Flattened in the same order as [`MlpDenoiser::param`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
            .collect()
    }
}

struct Forward {
    /// Activations per layer input, `inputs[0]` being the network input.
    inputs: Vec<DMatrix<f64>>,
    /// Hidden pre-activations.
    pre: Vec<DMatrix<f64>>,
    output: DMatrix<f64>,
}

impl MlpDenoiser {
    /// Random initialization with `N(0, 1 / fan_in)` weights and zero biases.
    pub fn random(x_dim: usize, y_dim: usize, hidden: &[usize], t_emb: usize, stream: RngStream) -> Result<Self> {
        if x_dim == 0 || hidden.contains(&0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        if !t_emb.is_multiple_of(2) {
            return Err(Error::invalid(format!("time embedding width {t_emb} must be even")));
        }
        let mut rng = stream.rng();
        let mut widths = vec![x_dim + y_dim + t_emb];
        widths.extend_from_slice(hidden);
        widths.push(x_dim);
        let layers = widths
            .windows(2)
            .map(|w| {
                let scale = (1.0 / w[0] as f64).sqrt();
                Dense {
                    w: DMatrix::from_fn(w[1], w[0], |_, _| scale * rng.gaussian()),
                    b: DVector::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self {
            x_dim,
            y_dim,
            t_emb,
            layers,
        })
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn t_emb(&self) -> usize {
        self.t_emb
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn locate(&self, mut i: usize) -> (usize, bool, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            if i < l.w.len() {
                return (li, true, i);
            }
            i -= l.w.len();
            if i < l.b.len() {
                return (li, false, i);
            }
            i -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter `i` in layer order, weights (column-major) before biases.
    pub fn param(&self, i: usize) -> f64 {
        let (l, is_w, j) = self.locate(i);
        if is_w {
            self.layers[l].w[j]
        } else {
            self.layers[l].b[j]
        }
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        let (l, is_w, j) = self.locate(i);
        if is_w {
            self.layers[l].w[j] = v;
        } else {
            self.layers[l].b[j] = v;
        }
    }

    fn input_matrix(&self, x_t: &[&[f64]], y: &[&[f64]], steps: &[usize]) -> DMatrix<f64> {
        let n_in = self.x_dim + self.y_dim + self.t_emb;
        let mut m = DMatrix::zeros(n_in, x_t.len());
        let mut emb = vec![0.0; self.t_emb];
        for (c, ((x, y), &t)) in x_t.iter().zip(y).zip(steps).enumerate() {
            let mut col = m.column_mut(c);
            for (i, v) in x.iter().chain(y.iter()).enumerate() {
                col[i] = *v;
            }
            time_embedding(t, self.t_emb, &mut emb);
            for (i, v) in emb.iter().enumerate() {
                col[self.x_dim + self.y_dim + i] = *v;
            }
        }
        m
    }

    fn forward(&self, input: DMatrix<f64>) -> Forward {
        let mut inputs = vec![input];
        let mut pre = Vec::new();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut z = &l.w * inputs.last().expect("non-empty");
            for mut col in z.column_iter_mut() {
                col += &l.b;
            }
            if li == last {
                return Forward { inputs, pre, output: z };
            }
            inputs.push(z.map(silu));
            pre.push(z);
        }
        unreachable!("network has an output layer")
    }

    /// Mean squared error (over batch and coordinates) between predicted and
    /// true noise, and its gradient.
    pub fn loss_and_gradient(
        &self,
        x_t: &[&[f64]],
        y: &[&[f64]],
        steps: &[usize],
        eps: &[&[f64]],
    ) -> (f64, MlpGradient) {
        let fw = self.forward(self.input_matrix(x_t, y, steps));
        let batch = x_t.len();
        let scale = 1.0 / (batch * self.x_dim) as f64;
        let mut delta = fw.output.clone();
        for (c, e) in eps.iter().enumerate() {
            for (i, v) in e.iter().enumerate() {
                delta[(i, c)] -= v;
            }
        }
        let loss = delta.norm_squared() * scale;
        delta *= 2.0 * scale;
        let mut grads = Vec::with_capacity(self.layers.len());
        for li in (0..self.layers.len()).rev() {
            let a_in = &fw.inputs[li];
            let gw = &delta * a_in.transpose();
            let gb = delta.column_sum();
            grads.push(Dense { w: gw, b: gb });
            if li > 0 {
                let mut back = self.layers[li].w.transpose() * &delta;
                back.zip_apply(&fw.pre[li - 1], |g, z| *g *= silu_grad(z));
                delta = back;
            }
        }
        grads.reverse();
        (loss, MlpGradient { layers: grads })
    }

    /// Loss alone, for finite-difference checks and validation.
    pub fn loss(&self, x_t: &[&[f64]], y: &[&[f64]], steps: &[usize], eps: &[&[f64]]) -> f64 {
        let out = self.forward(self.input_matrix(x_t, y, steps)).output;
        let mut total = 0.0;
        for (c, e) in eps.iter().enumerate() {
            for (i, v) in e.iter().enumerate() {
                total += (out[(i, c)] - v).powi(2);
            }
        }
        total / (x_t.len() * self.x_dim) as f64
    }

    pub fn to_checkpoint(&self, schedule: &NoiseSchedule) -> MlpCheckpoint {
        MlpCheckpoint {
            schedule: schedule.params(),
            x_dim: self.x_dim,
            y_dim: self.y_dim,
            t_emb: self.t_emb,
            activation: "silu".into(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerCheckpoint {
                    rows: l.w.nrows(),
                    cols: l.w.ncols(),
                    weights: l.w.transpose().iter().copied().collect(),
                    biases: l.b.iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: &MlpCheckpoint) -> Result<(Self, NoiseSchedule)> {
        let schedule = NoiseSchedule::new(ck.schedule)?;
        if ck.activation != "silu" {
            return Err(Error::invalid(format!("unsupported activation {:?}", ck.activation)));
        }
        if ck.layers.is_empty() || !ck.t_emb.is_multiple_of(2) {
            return Err(Error::invalid("checkpoint has no layers or an odd embedding width"));
        }
        let mut expected_in = ck.x_dim + ck.y_dim + ck.t_emb;
        let mut layers = Vec::with_capacity(ck.layers.len());
        for (i, l) in ck.layers.iter().enumerate() {
            if l.cols != expected_in || l.weights.len() != l.rows * l.cols || l.biases.len() != l.rows {
                return Err(Error::invalid(format!("checkpoint layer {i} has inconsistent shape")));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "checkpoint layer {i} has non-finite parameters"
                )));
            }
            layers.push(Dense {
                w: DMatrix::from_row_slice(l.rows, l.cols, &l.weights),
                b: DVector::from_column_slice(&l.biases),
            });
            expected_in = l.rows;
        }
        if expected_in != ck.x_dim {
            return Err(Error::invalid("checkpoint output width does not match x_dim"));
        }
        Ok((
            Self {
                x_dim: ck.x_dim,
                y_dim: ck.y_dim,
                t_emb: ck.t_emb,
                layers,
            },
            schedule,
        ))
    }

    pub fn save_json(&self, schedule: &NoiseSchedule, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_checkpoint(schedule))?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<(Self, NoiseSchedule)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::at(path, e))?;
        let ck: MlpCheckpoint = serde_json::from_str(&text).map_err(|e| Error::at(path, e))?;
        Self::from_checkpoint(&ck)
    }
}

impl DenoiserModel for MlpDenoiser {
    fn x_dim(&self) -> usize {
        self.x_dim
    }

    fn predict(&self, x_t: &[f64], y: &[f64], step: usize) -> Vec<f64> {
        let out = self.forward(self.input_matrix(&[x_t], &[y], &[step])).output;
        out.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// On-disk form of a trained [`MlpDenoiser`] with its schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub schedule: ScheduleParams,
    pub x_dim: usize,
    pub y_dim: usize,
    pub t_emb: usize,
    pub activation: String,
    pub layers: Vec<LayerCheckpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub t_emb: usize,
    pub validation_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            hidden: vec![128, 128],
            t_emb: 16,
            validation_fraction: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

/// Per-epoch mean training loss and validation loss.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
}

struct Adam {
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: i32,
}

impl Adam {
    fn new(model: &MlpDenoiser) -> Self {
        let zeros: Vec<Dense> = model
            .layers
            .iter()
            .map(|l| Dense {
                w: DMatrix::zeros(l.w.nrows(), l.w.ncols()),
                b: DVector::zeros(l.b.len()),
            })
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpDenoiser, grad: &MlpGradient, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.adam_eps);
        };
        for (((layer, m), v), g) in model
            .layers
            .iter_mut()
            .zip(&mut self.m)
            .zip(&mut self.v)
            .zip(&grad.layers)
        {
            for (((p, m), v), g) in layer
                .w
                .iter_mut()
                .zip(m.w.iter_mut())
                .zip(v.w.iter_mut())
                .zip(g.w.iter())
            {
                update(p, m, v, *g);
            }
            for (((p, m), v), g) in layer
                .b
                .iter_mut()
                .zip(m.b.iter_mut())
                .zip(v.b.iter_mut())
                .zip(g.b.iter())
            {
                update(p, m, v, *g);
            }
        }
    }
}

fn slices(rows: &[Vec<f64>]) -> Vec<&[f64]> {
    rows.iter().map(Vec::as_slice).collect()
}

struct NoisedBatch {
    x_t: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    steps: Vec<usize>,
    eps: Vec<Vec<f64>>,
}

impl NoisedBatch {
    fn draw(pairs: &[(Vec<f64>, Vec<f64>)], idx: &[usize], schedule: &NoiseSchedule, rng: &mut StreamRng) -> Self {
        let mut b = NoisedBatch {
            x_t: Vec::with_capacity(idx.len()),
            y: Vec::with_capacity(idx.len()),
            steps: Vec::with_capacity(idx.len()),
            eps: Vec::with_capacity(idx.len()),
        };
        for &i in idx {
            let (x0, y) = &pairs[i];
            let step = rng.index(schedule.n_train_steps());
            let eps = rng.gaussian_vec(x0.len());
            b.x_t.push(diffuse(x0, &eps, schedule.alpha_bar(step)));
            b.y.push(y.clone());
            b.steps.push(step);
            b.eps.push(eps);
        }
        b
    }

    #[allow(clippy::type_complexity)]
    fn views(&self) -> (Vec<&[f64]>, Vec<&[f64]>, Vec<&[f64]>) {
        (slices(&self.x_t), slices(&self.y), slices(&self.eps))
    }
}

/// Fits an [`MlpDenoiser`] to `(x0, y)` pairs by minimizing the noise
/// prediction error at uniformly drawn steps.
///
/// Streams: `stream.split(0)` initializes the weights, `split(1)` chooses
/// the validation items, `split(2)` fixes their noise, and epoch `e` draws
/// its shuffle and noise from `split(3 + e)`.
pub fn train_mlp_denoiser(
    pairs: &[(Vec<f64>, Vec<f64>)],
    schedule: &NoiseSchedule,
    config: &TrainConfig,
    stream: RngStream,
) -> Result<(MlpDenoiser, LossTrace)> {
    let Some((x0, y0)) = pairs.first() else {
        return Err(Error::invalid("training set is empty"));
    };
    let (x_dim, y_dim) = (x0.len(), y0.len());
    if pairs.iter().any(|(x, y)| x.len() != x_dim || y.len() != y_dim) {
        return Err(Error::invalid("training pairs have inconsistent lengths"));
    }
    if pairs.iter().any(|(x, y)| x.iter().chain(y).any(|v| !v.is_finite())) {
        return Err(Error::invalid("training pairs contain non-finite values"));
    }
    if config.batch_size == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::invalid("batch_size and learning_rate must be positive"));
    }
    if !(0.0..1.0).contains(&config.validation_fraction) {
        return Err(Error::invalid("validation_fraction must lie in [0, 1)"));
    }
    let mut model = MlpDenoiser::random(x_dim, y_dim, &config.hidden, config.t_emb, stream.split(0))?;

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    stream.split(1).rng().shuffle(&mut order);
    let n_val = ((pairs.len() as f64) * config.validation_fraction).floor() as usize;
    let n_val = n_val.min(pairs.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let val_batch = NoisedBatch::draw(pairs, val_idx, schedule, &mut stream.split(2).rng());

    let mut adam = Adam::new(&model);
    let mut trace = LossTrace::default();
    for epoch in 0..config.epochs {
        let mut rng = stream.split(3 + epoch as u64).rng();
        rng.shuffle(&mut train_idx);
        let mut total = 0.0;
        for chunk in train_idx.chunks(config.batch_size) {
            let batch = NoisedBatch::draw(pairs, chunk, schedule, &mut rng);
            let (x, y, e) = batch.views();
            let (loss, grad) = model.loss_and_gradient(&x, &y, &batch.steps, &e);
            if !(loss <= DIVERGENCE_LOSS) {
                return Err(Error::Diverged { epoch, loss });
            }
            adam.step(&mut model, &grad, config);
            total += loss * chunk.len() as f64;
        }
        trace.train.push(total / train_idx.len() as f64);
        if n_val > 0 {
            let (x, y, e) = val_batch.views();
            let loss = model.loss(&x, &y, &val_batch.steps, &e);
            if !(loss <= DIVERGENCE_LOSS) {
                return Err(Error::Diverged { epoch, loss });
            }
            trace.validation.push(loss);
        }
    }
    Ok((model, trace))
}
