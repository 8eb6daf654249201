//! Binary posterior model: a small rectifier MLP with a logistic output,
//! trained by mini-batch SGD on binary cross-entropy.
//!
//! Mixture rows are labeled 1 and component rows 0, so the trained model
//! estimates `P(mu = F | X = x)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MpeError, Result};
use crate::sample::Sample;
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            hidden_units: 50,
            epochs: 150,
            batch_size: 50,
            learning_rate: 0.01,
            momentum: 0.0,
            weight_decay: 1e-5,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(MpeError::InvalidArgument(format!("train config: {msg}")));
        if self.hidden_layers == 0 || self.hidden_units == 0 || self.epochs == 0 || self.batch_size == 0 {
            return bad("layer, unit, epoch and batch counts must be >= 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) || self.weight_decay < 0.0 {
            return bad("momentum must lie in [0, 1) and weight decay must be non-negative");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return bad("validation fraction must lie in (0, 0.5]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    /// `inputs x outputs`
    w: Array2<f64>,
    b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Network {
    layers: Vec<Dense>,
}

struct Gradients {
    w: Vec<Array2<f64>>,
    b: Vec<Array1<f64>>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z)) - y z`, stable for large `|z|`.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

impl Network {
    fn he_uniform<R: Rng>(dims: &[usize], rng: &mut R) -> Self {
        let layers = dims
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = (6.0 / fan_in as f64).sqrt();
                Dense {
                    w: Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..bound)),
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        Network { layers }
    }

    fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    /// Output logits, one per row.
    fn logits(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            a = a.dot(&layer.w) + &layer.b;
            if i < last {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a.column(0).to_owned()
    }

    fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn squared_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.w.iter().chain(l.b.iter()).map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// Mean cross-entropy plus `weight_decay / 2 * ||theta||^2`.
    fn loss(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, weight_decay: f64) -> f64 {
        let z = self.logits(x);
        let data: f64 = z.iter().zip(y).map(|(&z, &y)| bce_with_logit(z, y)).sum::<f64>() / y.len() as f64;
        data + 0.5 * weight_decay * self.squared_norm()
    }

    /// Backpropagated gradient of [`Network::loss`].
    fn gradients(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, weight_decay: f64) -> Gradients {
        let n = x.nrows() as f64;
        let last = self.layers.len() - 1;
        // activations[0] is the input; pre-activations are kept for the rectifier mask
        let mut activations = vec![x.to_owned()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = activations[i].dot(&layer.w) + &layer.b;
            let a = if i < last { z.mapv(|v| v.max(0.0)) } else { z.clone() };
            pre.push(z);
            activations.push(a);
        }

        let mut delta = Array2::zeros((x.nrows(), 1));
        Zip::from(delta.column_mut(0))
            .and(pre[last].column(0))
            .and(y)
            .for_each(|d, &z, &y| *d = (sigmoid(z) - y) / n);

        let mut gw = vec![Array2::zeros((0, 0)); self.layers.len()];
        let mut gb = vec![Array1::zeros(0); self.layers.len()];
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            gw[i] = activations[i].t().dot(&delta) + &(&layer.w * weight_decay);
            gb[i] = delta.sum_axis(Axis(0)) + &(&layer.b * weight_decay);
            if i > 0 {
                let mut back = delta.dot(&layer.w.t());
                Zip::from(&mut back).and(&pre[i - 1]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        Gradients { w: gw, b: gb }
    }

    fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    /// The `k`-th parameter in [`Network::parameters_mut`] order.
    fn parameter_mut(&mut self, mut k: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if k < layer.w.len() {
                let cols = layer.w.ncols();
                return &mut layer.w[[k / cols, k % cols]];
            }
            k -= layer.w.len();
            if k < layer.b.len() {
                return &mut layer.b[k];
            }
            k -= layer.b.len();
        }
        panic!("parameter index out of range")
    }
}

impl Gradients {
    fn flatten(&self) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.b)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

/// Per-epoch training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
}

/// A trained scorer returning `P(mu = F | X = x)`.
///
/// The weights are those of the epoch with the best validation accuracy
/// (earliest epoch on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorModel {
    network: Network,
    history: Vec<EpochRecord>,
    best_epoch: usize,
}

/// One layer of a [`WeightDump`]. `weights` is row-major with shape `[inputs, outputs]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDump {
    pub shape: [usize; 2],
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Layer-major JSON representation of a model's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDump {
    pub layers: Vec<LayerDump>,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

impl PosteriorModel {
    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    /// Zero-based index into [`PosteriorModel::history`] of the returned snapshot.
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn logits(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if points.ncols() != self.input_dim() {
            return Err(MpeError::DimensionMismatch {
                expected: self.input_dim(),
                found: points.ncols(),
            });
        }
        Ok(self.network.logits(points).to_vec())
    }

    /// Posterior probability of the mixture class for each row.
    pub fn predict_posterior(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.logits(points)?.into_iter().map(sigmoid).collect())
    }

    pub fn to_dump(&self) -> WeightDump {
        WeightDump {
            layers: self
                .network
                .layers
                .iter()
                .map(|l| LayerDump {
                    shape: [l.w.nrows(), l.w.ncols()],
                    weights: l.w.iter().copied().collect(),
                    bias: l.b.to_vec(),
                })
                .collect(),
            best_epoch: self.best_epoch,
            history: self.history.clone(),
        }
    }

    pub fn from_dump(dump: &WeightDump) -> Result<Self> {
        let mut layers = Vec::with_capacity(dump.layers.len());
        let mut prev: Option<usize> = None;
        for l in &dump.layers {
            let [inputs, outputs] = l.shape;
            if prev.is_some_and(|p| p != inputs) || l.bias.len() != outputs {
                return Err(MpeError::InvalidArgument(
                    "inconsistent layer shapes in weight dump".into(),
                ));
            }
            let w = Array2::from_shape_vec((inputs, outputs), l.weights.clone())
                .map_err(|e| MpeError::InvalidArgument(format!("weight dump: {e}")))?;
            layers.push(Dense {
                w,
                b: Array1::from(l.bias.clone()),
            });
            prev = Some(outputs);
        }
        if layers.is_empty() || prev != Some(1) {
            return Err(MpeError::InvalidArgument(
                "weight dump must end in a single output".into(),
            ));
        }
        Ok(Self {
            network: Network { layers },
            history: dump.history.clone(),
            best_epoch: dump.best_epoch,
        })
    }
}

fn accuracy(net: &Network, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let z = net.logits(x);
    let hits = z.iter().zip(y).filter(|(&z, &y)| (z > 0.0) == (y > 0.5)).count();
    hits as f64 / y.len() as f64
}

fn layer_dims(input: usize, cfg: &TrainConfig) -> Vec<usize> {
    let mut dims = vec![input];
    dims.extend(std::iter::repeat_n(cfg.hidden_units, cfg.hidden_layers));
    dims.push(1);
    dims
}

/// Trains the posterior model with mixture rows as class 1 and component rows as class 0.
pub fn fit(x_f: &Sample, x_h: &Sample, cfg: &TrainConfig) -> Result<PosteriorModel> {
    cfg.validate()?;
    if x_f.dim() != x_h.dim() {
        return Err(MpeError::DimensionMismatch {
            expected: x_f.dim(),
            found: x_h.dim(),
        });
    }
    let dim = x_f.dim();
    let positives = x_f.len();
    let x = ndarray::concatenate(Axis(0), &[x_f.points(), x_h.points()]).expect("dimensions checked");
    let y: Array1<f64> = (0..x.nrows()).map(|i| if i < positives { 1.0 } else { 0.0 }).collect();

    // stratified split: the tail of a seeded shuffle of each class is held out
    let mut split_rng = rng_from_seed(derive_seed(cfg.seed, 1));
    let mut train_rows = Vec::new();
    let mut val_rows = Vec::new();
    for class in [0..positives, positives..x.nrows()] {
        let mut rows: Vec<usize> = class.collect();
        rows.shuffle(&mut split_rng);
        let n_val = ((rows.len() as f64) * cfg.validation_fraction).round().max(1.0) as usize;
        let n_train = rows.len().saturating_sub(n_val);
        if n_train < 2 {
            return Err(MpeError::TooFewRows(format!(
                "class with {} rows leaves {} training rows after the validation split",
                rows.len(),
                n_train
            )));
        }
        val_rows.extend_from_slice(&rows[n_train..]);
        train_rows.extend_from_slice(&rows[..n_train]);
    }
    let x_train = x.select(Axis(0), &train_rows);
    let y_train = y.select(Axis(0), &train_rows);
    let x_val = x.select(Axis(0), &val_rows);
    let y_val = y.select(Axis(0), &val_rows);

    let mut init_rng = rng_from_seed(derive_seed(cfg.seed, 0));
    let mut shuffle_rng = rng_from_seed(derive_seed(cfg.seed, 2));
    let mut net = Network::he_uniform(&layer_dims(dim, cfg), &mut init_rng);
    let mut velocity: Vec<f64> = vec![0.0; net.parameter_count()];

    let mut order: Vec<usize> = (0..x_train.nrows()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Network)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch_x = x_train.select(Axis(0), chunk);
            let batch_y = y_train.select(Axis(0), chunk);
            let grads = net
                .gradients(batch_x.view(), batch_y.view(), cfg.weight_decay)
                .flatten();
            for ((p, v), g) in net.parameters_mut().zip(velocity.iter_mut()).zip(&grads) {
                *v = cfg.momentum * *v + g;
                *p -= cfg.learning_rate * *v;
            }
        }
        let train_loss = net.loss(x_train.view(), y_train.view(), 0.0);
        let train_accuracy = accuracy(&net, x_train.view(), y_train.view());
        let validation_accuracy = accuracy(&net, x_val.view(), y_val.view());
        history.push(EpochRecord {
            epoch,
            train_loss,
            train_accuracy,
            validation_accuracy,
        });
        if best.as_ref().is_none_or(|(acc, _, _)| validation_accuracy > *acc) {
            best = Some((validation_accuracy, epoch, net.clone()));
        }
    }
    let (_, best_epoch, network) = best.expect("at least one epoch");
    Ok(PosteriorModel {
        network,
        history,
        best_epoch,
    })
}

/// Largest relative disagreement between backpropagation and central finite
/// differences (step `1e-5`) on a freshly initialized network, over every
/// parameter: `|g_bp - g_fd| / max(1e-8, |g_bp| + |g_fd|)`.
pub fn gradient_check(cfg: &TrainConfig, probe_x: ArrayView2<'_, f64>, probe_y: &[f64]) -> Result<f64> {
    cfg.validate()?;
    if probe_x.nrows() == 0 || probe_x.nrows() > 8 || probe_y.len() != probe_x.nrows() {
        return Err(MpeError::InvalidArgument(
            "gradient check needs 1 to 8 probe rows with matching labels".into(),
        ));
    }
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 0));
    let net = Network::he_uniform(&layer_dims(probe_x.ncols(), cfg), &mut rng);
    Ok(max_relative_gradient_error(
        &net,
        probe_x,
        ArrayView1::from(probe_y),
        cfg.weight_decay,
    ))
}

fn max_relative_gradient_error(
    net: &Network,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    weight_decay: f64,
) -> f64 {
    const STEP: f64 = 1e-5;
    let analytic = net.gradients(x, y, weight_decay).flatten();
    let mut probe = net.clone();
    let mut worst = 0.0_f64;
    for (k, g_bp) in analytic.iter().enumerate() {
        let original = *probe.parameter_mut(k);
        *probe.parameter_mut(k) = original + STEP;
        let up = probe.loss(x, y, weight_decay);
        *probe.parameter_mut(k) = original - STEP;
        let down = probe.loss(x, y, weight_decay);
        *probe.parameter_mut(k) = original;
        let g_fd = (up - down) / (2.0 * STEP);
        let rel = (g_bp - g_fd).abs() / (g_bp.abs() + g_fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}
