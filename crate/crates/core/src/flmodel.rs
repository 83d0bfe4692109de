//! Local model, mini-batch training with hand-written gradients, data-quality
//! values and the aggregation rules.
//!
//! The model is a one-hidden-layer tanh network with a sigmoid output
//! (`hidden_dim = 0` degrades to logistic regression). Parameters are stored
//! flat as `[W1 (hidden × input, row-major), b1, W2 (hidden), b2]`, or
//! `[w (input), b]` without a hidden layer.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datagen::{Sample, N_FEATURES};
use crate::domain::{Layout, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub local_epochs_max: usize,
    pub batch_size: usize,
    pub fedprox_mu: f64,
    /// Ψ in the quality value.
    pub quality_psi: f64,
    /// Local training stops once train accuracy reaches this.
    pub quality_acc_target: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: N_FEATURES,
            hidden_dim: 8,
            learning_rate: 0.05,
            local_epochs_max: 20,
            batch_size: 16,
            fedprox_mu: 0.01,
            quality_psi: 1.0,
            quality_acc_target: 0.9,
        }
    }
}

impl ModelConfig {
    pub fn layout(&self) -> Layout {
        Layout { input_dim: self.input_dim, hidden_dim: self.hidden_dim, output_dim: 1 }
    }

    pub(crate) fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        if self.input_dim != N_FEATURES {
            v.push(("input_dim", format!("must equal the {N_FEATURES} record features")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            v.push(("learning_rate", format!("must be > 0, got {}", self.learning_rate)));
        }
        if self.local_epochs_max == 0 {
            v.push(("local_epochs_max", "must be >= 1".into()));
        }
        if self.batch_size == 0 {
            v.push(("batch_size", "must be >= 1".into()));
        }
        if !(self.fedprox_mu >= 0.0 && self.fedprox_mu.is_finite()) {
            v.push(("fedprox_mu", "must be >= 0".into()));
        }
        if !(self.quality_psi > 0.0 && self.quality_psi.is_finite()) {
            v.push(("quality_psi", "must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.quality_acc_target) {
            v.push(("quality_acc_target", "must lie in [0,1]".into()));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub client_id: usize,
    /// Quality value v_i (≤ 0, closer to zero is better).
    pub v_i: f64,
    /// Epochs run before reaching the accuracy target (capped).
    pub epsilon_i: usize,
    pub local_accuracy: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum TrainMode<'a> {
    Plain,
    /// Proximal term (μ/2)·‖w − anchor‖².
    FedProx { mu: f64, anchor: &'a ModelParams },
}

/// Random initial weights (biases zero), scaled by fan-in.
pub fn init_params(layout: Layout, rng: &mut impl Rng) -> ModelParams {
    let mut p = ModelParams::zeros(layout);
    let (i, h) = (layout.input_dim, layout.hidden_dim);
    if h == 0 {
        return p;
    }
    let w1 = Normal::new(0.0, 1.0 / (i as f64).sqrt()).unwrap();
    let w2 = Normal::new(0.0, 1.0 / (h as f64).sqrt()).unwrap();
    for v in &mut p.values[..i * h] {
        *v = w1.sample(rng);
    }
    for v in &mut p.values[i * h + h..i * h + 2 * h] {
        *v = w2.sample(rng);
    }
    p
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Output logit; fills `hidden` with the tanh activations.
fn forward(p: &ModelParams, x: &[f64], hidden: &mut Vec<f64>) -> f64 {
    let Layout { input_dim: i, hidden_dim: h, .. } = p.layout;
    let w = &p.values;
    hidden.clear();
    if h == 0 {
        return w[..i].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[i];
    }
    for k in 0..h {
        let row = &w[k * i..(k + 1) * i];
        let z = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[i * h + k];
        hidden.push(z.tanh());
    }
    let w2 = &w[i * h + h..i * h + 2 * h];
    w2.iter().zip(hidden.iter()).map(|(a, b)| a * b).sum::<f64>() + w[i * h + 2 * h]
}

pub fn predict_proba(p: &ModelParams, x: &[f64]) -> f64 {
    sigmoid(forward(p, x, &mut Vec::new()))
}

/// Mean binary cross-entropy over `batch`, plus the proximal term.
pub fn loss(p: &ModelParams, batch: &[Sample], mode: TrainMode<'_>) -> f64 {
    let mut hidden = Vec::new();
    let n = batch.len().max(1) as f64;
    let bce = batch
        .iter()
        .map(|s| {
            let z = forward(p, &s.x, &mut hidden);
            softplus(z) - f64::from(s.y) * z
        })
        .sum::<f64>()
        / n;
    match mode {
        TrainMode::Plain => bce,
        TrainMode::FedProx { mu, anchor } => bce + 0.5 * mu * p.distance(anchor).powi(2),
    }
}

/// Analytic gradient of [`loss`].
pub fn gradient(p: &ModelParams, batch: &[Sample], mode: TrainMode<'_>) -> Vec<f64> {
    let mut g = vec![0.0; p.len()];
    accumulate_bce_gradient(p, batch, &mut g);
    if let TrainMode::FedProx { mu, anchor } = mode {
        for ((gi, w), a) in g.iter_mut().zip(&p.values).zip(&anchor.values) {
            *gi += mu * (w - a);
        }
    }
    g
}

fn accumulate_bce_gradient(p: &ModelParams, batch: &[Sample], g: &mut [f64]) {
    let Layout { input_dim: i, hidden_dim: h, .. } = p.layout;
    let n = batch.len().max(1) as f64;
    let mut hidden = Vec::with_capacity(h);
    for s in batch {
        let z = forward(p, &s.x, &mut hidden);
        let dz = (sigmoid(z) - f64::from(s.y)) / n;
        if h == 0 {
            for (gj, xj) in g[..i].iter_mut().zip(&s.x) {
                *gj += dz * xj;
            }
            g[i] += dz;
            continue;
        }
        let w2_off = i * h + h;
        for k in 0..h {
            let hk = hidden[k];
            g[w2_off + k] += dz * hk;
            let dz1 = dz * p.values[w2_off + k] * (1.0 - hk * hk);
            for (gj, xj) in g[k * i..(k + 1) * i].iter_mut().zip(&s.x) {
                *gj += dz1 * xj;
            }
            g[i * h + k] += dz1;
        }
        g[w2_off + h] += dz;
    }
}

/// Fraction of correct predictions at threshold 0.5 (ties go to class 0).
pub fn evaluate(p: &ModelParams, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("cannot evaluate on an empty set".into()));
    }
    let mut hidden = Vec::new();
    let correct = samples
        .iter()
        .filter(|s| {
            let pred = u8::from(sigmoid(forward(p, &s.x, &mut hidden)) > 0.5);
            pred == s.y
        })
        .count();
    Ok(correct as f64 / samples.len() as f64)
}

/// v = Ψ / log(1/ε) with the natural log; ε = 1 maps to 0, the supremum.
pub fn quality_value(psi: f64, epsilon_i: f64) -> Result<f64> {
    if !(psi > 0.0) {
        return Err(Error::Domain(format!("psi must be > 0, got {psi}")));
    }
    if !(epsilon_i >= 1.0) {
        return Err(Error::Domain(format!("epsilon_i must be >= 1, got {epsilon_i}")));
    }
    if epsilon_i == 1.0 {
        return Ok(0.0);
    }
    Ok(psi / (1.0 / epsilon_i).ln())
}

/// Mini-batch gradient descent on cross-entropy, stopping once train accuracy
/// reaches the target. FedProx mode takes the proximal term as an exact
/// proximal step so large μ stays stable.
pub fn train_local(
    client_id: usize,
    params: &ModelParams,
    shard: &[Sample],
    cfg: &ModelConfig,
    mode: TrainMode<'_>,
    rng: &mut impl Rng,
) -> Result<(ModelParams, QualityReport, usize)> {
    if shard.is_empty() {
        return Err(Error::Domain(format!("client {client_id} has no training data")));
    }
    params.check()?;
    let mut w = params.clone();
    let lr = cfg.learning_rate;
    let mut order: Vec<usize> = (0..shard.len()).collect();
    let mut batch: Vec<Sample> = Vec::with_capacity(cfg.batch_size);
    let mut grad = vec![0.0; w.len()];
    let mut epochs = 0;
    let mut acc = 0.0;

    for _ in 0..cfg.local_epochs_max {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&k| shard[k].clone()));
            grad.iter_mut().for_each(|g| *g = 0.0);
            accumulate_bce_gradient(&w, &batch, &mut grad);
            match mode {
                TrainMode::Plain => {
                    for (wi, gi) in w.values.iter_mut().zip(&grad) {
                        *wi -= lr * gi;
                    }
                }
                TrainMode::FedProx { mu, anchor } => {
                    let shrink = 1.0 / (1.0 + lr * mu);
                    for ((wi, gi), ai) in w.values.iter_mut().zip(&grad).zip(&anchor.values) {
                        *wi = (*wi - lr * gi + lr * mu * ai) * shrink;
                    }
                }
            }
        }
        epochs += 1;
        let l = loss(&w, shard, TrainMode::Plain);
        if !l.is_finite() || w.values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "client {client_id}: non-finite loss after epoch {epochs} (learning rate {lr} too large?)"
            )));
        }
        acc = evaluate(&w, shard)?;
        if acc >= cfg.quality_acc_target {
            break;
        }
    }

    let v_i = quality_value(cfg.quality_psi, epochs as f64)?;
    let report = QualityReport { client_id, v_i, epsilon_i: epochs, local_accuracy: acc };
    Ok((w, report, epochs))
}

fn check_layouts<'a>(mut it: impl Iterator<Item = &'a ModelParams>) -> Result<Layout> {
    let first = it.next().ok_or_else(|| Error::Domain("nothing to aggregate".into()))?;
    for p in it {
        if p.layout != first.layout || p.len() != first.len() {
            return Err(Error::Layout(format!("{:?} vs {:?}", p.layout, first.layout)));
        }
    }
    Ok(first.layout)
}

/// Min-max normalized quality weights q_i over a batch of values; all ones
/// when the values coincide.
pub fn quality_weights(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![1.0; values.len()]
    }
}

/// Quality-aware aggregation: w_new = Σ q_i·w_i / k.
pub fn aggregate_quality(updates: &[(ModelParams, f64)]) -> Result<ModelParams> {
    let layout = check_layouts(updates.iter().map(|(p, _)| p))?;
    let q = quality_weights(&updates.iter().map(|(_, v)| *v).collect::<Vec<_>>());
    let k = updates.len() as f64;
    let mut out = ModelParams::zeros(layout);
    for ((p, _), qi) in updates.iter().zip(&q) {
        for (o, w) in out.values.iter_mut().zip(&p.values) {
            *o += qi * w;
        }
    }
    out.values.iter_mut().for_each(|o| *o /= k);
    Ok(out)
}

/// Sample-count weighted mean; all-zero counts fall back to the plain mean.
pub fn aggregate_fedavg(updates: &[(ModelParams, usize)]) -> Result<ModelParams> {
    let layout = check_layouts(updates.iter().map(|(p, _)| p))?;
    let total: usize = updates.iter().map(|(_, n)| n).sum();
    let weights: Vec<f64> = if total == 0 {
        vec![1.0 / updates.len() as f64; updates.len()]
    } else {
        updates.iter().map(|(_, n)| *n as f64 / total as f64).collect()
    };
    let mut out = ModelParams::zeros(layout);
    for ((p, _), wt) in updates.iter().zip(&weights) {
        for (o, w) in out.values.iter_mut().zip(&p.values) {
            *o += wt * w;
        }
    }
    Ok(out)
}
