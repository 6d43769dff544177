//! Neural additive surrogate: one fully connected subnetwork per effect term,
//! summed. Each subnetwork ends in a bias-free linear output layer, so its
//! contribution on the sample is exactly `U_theta w_theta` with `U_theta` the
//! last hidden layer's activations.
//!
//! Hidden layers use rectifiers except the last, which is linear. Weights are
//! He-uniform (`U(-sqrt(6/fan_in), sqrt(6/fan_in))`) on rectifier layers and
//! LeCun-uniform (`sqrt(3/fan_in)`) on the linear layer and the output;
//! biases are `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`. Dropout is inverted
//! (survivors are scaled by `1/(1-p)` while training).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::SampleSet;
use crate::effects::EffectSet;
use crate::error::{Error, Result};
use crate::linalg::{gemm, Op};
use crate::math::{r_squared, sqrt};
use crate::ortho::{BasisFunctions, TermBasis};
use crate::rng::{chacha, streams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubNetworkConfig {
    pub hidden_widths: Vec<usize>,
    /// One rate per hidden layer, applied to that layer's output.
    pub dropout: Vec<f64>,
}

impl Default for SubNetworkConfig {
    fn default() -> Self {
        Self::with_widths(&[256, 128, 64, 32, 8])
    }
}

impl SubNetworkConfig {
    /// Given widths with 20% dropout on every hidden layer except the first
    /// and the last.
    pub fn with_widths(widths: &[usize]) -> Self {
        let l = widths.len();
        let dropout = (0..l).map(|i| if i > 0 && i + 1 < l { 0.2 } else { 0.0 }).collect();
        SubNetworkConfig {
            hidden_widths: widths.to_vec(),
            dropout,
        }
    }

    pub fn without_dropout(mut self) -> Self {
        self.dropout.iter_mut().for_each(|p| *p = 0.0);
        self
    }

    /// Width `b_theta` of the last hidden layer.
    pub fn penultimate_width(&self) -> usize {
        *self.hidden_widths.last().unwrap_or(&0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_widths.is_empty() || self.hidden_widths.contains(&0) {
            return Err(Error::invalid("hidden widths must be non-empty and positive"));
        }
        if self.dropout.len() != self.hidden_widths.len() {
            return Err(Error::DimensionMismatch {
                context: "dropout rates",
                expected: self.hidden_widths.len(),
                got: self.dropout.len(),
            });
        }
        if self.dropout.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(Error::invalid("dropout rates must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Training stops once the inference-mode R^2 reaches this.
    pub r2_target: f64,
    /// Epochs between R^2 checks.
    pub check_interval: usize,
    /// Use the whole sample as one batch in natural order.
    pub full_batch: bool,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 128,
            max_epochs: 2000,
            r2_target: 0.999,
            check_interval: 5,
            full_batch: false,
            lr_decay: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.r2_target > 0.0 && self.r2_target <= 1.0) {
            return Err(Error::invalid("r2 target must lie in (0, 1]"));
        }
        if self.batch_size == 0 || self.check_interval == 0 {
            return Err(Error::invalid("batch size and check interval must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::invalid("learning-rate decay must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Inference-mode R^2 on the training sample; `None` for a constant target.
    pub final_r2: Option<f64>,
    pub epochs: usize,
    /// Mean training-mode loss per epoch.
    pub loss_curve: Vec<f64>,
    pub reached_target: bool,
    pub zero_target_variance: bool,
}

/// Dense layer offsets into a subnetwork's flat parameter vector.
#[derive(Clone, Copy, Debug)]
struct Layer {
    inputs: usize,
    outputs: usize,
    w: usize,
    b: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubNetwork {
    input_dim: usize,
    widths: Vec<usize>,
    dropout: Vec<f64>,
    /// Per hidden layer: row-major `inputs x outputs` weights, then biases;
    /// finally the output weights `w_theta` (length `b_theta`).
    params: Vec<f64>,
}

/// Activations kept for backpropagation.
struct Trace {
    /// `outs[0]` is the input; `outs[l + 1]` is layer `l`'s output after dropout.
    outs: Vec<Vec<f64>>,
    /// Dropout scale per unit (0 or `1/(1-p)`), when dropout was applied.
    masks: Vec<Option<Vec<f64>>>,
}

impl SubNetwork {
    fn new(input_dim: usize, config: &SubNetworkConfig, rng: &mut impl Rng) -> Self {
        let mut net = SubNetwork {
            input_dim,
            widths: config.hidden_widths.clone(),
            dropout: config.dropout.clone(),
            params: Vec::new(),
        };
        net.params = vec![0.0; net.param_count()];
        let last = net.widths.len() - 1;
        for (i, layer) in net.layers().into_iter().enumerate() {
            let fan_in = layer.inputs as f64;
            let limit = if i < last {
                sqrt(6.0 / fan_in)
            } else {
                sqrt(3.0 / fan_in)
            };
            for p in &mut net.params[layer.w..layer.w + layer.inputs * layer.outputs] {
                *p = rng.random_range(-limit..limit);
            }
            let blimit = 1.0 / sqrt(fan_in);
            for p in &mut net.params[layer.b..layer.b + layer.outputs] {
                *p = rng.random_range(-blimit..blimit);
            }
        }
        let b = net.penultimate_width();
        let limit = sqrt(3.0 / b as f64);
        let off = net.output_offset();
        for p in &mut net.params[off..off + b] {
            *p = rng.random_range(-limit..limit);
        }
        net
    }

    fn layers(&self) -> Vec<Layer> {
        let mut out = Vec::with_capacity(self.widths.len());
        let mut inputs = self.input_dim;
        let mut off = 0;
        for &w in &self.widths {
            out.push(Layer {
                inputs,
                outputs: w,
                w: off,
                b: off + inputs * w,
            });
            off += inputs * w + w;
            inputs = w;
        }
        out
    }

    fn output_offset(&self) -> usize {
        self.params.len() - self.penultimate_width()
    }

    fn param_count(&self) -> usize {
        let mut inputs = self.input_dim;
        let mut total = 0;
        for &w in &self.widths {
            total += inputs * w + w;
            inputs = w;
        }
        total + inputs
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn penultimate_width(&self) -> usize {
        *self.widths.last().expect("validated widths")
    }

    /// Output weights `w_theta`.
    pub fn output_weights(&self) -> &[f64] {
        &self.params[self.output_offset()..]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Runs the hidden stack on a row-major `batch x input_dim` block and
    /// returns the last hidden activations (`batch x b`).
    fn hidden(
        &self,
        input: &[f64],
        batch: usize,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
        mut trace: Option<&mut Trace>,
    ) -> Vec<f64> {
        let layers = self.layers();
        let last = layers.len() - 1;
        let mut h = input.to_vec();
        if let Some(t) = trace.as_deref_mut() {
            t.outs.clear();
            t.masks.clear();
            t.outs.push(h.clone());
        }
        for (i, layer) in layers.iter().enumerate() {
            let mut z = vec![0.0; batch * layer.outputs];
            let bias = &self.params[layer.b..layer.b + layer.outputs];
            for row in z.chunks_exact_mut(layer.outputs) {
                row.copy_from_slice(bias);
            }
            gemm(
                1.0,
                &h,
                batch,
                layer.inputs,
                Op::N,
                &self.params[layer.w..layer.w + layer.inputs * layer.outputs],
                layer.inputs,
                layer.outputs,
                Op::N,
                1.0,
                &mut z,
            );
            if i < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            let p = self.dropout[i];
            let mut mask = None;
            if p > 0.0 {
                if let Some(rng) = dropout_rng.as_deref_mut() {
                    let keep = 1.0 / (1.0 - p);
                    let threshold = (p * 4_294_967_296.0) as u64;
                    let m: Vec<f64> = (0..z.len())
                        .map(|_| if (rng.next_u32() as u64) < threshold { 0.0 } else { keep })
                        .collect();
                    z.iter_mut().zip(&m).for_each(|(v, s)| *v *= s);
                    mask = Some(m);
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                t.outs.push(z.clone());
                t.masks.push(mask);
            }
            h = z;
        }
        h
    }

    fn output(&self, hidden: &[f64], batch: usize) -> Vec<f64> {
        let b = self.penultimate_width();
        let w = self.output_weights();
        (0..batch)
            .map(|r| hidden[r * b..(r + 1) * b].iter().zip(w).map(|(a, c)| a * c).sum())
            .collect()
    }

    /// Accumulates into `grad` the gradient of `sum_r g[r] * out[r]`.
    fn backward(&self, trace: &Trace, g: &[f64], batch: usize, grad: &mut [f64]) {
        let layers = self.layers();
        let last = layers.len() - 1;
        let b = self.penultimate_width();
        let out_off = self.output_offset();
        let top = &trace.outs[layers.len()];
        // d out / d w_out
        for (r, gr) in g.iter().enumerate() {
            for k in 0..b {
                grad[out_off + k] += gr * top[r * b + k];
            }
        }
        // Upstream gradient at the last hidden output.
        let w_out = self.output_weights();
        let mut delta: Vec<f64> = (0..batch * b).map(|i| g[i / b] * w_out[i % b]).collect();
        for (i, layer) in layers.iter().enumerate().rev() {
            let out = &trace.outs[i + 1];
            if let Some(mask) = &trace.masks[i] {
                delta.iter_mut().zip(mask).for_each(|(d, s)| *d *= s);
            }
            if i < last {
                delta.iter_mut().zip(out).for_each(|(d, o)| {
                    if *o <= 0.0 {
                        *d = 0.0
                    }
                });
            }
            let input = &trace.outs[i];
            gemm(
                1.0,
                input,
                batch,
                layer.inputs,
                Op::T,
                &delta,
                batch,
                layer.outputs,
                Op::N,
                1.0,
                &mut grad[layer.w..layer.w + layer.inputs * layer.outputs],
            );
            let gb = &mut grad[layer.b..layer.b + layer.outputs];
            for row in delta.chunks_exact(layer.outputs) {
                gb.iter_mut().zip(row).for_each(|(a, d)| *a += d);
            }
            if i > 0 {
                let mut prev = vec![0.0; batch * layer.inputs];
                gemm(
                    1.0,
                    &delta,
                    batch,
                    layer.outputs,
                    Op::N,
                    &self.params[layer.w..layer.w + layer.inputs * layer.outputs],
                    layer.inputs,
                    layer.outputs,
                    Op::T,
                    0.0,
                    &mut prev,
                );
                delta = prev;
            }
        }
    }
}

/// Whether forward passes sample dropout masks.
pub enum Mode<'a> {
    Inference,
    Training(&'a mut ChaCha8Rng),
}

/// Output of [`NamModel::forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub surrogate: Vec<f64>,
    /// `per_term[t][i]`: contribution of term `t` at row `i`.
    pub per_term: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamModel {
    effect_set: EffectSet,
    config: SubNetworkConfig,
    seed: u64,
    subnets: Vec<SubNetwork>,
}

impl NamModel {
    pub fn init(effect_set: &EffectSet, config: &SubNetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = chacha(seed, streams::INIT);
        let subnets = effect_set
            .terms()
            .iter()
            .map(|t| SubNetwork::new(t.level(), config, &mut rng))
            .collect();
        Ok(NamModel {
            effect_set: effect_set.clone(),
            config: config.clone(),
            seed,
            subnets,
        })
    }

    pub fn effect_set(&self) -> &EffectSet {
        &self.effect_set
    }

    pub fn config(&self) -> &SubNetworkConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn subnets(&self) -> &[SubNetwork] {
        &self.subnets
    }

    pub fn subnets_mut(&mut self) -> &mut [SubNetwork] {
        &mut self.subnets
    }

    /// Width of the last hidden layer of term `slot`; the intercept has width 1.
    pub fn slot_width(&self, slot: usize) -> usize {
        if slot == 0 {
            1
        } else {
            self.subnets[slot - 1].penultimate_width()
        }
    }

    /// Largest lower-order basis width the orthogonalization will need.
    pub fn max_basis_width(&self) -> usize {
        required_basis_width(&self.effect_set, |slot| self.slot_width(slot))
    }

    fn check_dims(&self, samples: &SampleSet) -> Result<()> {
        if samples.d() != self.effect_set.d() {
            return Err(Error::DimensionMismatch {
                context: "sample feature count",
                expected: self.effect_set.d(),
                got: samples.d(),
            });
        }
        Ok(())
    }

    /// Per-term input blocks, row-major `n x |theta|`.
    fn term_inputs(&self, samples: &SampleSet) -> Vec<Vec<f64>> {
        let mut tmp = Vec::new();
        self.effect_set
            .terms()
            .iter()
            .map(|t| {
                let mut block = Vec::with_capacity(samples.n() * t.level());
                for i in 0..samples.n() {
                    t.gather(samples.row(i), &mut tmp);
                    block.extend_from_slice(&tmp);
                }
                block
            })
            .collect()
    }

    pub fn forward(&self, samples: &SampleSet, mut mode: Mode<'_>) -> Result<Forward> {
        self.check_dims(samples)?;
        let n = samples.n();
        let inputs = self.term_inputs(samples);
        let mut per_term = Vec::with_capacity(self.subnets.len());
        for (net, input) in self.subnets.iter().zip(&inputs) {
            let rng = match &mut mode {
                Mode::Inference => None,
                Mode::Training(r) => Some(&mut **r),
            };
            let h = net.hidden(input, n, rng, None);
            per_term.push(net.output(&h, n));
        }
        let mut surrogate = vec![0.0; n];
        for t in &per_term {
            surrogate.iter_mut().zip(t).for_each(|(s, v)| *s += v);
        }
        Ok(Forward { surrogate, per_term })
    }

    /// Inference-mode surrogate values.
    pub fn predict(&self, samples: &SampleSet) -> Result<Vec<f64>> {
        Ok(self.forward(samples, Mode::Inference)?.surrogate)
    }

    /// Last hidden activations of term `slot` on the sample (dropout off).
    /// Slot 0 is the intercept, a single column of ones.
    pub fn penultimate_matrix(&self, samples: &SampleSet, slot: usize) -> Result<TermBasis> {
        self.check_dims(samples)?;
        let n = samples.n();
        if slot == 0 {
            return Ok(TermBasis::ones(n));
        }
        if slot > self.subnets.len() {
            return Err(Error::UnknownEffect(format!("slot {slot}")));
        }
        let term = &self.effect_set.terms()[slot - 1];
        let mut tmp = Vec::new();
        let mut input = Vec::with_capacity(n * term.level());
        for i in 0..n {
            term.gather(samples.row(i), &mut tmp);
            input.extend_from_slice(&tmp);
        }
        let net = &self.subnets[slot - 1];
        let h = net.hidden(&input, n, None, None);
        let b = net.penultimate_width();
        let columns = (0..b).map(|k| (0..n).map(|i| h[i * b + k]).collect()).collect();
        Ok(TermBasis::new(columns))
    }

    /// Mean squared error of the inference-mode surrogate and its gradient
    /// with respect to every subnetwork's parameters.
    pub fn loss_and_gradient(&self, samples: &SampleSet) -> Result<(f64, Vec<Vec<f64>>)> {
        self.check_dims(samples)?;
        let n = samples.n();
        let inputs = self.term_inputs(samples);
        let mut traces = Vec::with_capacity(self.subnets.len());
        let mut pred = vec![0.0; n];
        for (net, input) in self.subnets.iter().zip(&inputs) {
            let mut trace = Trace {
                outs: Vec::new(),
                masks: Vec::new(),
            };
            let h = net.hidden(input, n, None, Some(&mut trace));
            pred.iter_mut().zip(net.output(&h, n)).for_each(|(p, o)| *p += o);
            traces.push(trace);
        }
        let y = samples.predictions();
        let loss = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n as f64;
        let g: Vec<f64> = pred.iter().zip(y).map(|(p, t)| 2.0 * (p - t) / n as f64).collect();
        let grads = self
            .subnets
            .iter()
            .zip(&traces)
            .map(|(net, trace)| {
                let mut grad = vec![0.0; net.params.len()];
                net.backward(trace, &g, n, &mut grad);
                grad
            })
            .collect();
        Ok((loss, grads))
    }

    /// Trains all subnetworks jointly on the mean squared error with Adam.
    ///
    /// There is no validation split and no early stopping beyond the R^2
    /// target: the surrogate is meant to interpolate the sample.
    pub fn fit(&mut self, samples: &SampleSet, config: &TrainConfig) -> Result<FitReport> {
        config.validate()?;
        self.check_dims(samples)?;
        let n = samples.n();
        let need = self.max_basis_width();
        if n < need {
            return Err(Error::Invalid(format!(
                "n = {n} is smaller than the widest lower-order basis B = {need}"
            )));
        }
        let y = samples.predictions();
        let zero_var = r_squared(y, y).is_none();
        let inputs = self.term_inputs(samples);
        let dims: Vec<usize> = self.effect_set.terms().iter().map(|t| t.level()).collect();

        let mut adam: Vec<(Vec<f64>, Vec<f64>)> = self
            .subnets
            .iter()
            .map(|s| (vec![0.0; s.params.len()], vec![0.0; s.params.len()]))
            .collect();
        let mut grads: Vec<Vec<f64>> = self.subnets.iter().map(|s| vec![0.0; s.params.len()]).collect();
        let mut traces: Vec<Trace> = self
            .subnets
            .iter()
            .map(|_| Trace {
                outs: Vec::new(),
                masks: Vec::new(),
            })
            .collect();

        let mut rng = crate::rng::chacha8(config.seed, streams::TRAIN);
        let mut order: Vec<usize> = (0..n).collect();
        let batch_size = if config.full_batch { n } else { config.batch_size.min(n) };
        let mut step: i32 = 0;
        let mut lr = config.learning_rate;
        let mut loss_curve = Vec::new();
        let mut final_r2 = None;
        let mut reached = false;
        let mut epochs = 0;
        let mut batch_inputs: Vec<Vec<f64>> = dims.iter().map(|_| Vec::new()).collect();

        for epoch in 0..config.max_epochs {
            if !config.full_batch {
                order.shuffle(&mut rng);
            }
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(batch_size) {
                let bsz = chunk.len();
                let mut pred = vec![0.0; bsz];
                for t in 0..self.subnets.len() {
                    let dim = dims[t];
                    let buf = &mut batch_inputs[t];
                    buf.clear();
                    for &i in chunk {
                        buf.extend_from_slice(&inputs[t][i * dim..(i + 1) * dim]);
                    }
                    let net = &self.subnets[t];
                    let h = net.hidden(buf, bsz, Some(&mut rng), Some(&mut traces[t]));
                    pred.iter_mut().zip(net.output(&h, bsz)).for_each(|(p, o)| *p += o);
                }
                let mut loss = 0.0;
                let g: Vec<f64> = chunk
                    .iter()
                    .zip(&pred)
                    .map(|(&i, p)| {
                        let r = p - y[i];
                        loss += r * r;
                        2.0 * r / bsz as f64
                    })
                    .collect();
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "training loss diverged in epoch {}",
                        epoch + 1
                    )));
                }
                epoch_loss += loss;

                step += 1;
                let bc1 = 1.0 - libm::pow(config.beta1, step as f64);
                let bc2 = 1.0 - libm::pow(config.beta2, step as f64);
                for t in 0..self.subnets.len() {
                    let grad = &mut grads[t];
                    grad.iter_mut().for_each(|v| *v = 0.0);
                    self.subnets[t].backward(&traces[t], &g, bsz, grad);
                    let (m, v) = &mut adam[t];
                    let params = &mut self.subnets[t].params;
                    for k in 0..params.len() {
                        let gk = grad[k];
                        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * gk;
                        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * gk * gk;
                        let mhat = m[k] / bc1;
                        let vhat = v[k] / bc2;
                        params[k] -= lr * mhat / (sqrt(vhat) + config.epsilon);
                    }
                }
            }
            loss_curve.push(epoch_loss / n as f64);
            lr *= config.lr_decay;
            epochs = epoch + 1;

            let last = epoch + 1 == config.max_epochs;
            if (epoch + 1) % config.check_interval == 0 || last {
                let fitted = self.predict(samples)?;
                if fitted.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("surrogate output after epoch {}", epoch + 1)));
                }
                final_r2 = r_squared(y, &fitted);
                let done = match final_r2 {
                    Some(r2) => r2 >= config.r2_target,
                    None => {
                        let mse = fitted.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
                        mse <= 1e-12 * (1.0 + y[0] * y[0])
                    }
                };
                if done {
                    reached = true;
                    break;
                }
            }
        }
        if config.max_epochs == 0 {
            final_r2 = r_squared(y, &self.predict(samples)?);
        }

        Ok(FitReport {
            final_r2,
            epochs,
            loss_curve,
            reached_target: reached,
            zero_target_variance: zero_var,
        })
    }
}

/// `max_k (sum of widths of all slots below level k)` over processed levels.
pub fn required_basis_width(effect_set: &EffectSet, width: impl Fn(usize) -> usize) -> usize {
    let mut best = 0;
    for k in effect_set.levels() {
        if k < 2 {
            continue;
        }
        let (_, lower, _) = effect_set.level_partition_slots(k);
        best = best.max(lower.iter().map(|&s| width(s)).sum());
    }
    best
}

impl BasisFunctions for NamModel {
    fn width(&self, slot: usize) -> usize {
        self.slot_width(slot)
    }

    fn evaluate(&self, slot: usize, row: &[f64], out: &mut [f64]) {
        if slot == 0 {
            out[0] = 1.0;
            return;
        }
        let term = &self.effect_set.terms()[slot - 1];
        let mut input = Vec::new();
        term.gather(row, &mut input);
        let h = self.subnets[slot - 1].hidden(&input, 1, None, None);
        out.copy_from_slice(&h);
    }
}
