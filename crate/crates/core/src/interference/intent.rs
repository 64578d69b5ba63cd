//! Attack-intent predictor: a small ReLU MLP trained with Adam on a
//! negative-cosine-similarity loss.

use super::EPS;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

pub const INPUT_DIM: usize = 21;
pub const HIDDEN_DIMS: [usize; 2] = [128, 64];
pub const OUTPUT_DIM: usize = 2;

#[derive(Debug, Error)]
pub enum IntentError {
    #[error("invalid network shape: {0}")]
    Shape(String),
    #[error("weights json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("training data line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("training data is empty")]
    EmptyData,
    #[error("learning rate must be positive and finite, got {0}")]
    LearningRate(f64),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
}

/// Fully connected layer; `weights` is row-major `[out][in]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `[out, in]`
    pub shape: [usize; 2],
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { shape: [outputs, inputs], weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn outputs(&self) -> usize {
        self.shape[0]
    }

    fn inputs(&self) -> usize {
        self.shape[1]
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let n = self.inputs();
        for (row, b) in self.weights.chunks_exact(n).zip(&self.biases) {
            out.push(b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Hidden layers use ReLU; the output layer is linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntentNet {
    pub layers: Vec<DenseLayer>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntentSample {
    pub input: [f64; INPUT_DIM],
    pub target: [f64; 2],
}

/// `1 - cos(pred, target)` with an epsilon-guarded denominator; 1 when either vector is degenerate.
pub fn intent_loss(pred: [f64; 2], target: [f64; 2]) -> f64 {
    loss_and_grad(pred, target).0
}

fn loss_and_grad(p: [f64; 2], t: [f64; 2]) -> (f64, [f64; 2]) {
    let np = p[0].hypot(p[1]);
    let nt = t[0].hypot(t[1]);
    if np < EPS || nt < EPS {
        return (1.0, [0.0, 0.0]);
    }
    let dot = p[0] * t[0] + p[1] * t[1];
    let denom = np * nt + EPS;
    let loss = 1.0 - dot / denom;
    // d/dp of dot/denom = t/denom - dot * nt * p / (np * denom^2)
    let k = dot * nt / (np * denom * denom);
    let grad = [-(t[0] / denom - k * p[0]), -(t[1] / denom - k * p[1])];
    (loss, grad)
}

impl IntentNet {
    /// All-zero parameters for the given layer widths (input first).
    pub fn zeros(dims: &[usize]) -> Self {
        Self { layers: dims.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect() }
    }

    /// He-uniform initialization with zero biases.
    pub fn random(dims: &[usize], rng: &mut impl Rng) -> Self {
        let mut net = Self::zeros(dims);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs() as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    /// The production architecture 21 -> 128 -> 64 -> 2.
    pub fn standard(rng: &mut impl Rng) -> Self {
        Self::random(&[INPUT_DIM, HIDDEN_DIMS[0], HIDDEN_DIMS[1], OUTPUT_DIM], rng)
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.layers.iter().map(|l| l.inputs()).collect();
        if let Some(last) = self.layers.last() {
            d.push(last.outputs());
        }
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Per-layer post-activation values, input included.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs());
            layer.apply(acts.last().unwrap(), &mut out);
            if i != last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, input: &[f64]) -> [f64; 2] {
        let acts = self.activations(input);
        let out = acts.last().unwrap();
        [out[0], out[1]]
    }

    /// Mean loss over `batch` and its gradient, shaped like `self`.
    pub fn loss_and_gradient(&self, batch: &[IntentSample]) -> (f64, IntentNet) {
        let mut grad = IntentNet::zeros(&self.dims());
        let mut total = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for sample in batch {
            let acts = self.activations(&sample.input);
            let out = acts.last().unwrap();
            let (loss, g) = loss_and_grad([out[0], out[1]], sample.target);
            total += loss;
            let mut delta: Vec<f64> = g.iter().map(|v| v * scale).collect();
            for (l, layer) in self.layers.iter().enumerate().rev() {
                let a_in = &acts[l];
                let n_in = layer.inputs();
                let gl = &mut grad.layers[l];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    gl.biases[o] += d;
                    for (gw, a) in gl.weights[o * n_in..(o + 1) * n_in].iter_mut().zip(a_in) {
                        *gw += d * a;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; n_in];
                    for (o, d) in delta.iter().enumerate() {
                        if *d == 0.0 {
                            continue;
                        }
                        for (p, w) in prev.iter_mut().zip(&layer.weights[o * n_in..(o + 1) * n_in]) {
                            *p += d * w;
                        }
                    }
                    // ReLU derivative from the post-activation value.
                    for (p, a) in prev.iter_mut().zip(a_in) {
                        if *a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        (total * scale, grad)
    }

    pub fn mean_loss(&self, data: &[IntentSample]) -> f64 {
        data.iter().map(|s| intent_loss(self.forward(&s.input), s.target)).sum::<f64>() / data.len() as f64
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, IntentError> {
        let net: IntentNet = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), IntentError> {
        if self.layers.is_empty() {
            return Err(IntentError::Shape("no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.shape[0] * l.shape[1] || l.biases.len() != l.shape[0] {
                return Err(IntentError::Shape(format!("layer {i}: array lengths disagree with shape {:?}", l.shape)));
            }
            if i > 0 && self.layers[i - 1].outputs() != l.inputs() {
                return Err(IntentError::Shape(format!("layer {i}: input width {} does not chain", l.inputs())));
            }
        }
        let dims = self.dims();
        if dims[0] != INPUT_DIM || *dims.last().unwrap() != OUTPUT_DIM {
            return Err(IntentError::Shape(format!(
                "expected {INPUT_DIM} inputs and {OUTPUT_DIM} outputs, got {dims:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 200, learning_rate: 5e-4, batch_size: 32, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean of the minibatch losses seen during the epoch, weighted by batch size.
    pub mean_loss: f64,
}

/// Minibatch Adam on the mean intent loss. Data order is reshuffled every epoch from `rng`.
pub fn train_intent(
    net: &mut IntentNet,
    data: &[IntentSample],
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<Vec<EpochLog>, IntentError> {
    if data.is_empty() {
        return Err(IntentError::EmptyData);
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(IntentError::LearningRate(cfg.learning_rate));
    }
    let n = net.param_count();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut t = 0i32;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i]));
            let (loss, grad) = net.loss_and_gradient(&batch);
            if !loss.is_finite() {
                return Err(IntentError::NonFinite { epoch, batch: b });
            }
            epoch_loss += loss * chunk.len() as f64;
            t += 1;
            let c1 = 1.0 - cfg.beta1.powi(t);
            let c2 = 1.0 - cfg.beta2.powi(t);
            for (((p, g), mi), vi) in net.params_mut().zip(grad.params()).zip(&mut m).zip(&mut v) {
                *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
                *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
                *p -= cfg.learning_rate * (*mi / c1) / ((*vi / c2).sqrt() + cfg.epsilon);
            }
        }
        let mean_loss = epoch_loss / data.len() as f64;
        log::debug!("intent epoch {epoch}: mean loss {mean_loss:.6}");
        log.push(EpochLog { epoch, mean_loss });
    }
    Ok(log)
}

/// Agents moving in a straight line along +x; target is always `(1, 0)`.
pub fn synthetic_straight_line(n: usize, rng: &mut impl Rng) -> Vec<IntentSample> {
    (0..n)
        .map(|_| {
            let history = rng.gen_range(1..=10usize);
            let mut input = [0.0; INPUT_DIM];
            for i in 0..10 {
                // Positions older than the available history are padded with the current one.
                let age = 9 - i;
                let back = if age < history { age } else { 0 };
                input[2 * i] = 0.0 - back as f64;
            }
            input[INPUT_DIM - 1] = rng.gen_range(0.1..=1.0);
            IntentSample { input, target: [1.0, 0.0] }
        })
        .collect()
}

pub fn write_samples_csv(samples: &[IntentSample]) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..INPUT_DIM).map(|i| format!("in{i}")).chain(["tx".into(), "ty".into()]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for s in samples {
        let fields: Vec<String> = s.input.iter().chain(&s.target).map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// 21 input columns then 2 target columns; a non-numeric first line is treated as a header.
pub fn read_samples_csv(text: &str) -> Result<Vec<IntentSample>, IntentError> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(IntentError::Csv { line: line_no, message: e.to_string() }),
        };
        if values.len() != INPUT_DIM + 2 {
            return Err(IntentError::Csv {
                line: line_no,
                message: format!("expected {} columns, got {}", INPUT_DIM + 2, values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IntentError::Csv { line: line_no, message: "non-finite value".into() });
        }
        let mut input = [0.0; INPUT_DIM];
        input.copy_from_slice(&values[..INPUT_DIM]);
        samples.push(IntentSample { input, target: [values[INPUT_DIM], values[INPUT_DIM + 1]] });
    }
    Ok(samples)
}
