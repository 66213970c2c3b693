use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::{sigmoid, Scorer};
use crate::data::FeatureTable;
use crate::error::{Error, Result};

pub const NETWORK_FORMAT_VERSION: u32 = 1;
const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Architecture and training hyperparameters.
///
/// `layer_widths` runs from the input width through every hidden layer to a
/// single sigmoid output. Hidden layers use `activations[i]` followed by
/// inverted dropout at `dropout_rates[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layer_widths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub dropout_rates: Vec<f64>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl NetworkConfig {
    /// Four hidden layers `[64, 32, 16, 8]`, tanh then three ReLUs, dropout
    /// 0.3 after the first, ADAM at 0.000474718 for 100 epochs.
    pub fn churn_default(input_width: usize, seed: u64) -> Self {
        NetworkConfig {
            layer_widths: vec![input_width, 64, 32, 16, 8, 1],
            activations: vec![
                Activation::Tanh,
                Activation::Relu,
                Activation::Relu,
                Activation::Relu,
            ],
            dropout_rates: vec![0.3, 0.0, 0.0, 0.0],
            learning_rate: 0.000474718,
            epochs: 100,
            batch_size: 64,
            seed,
        }
    }

    /// Same shape rules as [`churn_default`](Self::churn_default) for arbitrary widths,
    /// without dropout. Handy for tests.
    pub fn plain(layer_widths: Vec<usize>, activations: Vec<Activation>, seed: u64) -> Self {
        let hidden = layer_widths.len().saturating_sub(2);
        NetworkConfig {
            layer_widths,
            activations,
            dropout_rates: vec![0.0; hidden],
            learning_rate: 0.001,
            epochs: 10,
            batch_size: 32,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.layer_widths;
        if w.len() < 2 {
            return Err(Error::Config("need at least input and output widths".into()));
        }
        if w.contains(&0) {
            return Err(Error::Config("layer widths must be at least 1".into()));
        }
        if *w.last().unwrap() != 1 {
            return Err(Error::Config("output width must be 1".into()));
        }
        let hidden = w.len() - 2;
        if self.activations.len() != hidden || self.dropout_rates.len() != hidden {
            return Err(Error::Config(format!(
                "{hidden} hidden layers need {hidden} activations and dropout rates"
            )));
        }
        if self.dropout_rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::Config("dropout rates must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Offsets of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    /// Start of the `outputs x inputs` row-major weight block.
    pub weight_offset: usize,
    pub bias_offset: usize,
}

/// Dense feedforward network with all parameters in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

struct Trace {
    /// Layer inputs after dropout; `inputs[0]` is the feature vector.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    /// Dropout scale per hidden unit (0 or 1/(1-rate)).
    masks: Vec<Option<Vec<f64>>>,
    prob: f64,
}

impl Network {
    /// Glorot-uniform weights, zero biases.
    pub fn init(config: NetworkConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::init_with(config, &mut rng)
    }

    fn init_with(config: NetworkConfig, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        for l in 0..net.layers.len() {
            let s = net.layers[l];
            let limit = (6.0 / (s.inputs + s.outputs) as f64).sqrt();
            for p in &mut net.params[s.weight_offset..s.weight_offset + s.inputs * s.outputs] {
                *p = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    /// All-zero parameters.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::new();
        let mut offset = 0;
        for w in config.layer_widths.windows(2) {
            let (inputs, outputs) = (w[0], w[1]);
            layers.push(LayerShape {
                inputs,
                outputs,
                weight_offset: offset,
                bias_offset: offset + inputs * outputs,
            });
            offset += inputs * outputs + outputs;
        }
        Ok(Network {
            config,
            layers,
            params: vec![0.0; offset],
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_width(&self) -> usize {
        self.config.layer_widths[0]
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let s = self.layers[layer];
        &self.params[s.weight_offset..s.weight_offset + s.inputs * s.outputs]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let s = self.layers[layer];
        &self.params[s.bias_offset..s.bias_offset + s.outputs]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_width() {
            return Err(Error::Shape {
                expected: self.input_width(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn run<R: Rng + ?Sized>(&self, x: &[f64], mut dropout: Option<&mut R>) -> Trace {
        let n_layers = self.layers.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut pre = Vec::with_capacity(n_layers);
        let mut masks = Vec::with_capacity(n_layers - 1);
        let mut a = x.to_vec();
        for (l, s) in self.layers.iter().enumerate() {
            let w = &self.params[s.weight_offset..s.weight_offset + s.inputs * s.outputs];
            let b = &self.params[s.bias_offset..s.bias_offset + s.outputs];
            let z: Vec<f64> = (0..s.outputs)
                .map(|o| {
                    let row = &w[o * s.inputs..(o + 1) * s.inputs];
                    b[o] + row.iter().zip(&a).map(|(wi, ai)| wi * ai).sum::<f64>()
                })
                .collect();
            inputs.push(std::mem::take(&mut a));
            if l + 1 < n_layers {
                let act = self.config.activations[l];
                let mut h: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
                let rate = self.config.dropout_rates[l];
                let mask = match dropout.as_deref_mut() {
                    Some(rng) if rate > 0.0 => {
                        let keep = 1.0 / (1.0 - rate);
                        let m: Vec<f64> = (0..h.len())
                            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
                            .collect();
                        h.iter_mut().zip(&m).for_each(|(v, k)| *v *= k);
                        Some(m)
                    }
                    _ => None,
                };
                masks.push(mask);
                a = h;
            }
            pre.push(z);
        }
        let prob = sigmoid(pre[n_layers - 1][0]);
        Trace {
            inputs,
            pre,
            masks,
            prob,
        }
    }

    /// Churn probability for `x`. Dropout is active only in [`Mode::Train`].
    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], mode: Mode, rng: &mut R) -> Result<f64> {
        self.check_input(x)?;
        let trace = match mode {
            Mode::Train => self.run(x, Some(rng)),
            Mode::Infer => self.run::<R>(x, None),
        };
        Ok(trace.prob)
    }

    /// Inference-mode probability.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.run::<ChaCha8Rng>(x, None).prob)
    }

    /// Output-layer pre-activation (logit) in the given mode.
    pub fn logit<R: Rng + ?Sized>(&self, x: &[f64], mode: Mode, rng: &mut R) -> Result<f64> {
        self.check_input(x)?;
        let trace = match mode {
            Mode::Train => self.run(x, Some(rng)),
            Mode::Infer => self.run::<R>(x, None),
        };
        Ok(trace.pre[self.layers.len() - 1][0])
    }

    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        table.rows().map(|r| self.predict(r)).collect()
    }

    /// Adds one sample's loss gradient into `grad`; returns the sample loss.
    fn accumulate<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        y: u8,
        dropout: Option<&mut R>,
        grad: &mut [f64],
    ) -> f64 {
        let trace = self.run(x, dropout);
        let n_layers = self.layers.len();
        // d loss / d logit for sigmoid + cross-entropy
        let mut delta = vec![trace.prob - f64::from(y)];
        for l in (0..n_layers).rev() {
            let s = self.layers[l];
            let input = &trace.inputs[l];
            for o in 0..s.outputs {
                let d = delta[o];
                grad[s.bias_offset + o] += d;
                let row = &mut grad[s.weight_offset + o * s.inputs..s.weight_offset + (o + 1) * s.inputs];
                row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
            }
            if l == 0 {
                break;
            }
            let w = &self.params[s.weight_offset..s.weight_offset + s.inputs * s.outputs];
            let act = self.config.activations[l - 1];
            let z_prev = &trace.pre[l - 1];
            let mask = &trace.masks[l - 1];
            delta = (0..s.inputs)
                .map(|i| {
                    let mut back: f64 = (0..s.outputs).map(|o| w[o * s.inputs + i] * delta[o]).sum();
                    if let Some(m) = mask {
                        back *= m[i];
                    }
                    back * act.derivative(z_prev[i])
                })
                .collect();
        }
        bce_loss(trace.prob, y)
    }

    fn batch_gradient<R: Rng + ?Sized>(
        &self,
        table: &FeatureTable,
        rows: &[usize],
        mut dropout: Option<&mut R>,
    ) -> (Vec<f64>, f64) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for &i in rows {
            loss += self.accumulate(table.row(i), table.labels()[i], dropout.as_deref_mut(), &mut grad);
        }
        let scale = 1.0 / rows.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        (grad, loss * scale)
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            format_version: NETWORK_FORMAT_VERSION,
            config: self.config.clone(),
            layers: (0..self.layers.len())
                .map(|l| DenseLayerFile {
                    inputs: self.layers[l].inputs,
                    outputs: self.layers[l].outputs,
                    weights: self.weights(l).to_vec(),
                    bias: self.bias(l).to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: NetworkFile) -> Result<Self> {
        if file.format_version != NETWORK_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported network format version {}",
                file.format_version
            )));
        }
        let mut net = Network::zeros(file.config)?;
        if file.layers.len() != net.layers.len() {
            return Err(Error::Shape {
                expected: net.layers.len(),
                actual: file.layers.len(),
            });
        }
        for (s, layer) in net.layers.clone().iter().zip(&file.layers) {
            if layer.weights.len() != s.inputs * s.outputs || layer.bias.len() != s.outputs {
                return Err(Error::Shape {
                    expected: s.inputs * s.outputs + s.outputs,
                    actual: layer.weights.len() + layer.bias.len(),
                });
            }
            net.params[s.weight_offset..s.bias_offset].copy_from_slice(&layer.weights);
            net.params[s.bias_offset..s.bias_offset + s.outputs].copy_from_slice(&layer.bias);
        }
        Ok(net)
    }
}

impl Scorer for Network {
    fn n_features(&self) -> usize {
        self.input_width()
    }

    fn score(&self, x: &[f64]) -> f64 {
        self.run::<ChaCha8Rng>(x, None).prob
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayerFile {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// JSON form of a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub format_version: u32,
    pub config: NetworkConfig,
    pub layers: Vec<DenseLayerFile>,
}

/// Binary cross-entropy with the probability clamped to `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Exact gradient of the mean cross-entropy over `rows` of `table`, with
/// dropout disabled. Returns the gradient (laid out like
/// [`Network::params`]) and the mean loss.
pub fn gradients(net: &Network, table: &FeatureTable, rows: &[usize]) -> Result<(Vec<f64>, f64)> {
    if rows.is_empty() {
        return Err(Error::Validation("empty batch".into()));
    }
    if table.n_cols() != net.input_width() {
        return Err(Error::Shape {
            expected: net.input_width(),
            actual: table.n_cols(),
        });
    }
    Ok(net.batch_gradient::<ChaCha8Rng>(table, rows, None))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: Network,
    /// Mean training loss per epoch (dropout active).
    pub loss_trace: Vec<f64>,
}

/// Mini-batch ADAM training with per-epoch seeded shuffling.
pub fn train(table: &FeatureTable, cfg: &NetworkConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if table.n_cols() != cfg.layer_widths[0] {
        return Err(Error::Shape {
            expected: cfg.layer_widths[0],
            actual: table.n_cols(),
        });
    }
    let (neg, pos) = table.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::Validation(
            "training needs at least one row of each class".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::init_with(cfg.clone(), &mut rng)?;
    let mut adam = AdamState::new(net.params.len());
    let mut order: Vec<usize> = (0..table.n_rows()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch, rows) in order.chunks(cfg.batch_size).enumerate() {
            let (grad, loss) = net.batch_gradient(table, rows, Some(&mut rng));
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training {
                    epoch,
                    batch,
                    message: format!("non-finite loss {loss}"),
                });
            }
            adam_step(&mut net.params, &grad, &mut adam, cfg.learning_rate)?;
            total += loss * rows.len() as f64;
        }
        loss_trace.push(total / table.n_rows() as f64);
    }
    Ok(TrainOutcome {
        network: net,
        loss_trace,
    })
}
