use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};
use crate::nn::tape::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Softplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTransform {
    Identity,
    Softplus,
    Abs,
}

/// Architecture of one single-input subnetwork.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub output_transform: OutputTransform,
    pub init_scale: f64,
    pub seed: u64,
}

impl MlpConfig {
    /// Two tanh layers of 16 units with a softplus output, so the network
    /// output is strictly positive (importance-function default).
    pub fn importance_default(seed: u64) -> Self {
        Self {
            hidden_layers: vec![16, 16],
            activation: Activation::Tanh,
            output_transform: OutputTransform::Softplus,
            init_scale: 0.5,
            seed,
        }
    }

    /// Same body with an identity output (shape-function default).
    pub fn shape_default(seed: u64) -> Self {
        Self {
            output_transform: OutputTransform::Identity,
            ..Self::importance_default(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.init_scale <= 0.0 {
            return Err(SurvError::InvalidConfig(
                "init_scale must be positive".into(),
            ));
        }
        if self.hidden_layers.iter().any(|&h| h == 0) {
            return Err(SurvError::InvalidConfig(
                "hidden layer sizes must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of parameters of one subnetwork (weights + biases per layer).
    pub fn param_count(&self) -> usize {
        let mut count = 0;
        let mut fan_in = 1;
        for &h in &self.hidden_layers {
            count += h * (fan_in + 1);
            fan_in = h;
        }
        count + (fan_in + 1)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn activate(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Relu => x.max(0.0),
        Activation::Tanh => x.tanh(),
        Activation::Softplus => softplus(x),
    }
}

fn transform(t: OutputTransform, x: f64) -> f64 {
    match t {
        OutputTransform::Identity => x,
        OutputTransform::Softplus => softplus(x),
        OutputTransform::Abs => x.abs(),
    }
}

fn forward_plain(cfg: &MlpConfig, params: &[f64], x: f64) -> f64 {
    let mut acts = vec![x];
    let mut pos = 0;
    for &h in &cfg.hidden_layers {
        let mut next = Vec::with_capacity(h);
        for _ in 0..h {
            let mut z = params[pos + acts.len()]; // bias follows the weights
            for (i, &a) in acts.iter().enumerate() {
                z += params[pos + i] * a;
            }
            pos += acts.len() + 1;
            next.push(activate(cfg.activation, z));
        }
        acts = next;
    }
    let mut z = params[pos + acts.len()];
    for (i, &a) in acts.iter().enumerate() {
        z += params[pos + i] * a;
    }
    transform(cfg.output_transform, z)
}

fn forward_tape(cfg: &MlpConfig, params: &[Var], x: f64, tape: &mut Tape) -> Var {
    let x = tape.leaf(x);
    let mut acts = vec![x];
    let mut pos = 0;
    for &h in &cfg.hidden_layers {
        let mut next = Vec::with_capacity(h);
        for _ in 0..h {
            let ws = &params[pos..pos + acts.len()];
            let bias = params[pos + acts.len()];
            pos += acts.len() + 1;
            let dot = tape.dot(ws, &acts);
            let z = tape.add(dot, bias);
            next.push(match cfg.activation {
                Activation::Relu => tape.relu(z),
                Activation::Tanh => tape.tanh(z),
                Activation::Softplus => tape.softplus(z),
            });
        }
        acts = next;
    }
    let ws = &params[pos..pos + acts.len()];
    let bias = params[pos + acts.len()];
    let dot = tape.dot(ws, &acts);
    let z = tape.add(dot, bias);
    match cfg.output_transform {
        OutputTransform::Identity => z,
        OutputTransform::Softplus => tape.softplus(z),
        OutputTransform::Abs => tape.abs(z),
    }
}

/// Evaluate one subnetwork on a scalar input.
pub fn mlp_forward(cfg: &MlpConfig, params: &[f64], x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(SurvError::InvalidConfig(format!(
            "non-finite network input {x}"
        )));
    }
    Ok(forward_plain(cfg, params, x))
}

/// `d` independent single-input subnetworks over a flat parameter vector.
/// Subnetwork `j` owns the `j`-th slice, so its output depends only on its
/// own parameters and its scalar input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceNetwork {
    config: MlpConfig,
    d: usize,
    params: Vec<f64>,
}

impl ImportanceNetwork {
    pub fn new(d: usize, config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let per = config.param_count();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = (0..d * per)
            .map(|_| rng.gen_range(-config.init_scale..config.init_scale))
            .collect();
        Ok(Self { config, d, params })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn params_per_subnet(&self) -> usize {
        self.config.param_count()
    }

    fn subnet_slice(&self, j: usize) -> &[f64] {
        let per = self.params_per_subnet();
        &self.params[j * per..(j + 1) * per]
    }

    /// `h_j(x)` (or `g_j(x)` for shape networks).
    pub fn eval(&self, j: usize, x: f64) -> f64 {
        forward_plain(&self.config, self.subnet_slice(j), x)
    }

    /// All subnet outputs at the coordinates of `x`.
    pub fn eval_vector(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, &v)| self.eval(j, v)).collect()
    }

    /// Tape version of [`eval`]: `param_vars` are the leaves for the whole
    /// flat parameter vector.
    pub fn eval_tape(&self, j: usize, x: f64, param_vars: &[Var], tape: &mut Tape) -> Var {
        let per = self.params_per_subnet();
        forward_tape(
            &self.config,
            &param_vars[j * per..(j + 1) * per],
            x,
            tape,
        )
    }
}
