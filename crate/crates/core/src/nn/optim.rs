use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptMethod {
    Sgd,
    Adam,
}

/// First-order optimizer state. Adam uses the standard bias-corrected
/// moment recurrences with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
#[derive(Debug, Clone)]
pub struct Optimizer {
    method: OptMethod,
    learning_rate: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Optimizer {
    pub fn new(method: OptMethod, learning_rate: f64, n_params: usize) -> Result<Self> {
        if learning_rate <= 0.0 {
            return Err(SurvError::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        Ok(Self {
            method,
            learning_rate,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        })
    }

    pub fn adam(learning_rate: f64, n_params: usize) -> Result<Self> {
        Self::new(OptMethod::Adam, learning_rate, n_params)
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        assert_eq!(params.len(), grad.len());
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(SurvError::NonFiniteGradient(i));
        }
        self.step += 1;
        match self.method {
            OptMethod::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.learning_rate * g;
                }
            }
            OptMethod::Adam => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                let c1 = 1.0 - B1.powi(self.step as i32);
                let c2 = 1.0 - B2.powi(self.step as i32);
                for i in 0..params.len() {
                    self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
                    self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
                    let mhat = self.m[i] / c1;
                    let vhat = self.v[i] / c2;
                    params[i] -= self.learning_rate * mhat / (vhat.sqrt() + EPS);
                }
            }
        }
        Ok(())
    }
}
