use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Tensor;

/// `0.5 · base_lr · (1 + cos(π · step / total_steps))`.
///
/// Steps past the end of the schedule stay at zero.
pub fn cosine_lr(base_lr: f64, step: usize, total_steps: usize) -> f64 {
    let total = total_steps.max(1);
    let step = step.min(total);
    0.5 * base_lr * (1.0 + (PI * step as f64 / total as f64).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} not in [0,1)", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight decay {} must be non-negative",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

/// SGD with heavy-ball momentum, coupled L2 weight decay and a cosine
/// learning-rate schedule over a fixed number of steps.
#[derive(Debug, Clone)]
pub struct Sgd {
    config: SgdConfig,
    velocity: Vec<Vec<f64>>,
    step_index: usize,
    total_steps: usize,
}

impl Sgd {
    pub fn new(config: SgdConfig, total_steps: usize) -> Result<Self> {
        config.validate()?;
        if total_steps == 0 {
            return Err(Error::Config("schedule needs at least one step".into()));
        }
        Ok(Self {
            config,
            velocity: Vec::new(),
            step_index: 0,
            total_steps,
        })
    }

    pub fn config(&self) -> &SgdConfig {
        &self.config
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn current_lr(&self) -> f64 {
        cosine_lr(self.config.learning_rate, self.step_index, self.total_steps)
    }

    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.velocity
    }

    /// `v ← μ·v + g + λ·p; p ← p − lr(t)·v`, then clears the gradients.
    ///
    /// Every parameter must carry a gradient.
    pub fn step(&mut self, params: &mut [&mut Tensor]) -> Result<()> {
        if self.velocity.is_empty() {
            self.velocity = params.iter().map(|p| vec![0.0; p.numel()]).collect();
        }
        if self.velocity.len() != params.len()
            || self
                .velocity
                .iter()
                .zip(params.iter())
                .any(|(v, p)| v.len() != p.numel())
        {
            return Err(Error::Usage(
                "parameter layout changed under the optimizer".into(),
            ));
        }
        if let Some(i) = params.iter().position(|p| p.grad().is_none()) {
            return Err(Error::Usage(format!(
                "parameter {i} has no gradient; run backward first"
            )));
        }
        let lr = self.current_lr();
        let SgdConfig {
            momentum,
            weight_decay,
            ..
        } = self.config;
        for (param, velocity) in params.iter_mut().zip(&mut self.velocity) {
            let grad = param.grad().expect("checked above").to_vec();
            for ((p, v), g) in param.data_mut().iter_mut().zip(velocity.iter_mut()).zip(grad) {
                *v = momentum * *v + g + weight_decay * *p;
                *p -= lr * *v;
            }
            param.clear_grad();
        }
        self.step_index += 1;
        Ok(())
    }
}
