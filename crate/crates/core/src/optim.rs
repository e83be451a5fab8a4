//! Step-size rules for the projected ascent on `H`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    /// `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-8`.
    pub fn with_alpha(alpha: f64) -> Self {
        AdamConfig {
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// ADAM moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub steps: u64,
    pub config: AdamConfig,
}

impl OptimizerState {
    pub fn new(dim: usize, config: AdamConfig) -> Self {
        OptimizerState {
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            steps: 0,
            config,
        }
    }
}

/// Bias-corrected ADAM ascent step for the direction `h`.
pub fn adam_update(state: &mut OptimizerState, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != state.first_moment.len() {
        return Err(Error::DimensionMismatch {
            expected: state.first_moment.len(),
            actual: h.len(),
        });
    }
    let AdamConfig {
        alpha,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.steps += 1;
    let t = state.steps as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    Ok(h.iter()
        .zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
        .map(|(g, (m, v))| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            alpha * (*m / c1) / ((*v / c2).sqrt() + epsilon)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerConfig {
    Adam(AdamConfig),
    /// Robbins-Monro schedule `alpha_m = a / (1 + m)`.
    PlainSgd { a: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Optimizer {
    Adam(OptimizerState),
    PlainSgd { a: f64, steps: u64 },
}

impl Optimizer {
    pub fn new(dim: usize, config: OptimizerConfig) -> Self {
        match config {
            OptimizerConfig::Adam(c) => Optimizer::Adam(OptimizerState::new(dim, c)),
            OptimizerConfig::PlainSgd { a } => Optimizer::PlainSgd { a, steps: 0 },
        }
    }

    /// Ascent step for `h` (to be added to `theta` before projection).
    pub fn step(&mut self, h: &[f64]) -> Result<Vec<f64>> {
        match self {
            Optimizer::Adam(state) => adam_update(state, h),
            Optimizer::PlainSgd { a, steps } => {
                let rate = *a / (1.0 + *steps as f64);
                *steps += 1;
                Ok(h.iter().map(|g| rate * g).collect())
            }
        }
    }
}
