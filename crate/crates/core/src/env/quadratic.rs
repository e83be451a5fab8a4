use rand::Rng;
use rand_distr::StandardNormal;

use super::{Environment, Transition};
use crate::error::{Error, Result};

/// Single-state bandit paying `-(a - optimum)^2` plus Gaussian noise.
///
/// Every step returns to the start state, so each cycle has length one and
/// the cycle reward is a noisy sample of a concave quadratic in the action.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticBandit {
    optimum: f64,
    noise_std: f64,
}

impl QuadraticBandit {
    pub fn new(optimum: f64, noise_std: f64) -> Result<Self> {
        if !(noise_std >= 0.0) {
            return Err(Error::param("noise standard deviation must be nonnegative"));
        }
        Ok(QuadraticBandit { optimum, noise_std })
    }

    pub fn optimum(&self) -> f64 {
        self.optimum
    }
}

impl Environment for QuadraticBandit {
    type State = f64;
    type Action = f64;

    fn start_state(&self) -> f64 {
        0.0
    }

    fn step<R: Rng + ?Sized>(&self, _state: &f64, action: &f64, rng: &mut R) -> Result<Transition<f64>> {
        let noise: f64 = rng.sample(StandardNormal);
        Ok(Transition {
            next_state: 0.0,
            reward: -(action - self.optimum).powi(2) + self.noise_std * noise,
            post_state: None,
        })
    }

    fn distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }
}
