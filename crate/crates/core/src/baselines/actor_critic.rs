use rand::Rng;

use crate::env::{Environment, TabularMDP};
use crate::error::{Error, Result};
use crate::learner::{IterationRecord, RunResult};
use crate::optim::{Optimizer, OptimizerConfig};
use crate::policy::{Policy, PolicyParams};

/// Settings for the eligibility-trace actor-critic baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct SarsaConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub critic_rate: f64,
    pub actor: OptimizerConfig,
    pub sample_budget: u64,
    /// Environment steps between records.
    pub record_every: u64,
}

impl SarsaConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param(format!("trace decay {} not in [0,1]", self.lambda)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::param(format!("discount {} not in (0,1)", self.gamma)));
        }
        if !(self.critic_rate >= 0.0) {
            return Err(Error::param("critic rate must be nonnegative"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every must be at least 1"));
        }
        Ok(())
    }
}

/// Output of [`sarsa_lambda_run`]: the learner records plus the final critic.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorCriticResult {
    pub run: RunResult,
    pub critic: Vec<f64>,
}

/// Online actor-critic on one continuing trajectory from the start state.
///
/// The critic is a tabular state-value estimate updated by TD(lambda) with
/// accumulating traces; the Gibbs actor steps along `score * delta` with the
/// configured optimizer and is projected onto its bounds. Records report the
/// critic's value of the start state as the performance estimate.
pub fn sarsa_lambda_run<R: Rng + ?Sized>(
    mdp: &TabularMDP,
    policy0: &PolicyParams,
    config: &SarsaConfig,
    rng: &mut R,
) -> Result<ActorCriticResult> {
    config.validate()?;
    if !policy0.family().is_differentiable() {
        return Err(Error::UnsupportedFamily {
            family: policy0.family().name(),
            operation: "actor-critic",
        });
    }
    let n = mdp.n_states();
    let s0 = mdp.start();
    let mut policy = policy0.clone();
    let mut optimizer = Optimizer::new(policy.dim(), config.actor);
    let mut critic = vec![0.0; n];
    let mut trace = vec![0.0; n];
    let mut records = Vec::new();
    let mut state = mdp.initial_state(rng);
    let mut theta = policy.theta().to_vec();
    let mut direction = vec![0.0; policy.dim()];

    for t in 0..config.sample_budget {
        if t % config.record_every == 0 {
            records.push(IterationRecord {
                iteration: t / config.record_every,
                samples: t,
                theta: policy.theta().to_vec(),
                r_hat: None,
                t_hat: None,
                j_hat: critic[s0],
            });
        }
        let (action, score) = policy.sample_scored(&state, rng)?;
        let tr = mdp.step(&state, &action, rng)?;
        let delta = tr.reward + config.gamma * critic[tr.next_state] - critic[state];

        let decay = config.gamma * config.lambda;
        trace.iter_mut().for_each(|e| *e *= decay);
        trace[state] += 1.0;
        critic
            .iter_mut()
            .zip(&trace)
            .for_each(|(v, e)| *v += config.critic_rate * delta * e);

        direction.iter_mut().for_each(|d| *d = 0.0);
        score.add_scaled_to(&mut direction, delta);
        let step = optimizer.step(&direction)?;
        theta.iter_mut().zip(&step).for_each(|(th, s)| *th += s);
        policy.set_theta(&theta)?;
        theta.copy_from_slice(policy.theta());

        state = tr.next_state;
    }
    if config.sample_budget > 0 {
        records.push(IterationRecord {
            iteration: config.sample_budget.div_ceil(config.record_every),
            samples: config.sample_budget,
            theta: policy.theta().to_vec(),
            r_hat: None,
            t_hat: None,
            j_hat: critic[s0],
        });
    }
    Ok(ActorCriticResult {
        run: RunResult {
            records,
            final_policy: policy,
            samples: config.sample_budget,
        },
        critic,
    })
}
