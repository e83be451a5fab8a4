use rand::Rng;
use rand_distr::StandardNormal;

use super::{Environment, Transition};
use crate::error::{Error, Result};

/// Event-triggered transmission of a first-order autoregressive source over
/// an i.i.d. erasure channel.
///
/// The state is the estimation error at the receiver. The transmitter
/// observes the pre-decision error, decides whether to send, and the
/// post-decision error resets to 0 on a successful transmission. Costs are
/// reported as negative rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct EventTrigger {
    alpha: f64,
    comm_cost: f64,
    erasure_prob: f64,
}

/// One controlled-plus-uncontrolled transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventOutcome {
    pub post_state: f64,
    pub next_pre_state: f64,
    pub reward: f64,
}

impl EventTrigger {
    pub fn new(alpha: f64, comm_cost: f64, erasure_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&erasure_prob) {
            return Err(Error::param(format!(
                "erasure probability {erasure_prob} not in [0,1]"
            )));
        }
        if !(comm_cost >= 0.0) {
            return Err(Error::param(format!(
                "communication cost {comm_cost} must be nonnegative"
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::param("AR coefficient must be finite"));
        }
        Ok(EventTrigger {
            alpha,
            comm_cost,
            erasure_prob,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn comm_cost(&self) -> f64 {
        self.comm_cost
    }

    pub fn erasure_prob(&self) -> f64 {
        self.erasure_prob
    }

    /// Every step draws one uniform (channel) and one standard normal
    /// (source noise), whatever the action, so trajectories under different
    /// thresholds stay aligned on a shared stream.
    pub fn event_step<R: Rng + ?Sized>(&self, pre_state: f64, transmit: bool, rng: &mut R) -> EventOutcome {
        let u: f64 = rng.random();
        let noise: f64 = rng.sample(StandardNormal);
        let delivered = transmit && u >= self.erasure_prob;
        let post_state = if delivered { 0.0 } else { pre_state };
        let comm = if transmit { self.comm_cost } else { 0.0 };
        EventOutcome {
            post_state,
            next_pre_state: self.alpha * post_state + noise,
            reward: -(comm + post_state * post_state),
        }
    }
}

impl Environment for EventTrigger {
    type State = f64;
    type Action = usize;

    /// Post-decision start state: zero error.
    fn start_state(&self) -> f64 {
        0.0
    }

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let noise: f64 = rng.sample(StandardNormal);
        self.alpha * self.start_state() + noise
    }

    fn step<R: Rng + ?Sized>(&self, state: &f64, action: &usize, rng: &mut R) -> Result<Transition<f64>> {
        let transmit = match action {
            0 => false,
            1 => true,
            a => return Err(Error::param(format!("event-trigger action must be 0 or 1, got {a}"))),
        };
        let out = self.event_step(*state, transmit, rng);
        Ok(Transition {
            next_state: out.next_pre_state,
            reward: out.reward,
            post_state: Some(out.post_state),
        })
    }

    fn is_post_decision(&self) -> bool {
        true
    }

    fn distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }
}
