//! Environments: the tabular model used by the exact oracles, the three
//! experiment families, and a synthetic quadratic bandit for optimizer
//! checks.

mod event;
mod inventory;
mod quadratic;
mod tabular;

pub use event::{EventOutcome, EventTrigger};
pub use inventory::Inventory;
pub use quadratic::QuadraticBandit;
pub use tabular::{garnet_generate, Garnet, TabularMDP};

use std::fmt::Debug;

use rand::Rng;

use crate::error::Result;

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<S> {
    pub next_state: S,
    pub reward: f64,
    /// Post-decision state reached by the controlled part of the
    /// transition, for models that expose one.
    pub post_state: Option<S>,
}

/// A controlled Markov process with a designated start state.
///
/// Environments are immutable: all evolution goes through explicit state
/// values and the caller's generator.
pub trait Environment {
    type State: Clone + Debug;
    type Action: Clone + Debug;

    /// The designated start state `s0`. For post-decision models this is the
    /// post-decision start state.
    fn start_state(&self) -> Self::State;

    /// State at which a trajectory from `s0` begins. Post-decision models
    /// sample the first pre-decision state from the uncontrolled kernel.
    fn initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> Self::State {
        self.start_state()
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: &Self::Action,
        rng: &mut R,
    ) -> Result<Transition<Self::State>>;

    fn is_post_decision(&self) -> bool {
        false
    }

    /// State metric used by approximate renewal.
    fn distance(&self, a: &Self::State, b: &Self::State) -> f64;
}
