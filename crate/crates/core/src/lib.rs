//! Policy-gradient learning for infinite-horizon MDPs with a designated
//! start state, driven by the renewal structure of the trajectory.
//!
//! A trajectory that keeps returning to the start state splits into i.i.d.
//! regenerative cycles. The discounted performance equals
//! `R / ((1 - gamma) T)`, with `R` and `T` the expected discounted reward and
//! discounted time of one cycle, so the learners estimate `R`, `T` and their
//! gradients from batches of cycles and run projected stochastic ascent on
//! `H = T grad R - R grad T`.
//!
//! Module map:
//! - [`policy`]: parameterized policies, scores, projection.
//! - [`env`]: tabular/GARNET models, event-triggered communication,
//!   inventory control.
//! - [`renewal`]: cycle collection and cycle statistics.
//! - [`gradient`]: likelihood-ratio and simultaneous-perturbation estimators.
//! - [`learner`]: the learning loops and the approximate-renewal bound.
//! - [`baselines`]: exact oracles and the actor-critic comparison learner.
//! - [`experiment`]: config files, replicated runs and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod env;
pub mod error;
pub mod experiment;
pub mod gradient;
mod integrate;
pub mod learner;
pub mod optim;
pub mod policy;
pub mod renewal;
pub mod rng;

pub use error::{Error, Result};
