//! Reference solutions and the comparison learner: value iteration, exact
//! evaluation of tabular soft-max policies, Monte Carlo rollouts and
//! threshold grid search, and an eligibility-trace actor-critic.

mod actor_critic;
mod exact;
mod rollout;

pub use actor_critic::{sarsa_lambda_run, ActorCriticResult, SarsaConfig};
pub use exact::{
    cycle_values, exact_policy_value, policy_kernel, policy_values, stationary_average_reward,
    stationary_distribution, value_iteration, CycleValues, PolicyValue, ValueSolution, FD_STEP,
};
pub use rollout::{
    discounted_return, evaluate_policy, grid_search_threshold, horizon_for, uniform_grid, GridPoint,
    GridSearchResult,
};
