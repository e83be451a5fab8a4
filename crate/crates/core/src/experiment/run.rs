use rayon::prelude::*;

use super::config::{Algorithm, EnvSpec, EvalMethod, ExperimentConfig};
use crate::baselines::{
    evaluate_policy, grid_search_threshold, policy_values, sarsa_lambda_run, stationary_average_reward,
    uniform_grid, value_iteration, GridSearchResult, SarsaConfig, ValueSolution,
};
use crate::env::{Environment, EventTrigger, Garnet, Inventory, QuadraticBandit, TabularMDP};
use crate::error::{Error, Result};
use crate::learner::{approx_bound, rmc_run_lr, rmc_run_sp, RmcConfig, RunResult, SpsaSettings};
use crate::policy::{Bounds, Policy, PolicyFamily, PolicyParams};
use crate::renewal::{Mode, RenewalRule};
use crate::rng::{replication_rng, SimRng};

/// Stream offset separating evaluation rollouts from learning.
pub const EVAL_STREAM: u64 = 1 << 63;

/// Instantiated environment.
#[derive(Clone, Debug)]
pub enum Model {
    Tabular(TabularMDP),
    Event(EventTrigger),
    Inventory(Inventory),
    Quadratic(QuadraticBandit),
}

pub fn build_model(config: &ExperimentConfig) -> Result<Model> {
    Ok(match &config.env {
        EnvSpec::Garnet {
            states,
            actions,
            branching,
            reward_prob,
            reward_range,
            model_seed,
        } => Model::Tabular(
            Garnet {
                n_states: *states,
                n_actions: *actions,
                branching: *branching,
                reward_prob: *reward_prob,
                reward_range: *reward_range,
                seed: *model_seed,
            }
            .generate()?,
        ),
        EnvSpec::TabularFile(path) => Model::Tabular(TabularMDP::load(path)?),
        EnvSpec::EventTrigger {
            ar_coef,
            comm_cost,
            erasure_prob,
        } => Model::Event(EventTrigger::new(*ar_coef, *comm_cost, *erasure_prob)?),
        EnvSpec::Inventory {
            procurement,
            holding,
            backlog,
            demand_rate,
            clip,
            start,
        } => Model::Inventory(Inventory::new(
            *procurement,
            *holding,
            *backlog,
            *demand_rate,
            config.gamma,
            *clip,
            *start,
        )?),
        EnvSpec::Quadratic { optimum, noise_std } => Model::Quadratic(QuadraticBandit::new(*optimum, *noise_std)?),
    })
}

/// Starting policy; a single `theta0` value is broadcast over a tabular
/// parameter vector.
pub fn initial_policy(config: &ExperimentConfig, model: &Model) -> Result<PolicyParams> {
    let (family, dim) = match model {
        Model::Tabular(m) => (
            PolicyFamily::GibbsTabular {
                n_states: m.n_states(),
                n_actions: m.n_actions(),
                temperature: config.temperature,
            },
            m.n_states() * m.n_actions(),
        ),
        Model::Event(_) => (PolicyFamily::Threshold, 1),
        Model::Inventory(_) | Model::Quadratic(_) => (PolicyFamily::BaseStock, 1),
    };
    let theta = match config.theta0.len() {
        1 => vec![config.theta0[0]; dim],
        n if n == dim => config.theta0.clone(),
        n => return Err(Error::Config(format!("theta0 has {n} entries, the policy has {dim}"))),
    };
    PolicyParams::new(family, theta, Bounds::uniform(dim, config.theta_bounds.0, config.theta_bounds.1)?)
}

/// Per-checkpoint policy evaluation for the `J_eval` column.
pub fn evaluate_params(config: &ExperimentConfig, model: &Model, policy: &PolicyParams, rng: &mut SimRng) -> Result<Option<f64>> {
    match (config.eval, model) {
        (EvalMethod::None, _) => Ok(None),
        (EvalMethod::Exact, Model::Tabular(m)) => Ok(Some(match config.mode {
            Mode::Discounted(g) => policy_values(m, policy, g)?[m.start()],
            Mode::Average => stationary_average_reward(m, policy)?,
        })),
        (EvalMethod::ClosedForm, Model::Inventory(m)) => match m.inventory_value(policy.theta()[0]) {
            Ok(v) => Ok(Some(-v)),
            Err(Error::Domain(_)) => Ok(None),
            Err(e) => Err(e),
        },
        (EvalMethod::Rollout, _) => rollout_mean(config, model, policy, rng).map(|(m, _)| Some(m)),
        (method, _) => Err(Error::Config(format!("evaluation {method:?} is not available for this model"))),
    }
}

fn rollout_on<E>(config: &ExperimentConfig, env: &E, policy: &PolicyParams, rng: &mut SimRng) -> Result<(f64, f64)>
where
    E: Environment,
    PolicyParams: Policy<E::State, E::Action>,
{
    match config.mode {
        Mode::Discounted(g) => evaluate_policy(env, policy, config.eval_horizon, config.eval_reps, g, rng),
        Mode::Average => {
            let h = config.eval_horizon as f64;
            let (m, s) = evaluate_policy(env, policy, config.eval_horizon, config.eval_reps, 1.0, rng)?;
            Ok((m / h, s / h))
        }
    }
}

fn rollout_mean(config: &ExperimentConfig, model: &Model, policy: &PolicyParams, rng: &mut SimRng) -> Result<(f64, f64)> {
    match model {
        Model::Tabular(m) => rollout_on(config, m, policy, rng),
        Model::Event(m) => rollout_on(config, m, policy, rng),
        Model::Inventory(m) => rollout_on(config, m, policy, rng),
        Model::Quadratic(m) => rollout_on(config, m, policy, rng),
    }
}

pub fn rmc_config(config: &ExperimentConfig) -> RmcConfig {
    let mut c = RmcConfig::new(config.cycles_per_batch, config.mode, config.renewal, config.optimizer);
    c.sample_budget = config.budget;
    c.max_cycle_steps = config.max_cycle_steps;
    c.biased = config.algorithm == Algorithm::RmcLrBiased;
    c.shared_run = config.shared_run;
    c.record_every = config.record_every.unwrap_or(1);
    c.spsa = config.spsa_c.map(|c| SpsaSettings {
        c,
        distribution: config.perturbation,
    });
    c
}

fn learn_on<E>(config: &ExperimentConfig, env: &E, policy0: &PolicyParams, rng: &mut SimRng) -> Result<RunResult>
where
    E: Environment,
    PolicyParams: Policy<E::State, E::Action>,
{
    let rmc = rmc_config(config);
    match config.algorithm {
        Algorithm::RmcLr | Algorithm::RmcLrBiased => rmc_run_lr(env, policy0, &rmc, rng),
        Algorithm::RmcSp => rmc_run_sp(env, policy0, &rmc, rng),
        other => Err(Error::Config(format!("{other} is not a renewal learner"))),
    }
}

/// Runs one replication's learner on its own stream of the master seed.
pub fn learn(config: &ExperimentConfig, model: &Model, policy0: &PolicyParams, replication: u64) -> Result<RunResult> {
    let mut rng = replication_rng(config.seed, replication);
    match (config.algorithm, model) {
        (Algorithm::SarsaLambda, Model::Tabular(m)) => {
            let sarsa = SarsaConfig {
                lambda: config.lambda,
                gamma: config.gamma,
                critic_rate: config.critic_rate,
                actor: config.optimizer,
                sample_budget: config.budget,
                record_every: config.record_every.unwrap_or((config.budget / 1000).max(1)),
            };
            Ok(sarsa_lambda_run(m, policy0, &sarsa, &mut rng)?.run)
        }
        (_, Model::Tabular(m)) => learn_on(config, m, policy0, &mut rng),
        (_, Model::Event(m)) => learn_on(config, m, policy0, &mut rng),
        (_, Model::Inventory(m)) => learn_on(config, m, policy0, &mut rng),
        (_, Model::Quadratic(m)) => learn_on(config, m, policy0, &mut rng),
    }
}

/// One per-iteration row of a learning run.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub iteration: u64,
    pub samples: u64,
    pub j_hat: f64,
    pub r_hat: Option<f64>,
    pub t_hat: Option<f64>,
    pub theta: Vec<f64>,
    pub j_eval: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Replication {
    pub index: u64,
    pub rows: Vec<Row>,
    /// `None` when the replication failed.
    pub final_theta: Option<Vec<f64>>,
    pub error: Option<String>,
    pub truncated: bool,
}

fn replication(config: &ExperimentConfig, model: &Model, policy0: &PolicyParams, index: u64) -> Result<Replication> {
    let run = match learn(config, model, policy0, index) {
        Ok(run) => run,
        Err(e @ Error::Truncation { .. }) => {
            return Ok(Replication {
                index,
                rows: Vec::new(),
                final_theta: None,
                error: Some(e.to_string()),
                truncated: true,
            })
        }
        Err(e) => return Err(e),
    };
    let mut eval_rng = replication_rng(config.seed, EVAL_STREAM | index);
    let last = run.records.len().saturating_sub(1);
    let mut rows = Vec::with_capacity(run.records.len());
    for (i, rec) in run.records.into_iter().enumerate() {
        let j_eval = if (i as u64).is_multiple_of(config.eval_every) || i == last {
            evaluate_params(config, model, &policy0.with_theta(&rec.theta)?, &mut eval_rng)?
        } else {
            None
        };
        rows.push(Row {
            iteration: rec.iteration,
            samples: rec.samples,
            j_hat: rec.j_hat,
            r_hat: rec.r_hat,
            t_hat: rec.t_hat,
            theta: rec.theta,
            j_eval,
        });
    }
    Ok(Replication {
        index,
        rows,
        final_theta: Some(run.final_policy.theta().to_vec()),
        error: None,
        truncated: false,
    })
}

/// Runs all replications of a learner experiment on `config.workers`
/// threads. The result is ordered by replication index and does not depend
/// on the worker count.
pub fn run_replications(config: &ExperimentConfig) -> Result<(Model, PolicyParams, Vec<Replication>)> {
    if !config.algorithm.is_learner() {
        return Err(Error::Config(format!("{} is an oracle, not a learner", config.algorithm)));
    }
    let model = build_model(config)?;
    let policy0 = initial_policy(config, &model)?;
    if let (Model::Tabular(_), RenewalRule::Ball { .. }) = (&model, config.renewal) {
        return Err(Error::Config("ball renewal on a tabular model is exact renewal; use `renewal = exact`".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let reps = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|i| replication(config, &model, &policy0, i))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((model, policy0, reps))
}

/// Reference quantities for a configured model.
#[derive(Clone, Debug, PartialEq)]
pub enum Oracle {
    ValueIteration(ValueSolution),
    Grid(GridSearchResult),
    Inventory {
        theta_star: f64,
        cost_star: f64,
        lipschitz: f64,
        bound: Option<f64>,
    },
    Quadratic {
        optimum: f64,
    },
}

/// Value iteration for tabular models, the closed form for inventory, the
/// analytic optimum for the quadratic bandit and a common-random-number
/// grid search otherwise (or whenever the algorithm is `grid_search`).
pub fn run_oracle(config: &ExperimentConfig) -> Result<Oracle> {
    let model = build_model(config)?;
    if config.algorithm == Algorithm::GridSearch || matches!(model, Model::Event(_)) {
        let policy = initial_policy(config, &model)?;
        let spec = config.grid.clone().unwrap_or(super::config::GridSpec {
            lo: config.theta_bounds.0,
            hi: config.theta_bounds.1,
            step: 0.1,
            reps: 10_000,
            horizon: crate::baselines::horizon_for(config.gamma, 1e-6),
        });
        let grid = uniform_grid(spec.lo, spec.hi, spec.step)?;
        let mut rng = replication_rng(config.seed, 0);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        let result = pool.install(|| match &model {
            Model::Event(m) => grid_search_threshold(m, &policy, &grid, spec.horizon, spec.reps, config.gamma, &mut rng),
            Model::Inventory(m) => grid_search_threshold(m, &policy, &grid, spec.horizon, spec.reps, config.gamma, &mut rng),
            Model::Quadratic(m) => grid_search_threshold(m, &policy, &grid, spec.horizon, spec.reps, config.gamma, &mut rng),
            Model::Tabular(_) => Err(Error::Config("grid search needs a scalar policy".into())),
        })?;
        return Ok(Oracle::Grid(result));
    }
    match &model {
        Model::Tabular(m) => Ok(Oracle::ValueIteration(value_iteration(m, config.gamma, config.vi_tol)?)),
        Model::Inventory(m) => {
            let theta_star = m.inventory_optimal_threshold()?;
            let lipschitz = m.lipschitz_constant();
            let bound = match config.renewal {
                RenewalRule::Ball { rho } => Some(approx_bound(lipschitz, rho, config.gamma, None, None)?),
                _ => None,
            };
            Ok(Oracle::Inventory {
                theta_star,
                cost_star: m.inventory_value(theta_star)?,
                lipschitz,
                bound,
            })
        }
        Model::Quadratic(m) => Ok(Oracle::Quadratic { optimum: m.optimum() }),
        Model::Event(_) => unreachable!("handled by the grid search above"),
    }
}

/// Monte Carlo evaluation of `theta` (default: `theta0`) with the
/// configured horizon and repetitions, plus the exact value where one is
/// available.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub theta: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub exact: Option<f64>,
}

pub fn evaluate_config(config: &ExperimentConfig, theta: Option<&[f64]>) -> Result<Evaluation> {
    let model = build_model(config)?;
    let mut policy = initial_policy(config, &model)?;
    if let Some(t) = theta {
        if t.len() != policy.dim() {
            return Err(Error::Config(format!("theta has {} entries, the policy has {}", t.len(), policy.dim())));
        }
        policy.set_theta(t)?;
    }
    let mut rng = replication_rng(config.seed, EVAL_STREAM);
    let (mean, std) = rollout_mean(config, &model, &policy, &mut rng)?;
    let exact = match &model {
        Model::Tabular(_) => evaluate_params(&ExperimentConfig { eval: EvalMethod::Exact, ..config.clone() }, &model, &policy, &mut rng)?,
        Model::Inventory(_) => evaluate_params(&ExperimentConfig { eval: EvalMethod::ClosedForm, ..config.clone() }, &model, &policy, &mut rng)?,
        _ => None,
    };
    Ok(Evaluation {
        theta: policy.theta().to_vec(),
        mean,
        std,
        exact,
    })
}
