use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gradient::PerturbationDist;
use crate::optim::{AdamConfig, OptimizerConfig};
use crate::renewal::{Mode, RenewalRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    RmcLr,
    RmcLrBiased,
    RmcSp,
    SarsaLambda,
    ValueIteration,
    GridSearch,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::RmcLr => "rmc_lr",
            Algorithm::RmcLrBiased => "rmc_lr_biased",
            Algorithm::RmcSp => "rmc_sp",
            Algorithm::SarsaLambda => "sarsa_lambda",
            Algorithm::ValueIteration => "value_iteration",
            Algorithm::GridSearch => "grid_search",
        }
    }

    /// Learners produce per-iteration records; the others are oracles.
    pub fn is_learner(self) -> bool {
        matches!(
            self,
            Algorithm::RmcLr | Algorithm::RmcLrBiased | Algorithm::RmcSp | Algorithm::SarsaLambda
        )
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rmc_lr" => Algorithm::RmcLr,
            "rmc_lr_biased" => Algorithm::RmcLrBiased,
            "rmc_sp" => Algorithm::RmcSp,
            "sarsa_lambda" => Algorithm::SarsaLambda,
            "value_iteration" => Algorithm::ValueIteration,
            "grid_search" => Algorithm::GridSearch,
            other => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnvSpec {
    Garnet {
        states: usize,
        actions: usize,
        branching: usize,
        reward_prob: f64,
        reward_range: (f64, f64),
        model_seed: u64,
    },
    TabularFile(PathBuf),
    EventTrigger {
        ar_coef: f64,
        comm_cost: f64,
        erasure_prob: f64,
    },
    Inventory {
        procurement: f64,
        holding: f64,
        backlog: f64,
        demand_rate: f64,
        clip: (f64, f64),
        start: f64,
    },
    Quadratic {
        optimum: f64,
        noise_std: f64,
    },
}

impl EnvSpec {
    pub fn family(&self) -> &'static str {
        match self {
            EnvSpec::Garnet { .. } => "garnet",
            EnvSpec::TabularFile(_) => "tabular",
            EnvSpec::EventTrigger { .. } => "event_trigger",
            EnvSpec::Inventory { .. } => "inventory",
            EnvSpec::Quadratic { .. } => "quadratic",
        }
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self, EnvSpec::Garnet { .. } | EnvSpec::TabularFile(_))
    }
}

/// How learned policies are scored in the `J_eval` column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMethod {
    None,
    /// Linear solve on a tabular model.
    Exact,
    /// Closed-form inventory value.
    ClosedForm,
    /// Truncated Monte Carlo rollouts.
    Rollout,
}

impl FromStr for EvalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => EvalMethod::None,
            "exact" => EvalMethod::Exact,
            "closed_form" => EvalMethod::ClosedForm,
            "rollout" => EvalMethod::Rollout,
            other => return Err(Error::Config(format!("unknown eval method `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub reps: usize,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub algorithm: Algorithm,
    pub env: EnvSpec,
    pub seed: u64,
    pub replications: u64,
    pub workers: usize,
    /// Output subdirectory (defaults to the experiment name).
    pub output: String,
    pub budget: u64,
    pub gamma: f64,
    pub mode: Mode,
    pub cycles_per_batch: usize,
    pub optimizer: OptimizerConfig,
    pub renewal: RenewalRule,
    pub shared_run: bool,
    pub max_cycle_steps: usize,
    /// Iterations between records for the renewal learners, environment
    /// steps for the actor-critic (default: budget / 1000).
    pub record_every: Option<u64>,
    pub spsa_c: Option<f64>,
    pub perturbation: PerturbationDist,
    pub theta0: Vec<f64>,
    pub theta_bounds: (f64, f64),
    pub temperature: f64,
    pub lambda: f64,
    pub critic_rate: f64,
    pub vi_tol: f64,
    pub grid: Option<GridSpec>,
    pub eval: EvalMethod,
    pub eval_every: u64,
    pub eval_horizon: usize,
    pub eval_reps: usize,
    pub checkpoints: u64,
    /// The section's key/value pairs as written, for the manifest.
    pub raw: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "algorithm", "env", "seed", "replications", "workers", "output", "budget", "gamma", "mode",
    "batch", "optimizer", "alpha", "beta1", "beta2", "epsilon", "sgd_a", "renewal", "rho",
    "shared_run", "max_cycle_steps", "record_every", "c", "perturbation", "theta0", "theta_lo",
    "theta_hi", "temperature", "lambda", "critic_rate", "tol", "grid_lo", "grid_hi", "grid_step",
    "grid_reps", "horizon", "eval", "eval_every", "eval_horizon", "eval_reps", "checkpoints",
    "states", "actions", "branching", "reward_prob", "reward_lo", "reward_hi", "model_seed",
    "model_path", "ar_coef", "comm_cost", "erasure_prob", "procurement", "holding", "backlog",
    "demand_rate", "clip_lo", "clip_hi", "start", "optimum", "noise_std",
];

struct Section<'a> {
    name: &'a str,
    keys: &'a BTreeMap<String, String>,
    base_dir: &'a Path,
}

impl Section<'_> {
    fn err(&self, msg: impl fmt::Display) -> Error {
        Error::Config(format!("[{}] {msg}", self.name))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.keys.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| self.err(format!("cannot parse `{key} = {v}`")))
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| self.err(format!("missing required key `{key}`")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| self.err(format!("cannot parse `{key} = {v}`")))
                    })
                    .collect()
            })
            .transpose()
    }
}

/// Parses `[name]` sections of `key = value` lines. `#` and `;` start
/// comments; blank lines are ignored.
pub fn parse_sections(text: &str) -> Result<Vec<(String, BTreeMap<String, String>)>> {
    let mut sections: Vec<(String, BTreeMap<String, String>)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| Error::Config(format!("line {}: malformed section header", no + 1)))?;
            if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::Config(format!(
                    "line {}: section name `{name}` may only use letters, digits, `_` and `-`",
                    no + 1
                )));
            }
            if sections.iter().any(|(n, _)| n == name) {
                return Err(Error::Config(format!("line {}: duplicate section `{name}`", no + 1)));
            }
            sections.push((name.to_string(), BTreeMap::new()));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
        let (_, keys) = sections
            .last_mut()
            .ok_or_else(|| Error::Config(format!("line {}: key outside of a section", no + 1)))?;
        let key = key.trim().to_string();
        if keys.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{key}`", no + 1)));
        }
    }
    Ok(sections)
}

/// Parses and validates every experiment in a config text. Relative model
/// paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<Vec<ExperimentConfig>> {
    let sections = parse_sections(text)?;
    if sections.is_empty() {
        return Err(Error::Config("config defines no experiments".into()));
    }
    sections
        .iter()
        .map(|(name, keys)| {
            ExperimentConfig::from_section(&Section {
                name,
                keys,
                base_dir,
            })
        })
        .collect()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Vec<ExperimentConfig>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

fn parse_bool(s: &Section, key: &str) -> Result<bool> {
    match s.raw(key) {
        None => Ok(false),
        Some("true" | "yes" | "1") => Ok(true),
        Some("false" | "no" | "0") => Ok(false),
        Some(v) => Err(s.err(format!("`{key} = {v}` is not a boolean"))),
    }
}

impl ExperimentConfig {
    fn from_section(s: &Section) -> Result<Self> {
        if let Some(k) = s.keys.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(s.err(format!("unknown key `{k}`")));
        }
        let algorithm: Algorithm = s.required::<String>("algorithm")?.parse().map_err(|e| s.err(e))?;
        let env = Self::env_spec(s)?;
        let gamma = s.or("gamma", 0.9)?;
        let mode = match s.raw("mode").unwrap_or("discounted") {
            "discounted" => Mode::Discounted(gamma),
            "average" => Mode::Average,
            other => return Err(s.err(format!("unknown mode `{other}`"))),
        };

        let alpha: Option<f64> = s.get("alpha")?;
        let optimizer = match s.raw("optimizer").unwrap_or("adam") {
            "adam" => {
                let mut c = AdamConfig::with_alpha(alpha.unwrap_or(0.05));
                c.beta1 = s.or("beta1", c.beta1)?;
                c.beta2 = s.or("beta2", c.beta2)?;
                c.epsilon = s.or("epsilon", c.epsilon)?;
                OptimizerConfig::Adam(c)
            }
            "plain_sgd" => OptimizerConfig::PlainSgd {
                a: s.required("sgd_a")?,
            },
            other => return Err(s.err(format!("unknown optimizer `{other}`"))),
        };

        let default_renewal = match env {
            EnvSpec::EventTrigger { .. } => "post_decision",
            EnvSpec::Inventory { .. } => "ball",
            _ => "exact",
        };
        let renewal = match s.raw("renewal").unwrap_or(default_renewal) {
            "exact" => RenewalRule::Exact,
            "post_decision" => RenewalRule::PostDecision,
            "ball" => RenewalRule::Ball { rho: s.required("rho")? },
            other => return Err(s.err(format!("unknown renewal rule `{other}`"))),
        };
        if s.raw("rho").is_some() && !matches!(renewal, RenewalRule::Ball { .. }) {
            return Err(s.err("`rho` only applies to `renewal = ball`"));
        }

        let perturbation = match s.raw("perturbation").unwrap_or("normal") {
            "normal" => PerturbationDist::Normal,
            "rademacher" => PerturbationDist::Rademacher,
            other => return Err(s.err(format!("unknown perturbation `{other}`"))),
        };

        let (default_theta, default_bounds) = match env {
            EnvSpec::EventTrigger { .. } => (5.0, (0.0, 30.0)),
            EnvSpec::Inventory { .. } => (10.0, (2.0, 100.0)),
            EnvSpec::Quadratic { .. } => (0.0, (0.0, 100.0)),
            _ => (0.0, (-30.0, 30.0)),
        };
        let theta0 = s.list("theta0")?.unwrap_or_else(|| vec![default_theta]);
        let theta_bounds = (s.or("theta_lo", default_bounds.0)?, s.or("theta_hi", default_bounds.1)?);

        let grid = match algorithm {
            Algorithm::GridSearch => Some(GridSpec {
                lo: s.or("grid_lo", theta_bounds.0)?,
                hi: s.or("grid_hi", theta_bounds.1)?,
                step: s.required("grid_step")?,
                reps: s.or("grid_reps", 100)?,
                horizon: s.get("horizon")?.unwrap_or_else(|| crate::baselines::horizon_for(gamma, 1e-6)),
            }),
            _ => None,
        };

        let default_eval = match env {
            _ if !algorithm.is_learner() => EvalMethod::None,
            EnvSpec::Garnet { .. } | EnvSpec::TabularFile(_) => EvalMethod::Exact,
            EnvSpec::Inventory { .. } => EvalMethod::ClosedForm,
            _ => EvalMethod::None,
        };

        let config = ExperimentConfig {
            name: s.name.to_string(),
            algorithm,
            seed: s.or("seed", 0)?,
            replications: s.or("replications", 1)?,
            workers: s.or("workers", 1)?,
            output: s.or("output", s.name.to_string())?,
            budget: s.or("budget", 0)?,
            gamma,
            mode,
            cycles_per_batch: s.or("batch", 5)?,
            optimizer,
            renewal,
            shared_run: parse_bool(s, "shared_run")?,
            max_cycle_steps: s.or("max_cycle_steps", 100_000)?,
            record_every: s.get("record_every")?,
            spsa_c: s.get("c")?,
            perturbation,
            theta0,
            theta_bounds,
            temperature: s.or("temperature", 1.0)?,
            lambda: s.or("lambda", 0.0)?,
            critic_rate: s.or("critic_rate", 0.1)?,
            vi_tol: s.or("tol", 1e-10)?,
            grid,
            eval: s.get::<String>("eval")?.map(|v| v.parse()).transpose().map_err(|e| s.err(e))?.unwrap_or(default_eval),
            eval_every: s.or("eval_every", 1)?,
            eval_horizon: s.or("eval_horizon", 250)?,
            eval_reps: s.or("eval_reps", 100)?,
            checkpoints: s.or("checkpoints", 100)?,
            raw: s.keys.clone(),
            env,
        };
        config.validate().map_err(|e| match e {
            Error::Config(m) => s.err(m),
            other => s.err(other),
        })?;
        Ok(config)
    }

    fn env_spec(s: &Section) -> Result<EnvSpec> {
        Ok(match s.required::<String>("env")?.as_str() {
            "garnet" => EnvSpec::Garnet {
                states: s.required("states")?,
                actions: s.required("actions")?,
                branching: s.required("branching")?,
                reward_prob: s.or("reward_prob", 0.05)?,
                reward_range: (s.or("reward_lo", 10.0)?, s.or("reward_hi", 100.0)?),
                model_seed: s.or("model_seed", 0)?,
            },
            "tabular" => {
                let p: PathBuf = s.required::<String>("model_path")?.into();
                EnvSpec::TabularFile(if p.is_relative() { s.base_dir.join(p) } else { p })
            }
            "event_trigger" => EnvSpec::EventTrigger {
                ar_coef: s.or("ar_coef", 1.0)?,
                comm_cost: s.or("comm_cost", 500.0)?,
                erasure_prob: s.or("erasure_prob", 0.0)?,
            },
            "inventory" => EnvSpec::Inventory {
                procurement: s.or("procurement", 1.5)?,
                holding: s.or("holding", 1.0)?,
                backlog: s.or("backlog", 1.0)?,
                demand_rate: s.or("demand_rate", 0.025)?,
                clip: (s.or("clip_lo", -100.0)?, s.or("clip_hi", 100.0)?),
                start: s.or("start", 1.0)?,
            },
            "quadratic" => EnvSpec::Quadratic {
                optimum: s.required("optimum")?,
                noise_std: s.or("noise_std", 1.0)?,
            },
            other => return Err(s.err(format!("unknown env `{other}`"))),
        })
    }

    /// Cross-field checks; errors are reported before any simulation runs.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let tabular = self.env.is_tabular();
        match self.algorithm {
            Algorithm::RmcLr | Algorithm::RmcLrBiased | Algorithm::SarsaLambda | Algorithm::ValueIteration
                if !tabular =>
            {
                return fail(format!(
                    "{} needs a tabular model with a soft-max policy, not `{}`",
                    self.algorithm,
                    self.env.family()
                ));
            }
            Algorithm::GridSearch if tabular => {
                return fail("grid_search needs a scalar threshold policy, not a tabular model".into());
            }
            _ => {}
        }
        if (self.algorithm == Algorithm::RmcSp) != self.spsa_c.is_some() {
            return fail("`c` is required for rmc_sp and only valid there".into());
        }
        if let Some(c) = self.spsa_c {
            if !(c > 0.0) {
                return fail(format!("perturbation size c = {c} must be positive"));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma = {} not in (0,1)", self.gamma));
        }
        if self.mode == Mode::Average && !tabular {
            return fail("average mode is only supported on tabular models".into());
        }
        if self.algorithm == Algorithm::SarsaLambda && self.mode == Mode::Average {
            return fail("sarsa_lambda is a discounted learner".into());
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.cycles_per_batch == 0 || self.record_every == Some(0) || self.eval_every == 0 || self.max_cycle_steps == 0 {
            return fail("batch, record_every, eval_every and max_cycle_steps must be positive".into());
        }
        if self.checkpoints == 0 {
            return fail("checkpoints must be positive".into());
        }
        if let OptimizerConfig::Adam(a) = self.optimizer {
            if !(a.alpha >= 0.0) || !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.epsilon > 0.0) {
                return fail("ADAM needs alpha >= 0, beta1 and beta2 in [0,1), epsilon > 0".into());
            }
        }
        if !(self.theta_bounds.0 <= self.theta_bounds.1) {
            return fail("theta_lo must not exceed theta_hi".into());
        }
        if !(self.temperature > 0.0) {
            return fail("temperature must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return fail(format!("lambda = {} not in [0,1]", self.lambda));
        }
        if !(self.vi_tol > 0.0) {
            return fail("tol must be positive".into());
        }
        if let Some(g) = &self.grid {
            if !(g.step > 0.0) || !(g.lo <= g.hi) || g.reps == 0 || g.horizon == 0 {
                return fail("grid needs grid_lo <= grid_hi, grid_step > 0, grid_reps and horizon >= 1".into());
            }
        }
        if self.eval == EvalMethod::Rollout && (self.eval_horizon == 0 || self.eval_reps == 0) {
            return fail("rollout evaluation needs eval_horizon and eval_reps >= 1".into());
        }
        match (self.eval, &self.env) {
            (EvalMethod::Exact, e) if !e.is_tabular() => return fail("exact evaluation needs a tabular model".into()),
            (EvalMethod::ClosedForm, e) if !matches!(e, EnvSpec::Inventory { .. }) => {
                return fail("closed_form evaluation is only available for inventory".into())
            }
            _ => {}
        }
        match self.env {
            EnvSpec::Garnet { states, actions, branching, reward_prob, reward_range, .. } => {
                if states == 0 || actions == 0 || branching == 0 || branching > states {
                    return fail("garnet needs states, actions >= 1 and 1 <= branching <= states".into());
                }
                if !(0.0..=1.0).contains(&reward_prob) || !(reward_range.0 <= reward_range.1) {
                    return fail("garnet needs reward_prob in [0,1] and reward_lo <= reward_hi".into());
                }
            }
            EnvSpec::EventTrigger { erasure_prob, comm_cost, .. } => {
                if !(0.0..=1.0).contains(&erasure_prob) || !(comm_cost >= 0.0) {
                    return fail("event_trigger needs erasure_prob in [0,1] and comm_cost >= 0".into());
                }
            }
            EnvSpec::Inventory { clip, start, .. } if !(clip.0 <= start && start <= clip.1) => {
                return fail("inventory start stock must lie in [clip_lo, clip_hi]".into());
            }
            _ => {}
        }
        if matches!(self.renewal, RenewalRule::PostDecision) && !matches!(self.env, EnvSpec::EventTrigger { .. }) {
            return fail("post_decision renewal needs the event_trigger model".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<ExperimentConfig>> {
        parse_config(text, Path::new("."))
    }

    #[test]
    fn sections_and_comments() {
        let s = parse_sections("# top\n[a]\nx = 1 ; trailing\n\n[b]\ny=two\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].1["x"], "1");
        assert_eq!(s[1].1["y"], "two");
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(parse_sections("x = 1\n").is_err());
        assert!(parse_sections("[a]\nnot a pair\n").is_err());
        assert!(parse_sections("[a]\n[a]\n").is_err());
        assert!(parse_sections("[a]\nx=1\nx=2\n").is_err());
        assert!(parse_sections("[a b]\n").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn inventory_defaults() {
        let c = &parse("[inv]\nalgorithm = rmc_sp\nenv = inventory\nrho = 0.5\nc = 3\n").unwrap()[0];
        assert_eq!(c.renewal, RenewalRule::Ball { rho: 0.5 });
        assert_eq!(c.eval, EvalMethod::ClosedForm);
        assert_eq!(c.theta0, vec![10.0]);
        assert_eq!(c.output, "inv");
    }

    #[test]
    fn spsa_size_required_iff_sp() {
        assert!(parse("[x]\nalgorithm = rmc_sp\nenv = quadratic\noptimum = 1\n").is_err());
        assert!(parse("[x]\nalgorithm = rmc_lr\nenv = garnet\nstates=4\nactions=2\nbranching=2\nc = 1\n").is_err());
        assert!(parse("[x]\nalgorithm = rmc_sp\nenv = quadratic\noptimum = 1\nc = 0.5\n").is_ok());
    }

    #[test]
    fn lr_needs_tabular_model() {
        let err = parse("[x]\nalgorithm = rmc_lr\nenv = inventory\nrho = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("tabular"), "{err}");
    }

    #[test]
    fn unknown_keys_and_values_rejected() {
        assert!(parse("[x]\nalgorithm = rmc_lr\nenv = garnet\nstates=4\nactions=2\nbranching=2\nbogus=1\n").is_err());
        assert!(parse("[x]\nalgorithm = nope\nenv = garnet\n").is_err());
        assert!(parse("[x]\nalgorithm = rmc_lr\nenv = garnet\nstates=4\nactions=2\nbranching=9\n").is_err());
        assert!(parse("[x]\nalgorithm = rmc_lr\nenv = garnet\nstates=4\nactions=2\nbranching=2\ngamma=1\n").is_err());
        assert!(parse("[x]\nalgorithm = rmc_lr\nenv = garnet\nstates=4\nactions=2\nbranching=2\nshared_run=maybe\n").is_err());
    }

    #[test]
    fn theta_lists() {
        let c = &parse("[x]\nalgorithm = rmc_lr\nenv = garnet\nstates=2\nactions=2\nbranching=2\ntheta0 = 1, 2,3,4\n").unwrap()[0];
        assert_eq!(c.theta0, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(parse("[x]\nalgorithm = rmc_lr\nenv = garnet\nstates=2\nactions=2\nbranching=2\ntheta0 = 1,x\n").is_err());
    }

    #[test]
    fn relative_model_path_resolves_against_config_dir() {
        let c = &parse_config("[x]\nalgorithm = value_iteration\nenv = tabular\nmodel_path = m.txt\n", Path::new("/cfg")).unwrap()[0];
        assert_eq!(c.env, EnvSpec::TabularFile("/cfg/m.txt".into()));
    }

    #[test]
    fn grid_search_defaults_horizon() {
        let c = &parse("[g]\nalgorithm = grid_search\nenv = event_trigger\ngrid_step = 0.5\n").unwrap()[0];
        let g = c.grid.as_ref().unwrap();
        assert_eq!(g.horizon, 132);
        assert_eq!((g.lo, g.hi), (0.0, 30.0));
    }
}
