//! The renewal Monte Carlo learners: projected ascent on `H` with either
//! likelihood-ratio or simultaneous-perturbation estimates, plus the error
//! bound for approximate (ball) renewal.

use rand::Rng;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::gradient::{h_from_lr, h_from_sp, lr_gradient, spsa_perturb, PerturbationDist};
use crate::optim::{Optimizer, OptimizerConfig};
use crate::policy::{Policy, PolicyParams};
use crate::renewal::{collect_batch, cycle_stats, estimate_rt, performance, CycleStats, Mode, RegenerativeCycle, RenewalRule};
use crate::rng::fork;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpsaSettings {
    pub c: f64,
    pub distribution: PerturbationDist,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RmcConfig {
    /// Cycles per batch (`N`).
    pub cycles_per_batch: usize,
    pub mode: Mode,
    pub renewal: RenewalRule,
    /// Stop once this many environment steps have been spent.
    pub sample_budget: u64,
    /// Optional hard cap on the number of iterations.
    pub max_iterations: Option<u64>,
    /// Longest admissible cycle; longer ones abort the batch.
    pub max_cycle_steps: usize,
    pub optimizer: OptimizerConfig,
    /// Use the biased suffix weights in the likelihood-ratio estimator.
    pub biased: bool,
    /// Estimate `(R, T)` and their gradients from the same batch.
    pub shared_run: bool,
    /// Required by the simultaneous-perturbation learner.
    pub spsa: Option<SpsaSettings>,
    /// Keep every k-th iteration record (the last one is always kept).
    pub record_every: u64,
}

impl RmcConfig {
    pub fn new(cycles_per_batch: usize, mode: Mode, renewal: RenewalRule, optimizer: OptimizerConfig) -> Self {
        RmcConfig {
            cycles_per_batch,
            mode,
            renewal,
            sample_budget: 0,
            max_iterations: None,
            max_cycle_steps: 100_000,
            optimizer,
            biased: false,
            shared_run: false,
            spsa: None,
            record_every: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        if self.cycles_per_batch == 0 {
            return Err(Error::param("cycles per batch must be at least 1"));
        }
        if self.max_cycle_steps == 0 {
            return Err(Error::param("max cycle steps must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every must be at least 1"));
        }
        Ok(())
    }
}

/// State of one iteration, recorded with the parameters the batch was
/// collected under.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    /// Cumulative environment steps after this iteration.
    pub samples: u64,
    pub theta: Vec<f64>,
    pub r_hat: Option<f64>,
    pub t_hat: Option<f64>,
    pub j_hat: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub records: Vec<IterationRecord>,
    pub final_policy: PolicyParams,
    pub samples: u64,
}

impl RunResult {
    pub fn final_theta(&self) -> &[f64] {
        self.final_policy.theta()
    }
}

type Batch<E> = Vec<RegenerativeCycle<<E as Environment>::State, <E as Environment>::Action>>;

struct Sampler<'a, E: Environment> {
    env: &'a E,
    rule: RenewalRule,
    max_steps: usize,
    n: usize,
    state: E::State,
}

impl<E: Environment> Sampler<'_, E> {
    /// Collects a batch, retrying once from the same starting state with a
    /// fresh generator if a cycle exceeds the step limit.
    fn batch<P, R>(&mut self, policy: &P, rng: &mut R) -> Result<Batch<E>>
    where
        P: Policy<E::State, E::Action>,
        R: Rng + ?Sized,
    {
        let mut last_err = None;
        for _ in 0..2 {
            let mut sub = fork(rng);
            let mut state = self.state.clone();
            match collect_batch(self.env, policy, self.rule, self.max_steps, self.n, &mut state, &mut sub) {
                Ok(cycles) => {
                    self.state = state;
                    return Ok(cycles);
                }
                Err(e @ Error::Truncation { .. }) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_err.expect("two failed attempts"))
    }
}

fn batch_len<S, A>(cycles: &[RegenerativeCycle<S, A>]) -> u64 {
    cycles.iter().map(|c| c.len() as u64).sum()
}

fn batch_rt<S, A>(cycles: &[RegenerativeCycle<S, A>], mode: Mode) -> Result<(f64, f64)> {
    let stats: Vec<CycleStats> = cycles.iter().map(|c| cycle_stats(c, mode)).collect::<Result<_>>()?;
    estimate_rt(&stats)
}

struct Driver<'a> {
    config: &'a RmcConfig,
    optimizer: Optimizer,
    policy: PolicyParams,
    records: Vec<IterationRecord>,
    pending: Option<IterationRecord>,
    samples: u64,
    iteration: u64,
}

impl<'a> Driver<'a> {
    fn new(policy0: &PolicyParams, config: &'a RmcConfig) -> Result<Self> {
        config.validate()?;
        Ok(Driver {
            config,
            optimizer: Optimizer::new(policy0.dim(), config.optimizer),
            policy: policy0.clone(),
            records: Vec::new(),
            pending: None,
            samples: 0,
            iteration: 0,
        })
    }

    fn running(&self) -> bool {
        self.samples < self.config.sample_budget
            && self.config.max_iterations.is_none_or(|m| self.iteration < m)
    }

    /// Records the iteration, then applies `theta <- proj(theta + step(h))`.
    fn advance(&mut self, r_hat: f64, t_hat: f64, h: &[f64]) -> Result<()> {
        let record = IterationRecord {
            iteration: self.iteration,
            samples: self.samples,
            theta: self.policy.theta().to_vec(),
            r_hat: Some(r_hat),
            t_hat: Some(t_hat),
            j_hat: performance(r_hat, t_hat, self.config.mode)?,
        };
        let step = self.optimizer.step(h)?;
        let next: Vec<f64> = self.policy.theta().iter().zip(&step).map(|(t, s)| t + s).collect();
        self.policy.set_theta(&next)?;
        if self.iteration.is_multiple_of(self.config.record_every) {
            self.records.push(record);
            self.pending = None;
        } else {
            self.pending = Some(record);
        }
        self.iteration += 1;
        Ok(())
    }

    fn finish(mut self) -> RunResult {
        self.records.extend(self.pending.take());
        RunResult {
            records: self.records,
            final_policy: self.policy,
            samples: self.samples,
        }
    }
}

/// Likelihood-ratio learner.
///
/// Each iteration estimates `(R, T)` from one batch of `N` cycles and
/// `(grad R, grad T)` from a second, independent batch (or the same batch
/// when `shared_run` is set), forms `H = T grad R - R grad T` and takes a
/// projected ascent step.
pub fn rmc_run_lr<E, R>(env: &E, policy0: &PolicyParams, config: &RmcConfig, rng: &mut R) -> Result<RunResult>
where
    E: Environment,
    PolicyParams: Policy<E::State, E::Action>,
    R: Rng + ?Sized,
{
    if !policy0.family().is_differentiable() {
        return Err(Error::UnsupportedFamily {
            family: policy0.family().name(),
            operation: "likelihood-ratio gradients",
        });
    }
    config.renewal.validate(env)?;
    let mut driver = Driver::new(policy0, config)?;
    let mut sampler = Sampler {
        env,
        rule: config.renewal,
        max_steps: config.max_cycle_steps,
        n: config.cycles_per_batch,
        state: env.initial_state(rng),
    };
    while driver.running() {
        let first = sampler.batch(&driver.policy, rng)?;
        driver.samples += batch_len(&first);
        let (r_hat, t_hat) = batch_rt(&first, config.mode)?;
        let grad = if config.shared_run {
            lr_gradient(&first, config.mode, config.biased)?
        } else {
            let second = sampler.batch(&driver.policy, rng)?;
            driver.samples += batch_len(&second);
            lr_gradient(&second, config.mode, config.biased)?
        };
        let h = h_from_lr(r_hat, t_hat, &grad);
        driver.advance(r_hat, t_hat, &h)?;
    }
    Ok(driver.finish())
}

/// Simultaneous-perturbation learner: a batch at `theta`, a batch at the
/// projected perturbation `theta + c delta`, and
/// `H = delta (T R' - R T') / c`.
pub fn rmc_run_sp<E, R>(env: &E, policy0: &PolicyParams, config: &RmcConfig, rng: &mut R) -> Result<RunResult>
where
    E: Environment,
    PolicyParams: Policy<E::State, E::Action>,
    R: Rng + ?Sized,
{
    let spsa = config
        .spsa
        .ok_or_else(|| Error::param("simultaneous perturbation needs c and a perturbation distribution"))?;
    config.renewal.validate(env)?;
    let mut driver = Driver::new(policy0, config)?;
    let mut sampler = Sampler {
        env,
        rule: config.renewal,
        max_steps: config.max_cycle_steps,
        n: config.cycles_per_batch,
        state: env.initial_state(rng),
    };
    while driver.running() {
        let base = sampler.batch(&driver.policy, rng)?;
        driver.samples += batch_len(&base);
        let (r_hat, t_hat) = batch_rt(&base, config.mode)?;

        let (perturbation, shifted) =
            spsa_perturb(driver.policy.theta(), driver.policy.bounds(), spsa.c, spsa.distribution, rng)?;
        let perturbed_policy = driver.policy.with_theta(&shifted)?;
        let perturbed = sampler.batch(&perturbed_policy, rng)?;
        driver.samples += batch_len(&perturbed);
        let (r_pert, t_pert) = batch_rt(&perturbed, config.mode)?;

        let h = h_from_sp(r_hat, t_hat, r_pert, t_pert, &perturbation);
        driver.advance(r_hat, t_hat, &h)?;
    }
    Ok(driver.finish())
}

/// Bound on `|J - J_rho|` for ball renewal of radius `rho` around `s0`.
///
/// With cycle statistics `tbar = E[gamma^tau]` and `t = E[T]` the bound is
/// `L tbar rho / ((1 - gamma) t)`; without them it is the looser
/// `gamma L rho / (1 - gamma)`.
pub fn approx_bound(lipschitz: f64, rho: f64, gamma: f64, tbar: Option<f64>, t: Option<f64>) -> Result<f64> {
    if !(lipschitz >= 0.0) || !(rho >= 0.0) {
        return Err(Error::param("Lipschitz constant and radius must be nonnegative"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(format!("discount {gamma} not in (0,1)")));
    }
    match (tbar, t) {
        (None, None) => Ok(gamma * lipschitz * rho / (1.0 - gamma)),
        (Some(tbar), Some(t)) => {
            if !(0.0..=gamma).contains(&tbar) || !(t >= 1.0) {
                return Err(Error::param(format!(
                    "cycle statistics out of range: tbar {tbar} must be in [0, gamma], T {t} must be >= 1"
                )));
            }
            Ok(lipschitz * tbar * rho / ((1.0 - gamma) * t))
        }
        _ => Err(Error::param("supply both cycle statistics or neither")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Inventory, QuadraticBandit, TabularMDP};
    use crate::optim::AdamConfig;
    use crate::rng::replication_rng;

    fn gate_mdp() -> TabularMDP {
        // Two states, uniform transitions; action 1 pays 1, action 0 pays 0.
        TabularMDP::new(2, 2, vec![0.5; 8], vec![0.0, 1.0, 0.0, 1.0], 0).unwrap()
    }

    fn lr_config(alpha: f64, budget: u64) -> RmcConfig {
        let mut c = RmcConfig::new(
            5,
            Mode::Discounted(0.9),
            RenewalRule::Exact,
            OptimizerConfig::Adam(AdamConfig::with_alpha(alpha)),
        );
        c.sample_budget = budget;
        c
    }

    #[test]
    fn gate_mdp_learns_rewarding_action() {
        let env = gate_mdp();
        let p0 = PolicyParams::gibbs(2, 2, 1.0, -30.0, 30.0).unwrap();
        let res = rmc_run_lr(&env, &p0, &lr_config(0.05, 200_000), &mut replication_rng(1, 0)).unwrap();
        for s in 0..2 {
            let probs = res.final_policy.action_probabilities(s).unwrap();
            assert!(probs[1] > 0.95, "state {s}: {probs:?}");
        }
    }

    #[test]
    fn zero_rate_keeps_theta() {
        let env = gate_mdp();
        let p0 = PolicyParams::new(
            p_family(),
            vec![0.3, -0.1, 0.2, 0.0],
            crate::policy::Bounds::uniform(4, -30.0, 30.0).unwrap(),
        )
        .unwrap();
        let res = rmc_run_lr(&env, &p0, &lr_config(0.0, 5_000), &mut replication_rng(1, 0)).unwrap();
        assert!(res.records.iter().all(|r| r.theta == p0.theta()));
        assert_eq!(res.final_theta(), p0.theta());
    }

    fn p_family() -> crate::policy::PolicyFamily {
        crate::policy::PolicyFamily::GibbsTabular {
            n_states: 2,
            n_actions: 2,
            temperature: 1.0,
        }
    }

    #[test]
    fn records_are_consistent() {
        let env = gate_mdp();
        let p0 = PolicyParams::gibbs(2, 2, 1.0, -30.0, 30.0).unwrap();
        let res = rmc_run_lr(&env, &p0, &lr_config(0.05, 20_000), &mut replication_rng(2, 0)).unwrap();
        assert!(res.records.windows(2).all(|w| w[0].samples <= w[1].samples));
        assert!(res.samples >= 20_000);
        for r in &res.records {
            let j = performance(r.r_hat.unwrap(), r.t_hat.unwrap(), Mode::Discounted(0.9)).unwrap();
            assert_eq!(j, r.j_hat);
            assert!(r.theta.iter().all(|t| (-30.0..=30.0).contains(t)));
        }
    }

    #[test]
    fn zero_budget_runs_no_iterations() {
        let env = gate_mdp();
        let p0 = PolicyParams::gibbs(2, 2, 1.0, -30.0, 30.0).unwrap();
        let res = rmc_run_lr(&env, &p0, &lr_config(0.05, 0), &mut replication_rng(2, 0)).unwrap();
        assert!(res.records.is_empty());
        assert_eq!(res.samples, 0);
    }

    #[test]
    fn sparse_recording_keeps_last_iteration() {
        let env = gate_mdp();
        let p0 = PolicyParams::gibbs(2, 2, 1.0, -30.0, 30.0).unwrap();
        let mut c = lr_config(0.05, u64::MAX);
        c.max_iterations = Some(23);
        c.record_every = 10;
        let res = rmc_run_lr(&env, &p0, &c, &mut replication_rng(2, 0)).unwrap();
        let its: Vec<u64> = res.records.iter().map(|r| r.iteration).collect();
        assert_eq!(its, vec![0, 10, 20, 22]);
    }

    #[test]
    fn identical_seeds_replay_bit_for_bit() {
        let env = gate_mdp();
        let p0 = PolicyParams::gibbs(2, 2, 1.0, -30.0, 30.0).unwrap();
        let c = lr_config(0.05, 10_000);
        let a = rmc_run_lr(&env, &p0, &c, &mut replication_rng(3, 4)).unwrap();
        let b = rmc_run_lr(&env, &p0, &c, &mut replication_rng(3, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lr_rejects_deterministic_policy() {
        let env = Inventory::reference();
        let p0 = PolicyParams::base_stock(10.0, 2.0, 100.0).unwrap();
        let mut c = lr_config(0.1, 1000);
        c.renewal = RenewalRule::Ball { rho: 0.5 };
        assert!(matches!(
            rmc_run_lr(&env, &p0, &c, &mut replication_rng(0, 0)),
            Err(Error::UnsupportedFamily { .. })
        ));
    }

    fn quadratic_config(budget: u64) -> RmcConfig {
        let mut c = RmcConfig::new(
            10,
            Mode::Discounted(0.9),
            RenewalRule::Exact,
            OptimizerConfig::Adam(AdamConfig::with_alpha(0.05)),
        );
        c.sample_budget = budget;
        c.spsa = Some(SpsaSettings {
            c: 0.3,
            distribution: PerturbationDist::Normal,
        });
        c
    }

    #[test]
    fn spsa_finds_quadratic_optimum() {
        let env = QuadraticBandit::new(5.0, 1.0).unwrap();
        let p0 = PolicyParams::base_stock(1.0, 0.0, 20.0).unwrap();
        let res = rmc_run_sp(&env, &p0, &quadratic_config(200_000), &mut replication_rng(6, 0)).unwrap();
        let theta = res.final_theta()[0];
        assert!((theta - 5.0).abs() < 0.1, "theta = {theta}");
    }

    #[test]
    fn spsa_needs_settings() {
        let env = QuadraticBandit::new(5.0, 1.0).unwrap();
        let p0 = PolicyParams::base_stock(1.0, 0.0, 20.0).unwrap();
        let mut c = quadratic_config(100);
        c.spsa = None;
        assert!(rmc_run_sp(&env, &p0, &c, &mut replication_rng(0, 0)).is_err());
    }

    #[test]
    fn truncation_fails_run_after_retry() {
        // Base stock far below s0: the stock only drifts down and never
        // re-enters the renewal ball.
        let env = Inventory::reference();
        let p0 = PolicyParams::base_stock(-10.0, -10.0, 100.0).unwrap();
        let mut c = quadratic_config(10_000);
        c.renewal = RenewalRule::Ball { rho: 0.5 };
        c.max_cycle_steps = 200;
        let err = rmc_run_sp(&env, &p0, &c, &mut replication_rng(0, 0)).unwrap_err();
        assert!(matches!(err, Error::Truncation { max_steps: 200 }));
    }

    #[test]
    fn bound_examples() {
        assert_eq!(approx_bound(7.0 / 6.0, 0.0, 0.9, None, None).unwrap(), 0.0);
        let loose = approx_bound(7.0 / 6.0, 0.5, 0.9, None, None).unwrap();
        assert!((loose - 5.25).abs() < 1e-12);
        let tight = approx_bound(7.0 / 6.0, 0.5, 0.9, Some(0.6), Some(4.0)).unwrap();
        assert!(tight <= loose);
        assert!(approx_bound(1.0, 0.5, 0.9, Some(0.95), Some(2.0)).is_err());
        assert!(approx_bound(1.0, 0.5, 0.9, Some(0.5), Some(0.5)).is_err());
        assert!(approx_bound(1.0, 0.5, 0.9, Some(0.5), None).is_err());
        assert!(approx_bound(-1.0, 0.5, 0.9, None, None).is_err());
    }

    proptest::proptest! {
        #[test]
        fn tight_bound_never_exceeds_loose(l in 0.0f64..10.0, rho in 0.0f64..3.0, g in 0.05f64..0.99, frac in 0.0f64..1.0, t in 1.0f64..50.0) {
            let tight = approx_bound(l, rho, g, Some(frac * g), Some(t)).unwrap();
            let loose = approx_bound(l, rho, g, None, None).unwrap();
            proptest::prop_assert!(tight <= loose * (1.0 + 1e-12));
        }
    }
}
