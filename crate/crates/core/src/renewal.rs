//! Regenerative cycles and their discounted reward/time statistics.
//!
//! All discounting is relative to the start of the cycle. Multiplying the
//! cycle sums by `gamma^-tau` (the absolute start time) would give the same
//! values but overflows on long runs.

use rand::Rng;

use crate::env::{Environment, Transition};
use crate::error::{Error, Result};
use crate::policy::{Policy, Score};

/// Discounted or average-reward objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Discounted(f64),
    Average,
}

impl Mode {
    pub fn validate(&self) -> Result<()> {
        match self {
            Mode::Discounted(g) if !(*g > 0.0 && *g < 1.0) => {
                Err(Error::param(format!("discount {g} not in (0,1)")))
            }
            _ => Ok(()),
        }
    }

    /// Per-step weight: `gamma`, or 1 in average mode.
    pub fn factor(&self) -> f64 {
        match self {
            Mode::Discounted(g) => *g,
            Mode::Average => 1.0,
        }
    }
}

/// When a cycle ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RenewalRule {
    /// The state reached after a step equals `s0`.
    Exact,
    /// The post-decision state of the step equals the post-decision start
    /// state; the cycle ends after that step.
    PostDecision,
    /// The state reached after a step lies within `rho` of `s0`.
    Ball { rho: f64 },
}

/// `d(state, s0) <= rho`.
pub fn renewal_predicate_ball<S>(state: &S, start: &S, rho: f64, metric: impl Fn(&S, &S) -> f64) -> bool {
    metric(state, start) <= rho
}

/// `state == s0` under the metric, i.e. the `rho = 0` ball.
pub fn renewal_predicate_exact<S>(state: &S, start: &S, metric: impl Fn(&S, &S) -> f64) -> bool {
    renewal_predicate_ball(state, start, 0.0, metric)
}

impl RenewalRule {
    pub fn validate<E: Environment>(&self, env: &E) -> Result<()> {
        match self {
            RenewalRule::Ball { rho } if !(*rho >= 0.0) => {
                Err(Error::param(format!("renewal radius {rho} must be nonnegative")))
            }
            RenewalRule::PostDecision if !env.is_post_decision() => Err(Error::param(
                "post-decision renewal needs an environment with post-decision states",
            )),
            _ => Ok(()),
        }
    }

    pub fn fires<E: Environment>(&self, env: &E, start: &E::State, tr: &Transition<E::State>) -> bool {
        let metric = |a: &E::State, b: &E::State| env.distance(a, b);
        match self {
            RenewalRule::Exact => renewal_predicate_exact(&tr.next_state, start, metric),
            RenewalRule::Ball { rho } => renewal_predicate_ball(&tr.next_state, start, *rho, metric),
            RenewalRule::PostDecision => tr
                .post_state
                .as_ref()
                .is_some_and(|p| renewal_predicate_exact(p, start, metric)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredStep<S, A> {
    pub state: S,
    pub action: A,
    pub reward: f64,
    pub score: Score,
}

/// Steps from one renewal up to (not including) the next.
#[derive(Clone, Debug, PartialEq)]
pub struct RegenerativeCycle<S, A> {
    pub steps: Vec<ScoredStep<S, A>>,
}

impl<S, A> RegenerativeCycle<S, A> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.reward)
    }
}

/// Collection failure: either the environment/policy rejected a step, or no
/// renewal happened within the step limit.
#[derive(Debug)]
pub enum CycleError<S, A> {
    Truncated {
        max_steps: usize,
        partial: RegenerativeCycle<S, A>,
    },
    Step(Error),
}

impl<S, A> From<CycleError<S, A>> for Error {
    fn from(e: CycleError<S, A>) -> Self {
        match e {
            CycleError::Truncated { max_steps, .. } => Error::Truncation { max_steps },
            CycleError::Step(e) => e,
        }
    }
}

/// Rolls the environment forward from `state` until the renewal rule fires.
///
/// On success `state` holds the state from which the next cycle starts.
/// The starting state itself never ends a cycle.
pub fn collect_cycle<E, P, R>(
    env: &E,
    policy: &P,
    rule: RenewalRule,
    max_steps: usize,
    state: &mut E::State,
    rng: &mut R,
) -> Result<RegenerativeCycle<E::State, E::Action>, CycleError<E::State, E::Action>>
where
    E: Environment,
    P: Policy<E::State, E::Action>,
    R: Rng + ?Sized,
{
    let start = env.start_state();
    let mut steps = Vec::new();
    while steps.len() < max_steps {
        let (action, score) = policy.sample_scored(state, rng).map_err(CycleError::Step)?;
        let tr = env.step(state, &action, rng).map_err(CycleError::Step)?;
        let renewed = rule.fires(env, &start, &tr);
        let current = std::mem::replace(state, tr.next_state);
        steps.push(ScoredStep {
            state: current,
            action,
            reward: tr.reward,
            score,
        });
        if renewed {
            return Ok(RegenerativeCycle { steps });
        }
    }
    Err(CycleError::Truncated {
        max_steps,
        partial: RegenerativeCycle { steps },
    })
}

/// `n` consecutive cycles.
pub fn collect_batch<E, P, R>(
    env: &E,
    policy: &P,
    rule: RenewalRule,
    max_steps: usize,
    n: usize,
    state: &mut E::State,
    rng: &mut R,
) -> Result<Vec<RegenerativeCycle<E::State, E::Action>>>
where
    E: Environment,
    P: Policy<E::State, E::Action>,
    R: Rng + ?Sized,
{
    (0..n)
        .map(|_| collect_cycle(env, policy, rule, max_steps, state, rng).map_err(Error::from))
        .collect()
}

/// Reward and time of one cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleStats {
    pub reward: f64,
    pub time: f64,
    pub length: usize,
}

pub fn cycle_stats<S, A>(cycle: &RegenerativeCycle<S, A>, mode: Mode) -> Result<CycleStats> {
    if cycle.is_empty() {
        return Err(Error::Empty("cycle"));
    }
    mode.validate()?;
    let g = mode.factor();
    let (mut reward, mut time, mut w) = (0.0, 0.0, 1.0);
    for r in cycle.rewards() {
        reward += w * r;
        time += w;
        w *= g;
    }
    Ok(CycleStats {
        reward,
        time,
        length: cycle.len(),
    })
}

/// Sample means `(R_hat, T_hat)`.
pub fn estimate_rt(stats: &[CycleStats]) -> Result<(f64, f64)> {
    if stats.is_empty() {
        return Err(Error::Empty("cycle statistics"));
    }
    let n = stats.len() as f64;
    let r = stats.iter().map(|s| s.reward).sum::<f64>() / n;
    let t = stats.iter().map(|s| s.time).sum::<f64>() / n;
    Ok((r, t))
}

/// `R/((1-gamma) T)` in discounted mode, `R/T` in average mode.
pub fn performance(r_hat: f64, t_hat: f64, mode: Mode) -> Result<f64> {
    if !(t_hat > 0.0) {
        return Err(Error::Domain(format!("cycle time estimate {t_hat} must be positive")));
    }
    mode.validate()?;
    Ok(match mode {
        Mode::Discounted(g) => r_hat / ((1.0 - g) * t_hat),
        Mode::Average => r_hat / t_hat,
    })
}

/// Ratio estimate of the performance with a delta-method standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerformanceEstimate {
    pub r_hat: f64,
    pub t_hat: f64,
    pub j_hat: f64,
    pub std_error: f64,
    pub n_cycles: usize,
}

pub fn estimate_performance(stats: &[CycleStats], mode: Mode) -> Result<PerformanceEstimate> {
    let (r_hat, t_hat) = estimate_rt(stats)?;
    let j_hat = performance(r_hat, t_hat, mode)?;
    let scale = match mode {
        Mode::Discounted(g) => 1.0 - g,
        Mode::Average => 1.0,
    };
    // Residuals of the linearized ratio R - J * scale * T.
    let n = stats.len() as f64;
    let var = if stats.len() > 1 {
        stats
            .iter()
            .map(|s| (s.reward - j_hat * scale * s.time).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    Ok(PerformanceEstimate {
        r_hat,
        t_hat,
        j_hat,
        std_error: var.sqrt() / (scale * t_hat * n.sqrt()),
        n_cycles: stats.len(),
    })
}

/// Tail sums `(R_sigma, T_sigma)` from within-cycle index `sigma`.
///
/// Unbiased: weights `gamma^k` with `k` the offset from the cycle start.
/// Biased: weights `gamma^(k - sigma)`.
pub fn suffix_stats<S, A>(
    cycle: &RegenerativeCycle<S, A>,
    sigma: usize,
    mode: Mode,
    biased: bool,
) -> Result<(f64, f64)> {
    if sigma >= cycle.len() {
        return Err(Error::param(format!(
            "suffix index {sigma} outside cycle of length {}",
            cycle.len()
        )));
    }
    mode.validate()?;
    let g = mode.factor();
    let mut w = if biased { 1.0 } else { g.powi(sigma as i32) };
    let (mut r, mut t) = (0.0, 0.0);
    for step in &cycle.steps[sigma..] {
        r += w * step.reward;
        t += w;
        w *= g;
    }
    Ok((r, t))
}

/// `(R_sigma, T_sigma)` for every `sigma` in one backward pass.
pub fn suffix_profile<S, A>(cycle: &RegenerativeCycle<S, A>, mode: Mode, biased: bool) -> Vec<(f64, f64)> {
    let g = mode.factor();
    let len = cycle.len();
    let mut out = vec![(0.0, 0.0); len];
    if biased {
        let (mut r, mut t) = (0.0, 0.0);
        for k in (0..len).rev() {
            r = cycle.steps[k].reward + g * r;
            t = 1.0 + g * t;
            out[k] = (r, t);
        }
    } else {
        let mut powers = Vec::with_capacity(len);
        let mut w = 1.0;
        for _ in 0..len {
            powers.push(w);
            w *= g;
        }
        let (mut r, mut t) = (0.0, 0.0);
        for k in (0..len).rev() {
            r += powers[k] * cycle.steps[k].reward;
            t += powers[k];
            out[k] = (r, t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EventTrigger, TabularMDP};
    use crate::policy::PolicyParams;
    use crate::rng::replication_rng;
    use proptest::prelude::*;

    fn cycle_from(rewards: &[f64]) -> RegenerativeCycle<usize, usize> {
        RegenerativeCycle {
            steps: rewards
                .iter()
                .map(|r| ScoredStep {
                    state: 0,
                    action: 0,
                    reward: *r,
                    score: Score::zero(1),
                })
                .collect(),
        }
    }

    fn two_state_loop() -> TabularMDP {
        TabularMDP::new(2, 1, vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 2.0], 0).unwrap()
    }

    #[test]
    fn two_term_cycle() {
        let c = cycle_from(&[1.0, 2.0]);
        let s = cycle_stats(&c, Mode::Discounted(0.9)).unwrap();
        assert!((s.reward - 2.8).abs() < 1e-15);
        assert!((s.time - 1.9).abs() < 1e-15);
        let avg = cycle_stats(&c, Mode::Average).unwrap();
        assert_eq!((avg.reward, avg.time), (3.0, 2.0));
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(cycle_stats(&cycle_from(&[]), Mode::Average).is_err());
        assert!(estimate_rt(&[]).is_err());
        assert!(performance(1.0, 0.0, Mode::Average).is_err());
        assert!(suffix_stats(&cycle_from(&[1.0]), 1, Mode::Average, false).is_err());
    }

    #[test]
    fn estimator_means() {
        let s = |r| CycleStats {
            reward: r,
            time: 1.0,
            length: 1,
        };
        assert_eq!(estimate_rt(&[s(1.0)]).unwrap(), (1.0, 1.0));
        assert_eq!(estimate_rt(&[s(1.0), s(3.0)]).unwrap(), (2.0, 1.0));
    }

    #[test]
    fn performance_examples() {
        let j = performance(2.8, 1.9, Mode::Discounted(0.9)).unwrap();
        assert!((j - 2.8 / 0.19).abs() < 1e-12);
        assert!((j - 14.7368).abs() < 1e-4);
        // Unit-length cycles with reward r give r / (1 - gamma).
        let j = performance(3.0, 1.0, Mode::Discounted(0.75)).unwrap();
        assert!((j - 12.0).abs() < 1e-12);
    }

    #[test]
    fn suffix_examples() {
        let c = cycle_from(&[1.0, 2.0]);
        let m = Mode::Discounted(0.9);
        let (r0, t0) = suffix_stats(&c, 0, m, false).unwrap();
        let full = cycle_stats(&c, m).unwrap();
        assert_eq!((r0, t0), (full.reward, full.time));
        let (ru, tu) = suffix_stats(&c, 1, m, false).unwrap();
        let (rb, tb) = suffix_stats(&c, 1, m, true).unwrap();
        assert!((ru - 1.8).abs() < 1e-15 && (tu - 0.9).abs() < 1e-15);
        assert_eq!((rb, tb), (2.0, 1.0));
    }

    #[test]
    fn absorbing_start_gives_unit_cycles() {
        let m = TabularMDP::new(2, 1, vec![1.0, 0.0, 1.0, 0.0], vec![1.0, 0.0], 0).unwrap();
        let p = PolicyParams::gibbs(2, 1, 1.0, -1.0, 1.0).unwrap();
        let mut rng = replication_rng(0, 0);
        let mut s = 0;
        for _ in 0..10 {
            let c = collect_cycle(&m, &p, RenewalRule::Exact, 10, &mut s, &mut rng).unwrap();
            assert_eq!(c.len(), 1);
        }
    }

    #[test]
    fn deterministic_loop_has_length_two() {
        let m = two_state_loop();
        let p = PolicyParams::gibbs(2, 1, 1.0, -1.0, 1.0).unwrap();
        let mut rng = replication_rng(0, 0);
        let mut s = 0;
        let c = collect_cycle(&m, &p, RenewalRule::Exact, 10, &mut s, &mut rng).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.steps[0].state, 0);
        assert_eq!(c.steps[1].state, 1);
        assert_eq!(s, 0);
    }

    #[test]
    fn truncation_carries_partial_cycle() {
        let m = TabularMDP::new(2, 1, vec![0.0, 1.0, 0.0, 1.0], vec![0.0, 0.0], 0).unwrap();
        let p = PolicyParams::gibbs(2, 1, 1.0, -1.0, 1.0).unwrap();
        let mut s = 0;
        match collect_cycle(&m, &p, RenewalRule::Exact, 5, &mut s, &mut replication_rng(0, 0)) {
            Err(CycleError::Truncated { max_steps, partial }) => {
                assert_eq!(max_steps, 5);
                assert_eq!(partial.len(), 5);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn always_transmitting_with_perfect_channel_renews_every_step() {
        let env = EventTrigger::new(1.0, 500.0, 0.0).unwrap();
        let p = PolicyParams::threshold(0.0, 0.0, 30.0).unwrap();
        let mut rng = replication_rng(0, 0);
        let mut s = env.initial_state(&mut rng);
        for _ in 0..100 {
            let c = collect_cycle(&env, &p, RenewalRule::PostDecision, 10, &mut s, &mut rng).unwrap();
            assert_eq!(c.len(), 1);
            assert_eq!(c.steps[0].reward, -500.0);
        }
    }

    #[test]
    fn post_decision_cycles_end_exactly_at_successful_transmissions() {
        let env = EventTrigger::new(1.0, 10.0, 0.3).unwrap();
        let p = PolicyParams::threshold(1.5, 0.0, 30.0).unwrap();
        let mut rng = replication_rng(5, 0);
        let mut s = env.initial_state(&mut rng);
        for _ in 0..500 {
            let c = collect_cycle(&env, &p, RenewalRule::PostDecision, 100_000, &mut s, &mut rng).unwrap();
            let n = c.len();
            for (k, step) in c.steps.iter().enumerate() {
                let transmitted = step.action == 1;
                // A delivered message pays only the communication cost; an
                // erased one also pays the squared error, which is nonzero
                // almost surely.
                let delivered = transmitted && step.reward == -10.0;
                assert_eq!(delivered, k + 1 == n, "step {k} of {n}");
            }
        }
    }

    #[test]
    fn post_decision_rule_requires_post_decision_env() {
        assert!(RenewalRule::PostDecision.validate(&two_state_loop()).is_err());
        assert!(RenewalRule::Ball { rho: -1.0 }.validate(&two_state_loop()).is_err());
    }

    #[test]
    fn ball_predicate_examples() {
        let d = |a: &f64, b: &f64| (a - b).abs();
        assert!(renewal_predicate_ball(&1.4, &1.0, 0.5, d));
        assert!(!renewal_predicate_ball(&1.6, &1.0, 0.5, d));
        assert!(renewal_predicate_exact(&1.0, &1.0, d));
        assert!(!renewal_predicate_exact(&(1.0 + 1e-12), &1.0, d));
        assert_eq!(d(&1.4, &1.0), d(&1.0, &1.4));
    }

    proptest! {
        #[test]
        fn geometric_identity_per_cycle(rewards in proptest::collection::vec(-10.0f64..10.0, 1..300), g in 0.05f64..0.99) {
            let c = cycle_from(&rewards);
            let s = cycle_stats(&c, Mode::Discounted(g)).unwrap();
            prop_assert!((g.powi(s.length as i32) + (1.0 - g) * s.time - 1.0).abs() <= 1e-12);
            prop_assert!(s.time >= 1.0 && s.time <= 1.0 / (1.0 - g) + 1e-12);
        }

        #[test]
        fn constant_reward_factorizes(r in -5.0f64..5.0, len in 1usize..50, g in 0.1f64..0.99) {
            let c = cycle_from(&vec![r; len]);
            let s = cycle_stats(&c, Mode::Discounted(g)).unwrap();
            prop_assert!((s.reward - r * s.time).abs() <= 1e-12 * (1.0 + s.reward.abs()));
        }

        #[test]
        fn biased_suffix_is_rescaled_unbiased(rewards in proptest::collection::vec(-10.0f64..10.0, 1..40), g in 0.1f64..0.99) {
            let c = cycle_from(&rewards);
            let m = Mode::Discounted(g);
            let ub = suffix_profile(&c, m, false);
            let b = suffix_profile(&c, m, true);
            for sigma in 0..c.len() {
                let scale = g.powi(-(sigma as i32));
                prop_assert!((b[sigma].0 - scale * ub[sigma].0).abs() <= 1e-9 * (1.0 + b[sigma].0.abs()));
                prop_assert!((b[sigma].1 - scale * ub[sigma].1).abs() <= 1e-9 * (1.0 + b[sigma].1.abs()));
                let direct = suffix_stats(&c, sigma, m, false).unwrap();
                prop_assert!((direct.0 - ub[sigma].0).abs() <= 1e-10 * (1.0 + direct.0.abs()));
            }
        }
    }
}
