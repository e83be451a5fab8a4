use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng;

use super::{Environment, Transition};
use crate::error::{Error, Result};
use crate::rng::SimRng;

const ROW_SUM_TOL: f64 = 1e-12;

/// Finite MDP with explicit transition and reward arrays.
///
/// `transitions` is laid out `[action][state][next_state]`, `rewards` is
/// `[state][action]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMDP {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    start_state: usize,
    seed: u64,
}

impl TabularMDP {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        start_state: usize,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::param("tabular model needs at least one state and action"));
        }
        let expect = n_actions * n_states * n_states;
        if transitions.len() != expect {
            return Err(Error::DimensionMismatch {
                expected: expect,
                actual: transitions.len(),
            });
        }
        if rewards.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch {
                expected: n_states * n_actions,
                actual: rewards.len(),
            });
        }
        if start_state >= n_states {
            return Err(Error::InvalidState {
                state: start_state,
                n_states,
            });
        }
        for (i, row) in transitions.chunks(n_states).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::param(format!(
                    "row {} of P(a={}) is not a distribution (sum {sum})",
                    i % n_states,
                    i / n_states
                )));
            }
        }
        Ok(TabularMDP {
            n_states,
            n_actions,
            transitions,
            rewards,
            start_state,
            seed: 0,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Seed recorded in the serialized header (0 when not generated).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Row `P(.|state, action)`.
    pub fn row(&self, state: usize, action: usize) -> &[f64] {
        let base = (action * self.n_states + state) * self.n_states;
        &self.transitions[base..base + self.n_states]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state * self.n_actions + action]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn start(&self) -> usize {
        self.start_state
    }

    /// Largest number of nonzero entries in any transition row.
    pub fn branching(&self) -> usize {
        self.transitions
            .chunks(self.n_states)
            .map(|row| row.iter().filter(|p| **p != 0.0).count())
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.rewards.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Flat text form: a header `n_states n_actions branching seed`, then
    /// one line per transition row (action-major), then one line of rewards
    /// per state. Numbers carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{} {} {} {}",
            self.n_states,
            self.n_actions,
            self.branching(),
            self.seed
        )
        .unwrap();
        let line = |vals: &[f64]| {
            vals.iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        for row in self.transitions.chunks(self.n_states) {
            out.push_str(&line(row));
            out.push('\n');
        }
        for row in self.rewards.chunks(self.n_actions) {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    /// Inverse of [`TabularMDP::to_text`]. The start state is state 0.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<u64> = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))?
            .split_whitespace()
            .map(|t| t.parse::<u64>().map_err(|e| Error::Parse(format!("header: {e}"))))
            .collect::<Result<_>>()?;
        let [n_states, n_actions, branching, seed] = header[..] else {
            return Err(Error::Parse(format!(
                "header needs 4 fields, found {}",
                header.len()
            )));
        };
        let (n_states, n_actions) = (n_states as usize, n_actions as usize);
        let values: Vec<f64> = lines
            .flat_map(|l| l.split_whitespace())
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<_>>()?;
        let n_p = n_actions * n_states * n_states;
        if values.len() != n_p + n_states * n_actions {
            return Err(Error::Parse(format!(
                "expected {} numbers, found {}",
                n_p + n_states * n_actions,
                values.len()
            )));
        }
        let mdp = TabularMDP::new(
            n_states,
            n_actions,
            values[..n_p].to_vec(),
            values[n_p..].to_vec(),
            0,
        )?
        .with_seed(seed);
        if mdp.branching() as u64 != branching {
            return Err(Error::Parse(format!(
                "header branching {branching} disagrees with data ({})",
                mdp.branching()
            )));
        }
        Ok(mdp)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        TabularMDP::from_text(&std::fs::read_to_string(path)?)
    }
}

impl Environment for TabularMDP {
    type State = usize;
    type Action = usize;

    fn start_state(&self) -> usize {
        self.start_state
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &usize,
        action: &usize,
        rng: &mut R,
    ) -> Result<Transition<usize>> {
        let (s, a) = (*state, *action);
        if s >= self.n_states {
            return Err(Error::InvalidState {
                state: s,
                n_states: self.n_states,
            });
        }
        if a >= self.n_actions {
            return Err(Error::param(format!("action {a} out of range")));
        }
        let u: f64 = rng.random();
        let row = self.row(s, a);
        let mut acc = 0.0;
        let mut next = self.n_states - 1;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = j;
                break;
            }
        }
        // Guard against rounding in the cumulative sum landing on a zero entry.
        if row[next] == 0.0 {
            next = row.iter().rposition(|p| *p > 0.0).unwrap_or(next);
        }
        Ok(Transition {
            next_state: next,
            reward: self.reward(s, a),
            post_state: None,
        })
    }

    fn distance(&self, a: &usize, b: &usize) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }
}

/// Random GARNET model: every row has `branching` distinct successors
/// (chosen uniformly without replacement) with Unif[0,1] masses normalized
/// to one; each `(s, a)` pays Unif`[reward_range]` with probability
/// `reward_prob`, else 0. State 0 is the start state.
pub fn garnet_generate<R: Rng + ?Sized>(
    n_states: usize,
    n_actions: usize,
    branching: usize,
    reward_prob: f64,
    reward_range: (f64, f64),
    rng: &mut R,
) -> Result<TabularMDP> {
    if branching == 0 || branching > n_states {
        return Err(Error::param(format!(
            "branching {branching} must lie in 1..={n_states}"
        )));
    }
    if !(0.0..=1.0).contains(&reward_prob) {
        return Err(Error::param(format!("reward probability {reward_prob} not in [0,1]")));
    }
    if !(reward_range.0 <= reward_range.1) {
        return Err(Error::param("reward range is empty"));
    }
    let mut transitions = vec![0.0; n_actions * n_states * n_states];
    for row in transitions.chunks_mut(n_states) {
        let support = index::sample(rng, n_states, branching);
        let masses: Vec<f64> = (0..branching).map(|_| rng.random::<f64>()).collect();
        let total: f64 = masses.iter().sum();
        for (j, m) in support.iter().zip(&masses) {
            row[j] = m / total;
        }
        // Exact normalization: fold the rounding residue into the largest entry.
        let sum: f64 = row.iter().sum();
        if let Some(j) = support.iter().max_by(|a, b| row[*a].total_cmp(&row[*b])) {
            row[j] += 1.0 - sum;
        }
    }
    let mut rewards = vec![0.0; n_states * n_actions];
    for r in rewards.iter_mut() {
        if rng.random::<f64>() < reward_prob {
            *r = rng.random_range(reward_range.0..=reward_range.1);
        }
    }
    TabularMDP::new(n_states, n_actions, transitions, rewards, 0)
}

/// Declarative GARNET instance description.
#[derive(Clone, Debug, PartialEq)]
pub struct Garnet {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
    pub reward_prob: f64,
    pub reward_range: (f64, f64),
    pub seed: u64,
}

impl Garnet {
    pub fn generate(&self) -> Result<TabularMDP> {
        let mut rng = <SimRng as rand::SeedableRng>::seed_from_u64(self.seed);
        Ok(garnet_generate(
            self.n_states,
            self.n_actions,
            self.branching,
            self.reward_prob,
            self.reward_range,
            &mut rng,
        )?
        .with_seed(self.seed))
    }
}
