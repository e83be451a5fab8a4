//! Parameterized policies, action sampling, score functions and projection
//! onto the box of admissible parameters.

use rand::Rng;

use crate::error::{Error, Result};

/// Which functional form maps `theta` to an action distribution.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicyFamily {
    /// Soft-max over a `n_states x n_actions` table of preferences.
    GibbsTabular {
        n_states: usize,
        n_actions: usize,
        temperature: f64,
    },
    /// Transmit (action 1) iff `|state| >= theta`.
    Threshold,
    /// Order up to `theta`: action `max(theta - state, 0)`.
    BaseStock,
}

impl PolicyFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyFamily::GibbsTabular { .. } => "gibbs_tabular",
            PolicyFamily::Threshold => "threshold",
            PolicyFamily::BaseStock => "base_stock",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PolicyFamily::GibbsTabular {
                n_states,
                n_actions,
                ..
            } => n_states * n_actions,
            PolicyFamily::Threshold | PolicyFamily::BaseStock => 1,
        }
    }

    pub fn is_differentiable(&self) -> bool {
        matches!(self, PolicyFamily::GibbsTabular { .. })
    }
}

/// Per-coordinate closed intervals `[lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
            return Err(Error::param(format!(
                "bound {i} is empty: [{}, {}]",
                lo[i], hi[i]
            )));
        }
        Ok(Bounds { lo, hi })
    }

    /// The same interval on every coordinate.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Bounds::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    pub fn project_in_place(&self, theta: &mut [f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: theta.len(),
            });
        }
        for (x, (lo, hi)) in theta.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *x = x.clamp(*lo, *hi);
        }
        Ok(())
    }
}

/// Coordinate-wise clamp of `theta` onto `bounds`.
pub fn project(theta: &[f64], bounds: &Bounds) -> Result<Vec<f64>> {
    let mut out = theta.to_vec();
    bounds.project_in_place(&mut out)?;
    Ok(out)
}

/// Gradient of `log pi(a|s)` with respect to `theta`.
///
/// For the tabular soft-max only the block of coordinates belonging to the
/// visited state is nonzero, so the score stores that block and its offset.
/// Deterministic families carry an empty block, i.e. the zero vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Score {
    dim: usize,
    offset: usize,
    block: Vec<f64>,
}

impl Score {
    pub fn zero(dim: usize) -> Self {
        Score {
            dim,
            offset: 0,
            block: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn block(&self) -> &[f64] {
        &self.block
    }

    pub fn is_zero(&self) -> bool {
        self.block.iter().all(|v| *v == 0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.add_scaled_to(&mut out, 1.0);
        out
    }

    /// `target += weight * score`.
    pub fn add_scaled_to(&self, target: &mut [f64], weight: f64) {
        debug_assert_eq!(target.len(), self.dim);
        for (t, v) in target[self.offset..self.offset + self.block.len()]
            .iter_mut()
            .zip(&self.block)
        {
            *t += weight * v;
        }
    }
}

/// `theta` together with its family and feasible box.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    theta: Vec<f64>,
    family: PolicyFamily,
    bounds: Bounds,
}

impl PolicyParams {
    /// Builds a policy; `theta` is projected onto `bounds`.
    pub fn new(family: PolicyFamily, theta: Vec<f64>, bounds: Bounds) -> Result<Self> {
        let dim = family.dim();
        if theta.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: theta.len(),
            });
        }
        if bounds.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bounds.dim(),
            });
        }
        if let PolicyFamily::GibbsTabular { temperature, .. } = family {
            if !(temperature > 0.0) {
                return Err(Error::param(format!(
                    "temperature must be positive, got {temperature}"
                )));
            }
        }
        let theta = project(&theta, &bounds)?;
        Ok(PolicyParams {
            theta,
            family,
            bounds,
        })
    }

    /// Uniform soft-max policy (all preferences zero) with the same box on
    /// every coordinate.
    pub fn gibbs(
        n_states: usize,
        n_actions: usize,
        temperature: f64,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        let family = PolicyFamily::GibbsTabular {
            n_states,
            n_actions,
            temperature,
        };
        let dim = family.dim();
        PolicyParams::new(family, vec![0.0; dim], Bounds::uniform(dim, lo, hi)?)
    }

    pub fn threshold(theta: f64, lo: f64, hi: f64) -> Result<Self> {
        PolicyParams::new(PolicyFamily::Threshold, vec![theta], Bounds::uniform(1, lo, hi)?)
    }

    pub fn base_stock(theta: f64, lo: f64, hi: f64) -> Result<Self> {
        PolicyParams::new(PolicyFamily::BaseStock, vec![theta], Bounds::uniform(1, lo, hi)?)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn family(&self) -> &PolicyFamily {
        &self.family
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Replaces `theta`, projecting it onto the bounds.
    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: theta.len(),
            });
        }
        self.theta.copy_from_slice(theta);
        self.bounds.project_in_place(&mut self.theta)
    }

    pub fn with_theta(&self, theta: &[f64]) -> Result<Self> {
        let mut p = self.clone();
        p.set_theta(theta)?;
        Ok(p)
    }

    fn gibbs_shape(&self, operation: &'static str) -> Result<(usize, usize, f64)> {
        match self.family {
            PolicyFamily::GibbsTabular {
                n_states,
                n_actions,
                temperature,
            } => Ok((n_states, n_actions, temperature)),
            _ => Err(Error::UnsupportedFamily {
                family: self.family.name(),
                operation,
            }),
        }
    }

    /// `pi(.|state)` for the tabular soft-max.
    pub fn action_probabilities(&self, state: usize) -> Result<Vec<f64>> {
        let (n_states, n_actions, temperature) = self.gibbs_shape("action probabilities")?;
        if state >= n_states {
            return Err(Error::InvalidState { state, n_states });
        }
        let prefs = &self.theta[state * n_actions..(state + 1) * n_actions];
        let max = prefs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = prefs
            .iter()
            .map(|p| ((p - max) / temperature).exp())
            .collect();
        let z: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= z);
        Ok(probs)
    }

    pub fn log_prob(&self, state: usize, action: usize) -> Result<f64> {
        let probs = self.action_probabilities(state)?;
        probs
            .get(action)
            .map(|p| p.ln())
            .ok_or_else(|| Error::param(format!("action {action} out of range")))
    }

    /// `grad_theta log pi(action|state)`; only the tabular soft-max is
    /// differentiable.
    pub fn score(&self, state: usize, action: usize) -> Result<Score> {
        let (_, n_actions, _) = self.gibbs_shape("score")?;
        let probs = self.action_probabilities(state)?;
        if action >= n_actions {
            return Err(Error::param(format!("action {action} out of range")));
        }
        Ok(self.gibbs_score(state, action, &probs))
    }

    fn gibbs_score(&self, state: usize, action: usize, probs: &[f64]) -> Score {
        let (_, n_actions, temperature) = self.gibbs_shape("score").expect("gibbs family");
        let block = probs
            .iter()
            .enumerate()
            .map(|(a, p)| ((a == action) as u8 as f64 - p) / temperature)
            .collect();
        Score {
            dim: self.dim(),
            offset: state * n_actions,
            block,
        }
    }

    /// Per-state argmax of the preferences (ties go to the lowest action).
    pub fn greedy_actions(&self) -> Result<Vec<usize>> {
        let (n_states, n_actions, _) = self.gibbs_shape("greedy actions")?;
        Ok((0..n_states)
            .map(|s| {
                let row = &self.theta[s * n_actions..(s + 1) * n_actions];
                (0..n_actions).fold(0, |best, a| if row[a] > row[best] { a } else { best })
            })
            .collect())
    }
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Action selection for a state type `S` and action type `A`.
///
/// [`PolicyParams`] implements this once per environment shape; a family
/// that does not fit the shape is rejected at run time.
pub trait Policy<S, A> {
    /// Draws an action together with its score. Deterministic families
    /// report a zero score.
    fn sample_scored<R: Rng + ?Sized>(&self, state: &S, rng: &mut R) -> Result<(A, Score)>;

    fn sample_action<R: Rng + ?Sized>(&self, state: &S, rng: &mut R) -> Result<A> {
        self.sample_scored(state, rng).map(|(a, _)| a)
    }

    fn param_dim(&self) -> usize;
}

impl Policy<usize, usize> for PolicyParams {
    fn sample_scored<R: Rng + ?Sized>(&self, state: &usize, rng: &mut R) -> Result<(usize, Score)> {
        let probs = self.action_probabilities(*state)?;
        let action = sample_index(&probs, rng);
        Ok((action, self.gibbs_score(*state, action, &probs)))
    }

    fn param_dim(&self) -> usize {
        self.dim()
    }
}

impl Policy<f64, usize> for PolicyParams {
    fn sample_scored<R: Rng + ?Sized>(&self, state: &f64, _rng: &mut R) -> Result<(usize, Score)> {
        match self.family {
            PolicyFamily::Threshold => Ok((
                (state.abs() >= self.theta[0]) as usize,
                Score::zero(self.dim()),
            )),
            _ => Err(Error::UnsupportedFamily {
                family: self.family.name(),
                operation: "binary actions on a real state",
            }),
        }
    }

    fn param_dim(&self) -> usize {
        self.dim()
    }
}

impl Policy<f64, f64> for PolicyParams {
    fn sample_scored<R: Rng + ?Sized>(&self, state: &f64, _rng: &mut R) -> Result<(f64, Score)> {
        match self.family {
            PolicyFamily::BaseStock => Ok(((self.theta[0] - state).max(0.0), Score::zero(self.dim()))),
            _ => Err(Error::UnsupportedFamily {
                family: self.family.name(),
                operation: "real actions on a real state",
            }),
        }
    }

    fn param_dim(&self) -> usize {
        self.dim()
    }
}
