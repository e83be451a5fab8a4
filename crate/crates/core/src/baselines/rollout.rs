use rand::Rng;
use rayon::prelude::*;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::policy::{Policy, PolicyParams};
use crate::rng::replication_rng;

/// `sum_{t < horizon} gamma^t r_t` along one trajectory from the start.
pub fn discounted_return<E, P, R>(env: &E, policy: &P, horizon: usize, gamma: f64, rng: &mut R) -> Result<f64>
where
    E: Environment,
    P: Policy<E::State, E::Action>,
    R: Rng + ?Sized,
{
    let mut state = env.initial_state(rng);
    let (mut total, mut weight) = (0.0, 1.0);
    for _ in 0..horizon {
        let action = policy.sample_action(&state, rng)?;
        let tr = env.step(&state, &action, rng)?;
        total += weight * tr.reward;
        weight *= gamma;
        state = tr.next_state;
    }
    Ok(total)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn check_rollout_args(horizon: usize, reps: usize, gamma: f64) -> Result<()> {
    if horizon == 0 || reps == 0 {
        return Err(Error::param("horizon and repetitions must be at least 1"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param(format!("discount {gamma} not in (0,1]")));
    }
    Ok(())
}

/// Mean and sample standard deviation of the truncated discounted return
/// over `reps` independent rollouts.
pub fn evaluate_policy<E, P, R>(
    env: &E,
    policy: &P,
    horizon: usize,
    reps: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<(f64, f64)>
where
    E: Environment,
    P: Policy<E::State, E::Action>,
    R: Rng + ?Sized,
{
    check_rollout_args(horizon, reps, gamma)?;
    let returns = (0..reps)
        .map(|_| discounted_return(env, policy, horizon, gamma, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_std(&returns))
}

/// Smallest `H` with `gamma^H < eps`.
pub fn horizon_for(gamma: f64, eps: f64) -> usize {
    (eps.ln() / gamma.ln()).floor() as usize + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub theta: f64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearchResult {
    /// Grid point with the largest mean return (lowest cost).
    pub theta_best: f64,
    pub points: Vec<GridPoint>,
}

impl GridSearchResult {
    pub fn best(&self) -> &GridPoint {
        self.points
            .iter()
            .find(|p| p.theta == self.theta_best)
            .expect("best point is on the grid")
    }
}

/// Monte Carlo search over a scalar policy parameter.
///
/// Every grid point is evaluated on the same `reps` random streams, so
/// differences between neighbouring points are not swamped by independent
/// noise. Grid points run in parallel; results do not depend on the thread
/// count.
pub fn grid_search_threshold<E, R>(
    env: &E,
    template: &PolicyParams,
    grid: &[f64],
    horizon: usize,
    reps: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<GridSearchResult>
where
    E: Environment + Sync,
    PolicyParams: Policy<E::State, E::Action>,
    R: Rng + ?Sized,
{
    check_rollout_args(horizon, reps, gamma)?;
    if grid.is_empty() {
        return Err(Error::Empty("theta grid"));
    }
    if template.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: template.dim(),
        });
    }
    let stream_seed: u64 = rng.random();
    let points = grid
        .par_iter()
        .map(|&theta| -> Result<GridPoint> {
            let policy = PolicyParams::new(template.family().clone(), vec![theta], template.bounds().clone())?;
            let returns = (0..reps)
                .map(|rep| discounted_return(env, &policy, horizon, gamma, &mut replication_rng(stream_seed, rep as u64)))
                .collect::<Result<Vec<_>>>()?;
            let (mean, std) = mean_std(&returns);
            Ok(GridPoint {
                theta: policy.theta()[0],
                mean,
                std_error: std / (reps as f64).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let theta_best = points
        .iter()
        .fold(&points[0], |best, p| if p.mean > best.mean { p } else { best })
        .theta;
    Ok(GridSearchResult { theta_best, points })
}

/// `lo, lo + step, ...` up to `hi` inclusive (within rounding).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo <= hi) {
        return Err(Error::param("grid needs lo <= hi and a positive step"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}
