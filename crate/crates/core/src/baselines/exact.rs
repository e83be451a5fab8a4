use nalgebra::{DMatrix, DVector};

use crate::env::TabularMDP;
use crate::error::{Error, Result};
use crate::policy::PolicyParams;

/// Output of [`value_iteration`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValueSolution {
    pub v: Vec<f64>,
    pub greedy_policy: Vec<usize>,
    /// `v[start_state]`.
    pub j_star: f64,
    pub iterations: usize,
    /// Sup-norm Bellman residual of `v`.
    pub residual: f64,
}

fn bellman(mdp: &TabularMDP, gamma: f64, v: &[f64], s: usize) -> (usize, f64) {
    (0..mdp.n_actions())
        .map(|a| {
            let cont: f64 = mdp.row(s, a).iter().zip(v).map(|(p, x)| p * x).sum();
            (a, mdp.reward(s, a) + gamma * cont)
        })
        .fold((0, f64::NEG_INFINITY), |best, q| if q.1 > best.1 { q } else { best })
}

/// Discounted value iteration, stopped once successive iterates differ by at
/// most `tol` in sup norm.
pub fn value_iteration(mdp: &TabularMDP, gamma: f64, tol: f64) -> Result<ValueSolution> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(format!("discount {gamma} not in (0,1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    let n = mdp.n_states();
    let mut v = vec![0.0; n];
    let mut iterations = 0;
    loop {
        let next: Vec<f64> = (0..n).map(|s| bellman(mdp, gamma, &v, s).1).collect();
        iterations += 1;
        let diff = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if diff <= tol {
            break;
        }
    }
    let mut residual = 0.0f64;
    let greedy_policy = (0..n)
        .map(|s| {
            let (a, q) = bellman(mdp, gamma, &v, s);
            residual = residual.max((q - v[s]).abs());
            a
        })
        .collect();
    Ok(ValueSolution {
        j_star: v[mdp.start()],
        v,
        greedy_policy,
        iterations,
        residual,
    })
}

/// `(P_pi, r_pi)` for a tabular soft-max policy.
pub fn policy_kernel(mdp: &TabularMDP, policy: &PolicyParams) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = mdp.n_states();
    if policy.dim() != n * mdp.n_actions() {
        return Err(Error::DimensionMismatch {
            expected: n * mdp.n_actions(),
            actual: policy.dim(),
        });
    }
    let mut p = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for s in 0..n {
        let probs = policy.action_probabilities(s)?;
        for (a, pa) in probs.iter().enumerate() {
            r[s] += pa * mdp.reward(s, a);
            for (j, q) in mdp.row(s, a).iter().enumerate() {
                p[(s, j)] += pa * q;
            }
        }
    }
    Ok((p, r))
}

fn solve(a: DMatrix<f64>, b: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    let x = a.clone().lu().solve(b).ok_or(Error::Singular(what))?;
    // One step of iterative refinement.
    let resid = b - &a * &x;
    let dx = a.lu().solve(&resid).ok_or(Error::Singular(what))?;
    let x = x + dx;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(what));
    }
    Ok(x)
}

/// Exact discounted value vector `(I - gamma P_pi)^{-1} r_pi`.
pub fn policy_values(mdp: &TabularMDP, policy: &PolicyParams, gamma: f64) -> Result<Vec<f64>> {
    let (p, r) = policy_kernel(mdp, policy)?;
    let n = mdp.n_states();
    let a = DMatrix::identity(n, n) - p * gamma;
    Ok(solve(a, &r, "I - gamma P_pi")?.iter().copied().collect())
}

/// Exact cycle quantities of a fixed policy.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleValues {
    pub v: Vec<f64>,
    pub j: f64,
    pub r: f64,
    pub t: f64,
    /// `E[gamma^tau]` with `tau` the return time to the start state.
    pub tbar: f64,
}

/// `J` from the full linear system and `(R, T, Tbar)` from the chain that
/// is stopped on its first return to the start state.
pub fn cycle_values(mdp: &TabularMDP, policy: &PolicyParams, gamma: f64) -> Result<CycleValues> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(format!("discount {gamma} not in (0,1)")));
    }
    let (p, r_pi) = policy_kernel(mdp, policy)?;
    let n = mdp.n_states();
    let s0 = mdp.start();
    let v = solve(DMatrix::identity(n, n) - &p * gamma, &r_pi, "I - gamma P_pi")?;

    let mut stopped = p.clone();
    stopped.column_mut(s0).fill(0.0);
    let a = DMatrix::identity(n, n) - stopped * gamma;
    let u_r = solve(a.clone(), &r_pi, "stopped chain")?;
    let u_t = solve(a.clone(), &DVector::from_element(n, 1.0), "stopped chain")?;
    // E[gamma^tau] from s0: gamma * P(s0 -> s0) + gamma * sum_j P(s0 -> j) w_j,
    // w solving the stopped system for the one-step hit probability.
    let hit = p.column(s0).into_owned() * gamma;
    let w = solve(a, &hit, "stopped chain")?;
    Ok(CycleValues {
        j: v[s0],
        v: v.iter().copied().collect(),
        r: u_r[s0],
        t: u_t[s0],
        tbar: w[s0],
    })
}

/// [`CycleValues`] plus central finite-difference gradients of `J`, `R`
/// and `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyValue {
    pub values: CycleValues,
    pub grad_j: Vec<f64>,
    pub grad_r: Vec<f64>,
    pub grad_t: Vec<f64>,
}

pub const FD_STEP: f64 = 1e-5;

/// Exact evaluation of a tabular soft-max policy with finite-difference
/// gradients (step [`FD_STEP`], bounds ignored).
pub fn exact_policy_value(mdp: &TabularMDP, policy: &PolicyParams, gamma: f64) -> Result<PolicyValue> {
    let values = cycle_values(mdp, policy, gamma)?;
    let d = policy.dim();
    let (mut grad_j, mut grad_r, mut grad_t) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let unbounded = crate::policy::Bounds::uniform(d, f64::NEG_INFINITY, f64::INFINITY)?;
    for i in 0..d {
        let at = |shift: f64| -> Result<CycleValues> {
            let mut theta = policy.theta().to_vec();
            theta[i] += shift;
            let p = PolicyParams::new(policy.family().clone(), theta, unbounded.clone())?;
            cycle_values(mdp, &p, gamma)
        };
        let (hi, lo) = (at(FD_STEP)?, at(-FD_STEP)?);
        grad_j[i] = (hi.j - lo.j) / (2.0 * FD_STEP);
        grad_r[i] = (hi.r - lo.r) / (2.0 * FD_STEP);
        grad_t[i] = (hi.t - lo.t) / (2.0 * FD_STEP);
    }
    Ok(PolicyValue {
        values,
        grad_j,
        grad_r,
        grad_t,
    })
}

/// Stationary distribution of `P_pi`: the left eigenvector for eigenvalue
/// one, found by replacing one balance equation with the normalization.
pub fn stationary_distribution(mdp: &TabularMDP, policy: &PolicyParams) -> Result<Vec<f64>> {
    let (p, _) = policy_kernel(mdp, policy)?;
    let n = mdp.n_states();
    let mut a = DMatrix::identity(n, n) - p.transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let mu = solve(a, &b, "stationary equations")?;
    if mu.iter().any(|m| *m < -1e-10) {
        return Err(Error::Singular("stationary equations"));
    }
    Ok(mu.iter().copied().collect())
}

/// Long-run average reward `sum_s mu(s) r_pi(s)` of a unichain policy.
pub fn stationary_average_reward(mdp: &TabularMDP, policy: &PolicyParams) -> Result<f64> {
    let mu = stationary_distribution(mdp, policy)?;
    let (_, r) = policy_kernel(mdp, policy)?;
    Ok(mu.iter().zip(r.iter()).map(|(m, x)| m * x).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::garnet_generate;
    use crate::rng::replication_rng;
    use rand::Rng;

    fn chain() -> TabularMDP {
        // Deterministic swap 0 <-> 1, rewards (0, 1).
        TabularMDP::new(2, 1, vec![0.0, 1.0, 1.0, 0.0], vec![0.0, 1.0], 0).unwrap()
    }

    fn random_gibbs(n_states: usize, n_actions: usize, rng: &mut impl Rng) -> PolicyParams {
        let theta = (0..n_states * n_actions).map(|_| rng.random_range(-2.0..2.0)).collect();
        PolicyParams::new(
            crate::policy::PolicyFamily::GibbsTabular {
                n_states,
                n_actions,
                temperature: 1.0,
            },
            theta,
            crate::policy::Bounds::uniform(n_states * n_actions, -10.0, 10.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_state_geometric_series() {
        let mdp = TabularMDP::new(1, 1, vec![1.0], vec![1.0], 0).unwrap();
        let sol = value_iteration(&mdp, 0.9, 1e-10).unwrap();
        assert!((sol.v[0] - 10.0).abs() < 1e-8);
        assert!(sol.residual <= 1e-10);
    }

    #[test]
    fn two_state_chain_matches_linear_solve() {
        let sol = value_iteration(&chain(), 0.9, 1e-12).unwrap();
        // V0 = 0.9 V1, V1 = 1 + 0.9 V0.
        let v1 = 1.0 / (1.0 - 0.81);
        assert!((sol.v[1] - v1).abs() < 1e-9);
        assert!((sol.v[0] - 0.9 * v1).abs() < 1e-9);
    }

    #[test]
    fn value_iteration_error_bound_against_policy_evaluation() {
        let mut rng = replication_rng(11, 0);
        let mdp = garnet_generate(20, 5, 10, 0.05, (0.0, 1.0), &mut rng).unwrap();
        let tol = 1e-6;
        let sol = value_iteration(&mdp, 0.9, tol).unwrap();
        // Evaluate the greedy policy exactly with a near-deterministic soft-max.
        let mut theta = vec![0.0; 100];
        for (s, a) in sol.greedy_policy.iter().enumerate() {
            theta[s * 5 + a] = 1.0;
        }
        let p = PolicyParams::new(
            crate::policy::PolicyFamily::GibbsTabular {
                n_states: 20,
                n_actions: 5,
                temperature: 1e-3,
            },
            theta,
            crate::policy::Bounds::uniform(100, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        let v = policy_values(&mdp, &p, 0.9).unwrap();
        assert!((v[0] - sol.j_star).abs() <= tol * 0.9 / 0.1 + 1e-9);
        for s in 0..20 {
            let (a, q) = bellman(&mdp, 0.9, &sol.v, s);
            assert_eq!(a, sol.greedy_policy[s]);
            assert!((q - sol.v[s]).abs() <= sol.residual);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(value_iteration(&chain(), 1.0, 1e-8).is_err());
        assert!(value_iteration(&chain(), 0.9, 0.0).is_err());
        let p = PolicyParams::gibbs(2, 1, 1.0, -1.0, 1.0).unwrap();
        assert!(cycle_values(&chain(), &p, 1.0).is_err());
    }

    #[test]
    fn symmetric_model_gives_equal_values() {
        let mdp = TabularMDP::new(2, 2, vec![0.5; 8], vec![1.0, 0.0, 1.0, 0.0], 0).unwrap();
        let p = PolicyParams::gibbs(2, 2, 1.0, -1.0, 1.0).unwrap();
        let v = policy_values(&mdp, &p, 0.9).unwrap();
        assert!((v[0] - v[1]).abs() < 1e-12);
        assert!((v[0] - 5.0).abs() < 1e-10);
    }

    #[test]
    fn renewal_identities_hold_on_random_models() {
        let mut rng = replication_rng(12, 0);
        for _ in 0..20 {
            let mdp = garnet_generate(5, 2, 3, 0.5, (-1.0, 1.0), &mut rng).unwrap();
            let p = random_gibbs(5, 2, &mut rng);
            let c = cycle_values(&mdp, &p, 0.9).unwrap();
            assert!((c.r / (0.1 * c.t) - c.j).abs() < 1e-9);
            assert!((c.tbar - (1.0 - 0.1 * c.t)).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_difference_gradient_of_j_matches_ratio_rule() {
        let mut rng = replication_rng(13, 0);
        let mdp = garnet_generate(4, 2, 2, 1.0, (0.0, 1.0), &mut rng).unwrap();
        let p = random_gibbs(4, 2, &mut rng);
        let pv = exact_policy_value(&mdp, &p, 0.9).unwrap();
        let c = &pv.values;
        for i in 0..p.dim() {
            let ratio = (c.t * pv.grad_r[i] - c.r * pv.grad_t[i]) / (0.1 * c.t * c.t);
            assert!((ratio - pv.grad_j[i]).abs() < 1e-6, "{i}: {ratio} vs {}", pv.grad_j[i]);
        }
    }

    #[test]
    fn stationary_distribution_of_swap_chain() {
        let p = PolicyParams::gibbs(2, 1, 1.0, -1.0, 1.0).unwrap();
        let mu = stationary_distribution(&chain(), &p).unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-12 && (mu[1] - 0.5).abs() < 1e-12);
        assert!((stationary_average_reward(&chain(), &p).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_distribution_is_invariant() {
        let mut rng = replication_rng(14, 0);
        let mdp = garnet_generate(6, 3, 4, 0.5, (0.0, 1.0), &mut rng).unwrap();
        let p = random_gibbs(6, 3, &mut rng);
        let mu = stationary_distribution(&mdp, &p).unwrap();
        let (kernel, _) = policy_kernel(&mdp, &p).unwrap();
        let next = DVector::from_vec(mu.clone()).transpose() * kernel;
        for (a, b) in mu.iter().zip(next.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
