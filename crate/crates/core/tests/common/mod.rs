//! Reference computations written independently of the library: dense
//! Gaussian elimination, power iteration and finite differences over
//! explicitly assembled policy kernels.

#![allow(dead_code)]

use rand::Rng;
use renewal_rl::env::TabularMDP;
use renewal_rl::policy::PolicyParams;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        assert!(a[col][col].abs() > 1e-300, "singular system");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Random model with strictly positive transition rows and rewards in
/// `[-1, 1]`.
pub fn random_mdp<R: Rng>(rng: &mut R, n: usize, m: usize, start: usize) -> TabularMDP {
    let mut p = Vec::with_capacity(m * n * n);
    for _ in 0..m * n {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let z: f64 = row.iter().sum();
        p.extend(row.iter().map(|x| x / z));
    }
    let r = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    TabularMDP::new(n, m, p, r, start).unwrap()
}

pub fn random_gibbs<R: Rng>(rng: &mut R, n: usize, m: usize, scale: f64) -> PolicyParams {
    let mut p = PolicyParams::gibbs(n, m, 1.0, -30.0, 30.0).unwrap();
    let theta: Vec<f64> = (0..n * m).map(|_| rng.random_range(-scale..scale)).collect();
    p.set_theta(&theta).unwrap();
    p
}

/// Gibbs probabilities computed directly from the parameters.
pub fn gibbs_probs(theta: &[f64], n_actions: usize, state: usize, temperature: f64) -> Vec<f64> {
    let prefs = &theta[state * n_actions..(state + 1) * n_actions];
    let w: Vec<f64> = prefs.iter().map(|p| (p / temperature).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// `(P_pi, r_pi)` for a temperature-1 Gibbs parameter vector.
pub fn kernel(mdp: &TabularMDP, theta: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let mut p = vec![vec![0.0; n]; n];
    let mut r = vec![0.0; n];
    for s in 0..n {
        let pi = gibbs_probs(theta, m, s, 1.0);
        for a in 0..m {
            r[s] += pi[a] * mdp.reward(s, a);
            for (t, q) in mdp.row(s, a).iter().enumerate() {
                p[s][t] += pi[a] * q;
            }
        }
    }
    (p, r)
}

/// Expected discounted cycle reward and time from the start state, and the
/// value of the start state.
#[derive(Clone, Copy, Debug)]
pub struct Renewal {
    pub r: f64,
    pub t: f64,
    pub v: f64,
}

pub fn renewal_oracle(mdp: &TabularMDP, theta: &[f64], gamma: f64) -> Renewal {
    let (p, rpi) = kernel(mdp, theta);
    let n = mdp.n_states();
    let s0 = mdp.start();
    // A cycle continues from s' only when s' is not the start state.
    let cont = |i: usize, j: usize| -> f64 {
        let q = if j == s0 { 0.0 } else { p[i][j] };
        (i == j) as u8 as f64 - gamma * q
    };
    let a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| cont(i, j)).collect()).collect();
    let r = solve(a.clone(), rpi.clone())[s0];
    let t = solve(a, vec![1.0; n])[s0];
    let full: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64 - gamma * p[i][j]).collect())
        .collect();
    let v = solve(full, rpi)[s0];
    Renewal { r, t, v }
}

/// Central differences of the cycle reward and time.
pub fn fd_gradients(mdp: &TabularMDP, theta: &[f64], gamma: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let mut gr = Vec::with_capacity(theta.len());
    let mut gt = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let a = renewal_oracle(mdp, &plus, gamma);
        let b = renewal_oracle(mdp, &minus, gamma);
        gr.push((a.r - b.r) / (2.0 * h));
        gt.push((a.t - b.t) / (2.0 * h));
    }
    (gr, gt)
}

/// Long-run average reward by power iteration on the policy kernel.
pub fn stationary_average(mdp: &TabularMDP, theta: &[f64]) -> f64 {
    let (p, r) = kernel(mdp, theta);
    let n = p.len();
    let mut mu = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n).map(|j| (0..n).map(|i| mu[i] * p[i][j]).sum()).collect();
        let diff: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        mu = next;
        if diff < 1e-15 {
            break;
        }
    }
    mu.iter().zip(&r).map(|(m, x)| m * x).sum()
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
