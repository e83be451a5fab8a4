//! Likelihood-ratio and simultaneous-perturbation estimates of the
//! gradients of the expected cycle reward and time, and the statistic
//! `H = T grad R - R grad T` that shares its root and sign with the
//! performance gradient.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::policy::{project, Bounds};
use crate::renewal::{suffix_profile, Mode, RegenerativeCycle};

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub grad_r: Vec<f64>,
    pub grad_t: Vec<f64>,
    pub n_cycles: usize,
}

/// One cycle's contribution `sum_sigma (R_sigma, T_sigma) * score_sigma`.
pub fn lr_cycle_terms<S, A>(cycle: &RegenerativeCycle<S, A>, mode: Mode, biased: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = cycle.steps.first().ok_or(Error::Empty("cycle"))?;
    let dim = first.score.dim();
    let mut gr = vec![0.0; dim];
    let mut gt = vec![0.0; dim];
    for (step, (r_sigma, t_sigma)) in cycle.steps.iter().zip(suffix_profile(cycle, mode, biased)) {
        if step.score.block().is_empty() {
            return Err(Error::UnsupportedFamily {
                family: "deterministic",
                operation: "likelihood-ratio gradients",
            });
        }
        if step.score.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: step.score.dim(),
            });
        }
        step.score.add_scaled_to(&mut gr, r_sigma);
        step.score.add_scaled_to(&mut gt, t_sigma);
    }
    Ok((gr, gt))
}

/// Batch-mean likelihood-ratio estimates of `grad R` and `grad T`.
pub fn lr_gradient<S, A>(cycles: &[RegenerativeCycle<S, A>], mode: Mode, biased: bool) -> Result<GradientEstimate> {
    if cycles.is_empty() {
        return Err(Error::Empty("cycle batch"));
    }
    mode.validate()?;
    let mut grad_r: Vec<f64> = Vec::new();
    let mut grad_t: Vec<f64> = Vec::new();
    for cycle in cycles {
        let (gr, gt) = lr_cycle_terms(cycle, mode, biased)?;
        if grad_r.is_empty() {
            grad_r = gr;
            grad_t = gt;
        } else {
            if gr.len() != grad_r.len() {
                return Err(Error::DimensionMismatch {
                    expected: grad_r.len(),
                    actual: gr.len(),
                });
            }
            grad_r.iter_mut().zip(&gr).for_each(|(a, b)| *a += b);
            grad_t.iter_mut().zip(&gt).for_each(|(a, b)| *a += b);
        }
    }
    let n = cycles.len() as f64;
    grad_r.iter_mut().for_each(|v| *v /= n);
    grad_t.iter_mut().for_each(|v| *v /= n);
    Ok(GradientEstimate {
        grad_r,
        grad_t,
        n_cycles: cycles.len(),
    })
}

/// `T_hat grad_R - R_hat grad_T`.
pub fn h_from_lr(r_hat: f64, t_hat: f64, grad: &GradientEstimate) -> Vec<f64> {
    grad.grad_r
        .iter()
        .zip(&grad.grad_t)
        .map(|(gr, gt)| t_hat * gr - r_hat * gt)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationDist {
    /// Independent +-1 coordinates (SPSA).
    Rademacher,
    /// Standard Gaussian direction (smoothed-function SA).
    Normal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub delta: Vec<f64>,
    pub c: f64,
    pub distribution: PerturbationDist,
}

/// Draws a direction and returns it with the projected point
/// `theta + c * delta`.
pub fn spsa_perturb<R: Rng + ?Sized>(
    theta: &[f64],
    bounds: &Bounds,
    c: f64,
    distribution: PerturbationDist,
    rng: &mut R,
) -> Result<(Perturbation, Vec<f64>)> {
    if !(c > 0.0) {
        return Err(Error::param(format!("perturbation size {c} must be positive")));
    }
    let delta: Vec<f64> = (0..theta.len())
        .map(|_| match distribution {
            PerturbationDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            PerturbationDist::Normal => rng.sample(StandardNormal),
        })
        .collect();
    let shifted: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + c * d).collect();
    let shifted = project(&shifted, bounds)?;
    Ok((
        Perturbation {
            delta,
            c,
            distribution,
        },
        shifted,
    ))
}

/// `delta (T_hat R_hat' - R_hat T_hat') / c`, with the primed statistics
/// from an independent batch at the perturbed parameters.
pub fn h_from_sp(r_hat: f64, t_hat: f64, r_pert: f64, t_pert: f64, perturbation: &Perturbation) -> Vec<f64> {
    let diff = (t_hat * r_pert - r_hat * t_pert) / perturbation.c;
    perturbation.delta.iter().map(|d| d * diff).collect()
}
