//! Monte-Carlo check of the estimation-error bound.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::rng::derived_rng;
use crate::solver::{cd_fit, FitConfig, PenaltySpec};
use crate::theory::bounds::{error_bound, failure_probability, BoundInputs};
use crate::theory::oracle::gre_proxy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundExperiment {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub c: f64,
    pub trials: usize,
    pub seed: u64,
    /// Number of coordinates where `β̃` differs from `β*`.
    pub perturbed: usize,
    /// Perturbations are drawn uniformly from `[−perturbation, perturbation]`.
    pub perturbation: f64,
}

impl BoundExperiment {
    #[allow(clippy::too_many_arguments)]
    pub fn new(n: usize, p: usize, s: usize, sigma: f64, alpha: f64, c: f64, trials: usize, seed: u64) -> Self {
        BoundExperiment {
            n,
            p,
            s,
            sigma,
            alpha,
            c,
            trials,
            seed,
            perturbed: 2,
            perturbation: 0.2,
        }
    }

    /// `(σ/c)·√(2 log(2p)/n)·1.01`, just above the level where the failure
    /// probability drops below one.
    pub fn lambda(&self) -> f64 {
        self.sigma / self.c * (2.0 * (2.0 * self.p as f64).ln() / self.n as f64).sqrt() * 1.01
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub violation_rate: f64,
    pub violations: usize,
    pub trials: usize,
    pub lambda: f64,
    /// Unclamped failure probability of the bound.
    pub nu: f64,
    /// Largest observed `‖β̂ − β*‖² / bound`.
    pub worst_ratio: f64,
}

/// Draws Gaussian designs (columns rescaled to `‖x_j‖² = n`) and noise,
/// fits at the prescribed λ, and counts trials with `‖β̂ − β*‖² > bound`,
/// using the smallest Gram eigenvalue as the restricted eigenvalue.
pub fn bound_violation_experiment(e: &BoundExperiment) -> Result<BoundViolation> {
    if e.n <= e.p {
        return Err(Error::InvalidParameter(format!("need n > p, got n = {}, p = {}", e.n, e.p)));
    }
    if e.s > e.p || e.perturbed > e.p || e.trials == 0 {
        return Err(Error::InvalidParameter("need s, perturbed <= p and trials >= 1".into()));
    }
    let lambda = e.lambda();
    let pen = PenaltySpec::new(lambda, e.alpha)?;
    let cfg = FitConfig::default().with_tol(1e-10);
    let outcomes: Vec<(bool, f64)> = (0..e.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived_rng(e.seed, &[t as u64]);
            let mut x = DMatrix::from_fn(e.n, e.p, |_, _| StandardNormal.sample(&mut rng));
            let sqrt_n = (e.n as f64).sqrt();
            for mut col in x.column_iter_mut() {
                let norm = col.norm();
                col *= sqrt_n / norm;
            }
            let mut beta = DVector::zeros(e.p);
            for j in sample(&mut rng, e.p, e.s) {
                beta[j] = rng.random_range(-1.0..=1.0);
            }
            let mut tilde = beta.clone();
            for j in sample(&mut rng, e.p, e.perturbed) {
                tilde[j] += e.perturbation * rng.random_range(-1.0..=1.0);
            }
            let noise = DVector::from_fn(e.n, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                e.sigma * z
            });
            let y = &x * &beta + noise;
            let phi = gre_proxy(&x);
            let d = Dataset::new(x, y)?;
            let fit = cd_fit(&d, pen, &Coefficients::new(tilde.clone()), &cfg)?;
            let err = (&fit.coefficients.beta - &beta).norm_squared();
            let delta_l1: f64 = (&tilde - &beta).iter().map(|v| v.abs()).sum();
            let support = beta.iter().filter(|v| **v != 0.0).count();
            let bound = if lambda == 0.0 {
                // noiseless limit: the bound collapses to zero
                0.0
            } else {
                error_bound(&BoundInputs {
                    alpha: e.alpha,
                    c: e.c,
                    lambda,
                    s: support,
                    phi,
                    delta_l1,
                })?
            };
            // absolute slack covers rounding when both sides are ~0
            let violated = err > bound + 1e-12;
            let ratio = if bound > 0.0 { err / bound } else { 0.0 };
            Ok((violated, ratio))
        })
        .collect::<Result<_>>()?;
    let violations = outcomes.iter().filter(|o| o.0).count();
    Ok(BoundViolation {
        violation_rate: violations as f64 / e.trials as f64,
        violations,
        trials: e.trials,
        lambda,
        nu: failure_probability(e.n, e.p, e.c, lambda, e.sigma),
        worst_ratio: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_probability_below_one() {
        let e = BoundExperiment::new(200, 20, 5, 1.0, 0.5, 0.5, 1, 0);
        let nu = failure_probability(e.n, e.p, e.c, e.lambda(), e.sigma);
        assert!(nu < 1.0 && nu > 0.9);
    }

    #[test]
    fn noiseless_exact_anchor_never_violates() {
        let mut e = BoundExperiment::new(40, 8, 3, 0.0, 0.5, 0.5, 20, 1);
        e.perturbation = 0.0;
        let r = bound_violation_experiment(&e).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let e = BoundExperiment::new(60, 10, 3, 1.0, 1.0, 0.5, 30, 9);
        assert_eq!(bound_violation_experiment(&e).unwrap(), bound_violation_experiment(&e).unwrap());
    }
}
