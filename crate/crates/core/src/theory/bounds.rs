//! Closed-form estimation-error bounds and the beta-min screening test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs to the single-stage bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub alpha: f64,
    pub c: f64,
    pub lambda: f64,
    /// Size of the true support.
    pub s: usize,
    /// Restricted eigenvalue (or a lower bound on it).
    pub phi: f64,
    /// `‖β̃ − β*‖₁`.
    pub delta_l1: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi > 0.0) || !(self.lambda > 0.0) || !(self.c > 0.0) {
            return Err(Error::InvalidParameter("phi, lambda and c must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) || !(self.delta_l1 >= 0.0) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1] and delta_l1 >= 0".into()));
        }
        Ok(())
    }
}

/// Evaluates `((α+c)²λ²/φ²)·(√s + √(s + K))²`, which is
/// `((α+c)²λ²s/φ²)·(1 + √(1 + K/s))²` rewritten to stay finite at `s = 0`.
fn squared_root_form(alpha: f64, c: f64, lambda: f64, phi: f64, s: f64, k: f64) -> f64 {
    let a = (alpha + c) * lambda / phi;
    let r = s.sqrt() + (s + k).sqrt();
    a * a * r * r
}

/// High-probability bound on `‖β̂ − β*‖₂²`:
///
/// ```text
/// ((α+c)²λ²s/φ²) · (1 + √(1 + 2(1−α)φ‖Δ‖₁ / ((α+c)²λs)))²
/// ```
pub fn error_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let ac2 = (b.alpha + b.c).powi(2);
    let k = 2.0 * (1.0 - b.alpha) * b.phi * b.delta_l1 / (ac2 * b.lambda);
    Ok(squared_root_form(b.alpha, b.c, b.lambda, b.phi, b.s as f64, k))
}

/// Failure probability `exp(−n c² λ² / (2σ²) + log 2p)` attached to
/// [`error_bound`]. Not clamped to 1.
pub fn failure_probability(n: usize, p: usize, c: f64, lambda: f64, sigma: f64) -> f64 {
    (-(n as f64) * c * c * lambda * lambda / (2.0 * sigma * sigma) + (2.0 * p as f64).ln()).exp()
}

/// Inputs to the bound for a target fit anchored at a source-data Lasso.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStageInputs {
    /// Target-stage quantities; `delta_l1` is `‖β̃* − β*‖₁` between the true
    /// source and target parameters.
    pub target: BoundInputs,
    pub c_prime: f64,
    pub lambda_m: f64,
    pub s_prime: usize,
    pub phi_prime: f64,
}

/// ```text
/// ((α+c)²λ_n²s/φ²) · (1 + √(1 + 4(1−α)(1+c′)φλ_m s′/((α+c)²φ′λ_n s)
///                           + 2(1−α)φ‖Δ*‖₁/((α+c)²λ_n s)))²
/// ```
pub fn two_stage_bound(b: &TwoStageInputs) -> Result<f64> {
    let t = &b.target;
    t.validate()?;
    if !(b.phi_prime > 0.0) || !(b.lambda_m >= 0.0) || !(b.c_prime > 0.0) {
        return Err(Error::InvalidParameter("phi_prime, c_prime must be > 0 and lambda_m >= 0".into()));
    }
    let ac2 = (t.alpha + t.c).powi(2);
    let source = 4.0 * (1.0 - t.alpha) * (1.0 + b.c_prime) * t.phi * b.lambda_m * b.s_prime as f64
        / (ac2 * b.phi_prime * t.lambda);
    let shift = 2.0 * (1.0 - t.alpha) * t.phi * t.delta_l1 / (ac2 * t.lambda);
    Ok(squared_root_form(t.alpha, t.c, t.lambda, t.phi, t.s as f64, source + shift))
}

/// How the beta-min condition compares `|β*_j|` to the squared-error bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreeningMode {
    /// `|β*_j| > bound`, taken literally.
    Literal,
    /// `|β*_j| > √bound`, the dimensionally consistent reading.
    SqrtVariant,
}

/// For each `j` in the support of `beta_star` (ascending), whether the
/// beta-min condition holds so that `j` survives in `supp(β̂)`.
pub fn screening_predicate(beta_star: &[f64], bound: f64, mode: ScreeningMode) -> Vec<(usize, bool)> {
    let threshold = match mode {
        ScreeningMode::Literal => bound,
        ScreeningMode::SqrtVariant => bound.sqrt(),
    };
    beta_star
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, b)| (j, b.abs() > threshold))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(alpha: f64, lambda: f64, delta_l1: f64) -> BoundInputs {
        BoundInputs {
            alpha,
            c: 0.5,
            lambda,
            s: 10,
            phi: 1.0,
            delta_l1,
        }
    }

    #[test]
    fn arithmetic_example() {
        assert!((error_bound(&inputs(0.5, 0.1, 0.0)).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn lasso_and_transfer_at_zero_shift() {
        for alpha in [0.0, 0.3, 1.0] {
            let b = inputs(alpha, 0.2, 0.0);
            let expect = 4.0 * (alpha + 0.5f64).powi(2) * 0.04 * 10.0;
            assert!((error_bound(&b).unwrap() - expect).abs() < 1e-13);
        }
        assert!(error_bound(&inputs(0.5, 0.2, 0.0)).unwrap() < error_bound(&inputs(1.0, 0.2, 0.0)).unwrap());
    }

    #[test]
    fn two_stage_reduces_without_source_error() {
        let t = inputs(0.3, 0.1, 0.0);
        let ts = TwoStageInputs {
            target: t,
            c_prime: 0.5,
            lambda_m: 0.0,
            s_prime: 10,
            phi_prime: 1.0,
        };
        let expect = 4.0 * 0.64 * 0.01 * 10.0;
        assert!((two_stage_bound(&ts).unwrap() - expect).abs() < 1e-14);
        let ts0 = TwoStageInputs {
            s_prime: 0,
            lambda_m: 0.3,
            ..ts
        };
        assert!((two_stage_bound(&ts0).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn two_stage_all_ones() {
        let ts = TwoStageInputs {
            target: BoundInputs {
                alpha: 1.0,
                c: 1.0,
                lambda: 1.0,
                s: 1,
                phi: 1.0,
                delta_l1: 1.0,
            },
            c_prime: 1.0,
            lambda_m: 1.0,
            s_prime: 1,
            phi_prime: 1.0,
        };
        // α = 1 kills both extra terms: 4·(1 + √1)² = 16
        assert!((two_stage_bound(&ts).unwrap() - 16.0).abs() < 1e-14);
        let half = TwoStageInputs {
            target: BoundInputs { alpha: 0.5, ..ts.target },
            ..ts
        };
        // 2.25·(1 + √(1 + 4·0.5·2/2.25 + 2·0.5/2.25))²
        let k = 4.0 * 0.5 * 2.0 / 2.25 + 1.0 / 2.25;
        let expect = 2.25 * (1.0 + (1.0f64 + k).sqrt()).powi(2);
        assert!((two_stage_bound(&half).unwrap() - expect).abs() < 1e-13);
    }

    #[test]
    fn screening_modes() {
        let beta = [0.3, 0.0, -0.9];
        assert_eq!(screening_predicate(&beta, 0.4, ScreeningMode::Literal), vec![(0, false), (2, true)]);
        assert_eq!(screening_predicate(&beta, 0.4, ScreeningMode::SqrtVariant), vec![(0, false), (2, true)]);
        assert_eq!(screening_predicate(&beta, 0.04, ScreeningMode::SqrtVariant), vec![(0, true), (2, true)]);
        assert_eq!(screening_predicate(&[0.8], 0.4, ScreeningMode::Literal), vec![(0, true)]);
    }
}
