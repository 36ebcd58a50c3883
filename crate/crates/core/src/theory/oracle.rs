//! Slow, independent reference solvers used to validate coordinate descent.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::solver::PenaltySpec;
use crate::threshold::{soft_threshold, transfer_threshold, ThresholdParams};

const MAX_ITERS: usize = 10_000_000;

/// `(1/n)XᵀX` and `(1/n)Xᵀy`.
fn gram(d: &Dataset) -> (DMatrix<f64>, DVector<f64>) {
    let n = d.n() as f64;
    (d.x().tr_mul(d.x()) / n, d.x().tr_mul(d.y()) / n)
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn top_eigenvalue(g: &DMatrix<f64>) -> f64 {
    let p = g.nrows();
    if p == 0 {
        return 0.0;
    }
    // deterministic start with no special alignment
    let mut v = DVector::from_fn(p, |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..100_000 {
        let w = g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - est).abs() <= 1e-15 * next.abs() {
            return next;
        }
        est = next;
    }
    est
}

fn lipschitz_step(g: &DMatrix<f64>) -> f64 {
    // power iteration approaches from below; pad so the step stays safe
    let l = top_eigenvalue(g) * 1.01;
    if l > 0.0 {
        1.0 / l
    } else {
        1.0
    }
}

/// Proximal gradient descent on the Transfer Lasso objective with step
/// `1/L`, stopped when the gradient mapping `‖β⁺ − β‖∞ / t` is at most
/// `1e-12`.
pub fn brute_force_fit(d: &Dataset, pen: PenaltySpec, tilde: &Coefficients) -> Result<Coefficients> {
    if tilde.len() != d.p() {
        return Err(Error::DimensionMismatch(format!("dataset has p = {}, tilde has {}", d.p(), tilde.len())));
    }
    let (g, b) = gram(d);
    let t = lipschitz_step(&g);
    let params: Vec<ThresholdParams> = tilde
        .beta
        .iter()
        .map(|&bj| ThresholdParams::from_penalty(t * pen.lambda, pen.alpha, bj))
        .collect();
    let mut beta = DVector::zeros(d.p());
    for _ in 0..MAX_ITERS {
        let u = &beta - (&g * &beta - &b) * t;
        let next = DVector::from_fn(d.p(), |j, _| transfer_threshold(u[j], params[j]));
        let gap = (&next - &beta).amax() / t;
        beta = next;
        if gap <= 1e-12 {
            return Ok(Coefficients::new(beta));
        }
    }
    Err(Error::NoConvergence(MAX_ITERS))
}

/// Ordinary Lasso `(1/2n)‖y − Xβ‖² + λ‖β‖₁` by iterative soft-thresholding.
pub fn reference_lasso(d: &Dataset, lambda: f64) -> Result<Coefficients> {
    let (g, b) = gram(d);
    let t = lipschitz_step(&g);
    let mut beta = DVector::zeros(d.p());
    for _ in 0..MAX_ITERS {
        let u = &beta - (&g * &beta - &b) * t;
        let next = u.map(|v| soft_threshold(v, t * lambda));
        let gap = (&next - &beta).amax() / t;
        beta = next;
        if gap <= 1e-12 {
            return Ok(Coefficients::new(beta));
        }
    }
    Err(Error::NoConvergence(MAX_ITERS))
}

/// Direct objective `(1/2n)‖y − Xβ‖² + λ(α‖β‖₁ + (1 − α)‖β − β̃‖₁)` written
/// out independently of the solver module.
fn raw_objective(d: &Dataset, pen: PenaltySpec, tilde: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let r = d.y() - d.x() * beta;
    let l1: f64 = beta.iter().map(|v| v.abs()).sum();
    let l1t: f64 = beta.iter().zip(tilde.iter()).map(|(v, b)| (v - b).abs()).sum();
    r.norm_squared() / (2.0 * d.n() as f64) + pen.lambda * (pen.alpha * l1 + (1.0 - pen.alpha) * l1t)
}

/// Exhaustive grid search for `p ≤ 2`, refined coarse-to-fine until the cell
/// width reaches `resolution`. The box contains 0, β̃, and the least-squares
/// solution with a margin of one unit.
pub fn grid_search_fit(d: &Dataset, pen: PenaltySpec, tilde: &Coefficients, resolution: f64) -> Result<Coefficients> {
    let p = d.p();
    if p == 0 || p > 2 {
        return Err(Error::InvalidParameter(format!("grid search supports p in 1..=2, got {p}")));
    }
    let (g, b) = gram(d);
    let ls = g
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::InvalidData(e.to_string()))?
        * &b;
    let mut lo: Vec<f64> = (0..p).map(|j| 0f64.min(tilde.beta[j]).min(ls[j]) - 1.0).collect();
    let mut hi: Vec<f64> = (0..p).map(|j| 0f64.max(tilde.beta[j]).max(ls[j]) + 1.0).collect();
    let cells = 200usize;
    let mut best = DVector::zeros(p);
    loop {
        let width: Vec<f64> = (0..p).map(|j| (hi[j] - lo[j]) / cells as f64).collect();
        let mut best_f = f64::INFINITY;
        let mut probe = DVector::zeros(p);
        let total = (cells + 1).pow(p as u32);
        for idx in 0..total {
            let mut rest = idx;
            for j in 0..p {
                probe[j] = lo[j] + (rest % (cells + 1)) as f64 * width[j];
                rest /= cells + 1;
            }
            let f = raw_objective(d, pen, &tilde.beta, &probe);
            if f < best_f {
                best_f = f;
                best.copy_from(&probe);
            }
        }
        // the kinks are exact candidates at every level
        for j in 0..p {
            for kink in [0.0, tilde.beta[j]] {
                probe.copy_from(&best);
                probe[j] = kink;
                let f = raw_objective(d, pen, &tilde.beta, &probe);
                if f <= best_f {
                    best_f = f;
                    best.copy_from(&probe);
                }
            }
        }
        if width.iter().all(|&w| w <= resolution) {
            return Ok(Coefficients::new(best));
        }
        for j in 0..p {
            lo[j] = best[j] - 4.0 * width[j];
            hi[j] = best[j] + 4.0 * width[j];
        }
    }
}

/// Smallest eigenvalue of `(1/n)XᵀX`. It lower-bounds the restricted
/// eigenvalue over any cone, so plugging it into an error bound is
/// conservative. Values below `1e-12` times the largest eigenvalue are
/// reported as exactly zero.
pub fn gre_proxy(x: &DMatrix<f64>) -> f64 {
    let g = x.tr_mul(x) / x.nrows() as f64;
    let eig = SymmetricEigen::new(g).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if min <= 1e-12 * max.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        min
    }
}
