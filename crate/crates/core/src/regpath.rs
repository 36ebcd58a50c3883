//! Trivial-solution tests, `λ_max`, and warm-started regularization paths.
//!
//! With `c = Xᵀr/n` for a residual `r`, every optimality condition at a
//! trivial point is a pair of linear inequalities `a ≤ λ·k` per coordinate.
//! The predicates and `λ_max` are both computed from the same list of
//! `(a, k)` pairs, so the threshold returned by [`lambda_max`] is exactly the
//! point where the matching predicate switches on.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::solver::{binary_labels, cd_fit, kkt_check, objective, FitConfig, FitResult, Init, Loss, PenaltySpec};

/// Which trivial point certifies optimality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrivialSolution {
    /// `β̂ = 0`
    Zero,
    /// `β̂ = β̃`
    Unchanged,
}

fn check_dims(d: &Dataset, tilde: &Coefficients) -> Result<()> {
    if tilde.len() != d.p() {
        return Err(Error::DimensionMismatch(format!(
            "dataset has p = {}, tilde has {}",
            d.p(),
            tilde.len()
        )));
    }
    Ok(())
}

/// `Xᵀ(y − Xβ)/n`.
fn residual_correlations(d: &Dataset, beta: &DVector<f64>) -> DVector<f64> {
    let r = d.y() - d.x() * beta;
    d.x().tr_mul(&r) / d.n() as f64
}

/// The two inequalities `a ≤ λ·k` for one coordinate.
fn coordinate_constraints(c: f64, tilde_j: f64, alpha: f64, which: TrivialSolution) -> [(f64, f64); 2] {
    if tilde_j == 0.0 {
        return [(c, 1.0), (-c, 1.0)];
    }
    let s = tilde_j.signum();
    match which {
        // −λ((1−α) − αs) ≤ c ≤ λ((1−α) + αs)
        TrivialSolution::Unchanged => [(c, (1.0 - alpha) + alpha * s), (-c, (1.0 - alpha) - alpha * s)],
        // −λ(α + (1−α)s) ≤ c ≤ λ(α − (1−α)s)
        TrivialSolution::Zero => [(c, alpha - (1.0 - alpha) * s), (-c, alpha + (1.0 - alpha) * s)],
    }
}

fn correlations_for(d: &Dataset, tilde: &Coefficients, which: TrivialSolution) -> DVector<f64> {
    match which {
        TrivialSolution::Zero => d.x().tr_mul(d.y()) / d.n() as f64,
        TrivialSolution::Unchanged => residual_correlations(d, &tilde.beta),
    }
}

/// Smallest slack `λk − a` over all inequalities. Non-negative exactly when
/// the trivial point is optimal; its magnitude measures the distance to the
/// nearest boundary.
pub fn trivial_margin(
    d: &Dataset,
    pen: PenaltySpec,
    tilde: &Coefficients,
    which: TrivialSolution,
) -> Result<f64> {
    check_dims(d, tilde)?;
    let c = correlations_for(d, tilde, which);
    let mut margin = f64::INFINITY;
    for j in 0..d.p() {
        for (a, k) in coordinate_constraints(c[j], tilde.beta[j], pen.alpha, which) {
            margin = margin.min(pen.lambda * k - a);
        }
    }
    Ok(margin)
}

fn holds(d: &Dataset, pen: PenaltySpec, tilde: &Coefficients, which: TrivialSolution) -> Result<bool> {
    check_dims(d, tilde)?;
    let c = correlations_for(d, tilde, which);
    Ok((0..d.p()).all(|j| {
        coordinate_constraints(c[j], tilde.beta[j], pen.alpha, which)
            .iter()
            .all(|&(a, k)| a <= pen.lambda * k)
    }))
}

/// True iff `β̂ = β̃` minimizes the squared-loss objective.
pub fn unchanged_solution_exists(d: &Dataset, pen: PenaltySpec, tilde: &Coefficients) -> Result<bool> {
    holds(d, pen, tilde, TrivialSolution::Unchanged)
}

/// True iff `β̂ = 0` minimizes the squared-loss objective.
pub fn zero_solution_exists(d: &Dataset, pen: PenaltySpec, tilde: &Coefficients) -> Result<bool> {
    holds(d, pen, tilde, TrivialSolution::Zero)
}

/// Smallest `λ` at which the given trivial point becomes optimal, or `None`
/// if the feasible set of `λ` is empty or a single point. An isolated point
/// (e.g. the zero solution at `α = 0` with one nonzero `β̃_j`) is useless as
/// a path start, since the solution leaves it at every larger `λ`.
fn branch_threshold(d: &Dataset, alpha: f64, tilde: &Coefficients, which: TrivialSolution) -> Option<f64> {
    let c = correlations_for(d, tilde, which);
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    for j in 0..d.p() {
        for (a, k) in coordinate_constraints(c[j], tilde.beta[j], alpha, which) {
            if k > 0.0 {
                lower = lower.max(a / k);
            } else if a > 0.0 {
                return None;
            } else if k < 0.0 {
                upper = upper.min(a / k);
            }
        }
    }
    (lower < upper).then_some(lower)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMax {
    pub value: f64,
    pub certificate: TrivialSolution,
    /// Set when neither trivial point was attainable and the fallback
    /// `1.5 · max_j |x_jᵀy|/n` was used instead.
    pub fallback: bool,
}

/// Smallest `λ` at which either trivial solution (zero or unchanged) is
/// optimal. Ties go to the zero solution.
pub fn lambda_max(d: &Dataset, alpha: f64, tilde: &Coefficients) -> Result<LambdaMax> {
    check_dims(d, tilde)?;
    let zero = branch_threshold(d, alpha, tilde, TrivialSolution::Zero);
    let unchanged = branch_threshold(d, alpha, tilde, TrivialSolution::Unchanged);
    let pick = match (zero, unchanged) {
        (Some(z), Some(u)) if u < z => (u, TrivialSolution::Unchanged),
        (Some(z), _) => (z, TrivialSolution::Zero),
        (None, Some(u)) => (u, TrivialSolution::Unchanged),
        (None, None) => return Err(Error::NoFiniteLambdaMax),
    };
    Ok(LambdaMax {
        value: pick.0,
        certificate: pick.1,
        fallback: false,
    })
}

/// [`lambda_max`], substituting `1.5 · max_j |x_jᵀy|/n` when no trivial
/// solution is attainable (possible only at `α = 1/2`).
pub fn lambda_max_or_fallback(d: &Dataset, alpha: f64, tilde: &Coefficients) -> Result<LambdaMax> {
    match lambda_max(d, alpha, tilde) {
        Err(Error::NoFiniteLambdaMax) => {
            let c = d.x().tr_mul(d.y()) / d.n() as f64;
            log::debug!("no finite lambda_max at alpha = {alpha}; using fallback");
            Ok(LambdaMax {
                value: 1.5 * c.amax(),
                certificate: TrivialSolution::Zero,
                fallback: true,
            })
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub alpha: f64,
    pub n_lambda: usize,
    /// `λ_min / λ_max`.
    pub ratio: f64,
    pub tilde: Coefficients,
}

impl PathSpec {
    pub fn new(alpha: f64, tilde: Coefficients) -> Self {
        PathSpec {
            alpha,
            n_lambda: 100,
            ratio: 1e-4,
            tilde,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if self.n_lambda < 2 {
            return Err(Error::InvalidParameter("n_lambda must be >= 2".into()));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidParameter(format!("ratio {} not in (0, 1)", self.ratio)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Strictly decreasing.
    pub lambdas: Vec<f64>,
    pub fits: Vec<FitResult>,
    pub lambda_max: LambdaMax,
}

/// `n` log-equispaced values from `hi` down to `hi * ratio`, endpoints exact.
pub fn log_grid(hi: f64, ratio: f64, n: usize) -> Vec<f64> {
    let lo = hi * ratio;
    let step = ratio.ln() / (n - 1) as f64;
    (0..n)
        .map(|k| match k {
            0 => hi,
            k if k == n - 1 => lo,
            k => hi * (step * k as f64).exp(),
        })
        .collect()
}

/// Starting point matching a `λ_max` certificate.
pub fn trivial_point(which: TrivialSolution, tilde: &Coefficients) -> Coefficients {
    match which {
        TrivialSolution::Zero => Coefficients::zeros(tilde.len()),
        TrivialSolution::Unchanged => Coefficients::new(tilde.beta.clone()),
    }
}

/// Fits the whole path, each fit warm-started from the previous one.
pub fn fit_path(d: &Dataset, spec: &PathSpec, cfg: &FitConfig) -> Result<PathResult> {
    spec.validate()?;
    let lmax = lambda_max_or_fallback(d, spec.alpha, &spec.tilde)?;
    if !(lmax.value > 0.0) {
        return Err(Error::InvalidParameter(
            "lambda_max is zero: every lambda > 0 gives the trivial solution".into(),
        ));
    }
    let lambdas = log_grid(lmax.value, spec.ratio, spec.n_lambda);
    let start = trivial_point(lmax.certificate, &spec.tilde);
    let fits = fit_on_grid(d, spec.alpha, &spec.tilde, &lambdas, start, cfg)?;
    Ok(PathResult {
        lambdas,
        fits,
        lambda_max: lmax,
    })
}

/// Fits a caller-supplied decreasing grid with warm starts from `start`.
pub fn fit_on_grid(
    d: &Dataset,
    alpha: f64,
    tilde: &Coefficients,
    lambdas: &[f64],
    start: Coefficients,
    cfg: &FitConfig,
) -> Result<Vec<FitResult>> {
    let mut fits = Vec::with_capacity(lambdas.len());
    let mut warm = start;
    for (i, &lambda) in lambdas.iter().enumerate() {
        let pen = PenaltySpec::new(lambda, alpha)?;
        // At λ_max the start is optimal by construction; coordinate descent
        // would only add rounding-level nonzeros to it.
        if i == 0 {
            let kkt = kkt_check(&warm, d, pen, tilde, cfg.loss)?;
            if kkt <= cfg.tol {
                let remapped = cfg.loss == Loss::Logistic && binary_labels(d.y())?.1;
                let objective = objective(&warm, d, pen, tilde, cfg.loss)?;
                fits.push(FitResult {
                    coefficients: warm.clone(),
                    objective,
                    sweeps_used: 0,
                    kkt_residual: kkt,
                    converged: true,
                    labels_remapped: remapped,
                    trace: if cfg.trace { vec![objective] } else { Vec::new() },
                });
                continue;
            }
        }
        let step_cfg = FitConfig {
            init: Init::Warm(warm),
            ..cfg.clone()
        };
        let fit = cd_fit(d, pen, tilde, &step_cfg)?;
        warm = fit.coefficients.clone();
        fits.push(fit);
    }
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::standardize;
    use nalgebra::DMatrix;

    fn data() -> Dataset {
        let x = DMatrix::from_row_slice(
            7,
            3,
            &[
                0.2, 1.0, -0.3, 1.1, -0.4, 0.8, -0.6, 0.3, 1.5, 0.9, 1.2, -1.0, -1.4, 0.1, 0.2, 0.4,
                -1.3, -0.7, -0.5, 0.6, 0.1,
            ],
        );
        let y = DVector::from_vec(vec![0.5, 1.2, -0.7, 2.0, -1.5, 0.3, -0.1]);
        standardize(&Dataset::new(x, y).unwrap()).unwrap().0
    }

    fn max_corr(d: &Dataset, beta: &DVector<f64>) -> f64 {
        residual_correlations(d, beta).amax()
    }

    #[test]
    fn lasso_lambda_max() {
        let d = data();
        let zero = Coefficients::zeros(3);
        let lm = lambda_max(&d, 1.0, &zero).unwrap();
        let expect = max_corr(&d, &zero.beta);
        assert!((lm.value - expect).abs() < 1e-15);
        assert!(zero_solution_exists(&d, PenaltySpec::new(expect, 1.0).unwrap(), &zero).unwrap());
        assert!(!zero_solution_exists(&d, PenaltySpec::new(expect * 0.999, 1.0).unwrap(), &zero).unwrap());
    }

    #[test]
    fn alpha_zero_lambda_max_is_residual_correlation() {
        let d = data();
        let tilde = Coefficients::from_slice(&[0.4, 0.0, -0.2]);
        let lm = lambda_max(&d, 0.0, &tilde).unwrap();
        let expect = max_corr(&d, &tilde.beta);
        assert_eq!(lm.certificate, TrivialSolution::Unchanged);
        assert!((lm.value - expect).abs() < 1e-15);
        let pen = |l: f64| PenaltySpec::new(l, 0.0).unwrap();
        assert!(unchanged_solution_exists(&d, pen(expect * (1.0 + 1e-12)), &tilde).unwrap());
        assert!(!unchanged_solution_exists(&d, pen(expect * 0.999), &tilde).unwrap());
    }

    #[test]
    fn corollary_sufficient_conditions() {
        let d = data();
        let tilde = Coefficients::from_slice(&[0.3, -0.5, 0.0]);
        for alpha in [0.0, 0.2, 0.45] {
            let m = max_corr(&d, &tilde.beta);
            let lambda = m / (1.0 - 2.0 * alpha);
            let pen = PenaltySpec::new(lambda, alpha).unwrap();
            assert!(unchanged_solution_exists(&d, pen, &tilde).unwrap());
        }
        for alpha in [0.55, 0.8, 1.0] {
            let m = max_corr(&d, &DVector::zeros(3));
            let pen = PenaltySpec::new(m / (2.0 * alpha - 1.0), alpha).unwrap();
            assert!(zero_solution_exists(&d, pen, &tilde).unwrap());
        }
    }

    #[test]
    fn degenerate_responses() {
        // With zero residual, β̃ is optimal iff 0 lies in the penalty
        // subdifferential at β̃, i.e. α ≤ 1/2; symmetrically y = 0 gives the
        // zero solution iff α ≥ 1/2.
        let d = data();
        let tilde = Coefficients::from_slice(&[0.3, -0.5, 0.7]);
        let exact = Dataset::new(d.x().clone(), d.x() * &tilde.beta).unwrap();
        let zero_y = Dataset::new(d.x().clone(), DVector::zeros(7)).unwrap();
        for alpha in [0.0, 0.25, 0.45] {
            let pen = PenaltySpec::new(0.01, alpha).unwrap();
            assert!(unchanged_solution_exists(&exact, pen, &tilde).unwrap());
            assert!(!zero_solution_exists(&zero_y, pen, &tilde).unwrap());
        }
        for alpha in [0.5, 0.75, 1.0] {
            let pen = PenaltySpec::new(0.01, alpha).unwrap();
            assert!(zero_solution_exists(&zero_y, pen, &tilde).unwrap());
        }
        for alpha in [0.55, 1.0] {
            let pen = PenaltySpec::new(0.01, alpha).unwrap();
            assert!(!unchanged_solution_exists(&exact, pen, &tilde).unwrap());
        }
    }

    #[test]
    fn orthogonal_response_gives_zero_lambda_max() {
        // y orthogonal to both columns
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![1.0, -1.0, -1.0, 1.0]);
        let d = Dataset::new(x, y).unwrap();
        let lm = lambda_max(&d, 1.0, &Coefficients::zeros(2)).unwrap();
        assert_eq!(lm.value, 0.0);
    }

    #[test]
    fn half_alpha_can_have_no_finite_lambda_max() {
        // least squares lands strictly between 0 and β̃: at α = 1/2 the
        // penalty is flat on [0, β̃] so neither endpoint is ever optimal
        let x = DMatrix::from_row_slice(4, 1, &[1.0, -1.0, 1.0, -1.0]);
        let y = DVector::from_vec(vec![0.5, -0.5, 0.5, -0.5]);
        let d = Dataset::new(x, y).unwrap();
        let tilde = Coefficients::from_slice(&[1.0]);
        assert!(matches!(lambda_max(&d, 0.5, &tilde), Err(Error::NoFiniteLambdaMax)));
        let fb = lambda_max_or_fallback(&d, 0.5, &tilde).unwrap();
        assert!(fb.fallback);
        assert!((fb.value - 0.75).abs() < 1e-12);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(2.5, 1e-4, 100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 2.5);
        assert_eq!(g[99], 2.5 * 1e-4);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        let steps: Vec<f64> = g.windows(2).map(|w| (w[0] / w[1]).ln()).collect();
        for s in &steps {
            assert!((s - steps[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn path_starts_at_certificate() {
        let d = data();
        let tilde = Coefficients::from_slice(&[0.2, 0.0, -0.4]);
        for alpha in [0.0, 0.25, 0.75, 1.0] {
            let spec = PathSpec {
                n_lambda: 20,
                ..PathSpec::new(alpha, tilde.clone())
            };
            let cfg = FitConfig::default();
            let path = fit_path(&d, &spec, &cfg).unwrap();
            let trivial = trivial_point(path.lambda_max.certificate, &tilde);
            // exactly, not just within tolerance
            assert_eq!(path.fits[0].coefficients.beta, trivial.beta);
            assert_eq!(path.fits[0].sweeps_used, 0);
            for f in &path.fits {
                assert!(f.kkt_residual <= 10.0 * cfg.tol);
            }
        }
    }
}
