//! k-fold cross-validation over the `(λ, α)` grid.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{standardize, standardize_features, Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::metrics;
use crate::regpath::{fit_on_grid, lambda_max_or_fallback, log_grid, trivial_point, LambdaMax};
use crate::rng::{derive_seed, rng_from};
use crate::solver::{FitConfig, FitResult, Loss};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Deviance,
    Auc,
}

impl Metric {
    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Auc)
    }

    /// Default selection metric for a loss.
    pub fn for_loss(loss: Loss) -> Self {
        match loss {
            Loss::Squared => Metric::Mse,
            Loss::Logistic => Metric::Deviance,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Metric::Mse),
            "deviance" => Ok(Metric::Deviance),
            "auc" => Ok(Metric::Auc),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSpec {
    pub k: usize,
    pub alphas: Vec<f64>,
    pub n_lambda: usize,
    pub ratio: f64,
    pub seed: u64,
    pub metric: Metric,
}

impl Default for CvSpec {
    fn default() -> Self {
        CvSpec {
            k: 10,
            alphas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            n_lambda: 100,
            ratio: 1e-4,
            seed: 0,
            metric: Metric::Mse,
        }
    }
}

impl CvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter("k must be >= 2".into()));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidParameter("alphas must be nonempty and lie in [0, 1]".into()));
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

/// One grid point of the CV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub alpha: f64,
    pub lambda: f64,
    pub mean: f64,
    /// Standard deviation of the per-fold metric.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// Rows ordered by α (as given) then by decreasing λ.
    pub table: Vec<CvCell>,
    pub best_alpha: f64,
    pub best_lambda: f64,
    pub refit: FitResult,
    /// `λ_max` used for each α, aligned with the spec's `alphas`.
    pub lambda_max: Vec<LambdaMax>,
}

impl CvResult {
    pub fn best_cell(&self) -> &CvCell {
        self.table
            .iter()
            .find(|c| c.alpha == self.best_alpha && c.lambda == self.best_lambda)
            .expect("best pair is in the table")
    }
}

/// Shuffles `0..n` and deals it into `k` folds round-robin, so sizes differ by
/// at most one. Each fold is returned sorted.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn evaluate(metric: Metric, y: &DVector<f64>, eta: &DVector<f64>) -> Result<f64> {
    match metric {
        Metric::Mse => metrics::mse(y, eta),
        Metric::Deviance => metrics::deviance(y, eta),
        Metric::Auc => {
            let labels: Vec<bool> = y.iter().map(|&v| v > 0.5).collect();
            metrics::auc(&labels, eta.as_slice())
        }
    }
}

/// Held-out metric along the whole λ grid for one fold.
#[allow(clippy::too_many_arguments)]
fn fold_scores(
    d: &Dataset,
    test_rows: &[usize],
    alpha: f64,
    tilde: &Coefficients,
    lambdas: &[f64],
    start: &Coefficients,
    metric: Metric,
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    let mut in_test = vec![false; d.n()];
    for &i in test_rows {
        in_test[i] = true;
    }
    let train_rows: Vec<usize> = (0..d.n()).filter(|&i| !in_test[i]).collect();
    let train_raw = d.select_rows(&train_rows)?;
    let (train, st) = match cfg.loss {
        Loss::Squared => standardize(&train_raw)?,
        Loss::Logistic => standardize_features(&train_raw)?,
    };
    let test = st.apply(&d.select_rows(test_rows)?)?;
    // β̃ lives in the coordinates of `d`; rescale to the fold's standardization
    let tilde_fold = st.to_standardized(tilde)?;
    let start_fold = st.to_standardized(start)?;
    let fits = fit_on_grid(&train, alpha, &tilde_fold, lambdas, start_fold, cfg)?;
    fits.iter()
        .map(|f| {
            let eta = test.x() * &f.coefficients.beta;
            let y = if cfg.loss == Loss::Logistic {
                crate::solver::binary_labels(test.y())?.0
            } else {
                test.y().clone()
            };
            evaluate(metric, &y, &eta)
        })
        .collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Selects `(α, λ)` by k-fold cross-validation and refits on all of `d`.
///
/// `d` should already be standardized; each training fold is standardized
/// again and the held-out fold is mapped with the training transform. Every
/// fold shares the λ grid built from the full-data `λ_max` for that α. Ties
/// in the mean metric go to the larger λ, then the larger α.
pub fn cross_validate(d: &Dataset, spec: &CvSpec, tilde: &Coefficients, cfg: &FitConfig) -> Result<CvResult> {
    spec.validate()?;
    cfg.validate()?;
    if tilde.len() != d.p() {
        return Err(Error::DimensionMismatch(format!("dataset has p = {}, tilde has {}", d.p(), tilde.len())));
    }
    let folds = kfold_split(d.n(), spec.k, derive_seed(spec.seed, &[0xcf]))?;

    let mut grids = Vec::with_capacity(spec.alphas.len());
    let mut lmaxes = Vec::with_capacity(spec.alphas.len());
    for &alpha in &spec.alphas {
        let lm = lambda_max_or_fallback(d, alpha, tilde)?;
        if !(lm.value > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda_max is zero at alpha = {alpha}; nothing to select"
            )));
        }
        grids.push(log_grid(lm.value, spec.ratio, spec.n_lambda));
        lmaxes.push(lm);
    }

    let units: Vec<(usize, usize)> = (0..spec.alphas.len())
        .flat_map(|a| (0..folds.len()).map(move |f| (a, f)))
        .collect();
    let scores: Vec<Vec<f64>> = units
        .par_iter()
        .map(|&(a, f)| {
            let start = trivial_point(lmaxes[a].certificate, tilde);
            fold_scores(d, &folds[f], spec.alphas[a], tilde, &grids[a], &start, spec.metric, cfg)
        })
        .collect::<Result<_>>()?;

    let mut table = Vec::with_capacity(spec.alphas.len() * spec.n_lambda);
    for (a, &alpha) in spec.alphas.iter().enumerate() {
        let per_fold = &scores[a * folds.len()..(a + 1) * folds.len()];
        for (l, &lambda) in grids[a].iter().enumerate() {
            let vals: Vec<f64> = per_fold.iter().map(|s| s[l]).collect();
            let (mean, sd) = mean_sd(&vals);
            table.push(CvCell { alpha, lambda, mean, sd });
        }
    }

    let sign = if spec.metric.higher_is_better() { -1.0 } else { 1.0 };
    let best = table
        .iter()
        .enumerate()
        .filter(|(_, c)| c.mean.is_finite())
        .min_by(|(_, x), (_, y)| {
            (sign * x.mean)
                .total_cmp(&(sign * y.mean))
                .then(y.lambda.total_cmp(&x.lambda))
                .then(y.alpha.total_cmp(&x.alpha))
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidData("every cross-validation score is non-finite".into()))?;
    let (best_a, best_l) = (best / spec.n_lambda, best % spec.n_lambda);
    let best_alpha = spec.alphas[best_a];
    let best_lambda = grids[best_a][best_l];

    // warm-started path on all data, truncated at the selected λ
    let start = trivial_point(lmaxes[best_a].certificate, tilde);
    let mut path = fit_on_grid(d, best_alpha, tilde, &grids[best_a][..=best_l], start, cfg)?;
    let refit = path.pop().expect("grid is nonempty");

    Ok(CvResult {
        table,
        best_alpha,
        best_lambda,
        refit,
        lambda_max: lmaxes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let f = kfold_split(10, 10, 1).unwrap();
        assert!(f.iter().all(|s| s.len() == 1));
        let f = kfold_split(10, 3, 1).unwrap();
        let mut sizes: Vec<usize> = f.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(kfold_split(10, 3, 5).unwrap(), kfold_split(10, 3, 5).unwrap());
        assert!(matches!(kfold_split(3, 4, 0), Err(Error::KTooLarge { k: 4, n: 3 })));
    }
}
