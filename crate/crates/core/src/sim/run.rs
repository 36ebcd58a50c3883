use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::generate::{gen_abrupt, gen_classification_drift, gen_gradual, gen_transfer};
use super::{DriftScenario, ExperimentReport, Method, ScenarioKind, StepData};
use crate::data::{destandardize, standardize, standardize_features, Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::metrics::auc;
use crate::rng::derive_seed;
use crate::select::{cross_validate, CvSpec, Metric};
use crate::solver::{FitConfig, Loss};

/// Settings shared by all experiment runners.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Fold count, α grid and λ grid; the seed is replaced per trial and step.
    pub cv: CvSpec,
    /// Solver tolerance for every fit along the CV paths.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl RunSpec {
    pub fn new(trials: usize) -> Self {
        RunSpec {
            trials,
            methods: Method::ALL.to_vec(),
            cv: CvSpec::default(),
            tol: 1e-4,
            max_sweeps: 10_000,
        }
    }

    pub fn with_methods(mut self, methods: &[Method]) -> Self {
        self.methods = methods.to_vec();
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidSpec("no methods selected".into()));
        }
        self.cv.validate()?;
        self.fit_config(Loss::Squared).validate()
    }

    fn fit_config(&self, loss: Loss) -> FitConfig {
        FitConfig::default()
            .with_loss(loss)
            .with_tol(self.tol)
            .with_max_sweeps(self.max_sweeps)
    }

    fn wants(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}

const CV_STREAM: u64 = 0xc5;

/// Standardizes `raw`, selects `(α, λ)` by cross-validation with `tilde`
/// (raw scale) as the initial estimate, and returns the refit on the raw
/// scale.
fn select_and_fit(
    raw: &Dataset,
    tilde: Option<&Coefficients>,
    alphas: &[f64],
    loss: Loss,
    run: &RunSpec,
    seed: u64,
) -> Result<Coefficients> {
    let (d, st) = match loss {
        Loss::Squared => standardize(raw)?,
        Loss::Logistic => standardize_features(raw)?,
    };
    let tilde = match tilde {
        Some(t) => st.to_standardized(t)?,
        None => Coefficients::zeros(raw.p()),
    };
    let cv = CvSpec {
        alphas: alphas.to_vec(),
        seed,
        metric: Metric::for_loss(loss),
        ..run.cv.clone()
    };
    let res = cross_validate(&d, &cv, &tilde, &run.fit_config(loss))?;
    destandardize(&res.refit.coefficients, &st)
}

/// Estimates of the three methods along a stream, where step `k` trains on
/// `train[k]` (and, for Lasso (all), on `train[..=k]`).
fn fit_stream(
    train: &[&Dataset],
    alphas: &[f64],
    loss: Loss,
    run: &RunSpec,
    trial_seed: u64,
) -> Result<BTreeMap<Method, Vec<Coefficients>>> {
    let mut out: BTreeMap<Method, Vec<Coefficients>> = run.methods.iter().map(|&m| (m, Vec::new())).collect();
    let mut prev_transfer: Option<Coefficients> = None;
    for (k, d) in train.iter().enumerate() {
        let seed = derive_seed(trial_seed, &[CV_STREAM, k as u64]);
        let single = if run.wants(Method::LassoSingle) || k == 0 {
            Some(select_and_fit(d, None, &[1.0], loss, run, seed)?)
        } else {
            None
        };
        if run.wants(Method::LassoAll) {
            let fit = if k == 0 {
                single.clone().expect("computed at the first step")
            } else {
                let pooled = Dataset::concat(&train[..=k])?;
                select_and_fit(&pooled, None, &[1.0], loss, run, seed)?
            };
            out.entry(Method::LassoAll).or_default().push(fit);
        }
        if run.wants(Method::TransferLasso) {
            // the first transfer model is plain Lasso
            let transfer = match &prev_transfer {
                None => single.clone().expect("computed at the first step"),
                Some(t) => select_and_fit(d, Some(t), alphas, loss, run, seed)?,
            };
            out.entry(Method::TransferLasso).or_default().push(transfer.clone());
            prev_transfer = Some(transfer);
        }
        if let (true, Some(s)) = (run.wants(Method::LassoSingle), single) {
            out.entry(Method::LassoSingle).or_default().push(s);
        }
    }
    Ok(out)
}

fn l2_error(est: &Coefficients, truth: &Coefficients) -> f64 {
    (&est.beta - &truth.beta).norm()
}

fn correct_selected(est: &Coefficients, truth: &Coefficients) -> f64 {
    let truth = truth.support();
    est.support().iter().filter(|j| truth.contains(j)).count() as f64
}

/// Transposes per-trial `[method][point]` maps into `[method][point][trial]`.
fn collect(trials: Vec<BTreeMap<Method, Vec<f64>>>, methods: &[Method], points: usize) -> BTreeMap<Method, Vec<Vec<f64>>> {
    let mut out = BTreeMap::new();
    for &m in methods {
        let by_point = (0..points).map(|i| trials.iter().map(|t| t[&m][i]).collect()).collect();
        out.insert(m, by_point);
    }
    out
}

fn config_echo(scenario: &DriftScenario, run: &RunSpec, extra: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "scenario": scenario,
        "run": run,
        "lasso_all_standardization": "concatenated data re-standardized at every step",
        "coefficient_scale": "errors use destandardized coefficients",
        "extra": extra,
    })
}

/// ℓ2 estimation error per step for the abrupt or gradual scenario.
pub fn run_concept_drift(scenario: &DriftScenario, run: &RunSpec) -> Result<ExperimentReport> {
    run.validate()?;
    let generate = match scenario.kind {
        ScenarioKind::Abrupt => gen_abrupt,
        ScenarioKind::Gradual => gen_gradual,
        other => return Err(Error::InvalidSpec(format!("{other:?} is not a concept-drift scenario"))),
    };
    scenario.validate()?;
    let trials: Vec<BTreeMap<Method, Vec<f64>>> = (0..run.trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(scenario.seed, &[t as u64]);
            let steps = generate(scenario, seed)?;
            let train: Vec<&Dataset> = steps.iter().map(|s| &s.dataset).collect();
            let fits = fit_stream(&train, &run.cv.alphas, Loss::Squared, run, seed)?;
            Ok(fits
                .into_iter()
                .map(|(m, est)| {
                    let errs = est.iter().zip(&steps).map(|(e, s)| l2_error(e, &s.beta_true)).collect();
                    (m, errs)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let points: Vec<f64> = (1..=scenario.n_steps).map(|k| k as f64).collect();
    let per_trial = collect(trials, &run.methods, points.len());
    let name = format!("{:?}", scenario.kind).to_lowercase();
    Ok(ExperimentReport::from_values(
        &name,
        "l2_error",
        points,
        per_trial,
        config_echo(scenario, run, serde_json::Value::Null),
    ))
}

/// Reports of the transfer-rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub l2_error: ExperimentReport,
    /// `|supp(β̂) ∩ supp(β^t)|`.
    pub correct_selected: ExperimentReport,
}

/// For each rate, fits a source Lasso to get `β̃`, then the three methods on
/// the target. Trials share the source data and target design across rates.
pub fn run_transfer(scenario: &DriftScenario, rates: &[f64], run: &RunSpec) -> Result<TransferReport> {
    run.validate()?;
    if scenario.kind != ScenarioKind::Transfer {
        return Err(Error::InvalidSpec(format!("{:?} is not a transfer scenario", scenario.kind)));
    }
    if rates.is_empty() {
        return Err(Error::InvalidSpec("no transfer rates given".into()));
    }
    for &rate in rates {
        DriftScenario { transfer_rate: rate, ..scenario.clone() }.validate()?;
    }
    type Pair = (BTreeMap<Method, Vec<f64>>, BTreeMap<Method, Vec<f64>>);
    let trials: Vec<Pair> = (0..run.trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(scenario.seed, &[t as u64]);
            let mut err: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
            let mut sel: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
            let mut source_fit: Option<Coefficients> = None;
            for (r, &rate) in rates.iter().enumerate() {
                let spec = DriftScenario { transfer_rate: rate, ..scenario.clone() };
                let (source, target) = gen_transfer(&spec, seed)?;
                let cv_seed = derive_seed(seed, &[CV_STREAM, r as u64]);
                let tilde = match &source_fit {
                    Some(b) => b.clone(),
                    None => {
                        let b = select_and_fit(&source.dataset, None, &[1.0], Loss::Squared, run, derive_seed(seed, &[CV_STREAM]))?;
                        source_fit = Some(b.clone());
                        b
                    }
                };
                for &m in &run.methods {
                    let est = match m {
                        Method::LassoSingle => select_and_fit(&target.dataset, None, &[1.0], Loss::Squared, run, cv_seed)?,
                        Method::LassoAll => {
                            let pooled = Dataset::concat(&[&source.dataset, &target.dataset])?;
                            select_and_fit(&pooled, None, &[1.0], Loss::Squared, run, cv_seed)?
                        }
                        Method::TransferLasso => {
                            select_and_fit(&target.dataset, Some(&tilde), &run.cv.alphas, Loss::Squared, run, cv_seed)?
                        }
                    };
                    err.entry(m).or_default().push(l2_error(&est, &target.beta_true));
                    sel.entry(m).or_default().push(correct_selected(&est, &target.beta_true));
                }
            }
            Ok((err, sel))
        })
        .collect::<Result<_>>()?;
    let (err, sel): (Vec<_>, Vec<_>) = trials.into_iter().unzip();
    let echo = config_echo(scenario, run, serde_json::json!({ "rates": rates }));
    let points = rates.to_vec();
    Ok(TransferReport {
        l2_error: ExperimentReport::from_values(
            "transfer",
            "l2_error",
            points.clone(),
            collect(err, &run.methods, rates.len()),
            echo.clone(),
        ),
        correct_selected: ExperimentReport::from_values(
            "transfer",
            "correct_selected",
            points,
            collect(sel, &run.methods, rates.len()),
            echo,
        ),
    })
}

/// Prequential AUC: each model is trained on batch `b` (Lasso (all): batches
/// `1..=b`) and scored on batch `b + 1`. An α of 0.5 in the grid is replaced
/// by 0.501.
pub fn run_classification_drift(scenario: &DriftScenario, run: &RunSpec) -> Result<ExperimentReport> {
    run.validate()?;
    if scenario.kind != ScenarioKind::ClassificationDrift {
        return Err(Error::InvalidSpec(format!("{:?} is not a classification scenario", scenario.kind)));
    }
    if scenario.n_steps < 2 {
        return Err(Error::InvalidSpec("prequential evaluation needs at least two batches".into()));
    }
    let alphas: Vec<f64> = run.cv.alphas.iter().map(|&a| if a == 0.5 { 0.501 } else { a }).collect();
    let trials: Vec<BTreeMap<Method, Vec<f64>>> = (0..run.trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(scenario.seed, &[t as u64]);
            let batches: Vec<StepData> = gen_classification_drift(scenario, seed)?;
            let train: Vec<&Dataset> = batches[..batches.len() - 1].iter().map(|s| &s.dataset).collect();
            let fits = fit_stream(&train, &alphas, Loss::Logistic, run, seed)?;
            fits.into_iter()
                .map(|(m, est)| {
                    let aucs = est
                        .iter()
                        .zip(&batches[1..])
                        .map(|(e, next)| {
                            let scores = next.dataset.x() * &e.beta;
                            let labels: Vec<bool> = next.dataset.y().iter().map(|&v| v > 0.5).collect();
                            auc(&labels, scores.as_slice())
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    Ok((m, aucs))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let points: Vec<f64> = (1..scenario.n_steps).map(|k| k as f64).collect();
    let per_trial = collect(trials, &run.methods, points.len());
    Ok(ExperimentReport::from_values(
        "classification_drift",
        "auc",
        points,
        per_trial,
        config_echo(scenario, run, serde_json::json!({ "alphas_used": alphas, "cv_metric": "deviance" })),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: ScenarioKind) -> DriftScenario {
        DriftScenario {
            n_per_step: 30,
            n_source: 60,
            p: 12,
            n_steps: 3,
            s_active: 3,
            switch_count: 1,
            switch_step: 2,
            ..DriftScenario::new(kind, 11)
        }
    }

    fn quick(trials: usize) -> RunSpec {
        let mut r = RunSpec::new(trials);
        r.cv.k = 3;
        r.cv.n_lambda = 12;
        r.cv.ratio = 1e-2;
        r
    }

    #[test]
    fn concept_drift_report_shape_and_determinism() {
        let s = tiny(ScenarioKind::Abrupt);
        let a = run_concept_drift(&s, &quick(2)).unwrap();
        assert_eq!(a.rows.len(), 9);
        assert_eq!(a.points, vec![1.0, 2.0, 3.0]);
        // the first transfer model is Lasso, so step 1 agrees across methods
        let first: Vec<f64> = Method::ALL.iter().map(|&m| a.means(m)[0]).collect();
        assert!(first.iter().all(|&v| v == first[0]));
        assert_eq!(a, run_concept_drift(&s, &quick(2)).unwrap());
    }

    #[test]
    fn method_subsets_do_not_interact() {
        let s = tiny(ScenarioKind::Gradual);
        let full = run_concept_drift(&s, &quick(2)).unwrap();
        let only = run_concept_drift(&s, &quick(2).with_methods(&[Method::LassoSingle])).unwrap();
        assert_eq!(only.per_trial[&Method::LassoSingle], full.per_trial[&Method::LassoSingle]);
        let only_t = run_concept_drift(&s, &quick(2).with_methods(&[Method::TransferLasso])).unwrap();
        assert_eq!(only_t.per_trial[&Method::TransferLasso], full.per_trial[&Method::TransferLasso]);
    }

    #[test]
    fn l2_metric_is_euclidean_distance() {
        let a = Coefficients::from_slice(&[1.0, -2.0, 0.0]);
        let b = Coefficients::from_slice(&[0.0, 0.0, 2.0]);
        assert_eq!(l2_error(&a, &b), 3.0);
        assert_eq!(correct_selected(&a, &Coefficients::from_slice(&[0.0, 1.0, 1.0])), 1.0);
    }

    #[test]
    fn transfer_report_rows_per_rate() {
        let s = tiny(ScenarioKind::Transfer);
        let r = run_transfer(&s, &[0.0, 1.0], &quick(1)).unwrap();
        assert_eq!(r.l2_error.rows.len(), 6);
        assert!(r.correct_selected.rows.iter().all(|row| row.mean >= 0.0 && row.mean <= 3.0));
    }

    #[test]
    fn classification_aucs_are_probabilities() {
        let s = DriftScenario {
            n_per_step: 60,
            n_steps: 4,
            s_active: 3,
            p: 30,
            topic_model: super::super::TopicModel {
                topics: 6,
                ..Default::default()
            },
            ..DriftScenario::classification(4)
        };
        let r = run_classification_drift(&s, &quick(1)).unwrap();
        assert_eq!(r.points.len(), 3);
        assert!(r.rows.iter().all(|row| (0.0..=1.0).contains(&row.mean)));
    }
}
