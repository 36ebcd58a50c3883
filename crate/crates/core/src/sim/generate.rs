use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DriftScenario, ScenarioKind, StepData};
use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::rng::{derived_rng, Rng as StreamRng};

// stream labels keep coefficient draws independent of design draws
const COEF: u64 = 1;
const DESIGN: u64 = 2;

fn expect(spec: &DriftScenario, kind: ScenarioKind) -> Result<()> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(Error::InvalidSpec(format!("expected a {kind:?} scenario, got {:?}", spec.kind)));
    }
    Ok(())
}

fn draw_coef(spec: &DriftScenario, rng: &mut StreamRng) -> f64 {
    let (lo, hi) = spec.coef_range;
    rng.random_range(lo..=hi)
}

fn gaussian_step(n: usize, beta: &DVector<f64>, sigma: f64, rng: &mut StreamRng) -> Result<StepData> {
    let x = DMatrix::from_fn(n, beta.len(), |_, _| -> f64 { StandardNormal.sample(&mut *rng) });
    let noise = DVector::from_fn(n, |_, _| {
        let e: f64 = StandardNormal.sample(&mut *rng);
        sigma * e
    });
    let y = &x * beta + noise;
    Ok(StepData {
        dataset: Dataset::new(x, y)?,
        beta_true: Coefficients::new(beta.clone()),
    })
}

fn initial_beta(spec: &DriftScenario, rng: &mut StreamRng) -> (Vec<usize>, DVector<f64>) {
    let support = sample(rng, spec.p, spec.s_active).into_vec();
    let mut beta = DVector::zeros(spec.p);
    for &j in &support {
        beta[j] = draw_coef(spec, rng);
    }
    (support, beta)
}

fn inactive(p: usize, support: &[usize]) -> Vec<usize> {
    let mut on = vec![false; p];
    for &j in support {
        on[j] = true;
    }
    (0..p).filter(|&j| !on[j]).collect()
}

/// Steps before `switch_step` share one β; at `switch_step`, `switch_count`
/// active features move to fresh indices with fresh coefficients, and the
/// new β holds to the end.
pub fn gen_abrupt(spec: &DriftScenario, seed: u64) -> Result<Vec<StepData>> {
    expect(spec, ScenarioKind::Abrupt)?;
    let mut coef_rng = derived_rng(seed, &[COEF]);
    let mut rng = derived_rng(seed, &[DESIGN]);
    let (mut support, mut beta) = initial_beta(spec, &mut coef_rng);
    let mut steps = Vec::with_capacity(spec.n_steps);
    for k in 1..=spec.n_steps {
        if k == spec.switch_step && k > 1 {
            let free = inactive(spec.p, &support);
            let out = sample(&mut coef_rng, support.len(), spec.switch_count).into_vec();
            let fresh = sample(&mut coef_rng, free.len(), spec.switch_count).into_vec();
            for (o, f) in out.into_iter().zip(fresh) {
                beta[support[o]] = 0.0;
                support[o] = free[f];
                beta[free[f]] = draw_coef(spec, &mut coef_rng);
            }
        }
        steps.push(gaussian_step(spec.n_per_step, &beta, spec.noise_sd, &mut rng)?);
    }
    Ok(steps)
}

/// From step 2 on, one active feature (uniformly chosen) moves to an
/// inactive index with a fresh coefficient.
pub fn gen_gradual(spec: &DriftScenario, seed: u64) -> Result<Vec<StepData>> {
    expect(spec, ScenarioKind::Gradual)?;
    let mut coef_rng = derived_rng(seed, &[COEF]);
    let mut rng = derived_rng(seed, &[DESIGN]);
    let (mut support, mut beta) = initial_beta(spec, &mut coef_rng);
    let mut steps = Vec::with_capacity(spec.n_steps);
    for k in 1..=spec.n_steps {
        if k > 1 && !support.is_empty() {
            let free = inactive(spec.p, &support);
            let o = coef_rng.random_range(0..support.len());
            let f = free[coef_rng.random_range(0..free.len())];
            beta[support[o]] = 0.0;
            support[o] = f;
            beta[f] = draw_coef(spec, &mut coef_rng);
        }
        steps.push(gaussian_step(spec.n_per_step, &beta, spec.noise_sd, &mut rng)?);
    }
    Ok(steps)
}

/// Source and target domains. Each source feature moves to a fresh index
/// with probability `transfer_rate`, taking a fresh coefficient.
///
/// All random draws are made regardless of the rate, so calls with the same
/// seed and different rates share the source data, the target design and
/// noise, and the switching uniforms: a feature that switches at some rate
/// also switches at every higher rate.
pub fn gen_transfer(spec: &DriftScenario, seed: u64) -> Result<(StepData, StepData)> {
    expect(spec, ScenarioKind::Transfer)?;
    let mut coef_rng = derived_rng(seed, &[COEF]);
    let (support, beta_s) = initial_beta(spec, &mut coef_rng);
    let free = inactive(spec.p, &support);
    let order = sample(&mut coef_rng, free.len(), free.len()).into_vec();
    let mut beta_t = beta_s.clone();
    let mut next = 0;
    for &j in &support {
        let u: f64 = coef_rng.random();
        let c = draw_coef(spec, &mut coef_rng);
        if u < spec.transfer_rate {
            let f = free[order[next]];
            next += 1;
            beta_t[j] = 0.0;
            beta_t[f] = c;
        }
    }
    let mut src_rng = derived_rng(seed, &[DESIGN, 0]);
    let mut tgt_rng = derived_rng(seed, &[DESIGN, 1]);
    let source = gaussian_step(spec.n_source, &beta_s, spec.noise_sd, &mut src_rng)?;
    // same design and noise at every rate; only the response moves with β^t
    let target = gaussian_step(spec.n_per_step, &beta_t, spec.noise_sd, &mut tgt_rng)?;
    Ok((source, target))
}

/// Topic that owns word `j`.
pub fn word_topic(j: usize, words_per_topic: usize) -> usize {
    j / words_per_topic
}

/// Bag-of-words batches with logistic labels. Each document picks a topic
/// uniformly and contains each word independently (more often for words of
/// its own topic). Words of interesting topics carry coefficient `+signal`,
/// all other words `−signal`. In batches `2k−1` and `2k` the interesting
/// topics are `k, …, k + s_active − 1` (1-based), so the interest shifts by
/// one topic between stationary pairs.
pub fn gen_classification_drift(spec: &DriftScenario, seed: u64) -> Result<Vec<StepData>> {
    expect(spec, ScenarioKind::ClassificationDrift)?;
    let tm = &spec.topic_model;
    let mut rng = derived_rng(seed, &[DESIGN]);
    let mut steps = Vec::with_capacity(spec.n_steps);
    for b in 0..spec.n_steps {
        let first = b / 2;
        let beta = DVector::from_fn(spec.p, |j, _| {
            let t = word_topic(j, tm.words_per_topic);
            if (first..first + spec.s_active).contains(&t) {
                tm.signal
            } else {
                -tm.signal
            }
        });
        let n = spec.n_per_step;
        let mut x = DMatrix::zeros(n, spec.p);
        for i in 0..n {
            let topic = rng.random_range(0..tm.topics);
            for j in 0..spec.p {
                let q = if word_topic(j, tm.words_per_topic) == topic { tm.p_own } else { tm.p_other };
                if rng.random_bool(q) {
                    x[(i, j)] = 1.0;
                }
            }
        }
        let eta = &x * &beta;
        let y = eta.map(|e| if rng.random_bool(crate::solver::sigmoid(e)) { 1.0 } else { 0.0 });
        steps.push(StepData {
            dataset: Dataset::new(x, y)?,
            beta_true: Coefficients::new(beta),
        });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support(b: &Coefficients) -> Vec<usize> {
        b.support()
    }

    #[test]
    fn abrupt_switches_five_at_step_six() {
        let spec = DriftScenario::abrupt(3);
        let steps = gen_abrupt(&spec, 3).unwrap();
        assert_eq!(steps.len(), 10);
        let s1 = support(&steps[0].beta_true);
        assert_eq!(s1.len(), 10);
        for k in 1..5 {
            assert_eq!(steps[k].beta_true, steps[0].beta_true);
        }
        let s6 = support(&steps[5].beta_true);
        assert_eq!(s6.len(), 10);
        assert_eq!(s1.iter().filter(|j| s6.contains(j)).count(), 5);
        for k in 6..10 {
            assert_eq!(steps[k].beta_true, steps[5].beta_true);
        }
        assert!(steps.iter().all(|s| s.beta_true.beta.amax() <= 1.0));
        assert_eq!(gen_abrupt(&spec, 3).unwrap(), steps);
    }

    #[test]
    fn gradual_moves_one_feature_per_step() {
        let spec = DriftScenario::gradual(5);
        let steps = gen_gradual(&spec, 5).unwrap();
        for w in steps.windows(2) {
            let a = support(&w[0].beta_true);
            let b = support(&w[1].beta_true);
            assert_eq!(a.len(), 10);
            assert_eq!(b.len(), 10);
            let sym = a.iter().filter(|j| !b.contains(j)).count() + b.iter().filter(|j| !a.contains(j)).count();
            assert_eq!(sym, 2);
        }
    }

    #[test]
    fn transfer_rate_extremes() {
        let (s0, t0) = gen_transfer(&DriftScenario::transfer(0.0, 9), 9).unwrap();
        assert_eq!(s0.beta_true, t0.beta_true);
        assert_eq!((s0.dataset.n(), t0.dataset.n()), (500, 50));
        let (s1, t1) = gen_transfer(&DriftScenario::transfer(1.0, 9), 9).unwrap();
        assert_eq!(s1, s0);
        assert_eq!(t1.dataset.x(), t0.dataset.x());
        let a = support(&s1.beta_true);
        assert!(support(&t1.beta_true).iter().all(|j| !a.contains(j)));
    }

    #[test]
    fn transfer_switch_count_matches_rate() {
        let rate = 0.3;
        let trials = 2000;
        let mut total = 0;
        for seed in 0..trials {
            let (s, t) = gen_transfer(&DriftScenario::transfer(rate, seed), seed).unwrap();
            let a = support(&s.beta_true);
            total += a.iter().filter(|&&j| t.beta_true.beta[j] == 0.0).count();
        }
        let mean = total as f64 / trials as f64;
        // binomial(10, 0.3) mean 3, sd of the mean about 0.032
        assert!((mean - 3.0).abs() < 0.15, "{mean}");
    }

    #[test]
    fn classification_batches() {
        let spec = DriftScenario::classification(2);
        let steps = gen_classification_drift(&spec, 2).unwrap();
        assert_eq!(steps.len(), 20);
        for pair in steps.chunks(2) {
            assert_eq!(pair[0].beta_true, pair[1].beta_true);
        }
        assert_ne!(steps[1].beta_true, steps[2].beta_true);
        let labels: Vec<f64> = steps.iter().flat_map(|s| s.dataset.y().iter().copied()).collect();
        assert!(labels.iter().all(|&v| v == 0.0 || v == 1.0));
        let rate = labels.iter().sum::<f64>() / labels.len() as f64;
        assert!(rate > 0.2 && rate < 0.8, "{rate}");
        assert_eq!(gen_classification_drift(&spec, 2).unwrap(), steps);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        assert!(gen_abrupt(&DriftScenario::gradual(0), 0).is_err());
        let mut spec = DriftScenario::abrupt(0);
        spec.switch_count = 11;
        assert!(spec.validate().is_err());
    }
}
