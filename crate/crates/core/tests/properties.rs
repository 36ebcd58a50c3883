use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use tlasso::rng::derived_rng;
use tlasso::theory::oracle::reference_lasso;
use tlasso::theory::verify::{random_problem, scalar_argmin};
use tlasso::*;

fn params() -> impl Strategy<Value = ThresholdParams> {
    (0.0f64..3.0, 0.0f64..=1.0, -4.0f64..4.0).prop_map(|(l, a, b)| ThresholdParams::from_penalty(l, a, b))
}

fn problem(seed: u64) -> (Dataset, Coefficients) {
    random_problem(&mut derived_rng(seed, &[0x9a]), 6, 30).unwrap()
}

fn tight() -> FitConfig {
    FitConfig::default().with_tol(1e-10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn threshold_is_monotone(p in params(), z1 in -8.0f64..8.0, z2 in -8.0f64..8.0) {
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        prop_assert!(transfer_threshold(lo, p) <= transfer_threshold(hi, p));
    }

    #[test]
    fn threshold_is_odd(p in params(), z in -8.0f64..8.0) {
        let m = ThresholdParams { b: -p.b, ..p };
        prop_assert_eq!(transfer_threshold(-z, m), -transfer_threshold(z, p));
    }

    #[test]
    fn threshold_matches_scalar_oracle(p in params(), z in -8.0f64..8.0) {
        prop_assert!((transfer_threshold(z, p) - scalar_argmin(z, p)).abs() <= 2e-5);
    }

    #[test]
    fn threshold_is_nonexpansive(p in params(), z1 in -8.0f64..8.0, z2 in -8.0f64..8.0) {
        let d = (transfer_threshold(z1, p) - transfer_threshold(z2, p)).abs();
        prop_assert!(d <= (z1 - z2).abs() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardize_round_trips(seed in any::<u64>(), n in 3usize..20, p in 1usize..5) {
        let mut rng = derived_rng(seed, &[1]);
        use rand::Rng;
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-5.0..5.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        let d = Dataset::new(x, y).unwrap();
        let (s, st) = standardize(&d).unwrap();
        for col in s.x().column_iter() {
            prop_assert!(col.mean().abs() < 1e-12);
            prop_assert!((col.norm_squared() / n as f64 - 1.0).abs() < 1e-12);
        }
        let back = st.invert(&s).unwrap();
        prop_assert!((back.x() - d.x()).amax() < 1e-10);
        prop_assert!((back.y() - d.y()).amax() < 1e-10);
        // predictions agree on both scales
        let b = Coefficients::new(DVector::from_fn(p, |j, _| j as f64 - 1.0));
        let raw = destandardize(&b, &st).unwrap();
        let lhs = d.x() * &raw.beta + DVector::from_element(n, raw.intercept);
        let rhs = s.x() * &b.beta + DVector::from_element(n, st.y_mean);
        prop_assert!((lhs - rhs).amax() < 1e-9);
    }

    #[test]
    fn objective_never_increases(seed in any::<u64>(), alpha in 0.0f64..=1.0, frac in 0.0f64..1.5) {
        let (d, tilde) = problem(seed);
        let lmax = regpath::lambda_max_or_fallback(&d, alpha, &tilde).unwrap().value;
        let pen = PenaltySpec::new(frac * lmax, alpha).unwrap();
        let mut cfg = tight();
        cfg.trace = true;
        let fit = cd_fit(&d, pen, &tilde, &cfg).unwrap();
        for w in fit.trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn logistic_descends_to_kkt(seed in any::<u64>(), alpha in 0.0f64..=1.0, frac in 0.02f64..1.0) {
        let (d, tilde) = problem(seed);
        let labels = DVector::from_iterator(d.n(), d.y().iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }));
        let d = Dataset::new(d.x().clone(), labels).unwrap();
        // the logistic gradient at zero is bounded by max|x_j|/2 after standardization
        let pen = PenaltySpec::new(frac * 0.5, alpha).unwrap();
        let mut cfg = tight().with_loss(Loss::Logistic);
        cfg.trace = true;
        let fit = cd_fit(&d, pen, &tilde, &cfg).unwrap();
        for w in fit.trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        prop_assert!(fit.converged);
        prop_assert!(fit.kkt_residual <= cfg.tol);
    }

    #[test]
    fn column_permutation_permutes_the_fit(seed in any::<u64>(), alpha in 0.0f64..=1.0, frac in 0.01f64..1.0) {
        let (d, tilde) = problem(seed);
        let p = d.p();
        let perm: Vec<usize> = (0..p).rev().collect();
        let xp = DMatrix::from_fn(d.n(), p, |i, j| d.x()[(i, perm[j])]);
        let dp = Dataset::new(xp, d.y().clone()).unwrap();
        let tp = Coefficients::new(DVector::from_fn(p, |j, _| tilde.beta[perm[j]]));
        let lmax = regpath::lambda_max_or_fallback(&d, alpha, &tilde).unwrap().value;
        let pen = PenaltySpec::new(frac * lmax, alpha).unwrap();
        let a = cd_fit(&d, pen, &tilde, &tight()).unwrap().coefficients.beta;
        let b = cd_fit(&dp, pen, &tp, &tight()).unwrap().coefficients.beta;
        for j in 0..p {
            prop_assert!((a[perm[j]] - b[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn pure_lasso_ignores_tilde(seed in any::<u64>(), frac in 0.0f64..1.2) {
        let (d, tilde) = problem(seed);
        let lmax = lambda_max(&d, 1.0, &Coefficients::zeros(d.p())).unwrap().value;
        let pen = PenaltySpec::new(frac * lmax, 1.0).unwrap();
        let a = cd_fit(&d, pen, &tilde, &tight()).unwrap().coefficients.beta;
        let b = cd_fit(&d, pen, &Coefficients::zeros(d.p()), &tight()).unwrap().coefficients.beta;
        prop_assert!((&a - &b).amax() < 1e-7);
        let r = reference_lasso(&d, frac * lmax).unwrap().beta;
        prop_assert!((&a - r).amax() < 1e-6);
    }

    #[test]
    fn pure_anchor_is_shifted_lasso(seed in any::<u64>(), lambda in 0.0f64..1.0) {
        let (d, tilde) = problem(seed);
        let shifted = Dataset::new(d.x().clone(), d.y() - d.x() * &tilde.beta).unwrap();
        let fit = cd_fit(&d, PenaltySpec::new(lambda, 0.0).unwrap(), &tilde, &tight()).unwrap();
        let expect = &tilde.beta + reference_lasso(&shifted, lambda).unwrap().beta;
        prop_assert!((fit.coefficients.beta - expect).amax() < 1e-6);
    }

    #[test]
    fn trivial_predicates_match_solver(seed in any::<u64>(), alpha in 0.0f64..=1.0, frac in 0.0f64..2.0) {
        let (d, tilde) = problem(seed);
        let lmax = regpath::lambda_max_or_fallback(&d, alpha, &tilde).unwrap().value;
        let pen = PenaltySpec::new(frac * lmax, alpha).unwrap();
        let fit = cd_fit(&d, pen, &tilde, &tight()).unwrap().coefficients.beta;
        let mu = regpath::trivial_margin(&d, pen, &tilde, TrivialSolution::Unchanged).unwrap();
        let mz = regpath::trivial_margin(&d, pen, &tilde, TrivialSolution::Zero).unwrap();
        if mu.abs() >= 1e-3 {
            prop_assert_eq!(unchanged_solution_exists(&d, pen, &tilde).unwrap(), (&fit - &tilde.beta).amax() < 1e-6);
        }
        if mz.abs() >= 1e-3 {
            prop_assert_eq!(zero_solution_exists(&d, pen, &tilde).unwrap(), fit.amax() < 1e-6);
        }
    }

    #[test]
    fn folds_partition_rows(n in 2usize..200, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold_split(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(kfold_split(n, k, seed).unwrap(), folds);
    }

    #[test]
    fn auc_is_pairwise_fraction(seed in any::<u64>(), n in 2usize..40) {
        use rand::Rng;
        let mut rng = derived_rng(seed, &[2]);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        labels[0] = true;
        labels[1] = false;
        // coarse scores so ties occur
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5u8))).collect();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        prop_assert_eq!(metrics::auc(&labels, &scores).unwrap(), wins / pairs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cv_is_reproducible_and_schedule_independent(seed in any::<u64>()) {
        let (d, tilde) = random_problem(&mut derived_rng(seed, &[3]), 6, 40).unwrap();
        let spec = CvSpec { k: 4, n_lambda: 15, ratio: 1e-2, seed, ..CvSpec::default() };
        let cfg = FitConfig::default().with_tol(1e-8);
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| cross_validate(&d, &spec, &tilde, &cfg)).unwrap();
        let b = wide.install(|| cross_validate(&d, &spec, &tilde, &cfg)).unwrap();
        prop_assert_eq!(&a.table, &b.table);
        prop_assert_eq!((a.best_alpha, a.best_lambda), (b.best_alpha, b.best_lambda));
        prop_assert_eq!(a.refit.coefficients, b.refit.coefficients);
        prop_assert!(spec.alphas.contains(&a.best_alpha));
        prop_assert_eq!(a.table.len(), spec.alphas.len() * spec.n_lambda);
    }
}
