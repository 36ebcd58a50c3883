//! Held-out evaluation metrics.

use nalgebra::DVector;

use crate::error::{Error, Result};

fn same_len(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

pub fn mse(y: &DVector<f64>, pred: &DVector<f64>) -> Result<f64> {
    same_len(y, pred)?;
    Ok((y - pred).norm_squared() / y.len() as f64)
}

/// Mean binomial deviance `-2/n Σ [y log μ + (1 − y) log(1 − μ)]` for labels in
/// {0, 1} and linear predictors `eta`.
pub fn deviance(y: &DVector<f64>, eta: &DVector<f64>) -> Result<f64> {
    same_len(y, eta)?;
    let total: f64 = y
        .iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| {
            // log(1 + exp(e)) − y·e, computed stably
            let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
            softplus - yi * e
        })
        .sum();
    Ok(2.0 * total / y.len() as f64)
}

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks (1-based) over positives, kept doubled to stay integral
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let twice_midrank = (i + 1 + j + 1) as u64;
        let pos_in_block = order[i..=j].iter().filter(|&&k| labels[k]).count() as u64;
        twice_rank_sum += twice_midrank * pos_in_block;
        i = j + 1;
    }
    let np = n_pos as u64;
    let twice_u = twice_rank_sum - np * (np + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_small_cases() {
        assert_eq!(auc(&[false, true], &[0.1, 0.9]).unwrap(), 1.0);
        assert_eq!(auc(&[true, false], &[0.1, 0.9]).unwrap(), 0.0);
        assert_eq!(auc(&[true, false, true, false], &[0.5; 4]).unwrap(), 0.5);
        assert!(matches!(auc(&[true, true], &[0.1, 0.2]), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn deviance_at_zero_predictor() {
        let y = DVector::from_vec(vec![0.0, 1.0, 1.0]);
        let d = deviance(&y, &DVector::zeros(3)).unwrap();
        assert!((d - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }
}
