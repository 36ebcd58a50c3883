//! Scalar proximal maps used by the coordinate updates.

/// `sgn(u) * max(|u| - gamma, 0)`, the proximal map of `gamma * |v|`.
#[inline]
pub fn soft_threshold(u: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if u > gamma {
        u - gamma
    } else if u < -gamma {
        u + gamma
    } else {
        0.0
    }
}

/// Parameters of the two-anchor threshold.
///
/// `gamma1 = λ` and `gamma2 = λ(2α - 1)`, so the penalty weights on `|v|` and
/// `|v - b|` are `(gamma1 + gamma2) / 2 = λα` and `(gamma1 - gamma2) / 2 = λ(1 - α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub b: f64,
}

impl ThresholdParams {
    pub fn new(gamma1: f64, gamma2: f64, b: f64) -> Self {
        debug_assert!(gamma1 >= 0.0 && gamma2.abs() <= gamma1 * (1.0 + 1e-12));
        ThresholdParams { gamma1, gamma2, b }
    }

    /// From penalty level and mixing weight: `(λ, λ(2α - 1), b)`.
    pub fn from_penalty(lambda: f64, alpha: f64, b: f64) -> Self {
        ThresholdParams::new(lambda, lambda * (2.0 * alpha - 1.0), b)
    }

    /// Weight on `|v|`.
    pub fn weight_zero(&self) -> f64 {
        0.5 * (self.gamma1 + self.gamma2)
    }

    /// Weight on `|v - b|`.
    pub fn weight_anchor(&self) -> f64 {
        0.5 * (self.gamma1 - self.gamma2)
    }
}

/// Minimizer over `v` of `(v - z)²/2 + w0·|v| + wb·|v - b|`, with
/// `w0 = (γ1 + γ2)/2` and `wb = (γ1 - γ2)/2`.
///
/// The map is piecewise linear with flat pieces at `0` and at `b`. For
/// `b >= 0` the pieces, in increasing `z`, are
///
/// ```text
///   z + γ1          z < -γ1
///   0               -γ1 <= z <= γ2
///   z - γ2          γ2 < z < γ2 + b
///   b               γ2 + b <= z <= γ1 + b
///   z - γ1          z > γ1 + b
/// ```
///
/// and `b < 0` follows from the odd symmetry `T(-z, -b) = -T(z, b)`.
#[inline]
pub fn transfer_threshold(z: f64, p: ThresholdParams) -> f64 {
    if p.gamma2 == p.gamma1 {
        // no weight on the anchor: the flat piece at b degenerates to a point
        soft_threshold(z, p.gamma1)
    } else if p.b < 0.0 {
        -threshold_nonneg_anchor(-z, p.gamma1, p.gamma2, -p.b)
    } else {
        threshold_nonneg_anchor(z, p.gamma1, p.gamma2, p.b)
    }
}

#[inline]
fn threshold_nonneg_anchor(z: f64, g1: f64, g2: f64, b: f64) -> f64 {
    if z < -g1 {
        z + g1
    } else if z <= g2 {
        0.0
    } else if z < g2 + b {
        z - g2
    } else if z <= g1 + b {
        b
    } else {
        z - g1
    }
}

/// Scalar objective minimized by [`transfer_threshold`].
pub fn threshold_objective(v: f64, z: f64, p: ThresholdParams) -> f64 {
    0.5 * (v - z) * (v - z) + p.weight_zero() * v.abs() + p.weight_anchor() * (v - p.b).abs()
}

/// Distance from `0` to the subdifferential of [`threshold_objective`] at `v`.
pub fn threshold_stationarity_gap(v: f64, z: f64, p: ThresholdParams) -> f64 {
    let (lo0, hi0) = sign_interval(v);
    let (lob, hib) = sign_interval(v - p.b);
    let lo = v - z + p.weight_zero() * lo0 + p.weight_anchor() * lob;
    let hi = v - z + p.weight_zero() * hi0 + p.weight_anchor() * hib;
    if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        -hi
    } else {
        0.0
    }
}

/// Subdifferential of `|t|` as a closed interval.
#[inline]
pub(crate) fn sign_interval(t: f64) -> (f64, f64) {
    if t > 0.0 {
        (1.0, 1.0)
    } else if t < 0.0 {
        (-1.0, -1.0)
    } else {
        (-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense 1-D grid minimization of the scalar objective; independent of the
    /// case analysis above.
    fn grid_argmin(z: f64, p: ThresholdParams, step: f64) -> f64 {
        let lo = z.min(0.0).min(p.b) - 1.0;
        let hi = z.max(0.0).max(p.b) + 1.0;
        let steps = ((hi - lo) / step).ceil() as usize;
        let mut best = (f64::INFINITY, lo);
        for k in 0..=steps {
            let v = lo + k as f64 * step;
            let f = threshold_objective(v, z, p);
            if f < best.0 {
                best = (f, v);
            }
        }
        // the kinks at 0 and b are exact candidates
        for v in [0.0, p.b] {
            let f = threshold_objective(v, z, p);
            if f <= best.0 {
                best = (f, v);
            }
        }
        best.1
    }

    #[test]
    fn soft_threshold_values() {
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
    }

    #[test]
    fn half_alpha_table() {
        let p = ThresholdParams::new(1.0, 0.0, 0.5);
        assert_eq!(transfer_threshold(0.2, p), 0.2);
        assert_eq!(transfer_threshold(0.8, p), 0.5);
        assert_eq!(transfer_threshold(2.0, p), 1.0);
        assert_eq!(transfer_threshold(-0.5, p), 0.0);
    }

    #[test]
    fn alpha_one_is_soft_threshold() {
        for &b in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            for k in -400..=400 {
                let z = k as f64 * 0.01;
                let p = ThresholdParams::new(1.3, 1.3, b);
                assert_eq!(transfer_threshold(z, p), soft_threshold(z, 1.3));
            }
        }
    }

    #[test]
    fn alpha_zero_is_shifted_soft_threshold() {
        for &b in &[-1.5, -0.2, 0.0, 0.4, 2.0] {
            let p = ThresholdParams::new(0.8, -0.8, b);
            for k in -300..=300 {
                let z = k as f64 * 0.013;
                let v = transfer_threshold(z, p);
                let shifted = b + soft_threshold(z - b, 0.8);
                assert!((v - shifted).abs() < 1e-15, "z={z} b={b}");
                assert!((v - grid_argmin(z, p, 1e-4)).abs() < 2e-4);
            }
        }
    }

    #[test]
    fn zero_anchor_merges_penalties() {
        let p = ThresholdParams::new(0.9, 0.1, 0.0);
        for k in -200..=200 {
            let z = k as f64 * 0.01;
            assert_eq!(transfer_threshold(z, p), soft_threshold(z, 0.9));
            assert!((transfer_threshold(z, p) - grid_argmin(z, p, 1e-4)).abs() < 2e-4);
        }
    }

    #[test]
    fn continuous_at_breakpoints() {
        for &(g1, g2, b) in &[(1.0, 0.3, 0.5), (1.0, -0.6, 2.0), (0.4, 0.4, -1.0), (2.0, -1.0, -0.5)] {
            let p = ThresholdParams::new(g1, g2, b);
            let breaks = if b >= 0.0 {
                [-g1, g2, g2 + b, g1 + b]
            } else {
                [-g2, g1, -g2 + b, -g1 + b]
            };
            for z in breaks {
                let left = transfer_threshold(z - 1e-12, p);
                let right = transfer_threshold(z + 1e-12, p);
                let mid = transfer_threshold(z, p);
                assert!((left - mid).abs() < 1e-11 && (right - mid).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn stationarity_on_grid() {
        let p = ThresholdParams::new(1.0, 0.2, -0.7);
        for k in -3000..=3000 {
            let z = k as f64 * 1e-3;
            let v = transfer_threshold(z, p);
            assert!(threshold_stationarity_gap(v, z, p) <= 1e-12);
        }
    }
}
