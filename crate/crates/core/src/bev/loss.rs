use serde::{Deserialize, Serialize};

use super::{BevError, Heatmap};

/// Predictions are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-6;

/// Exponent on `1 - target` that down-weights negatives near a positive.
pub const NEGATIVE_PENALTY_EXPONENT: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self { alpha: 2.0, gamma: 4.0 }
    }
}

impl FocalParams {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self, BevError> {
        if !(alpha > 0.0 && gamma >= 0.0) {
            return Err(BevError::InvalidFocalParams { alpha, gamma });
        }
        Ok(Self { alpha, gamma })
    }
}

/// `-alpha (1 - p)^gamma log(p)` for a positive cell, without clamping.
pub fn focal_positive_term(p: f64, params: &FocalParams) -> f64 {
    -params.alpha * (1.0 - p).powf(params.gamma) * p.ln()
}

/// Mean focal loss over all cells. Cells with target 1 use the positive
/// term; all others use the penalty-reduced negative term
/// `-alpha (1 - target)^4 p^gamma log(1 - p)`.
pub fn focal_loss(pred: &Heatmap, target: &Heatmap, params: &FocalParams) -> Result<f64, BevError> {
    if pred.spec != target.spec || pred.values.len() != target.values.len() {
        return Err(BevError::GridMismatch);
    }
    if pred.values.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = pred
        .values
        .iter()
        .zip(&target.values)
        .map(|(&p, &t)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if t >= 1.0 {
                focal_positive_term(p, params)
            } else {
                -params.alpha
                    * (1.0 - t).powi(NEGATIVE_PENALTY_EXPONENT)
                    * p.powf(params.gamma)
                    * (1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / pred.values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bev::GridSpec;

    fn spec() -> GridSpec {
        GridSpec::new(0.0, 0.0, 1.0, 1.0, 3, 3).unwrap()
    }

    #[test]
    fn positive_term_at_half() {
        // -2 * 0.5^4 * ln(0.5)
        let v = focal_positive_term(0.5, &FocalParams::default());
        assert!((v - 0.125 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((v - 0.0866434).abs() < 1e-6);
    }

    #[test]
    fn perfect_prediction_is_near_zero() {
        let mut target = Heatmap::zeros(spec());
        target.set(1, 1, 1.0);
        let mut pred = target.clone();
        pred.set(1, 1, 1.0 - 1e-6);
        let loss = focal_loss(&pred, &target, &FocalParams::default()).unwrap();
        assert!(loss >= 0.0 && loss < 1e-4);
    }

    #[test]
    fn loss_decreases_toward_target() {
        let mut target = Heatmap::zeros(spec());
        target.set(1, 1, 1.0);
        let mut last = f64::INFINITY;
        for k in 1..100 {
            let mut pred = Heatmap::zeros(spec());
            pred.set(1, 1, k as f64 / 100.0);
            let loss = focal_loss(&pred, &target, &FocalParams::default()).unwrap();
            assert!(loss < last);
            last = loss;
        }
    }

    #[test]
    fn mismatched_grids() {
        let a = Heatmap::zeros(spec());
        let b = Heatmap::zeros(GridSpec::new(0.0, 0.0, 1.0, 1.0, 3, 4).unwrap());
        assert_eq!(focal_loss(&a, &b, &FocalParams::default()), Err(BevError::GridMismatch));
    }

    #[test]
    fn params_validation() {
        assert!(FocalParams::new(0.0, 1.0).is_err());
        assert!(FocalParams::new(1.0, -1.0).is_err());
        assert!(FocalParams::new(2.0, 0.0).is_ok());
    }

    #[test]
    fn loss_is_nonnegative() {
        let target = crate::bev::encode_gaussian_gt(&[spec().cell_center(1, 1)], &spec(), 1.0);
        for k in 0..=20 {
            let mut pred = Heatmap::zeros(spec());
            pred.values.iter_mut().for_each(|v| *v = k as f64 / 20.0);
            assert!(focal_loss(&pred, &target, &FocalParams::default()).unwrap() >= 0.0);
        }
    }
}
