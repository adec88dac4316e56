//! Regression metrics: MAE, RMSE, R², symmetric MAPE, and plain MAPE.

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Aggregate regression metrics over `n` prediction pairs.
///
/// `smape` is the symmetric percentage error in [0, 200]; `mape` is the
/// plain percentage error over pairs with nonzero truth, reported alongside
/// because the two are easy to conflate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
    pub smape: f64,
    pub mape: f64,
    pub n: usize,
}

/// Computes all metrics over equal-length prediction pairs.
///
/// MAE is the mean absolute error; RMSE the root mean squared error; R² is
/// `1 - SSE/SST` with SST about the mean of `y_true` (constant truth makes
/// R² undefined and is a typed error); SMAPE averages
/// `|e| / ((|y| + |y_hat|)/2) * 100` with a pair contributing 0 when both
/// sides are 0. MAPE averages `|e| / |y| * 100` over pairs with `y != 0`
/// (0 when there are none).
pub fn compute_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch { left: y_true.len(), right: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if y_true.iter().chain(y_pred).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteInput);
    }

    let n = y_true.len() as f64;
    let mean_true = y_true.iter().sum::<f64>() / n;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut sst = 0.0;
    let mut smape_sum = 0.0;
    let mut mape_sum = 0.0;
    let mut mape_n = 0usize;
    for (&y, &p) in y_true.iter().zip(y_pred) {
        let e = y - p;
        abs_sum += e.abs();
        sq_sum += e * e;
        sst += (y - mean_true) * (y - mean_true);
        let denom = (y.abs() + p.abs()) / 2.0;
        if denom > 0.0 {
            smape_sum += e.abs() / denom * 100.0;
        }
        if y != 0.0 {
            mape_sum += (e / y).abs() * 100.0;
            mape_n += 1;
        }
    }
    if sst == 0.0 {
        return Err(EvalError::DegenerateR2);
    }

    Ok(Metrics {
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
        r2: 1.0 - sq_sum / sst,
        smape: smape_sum / n,
        mape: if mape_n == 0 { 0.0 } else { mape_sum / mape_n as f64 },
        n: y_true.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_prediction() {
        let y = [1.0, 2.0, -3.0, 4.5];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.smape, 0.0);
        assert_eq!(m.r2, 1.0);
        assert_eq!(m.n, 4);
    }

    #[test]
    fn constant_mean_predictor_has_zero_r2() {
        let y = [1.0, 2.0, 3.0, 6.0];
        let mean = y.iter().sum::<f64>() / 4.0;
        let p = [mean; 4];
        let m = compute_metrics(&y, &p).unwrap();
        assert!(m.r2.abs() < 1e-15);
    }

    #[test]
    fn single_pair_hand_case() {
        // |1-3| = 2; smape = 2/((1+3)/2)*100 = 100 ... but SST is 0
        let err = compute_metrics(&[1.0], &[3.0]).unwrap_err();
        assert!(matches!(err, EvalError::DegenerateR2));
        // two pairs keep SST nonzero; first pair matches the hand case
        let m = compute_metrics(&[1.0, 2.0], &[3.0, 2.0]).unwrap();
        assert_eq!(m.mae, 1.0);
        assert!((m.smape - 50.0).abs() < 1e-12);
    }

    #[test]
    fn both_zero_pair_contributes_zero_smape() {
        let m = compute_metrics(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(m.smape, 0.0);
    }

    #[test]
    fn smape_is_symmetric_in_arguments() {
        let a = [1.0, 2.5, -4.0, 0.5];
        let b = [1.5, 2.0, -3.0, 0.75];
        let ab = compute_metrics(&a, &b).unwrap();
        let ba = compute_metrics(&b, &a).unwrap();
        assert!((ab.smape - ba.smape).abs() < 1e-12);
    }

    #[test]
    fn smape_stays_within_bounds() {
        let m = compute_metrics(&[1.0, -1.0, 2.0], &[-1.0, 1.0, -2.0]).unwrap();
        assert!((m.smape - 200.0).abs() < 1e-12);
    }

    #[test]
    fn error_paths_are_typed() {
        assert!(matches!(
            compute_metrics(&[1.0], &[1.0, 2.0]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(compute_metrics(&[], &[]), Err(EvalError::EmptyInput)));
        assert!(matches!(
            compute_metrics(&[f64::NAN, 1.0], &[0.0, 1.0]),
            Err(EvalError::NonFiniteInput)
        ));
        assert!(matches!(
            compute_metrics(&[2.0, 2.0], &[1.0, 3.0]),
            Err(EvalError::DegenerateR2)
        ));
    }

    /// Independent two-pass oracle built differently from the streaming
    /// implementation.
    fn oracle(y: &[f64], p: &[f64]) -> (f64, f64, f64, f64) {
        let n = y.len() as f64;
        let mae = y.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
        let rmse =
            (y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt();
        let mean = y.iter().sum::<f64>() / n;
        let sse: f64 = y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
        let sst: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
        let r2 = 1.0 - sse / sst;
        let smape = y
            .iter()
            .zip(p)
            .map(|(a, b)| {
                let d = (a.abs() + b.abs()) / 2.0;
                if d == 0.0 { 0.0 } else { (a - b).abs() / d * 100.0 }
            })
            .sum::<f64>()
            / n;
        (mae, rmse, r2, smape)
    }

    #[test]
    fn matches_independent_oracle_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..50 {
            let n = rng.gen_range(2..200);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let m = compute_metrics(&y, &p).unwrap();
            let (mae, rmse, r2, smape) = oracle(&y, &p);
            assert!((m.mae - mae).abs() <= 1e-9 * mae.abs().max(1.0));
            assert!((m.rmse - rmse).abs() <= 1e-9 * rmse.abs().max(1.0));
            assert!((m.r2 - r2).abs() <= 1e-9 * r2.abs().max(1.0));
            assert!((m.smape - smape).abs() <= 1e-9 * smape.abs().max(1.0));
        }
    }
}
