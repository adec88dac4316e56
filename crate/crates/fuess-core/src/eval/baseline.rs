//! Classical regression baselines: linear regression, distance-weighted
//! k-nearest-neighbours, principal component regression, and a one-hidden-
//! layer perceptron, with grid search by cross-validated MAE.
//!
//! Features and labels are z-scored on the training split and predictions
//! de-normalized, so callers always see raw-scale outputs.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Guard added to distances before inverting into weights.
const KNN_EPSILON: f64 = 1e-9;
/// Ridge strength for the rank-deficient least-squares fallback.
const RIDGE_LAMBDA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Lr,
    Knn,
    Pcr,
    Mlp,
}

impl std::str::FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "lr" => Ok(BaselineKind::Lr),
            "knn" => Ok(BaselineKind::Knn),
            "pcr" => Ok(BaselineKind::Pcr),
            "mlp" => Ok(BaselineKind::Mlp),
            other => Err(format!("unknown baseline {other:?}")),
        }
    }
}

/// Hyperparameter candidates per model family. An empty `pcr_components`
/// list means every feasible component count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub knn_k: Vec<usize>,
    pub pcr_components: Vec<usize>,
    pub mlp_widths: Vec<usize>,
    pub mlp_epochs: usize,
    pub mlp_learning_rate: f64,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            knn_k: vec![1, 3, 5, 7, 9],
            pcr_components: Vec::new(),
            mlp_widths: vec![8, 16, 32],
            mlp_epochs: 2000,
            mlp_learning_rate: 0.01,
        }
    }
}

/// Fit outcome: raw-scale test predictions and the chosen hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub predictions: Vec<f64>,
    pub chosen: String,
}

/// Ordinary least squares with intercept; falls back to a ridge solve
/// (lambda 1e-8) with a warning when the design is rank-deficient. Returns
/// `(coefficients, intercept)`.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64), EvalError> {
    let n = rows.len();
    if n == 0 || y.len() != n {
        return Err(EvalError::LengthMismatch { left: n, right: y.len() });
    }
    let m = rows[0].len();
    let design = DMatrix::from_fn(n, m + 1, |i, j| if j == m { 1.0 } else { rows[i][j] });
    let target = DVector::from_column_slice(y);

    let svd = design.clone().svd(true, true);
    let rank = svd.rank(1e-10);
    let solution = if rank < m + 1 {
        log::warn!("rank-deficient least squares (rank {rank} of {}); ridge fallback", m + 1);
        let gram = design.transpose() * &design + DMatrix::identity(m + 1, m + 1) * RIDGE_LAMBDA;
        let rhs = design.transpose() * &target;
        gram.lu()
            .solve(&rhs)
            .ok_or_else(|| EvalError::Solve("ridge system is singular".into()))?
    } else {
        svd.solve(&target, 1e-10).map_err(|e| EvalError::Solve(e.to_string()))?
    };

    let coefs = solution.as_slice()[..m].to_vec();
    Ok((coefs, solution[m]))
}

#[derive(Debug, Clone)]
struct Scaler {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Scaler {
    fn fit(rows: &[Vec<f64>]) -> Scaler {
        let n = rows.len() as f64;
        let m = rows.first().map_or(0, Vec::len);
        let mut means = vec![0.0; m];
        let mut stds = vec![0.0; m];
        for j in 0..m {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>() / n;
            means[j] = mean;
            stds[j] = var.sqrt();
        }
        Scaler { means, stds }
    }

    fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        if self.stds[j] > 0.0 { (v - self.means[j]) / self.stds[j] } else { 0.0 }
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Hyper {
    None,
    K(usize),
    Components(usize),
    Width(usize),
}

impl std::fmt::Display for Hyper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hyper::None => write!(f, "none"),
            Hyper::K(k) => write!(f, "k={k}"),
            Hyper::Components(p) => write!(f, "p={p}"),
            Hyper::Width(w) => write!(f, "width={w}"),
        }
    }
}

fn candidates(
    kind: BaselineKind,
    grid: &HyperGrid,
    n_train: usize,
    m: usize,
) -> Result<Vec<Hyper>, EvalError> {
    let list = match kind {
        BaselineKind::Lr => vec![Hyper::None],
        BaselineKind::Knn => grid.knn_k.iter().filter(|&&k| k >= 1).map(|&k| Hyper::K(k)).collect(),
        BaselineKind::Pcr => {
            let max_p = m.min(n_train.saturating_sub(1)).max(1);
            if grid.pcr_components.is_empty() {
                (1..=max_p).map(Hyper::Components).collect()
            } else {
                grid.pcr_components
                    .iter()
                    .filter(|&&p| p >= 1)
                    .map(|&p| Hyper::Components(p.min(max_p)))
                    .collect()
            }
        }
        BaselineKind::Mlp => {
            grid.mlp_widths.iter().filter(|&&w| w >= 1).map(|&w| Hyper::Width(w)).collect()
        }
    };
    if list.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    Ok(list)
}

/// Fits one candidate on `(x_train, y_train)` and predicts `x_test`, all on
/// raw scales (normalization is internal).
fn fit_predict(
    kind: BaselineKind,
    hyper: Hyper,
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_test: &[Vec<f64>],
    grid: &HyperGrid,
    seed: u64,
) -> Result<Vec<f64>, EvalError> {
    let n = x_train.len();
    let scaler = Scaler::fit(x_train);
    let z_train = scaler.transform(x_train);
    let z_test = scaler.transform(x_test);
    let y_mean = y_train.iter().sum::<f64>() / n as f64;
    let y_var = y_train.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n as f64;
    let y_std = y_var.sqrt();
    let z_y: Vec<f64> = if y_std > 0.0 {
        y_train.iter().map(|v| (v - y_mean) / y_std).collect()
    } else {
        vec![0.0; n]
    };
    let denorm = |z: f64| if y_std > 0.0 { z * y_std + y_mean } else { y_mean };

    let normalized = match (kind, hyper) {
        (BaselineKind::Lr, Hyper::None) => {
            let (coefs, intercept) = least_squares(&z_train, &z_y)?;
            z_test
                .iter()
                .map(|r| r.iter().zip(&coefs).map(|(x, c)| x * c).sum::<f64>() + intercept)
                .collect::<Vec<f64>>()
        }
        (BaselineKind::Knn, Hyper::K(k)) => {
            let k = k.min(n);
            z_test
                .iter()
                .map(|q| {
                    let mut distances: Vec<(f64, usize)> = z_train
                        .iter()
                        .enumerate()
                        .map(|(i, r)| {
                            let d = r
                                .iter()
                                .zip(q)
                                .map(|(a, b)| (a - b) * (a - b))
                                .sum::<f64>()
                                .sqrt();
                            (d, i)
                        })
                        .collect();
                    distances.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    let mut weight_sum = 0.0;
                    let mut value = 0.0;
                    for &(d, i) in distances.iter().take(k) {
                        let w = 1.0 / (KNN_EPSILON + d);
                        weight_sum += w;
                        value += w * z_y[i];
                    }
                    value / weight_sum
                })
                .collect()
        }
        (BaselineKind::Pcr, Hyper::Components(p)) => {
            let m = z_train[0].len();
            let p = p.min(m).min(n.saturating_sub(1)).max(1);
            let matrix = DMatrix::from_fn(n, m, |i, j| z_train[i][j]);
            let svd = matrix.svd(false, true);
            let v_t = svd.v_t.as_ref().ok_or_else(|| EvalError::Solve("SVD failed".into()))?;
            let project = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
                rows.iter()
                    .map(|r| {
                        (0..p)
                            .map(|c| r.iter().enumerate().map(|(j, x)| x * v_t[(c, j)]).sum())
                            .collect()
                    })
                    .collect()
            };
            let scores_train = project(&z_train);
            let (coefs, intercept) = least_squares(&scores_train, &z_y)?;
            project(&z_test)
                .iter()
                .map(|r| r.iter().zip(&coefs).map(|(x, c)| x * c).sum::<f64>() + intercept)
                .collect()
        }
        (BaselineKind::Mlp, Hyper::Width(width)) => {
            mlp_fit_predict(&z_train, &z_y, &z_test, width, grid.mlp_epochs, grid.mlp_learning_rate, seed)
        }
        (kind, hyper) => {
            return Err(EvalError::Solve(format!("{kind:?} cannot use {hyper}")));
        }
    };
    Ok(normalized.into_iter().map(denorm).collect())
}

/// One hidden tanh layer trained by full-batch gradient descent on MSE with
/// seeded initialization.
fn mlp_fit_predict(
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_test: &[Vec<f64>],
    width: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Vec<f64> {
    let n = x_train.len();
    let m = x_train[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale_in = 1.0 / (m as f64).sqrt();
    let scale_hidden = 1.0 / (width as f64).sqrt();
    let mut w1 = DMatrix::from_fn(m, width, |_, _| rng.gen_range(-scale_in..scale_in));
    let mut b1 = DVector::from_element(width, 0.0);
    let mut w2 = DVector::from_fn(width, |_, _| rng.gen_range(-scale_hidden..scale_hidden));
    let mut b2 = 0.0f64;

    let x = DMatrix::from_fn(n, m, |i, j| x_train[i][j]);
    let y = DVector::from_column_slice(y_train);
    for _ in 0..epochs {
        let mut hidden = &x * &w1;
        for i in 0..n {
            for h in 0..width {
                hidden[(i, h)] = (hidden[(i, h)] + b1[h]).tanh();
            }
        }
        let output = &hidden * &w2 + DVector::from_element(n, b2);
        let error = output - &y;

        let grad_w2 = hidden.transpose() * &error / n as f64;
        let grad_b2 = error.sum() / n as f64;
        // back through tanh
        let mut delta = DMatrix::zeros(n, width);
        for i in 0..n {
            for h in 0..width {
                let t = hidden[(i, h)];
                delta[(i, h)] = error[i] * w2[h] * (1.0 - t * t);
            }
        }
        let grad_w1 = x.transpose() * &delta / n as f64;
        let grad_b1 = delta.row_sum().transpose() / n as f64;

        w1 -= grad_w1 * learning_rate;
        b1 -= grad_b1 * learning_rate;
        w2 -= grad_w2 * learning_rate;
        b2 -= grad_b2 * learning_rate;
    }

    x_test
        .iter()
        .map(|row| {
            let mut out = b2;
            for h in 0..width {
                let mut a = b1[h];
                for j in 0..m {
                    a += row[j] * w1[(j, h)];
                }
                out += a.tanh() * w2[h];
            }
            out
        })
        .collect()
}

/// Grid search by mean cross-validated MAE (ties keep the first grid
/// entry), refit on the full training split, and raw-scale predictions for
/// `x_test`. Deterministic given `(data, grid, seed)`.
pub fn run_baseline(
    kind: BaselineKind,
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_test: &[Vec<f64>],
    grid: &HyperGrid,
    folds: usize,
    seed: u64,
) -> Result<BaselineFit, EvalError> {
    let n = x_train.len();
    if n == 0 {
        return Err(EvalError::EmptyInput);
    }
    if y_train.len() != n {
        return Err(EvalError::LengthMismatch { left: n, right: y_train.len() });
    }
    if x_train.iter().flatten().chain(y_train).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteInput);
    }
    let m = x_train[0].len();
    let candidates = candidates(kind, grid, n, m)?;

    let chosen = if candidates.len() == 1 || n < 3 {
        candidates[0]
    } else {
        let folds = folds.clamp(2, n);
        let mut indices: Vec<usize> = (0..n).collect();
        indices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let fold_of = |i: usize| i * folds / n;

        let mut best = candidates[0];
        let mut best_mae = f64::INFINITY;
        for &candidate in &candidates {
            let mut total_abs = 0.0;
            let mut total_n = 0usize;
            for fold in 0..folds {
                let mut tr_x = Vec::new();
                let mut tr_y = Vec::new();
                let mut te_x = Vec::new();
                let mut te_y = Vec::new();
                for (pos, &i) in indices.iter().enumerate() {
                    if fold_of(pos) == fold {
                        te_x.push(x_train[i].clone());
                        te_y.push(y_train[i]);
                    } else {
                        tr_x.push(x_train[i].clone());
                        tr_y.push(y_train[i]);
                    }
                }
                if tr_x.is_empty() || te_x.is_empty() {
                    continue;
                }
                let preds = fit_predict(kind, candidate, &tr_x, &tr_y, &te_x, grid, seed)?;
                total_abs += preds.iter().zip(&te_y).map(|(p, y)| (p - y).abs()).sum::<f64>();
                total_n += te_y.len();
            }
            let mae = if total_n == 0 { f64::INFINITY } else { total_abs / total_n as f64 };
            if mae < best_mae {
                best_mae = mae;
                best = candidate;
            }
        }
        best
    };

    let predictions = fit_predict(kind, chosen, x_train, y_train, x_test, grid, seed)?;
    Ok(BaselineFit { predictions, chosen: chosen.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn linear_data(seed: u64, n: usize, m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..m).map(|j| (j + 1) as f64).collect();
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() + 0.5)
            .collect();
        (rows, y)
    }

    #[test]
    fn lr_interpolates_noiseless_linear_data() {
        let (x, y) = linear_data(1, 60, 4);
        let (xt, yt) = linear_data(2, 20, 4);
        let fit =
            run_baseline(BaselineKind::Lr, &x, &y, &xt, &HyperGrid::default(), 5, 0).unwrap();
        let mae = fit
            .predictions
            .iter()
            .zip(&yt)
            .map(|(p, y)| (p - y).abs())
            .sum::<f64>()
            / yt.len() as f64;
        assert!(mae < 1e-8, "mae {mae}");
    }

    #[test]
    fn knn_identity_point_returns_training_label() {
        let (x, y) = linear_data(3, 30, 3);
        let grid = HyperGrid { knn_k: vec![1], ..HyperGrid::default() };
        let fit =
            run_baseline(BaselineKind::Knn, &x, &y, &[x[4].clone()], &grid, 5, 0).unwrap();
        assert!((fit.predictions[0] - y[4]).abs() < 1e-12);
        assert_eq!(fit.chosen, "k=1");
    }

    #[test]
    fn pcr_full_rank_equals_lr() {
        let (x, y) = linear_data(5, 50, 4);
        let (xt, _) = linear_data(6, 15, 4);
        let lr = run_baseline(BaselineKind::Lr, &x, &y, &xt, &HyperGrid::default(), 5, 0).unwrap();
        let grid = HyperGrid { pcr_components: vec![4], ..HyperGrid::default() };
        let pcr = run_baseline(BaselineKind::Pcr, &x, &y, &xt, &grid, 5, 0).unwrap();
        for (a, b) in lr.predictions.iter().zip(&pcr.predictions) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn mlp_learns_a_linear_map_roughly() {
        let (x, y) = linear_data(7, 80, 2);
        let (xt, yt) = linear_data(8, 20, 2);
        let grid = HyperGrid { mlp_widths: vec![16], mlp_epochs: 3000, ..HyperGrid::default() };
        let fit = run_baseline(BaselineKind::Mlp, &x, &y, &xt, &grid, 5, 11).unwrap();
        let mae = fit
            .predictions
            .iter()
            .zip(&yt)
            .map(|(p, y)| (p - y).abs())
            .sum::<f64>()
            / yt.len() as f64;
        // y spans roughly [-3.5, 4.5]; the net should track it closely
        assert!(mae < 0.5, "mae {mae}");
    }

    #[test]
    fn grid_search_is_deterministic() {
        let (x, y) = linear_data(9, 40, 3);
        let (xt, _) = linear_data(10, 10, 3);
        let a = run_baseline(BaselineKind::Knn, &x, &y, &xt, &HyperGrid::default(), 5, 21).unwrap();
        let b = run_baseline(BaselineKind::Knn, &x, &y, &xt, &HyperGrid::default(), 5, 21).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_grid_is_typed() {
        let (x, y) = linear_data(11, 20, 2);
        let grid = HyperGrid { knn_k: vec![], ..HyperGrid::default() };
        assert!(matches!(
            run_baseline(BaselineKind::Knn, &x, &y, &x, &grid, 5, 0),
            Err(EvalError::EmptyGrid)
        ));
    }

    #[test]
    fn duplicate_feature_triggers_ridge_fallback_not_failure() {
        // x1 duplicates x0, so the design is rank-deficient
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let (coefs, intercept) = least_squares(&rows, &y).unwrap();
        let pred = 5.0 * coefs[0] + 5.0 * coefs[1] + intercept;
        assert!((pred - 11.0).abs() < 1e-4);
    }

    #[test]
    fn least_squares_exact_on_well_posed_system() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![1.0, 3.0, 5.0, 7.0]; // y = 2x + 1
        let (coefs, intercept) = least_squares(&rows, &y).unwrap();
        assert!((coefs[0] - 2.0).abs() < 1e-10);
        assert!((intercept - 1.0).abs() < 1e-10);
    }
}
