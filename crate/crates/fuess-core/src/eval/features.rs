//! Classical feature-ranking baselines: correlation filters, Fisher score,
//! binned mutual information, recursive feature elimination, and a seeded
//! random control.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{least_squares, EvalError};

/// Quantile bins used to discretize labels for the Fisher score.
const FISHER_BINS: usize = 4;
/// Equal-frequency bins per axis for the mutual-information estimate.
const MI_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    Pearson,
    Spearman,
    Fisher,
    Mi,
    Rfe,
    Random,
}

impl std::str::FromStr for RankMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "pearson" => Ok(RankMethod::Pearson),
            "spearman" => Ok(RankMethod::Spearman),
            "fisher" => Ok(RankMethod::Fisher),
            "mi" => Ok(RankMethod::Mi),
            "rfe" => Ok(RankMethod::Rfe),
            "random" => Ok(RankMethod::Random),
            other => Err(format!("unknown ranking method {other:?}")),
        }
    }
}

/// Ranks variables by the chosen method, most important first.
///
/// `rows` holds one sample per entry (no missing values). Constant features
/// have undefined correlation; they sort last with a warning instead of
/// failing the whole ranking. Deterministic given the seed (which only the
/// random control uses).
pub fn rank_features(
    method: RankMethod,
    rows: &[Vec<f64>],
    names: &[String],
    labels: &[f64],
    seed: u64,
) -> Result<Vec<String>, EvalError> {
    let n = rows.len();
    if n < 2 {
        return Err(EvalError::TooFewSamples { needed: 2, got: n });
    }
    if labels.len() != n {
        return Err(EvalError::LengthMismatch { left: n, right: labels.len() });
    }
    let m = names.len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(EvalError::LengthMismatch {
            left: m,
            right: rows.iter().map(Vec::len).find(|&l| l != m).unwrap_or(m),
        });
    }
    if rows.iter().flatten().chain(labels).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteInput);
    }

    if method == RankMethod::Random {
        let mut order: Vec<String> = names.to_vec();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        return Ok(order);
    }

    let column = |j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
    let constant: Vec<bool> = (0..m)
        .map(|j| {
            let col = column(j);
            let first = col[0];
            col.iter().all(|&v| v == first)
        })
        .collect();
    for (j, is_const) in constant.iter().enumerate() {
        if *is_const {
            log::warn!("feature {:?} is constant; ranked last", names[j]);
        }
    }

    let scores: Vec<f64> = match method {
        RankMethod::Pearson => (0..m)
            .map(|j| pearson_abs(&column(j), labels).unwrap_or(f64::NEG_INFINITY))
            .collect(),
        RankMethod::Spearman => {
            let label_ranks = average_ranks(labels);
            (0..m)
                .map(|j| {
                    pearson_abs(&average_ranks(&column(j)), &label_ranks)
                        .unwrap_or(f64::NEG_INFINITY)
                })
                .collect()
        }
        RankMethod::Fisher => {
            let classes = quantile_bins(labels, FISHER_BINS);
            (0..m).map(|j| fisher_score(&column(j), &classes)).collect()
        }
        RankMethod::Mi => {
            let label_bins = quantile_bins(labels, MI_BINS);
            (0..m)
                .map(|j| mutual_information(&quantile_bins(&column(j), MI_BINS), &label_bins))
                .collect()
        }
        RankMethod::Rfe => rfe_scores(rows, labels, &constant)?,
        RankMethod::Random => unreachable!(),
    };

    // constant features always sort to the back; ties break by column index
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let key = |j: usize| if constant[j] { f64::NEG_INFINITY } else { scores[j] };
        key(b).total_cmp(&key(a)).then(a.cmp(&b))
    });
    Ok(order.into_iter().map(|j| names[j].clone()).collect())
}

fn pearson_abs(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).abs())
}

/// Ranks with ties averaged, deterministic over duplicate values.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Equal-frequency bin assignment by rank; duplicates resolve by original
/// index, so the assignment is deterministic.
fn quantile_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let bins = bins.min(n).max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut assignment = vec![0usize; n];
    for (rank, &idx) in order.iter().enumerate() {
        assignment[idx] = (rank * bins / n).min(bins - 1);
    }
    assignment
}

/// Between-class over within-class variance of `x` for the given class
/// assignment.
fn fisher_score(x: &[f64], classes: &[usize]) -> f64 {
    let n_classes = classes.iter().max().map_or(0, |&c| c + 1);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut between = 0.0;
    let mut within = 0.0;
    for c in 0..n_classes {
        let members: Vec<f64> = x
            .iter()
            .zip(classes)
            .filter(|(_, &cls)| cls == c)
            .map(|(v, _)| *v)
            .collect();
        if members.is_empty() {
            continue;
        }
        let nc = members.len() as f64;
        let mc = members.iter().sum::<f64>() / nc;
        let vc = members.iter().map(|v| (v - mc) * (v - mc)).sum::<f64>() / nc;
        between += nc * (mc - mean) * (mc - mean);
        within += nc * vc;
    }
    if within == 0.0 {
        if between == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        between / within
    }
}

/// Mutual information (nats) between two discrete assignments.
fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let ka = a.iter().max().map_or(0, |&v| v + 1);
    let kb = b.iter().max().map_or(0, |&v| v + 1);
    let mut joint = vec![0usize; ka * kb];
    let mut pa = vec![0usize; ka];
    let mut pb = vec![0usize; kb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * kb + j] += 1;
        pa[i] += 1;
        pb[j] += 1;
    }
    let n = n as f64;
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let nij = joint[i * kb + j] as f64;
            if nij > 0.0 {
                mi += nij / n * ((nij * n) / (pa[i] as f64 * pb[j] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Recursive feature elimination on standardized least squares: one feature
/// (the smallest absolute coefficient) is dropped per round; the score is
/// the elimination round, higher meaning survived longer.
fn rfe_scores(rows: &[Vec<f64>], labels: &[f64], constant: &[bool]) -> Result<Vec<f64>, EvalError> {
    let m = constant.len();
    let n = rows.len();
    // standardize live features
    let mut standardized = vec![vec![0.0; m]; n];
    for j in 0..m {
        if constant[j] {
            continue;
        }
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        for (i, value) in col.iter().enumerate() {
            standardized[i][j] = (value - mean) / std;
        }
    }

    let mut remaining: Vec<usize> = (0..m).filter(|&j| !constant[j]).collect();
    let mut scores = vec![f64::NEG_INFINITY; m];
    let mut round = 0.0;
    while !remaining.is_empty() {
        if remaining.len() == 1 {
            scores[remaining[0]] = round + 1.0;
            break;
        }
        let design: Vec<Vec<f64>> = standardized
            .iter()
            .map(|row| remaining.iter().map(|&j| row[j]).collect())
            .collect();
        let (coefs, _) = least_squares(&design, labels)?;
        let weakest = remaining
            .iter()
            .enumerate()
            .min_by(|(a, _), (b, _)| {
                coefs[*a].abs().total_cmp(&coefs[*b].abs()).then(a.cmp(b))
            })
            .map(|(pos, _)| pos)
            .expect("non-empty remaining set");
        scores[remaining[weakest]] = round;
        remaining.remove(weakest);
        round += 1.0;
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|j| format!("x{j}")).collect()
    }

    fn synthetic(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        // y = 3 x0 + small noise; x1..x4 independent noise
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..5).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let labels: Vec<f64> = rows
            .iter()
            .map(|r| 3.0 * r[0] + 0.01 * rng.gen_range(-1.0..1.0))
            .collect();
        (rows, labels)
    }

    #[test]
    fn every_method_finds_the_informative_feature() {
        let (rows, labels) = synthetic(1, 300);
        for method in [
            RankMethod::Pearson,
            RankMethod::Spearman,
            RankMethod::Fisher,
            RankMethod::Mi,
            RankMethod::Rfe,
        ] {
            let order = rank_features(method, &rows, &names(5), &labels, 0).unwrap();
            assert_eq!(order[0], "x0", "{method:?} missed the target");
        }
    }

    #[test]
    fn pearson_is_sign_invariant() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let labels: Vec<f64> = rows.iter().map(|r| -r[0]).collect();
        let order =
            rank_features(RankMethod::Pearson, &rows, &names(2), &labels, 0).unwrap();
        assert_eq!(order[0], "x0");
    }

    #[test]
    fn random_is_deterministic_per_seed() {
        let (rows, labels) = synthetic(2, 40);
        let a = rank_features(RankMethod::Random, &rows, &names(5), &labels, 9).unwrap();
        let b = rank_features(RankMethod::Random, &rows, &names(5), &labels, 9).unwrap();
        assert_eq!(a, b);
        let c = rank_features(RankMethod::Random, &rows, &names(5), &labels, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn constant_feature_ranks_last() {
        let rows: Vec<Vec<f64>> =
            (0..30).map(|i| vec![5.0, i as f64, (i * i) as f64]).collect();
        let labels: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        for method in [RankMethod::Pearson, RankMethod::Spearman, RankMethod::Mi, RankMethod::Rfe]
        {
            let order = rank_features(method, &rows, &names(3), &labels, 0).unwrap();
            assert_eq!(order.last().unwrap(), "x0", "{method:?}");
        }
    }

    #[test]
    fn correlation_orderings_are_scale_invariant() {
        let (rows, labels) = synthetic(3, 200);
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, v)| v * (j + 1) as f64 * 10.0 + 3.0).collect())
            .collect();
        for method in [RankMethod::Pearson, RankMethod::Spearman] {
            let a = rank_features(method, &rows, &names(5), &labels, 0).unwrap();
            let b = rank_features(method, &scaled, &names(5), &labels, 0).unwrap();
            assert_eq!(a, b, "{method:?}");
        }
    }

    #[test]
    fn too_few_samples_is_typed() {
        let err =
            rank_features(RankMethod::Pearson, &[vec![1.0]], &names(1), &[1.0], 0).unwrap_err();
        assert!(matches!(err, EvalError::TooFewSamples { .. }));
    }

    #[test]
    fn average_ranks_handle_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 30.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn quantile_bins_are_balanced() {
        let values: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let bins = quantile_bins(&values, 16);
        for b in 0..16 {
            assert_eq!(bins.iter().filter(|&&x| x == b).count(), 4);
        }
    }
}
