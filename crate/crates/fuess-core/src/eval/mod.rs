//! Evaluation bench: metrics, classical feature-ranking and regression
//! baselines, and the experiment runner behind the CSV reports.

mod baseline;
mod experiment;
mod features;
mod metrics;

pub use baseline::{least_squares, run_baseline, BaselineFit, BaselineKind, HyperGrid};
pub use experiment::{
    run_experiment, write_report, AscsRow, BackendSpec, DatasetSource, ExperimentReport,
    ExperimentSpec, FailureRow, Manifest, MethodSpec, MetricsRow, MissingRow, NshotRow,
    SelectionSpec, SplitSpec,
};
pub use features::{rank_features, RankMethod};
pub use metrics::{compute_metrics, Metrics};

use thiserror::Error;

use crate::domain::Sample;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("R^2 undefined: ground truth is constant")]
    DegenerateR2,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("sample has a missing value in variable {0:?}; baselines require complete data")]
    MissingValues(String),
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("experiment configuration: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
    #[error(transparent)]
    Selector(#[from] crate::selector::SelectorError),
    #[error(transparent)]
    Sensor(#[from] crate::sensor::SensorError),
    #[error(transparent)]
    Store(#[from] crate::store::StoreError),
}

/// Converts labeled samples to a dense matrix and label vector; missing
/// values and labels are errors because the numeric baselines cannot
/// represent them.
pub fn samples_to_matrix(samples: &[Sample]) -> Result<(Vec<Vec<f64>>, Vec<f64>), EvalError> {
    let mut rows = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for sample in samples {
        let mut row = Vec::with_capacity(sample.len());
        for (name, value) in &sample.values {
            row.push(value.ok_or_else(|| EvalError::MissingValues(name.clone()))?);
        }
        rows.push(row);
        labels.push(
            sample
                .label
                .ok_or_else(|| EvalError::MissingValues("<label>".into()))?,
        );
    }
    Ok((rows, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_conversion_rejects_missing() {
        let ok = Sample::new(vec![("a".into(), Some(1.0))], Some(2.0));
        let (rows, labels) = samples_to_matrix(&[ok]).unwrap();
        assert_eq!(rows, vec![vec![1.0]]);
        assert_eq!(labels, vec![2.0]);

        let missing = Sample::new(vec![("a".into(), None)], Some(2.0));
        assert!(matches!(
            samples_to_matrix(&[missing]),
            Err(EvalError::MissingValues(name)) if name == "a"
        ));
    }
}
