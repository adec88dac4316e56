//! Stage-2 orchestration: few-shot and retrieval-augmented prediction with
//! uncertainty quantification.
//!
//! Few-shot contextualization (FSC) uses a fixed demonstration context;
//! retrieval-augmented contextualization (RAC) retrieves the demonstrations
//! nearest to each test sample from a process-data store. Repeated trials
//! yield a confidence interval; the mean trial confidence is the confidence
//! score.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::domain::{Sample, TaskConfig};
use crate::llm::{parse_response, AnswerKind, GenerationParams, LlmBackend, LlmError, StructuredAnswer};
use crate::prompt::{render_ss_pt, AblationFlags, ContextSet, PromptError};
use crate::selector::SelectionResult;
use crate::store::{encode_sample, Payload, StoreError, StoreKind, VectorStore};

#[derive(Debug, Error)]
pub enum SensorError {
    #[error("all {trials} trials failed; last error: {last}")]
    AllTrialsFailed { trials: usize, last: String },
    #[error("confidence interval needs at least {needed} trials, got {got}")]
    TooFewTrials { needed: usize, got: usize },
    #[error("confidence level {0} outside (0, 1)")]
    InvalidLevel(f64),
    #[error("store has kind {found:?}, expected {expected:?}")]
    WrongStoreKind { expected: StoreKind, found: StoreKind },
    #[error("process-data store has no encoder statistics; rebuild with the numeric encoder")]
    MissingEncoderStats,
    #[error("retrieved item {0} does not carry a sample payload")]
    NonSamplePayload(u64),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// How demonstrations are supplied to the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextMode {
    Fsc,
    Rac,
}

/// Confidence-interval construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// Student-t interval on the trial mean: `mean ± t * s / sqrt(n)`.
    TSpread,
    /// Empirical quantiles with linear interpolation; needs 20+ trials.
    Percentile,
}

/// Where the nearest retrieved demonstration is placed in the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoOrder {
    /// Closest demonstration last, adjacent to the test sample.
    NearestLast,
    NearestFirst,
}

/// Prediction configuration.
#[derive(Debug, Clone)]
pub struct UfssConfig {
    pub mode: ContextMode,
    /// RAC: demonstrations retrieved per test sample.
    pub k_shots: usize,
    /// Completions per test sample; intervals need at least 2.
    pub trials: usize,
    pub ci_level: f64,
    pub ci_method: CiMethod,
    pub generation: GenerationParams,
    pub ablation: AblationFlags,
    pub demo_order: DemoOrder,
}

impl Default for UfssConfig {
    fn default() -> Self {
        UfssConfig {
            mode: ContextMode::Fsc,
            k_shots: 20,
            trials: 10,
            ci_level: 0.95,
            ci_method: CiMethod::TSpread,
            generation: GenerationParams::default(),
            ablation: AblationFlags::NONE,
            demo_order: DemoOrder::NearestLast,
        }
    }
}

/// An interval on the prediction at the given level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// One test sample's prediction: point estimate (mean of trials), the trial
/// values themselves, the interval when two or more trials succeeded, the
/// mean confidence score, and the final trial's explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub test_sample: Sample,
    pub point_estimate: f64,
    pub trials: Vec<f64>,
    pub confidence_interval: Option<ConfidenceInterval>,
    pub confidence_score: f64,
    pub explanation: String,
    pub mode: ContextMode,
    pub k_shots: usize,
}

/// Mean that returns the shared value exactly when all entries are equal,
/// so zero-variance trial sets stay bit-identical through aggregation.
fn mean(values: &[f64]) -> f64 {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return first;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Student-t or percentile interval over trial predictions.
///
/// `TSpread` is the t interval on the mean, `mean ± t_{(1+level)/2, n-1} *
/// s / sqrt(n)`, degenerate `(c, c)` when all trials equal `c`.
/// `Percentile` takes empirical quantiles at `(1±level)/2` with linear
/// interpolation and requires at least 20 trials.
pub fn confidence_interval(
    trials: &[f64],
    level: f64,
    method: CiMethod,
) -> Result<ConfidenceInterval, SensorError> {
    if !(0.0 < level && level < 1.0) {
        return Err(SensorError::InvalidLevel(level));
    }
    let n = trials.len();
    match method {
        CiMethod::TSpread => {
            if n < 2 {
                return Err(SensorError::TooFewTrials { needed: 2, got: n });
            }
            let mean = mean(trials);
            let var = trials.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (n as f64 - 1.0);
            let std = var.sqrt();
            if std == 0.0 {
                return Ok(ConfidenceInterval { lo: mean, hi: mean, level });
            }
            let t = StudentsT::new(0.0, 1.0, n as f64 - 1.0)
                .expect("valid t distribution")
                .inverse_cdf((1.0 + level) / 2.0);
            let half = t * std / (n as f64).sqrt();
            Ok(ConfidenceInterval { lo: mean - half, hi: mean + half, level })
        }
        CiMethod::Percentile => {
            if n < 20 {
                return Err(SensorError::TooFewTrials { needed: 20, got: n });
            }
            let mut sorted = trials.to_vec();
            sorted.sort_by(f64::total_cmp);
            let quantile = |q: f64| -> f64 {
                let pos = q * (n as f64 - 1.0);
                let idx = pos.floor() as usize;
                let frac = pos - idx as f64;
                if idx + 1 < n {
                    sorted[idx] + (sorted[idx + 1] - sorted[idx]) * frac
                } else {
                    sorted[idx]
                }
            };
            Ok(ConfidenceInterval {
                lo: quantile((1.0 - level) / 2.0),
                hi: quantile((1.0 + level) / 2.0),
                level,
            })
        }
    }
}

fn run_trials(
    task: &TaskConfig,
    selection: &SelectionResult,
    context: &ContextSet,
    test_projected: &Sample,
    backend: &LlmBackend,
    cfg: &UfssConfig,
    mode: ContextMode,
) -> Result<PredictionRecord, SensorError> {
    let prompt = render_ss_pt(task, selection, context, test_projected, cfg.ablation)?;
    let prompt_text = prompt.text();

    let base_seed = cfg.generation.seed.unwrap_or(0);
    let mut predictions = Vec::new();
    let mut confidences = Vec::new();
    let mut explanation = String::new();
    let mut last_error: Option<LlmError> = None;
    for trial in 0..cfg.trials.max(1) {
        let mut params = cfg.generation.clone();
        params.seed = Some(base_seed.wrapping_add(trial as u64));
        let outcome = backend
            .complete(&prompt_text, &params)
            .and_then(|raw| parse_response(AnswerKind::Ufss, &raw));
        match outcome {
            Ok(StructuredAnswer::Ufss { prediction, confidence, reasoning }) => {
                predictions.push(prediction);
                confidences.push(confidence);
                explanation = reasoning;
            }
            Ok(_) => unreachable!("parse_response returns the requested kind"),
            Err(e) => {
                log::warn!("trial {trial} failed: {e}");
                last_error = Some(e);
            }
        }
    }
    if predictions.is_empty() {
        return Err(SensorError::AllTrialsFailed {
            trials: cfg.trials,
            last: last_error.map(|e| e.to_string()).unwrap_or_default(),
        });
    }

    let point_estimate = mean(&predictions);
    let confidence_score = mean(&confidences);
    let interval = if predictions.len() >= 2 {
        Some(confidence_interval(&predictions, cfg.ci_level, cfg.ci_method)?)
    } else {
        None
    };

    Ok(PredictionRecord {
        test_sample: test_projected.clone(),
        point_estimate,
        trials: predictions,
        confidence_interval: interval,
        confidence_score,
        explanation,
        mode,
        k_shots: context.demonstrations.len(),
    })
}

/// Few-shot contextualization: the fixed `context` demonstrations (projected
/// to the selected variables) prompt `cfg.trials` completions for the test
/// sample; the point estimate is the trial mean.
pub fn predict_fsc(
    task: &TaskConfig,
    context: &ContextSet,
    test: &Sample,
    selection: &SelectionResult,
    backend: &LlmBackend,
    cfg: &UfssConfig,
) -> Result<PredictionRecord, SensorError> {
    let projected = ContextSet {
        demonstrations: context
            .demonstrations
            .iter()
            .map(|d| d.project(&selection.selected))
            .collect(),
    };
    let test_projected = test.project(&selection.selected);
    run_trials(task, selection, &projected, &test_projected, backend, cfg, ContextMode::Fsc)
}

/// Retrieval-augmented contextualization: the test sample is encoded with
/// the store's frozen statistics, its `k_shots` nearest stored samples
/// become the demonstrations (nearest placed last by default), and
/// prediction proceeds as in FSC. Run with `trials: 1` to replay the
/// single-evaluation protocol.
pub fn predict_rac(
    task: &TaskConfig,
    ipdvs: &VectorStore,
    test: &Sample,
    selection: &SelectionResult,
    backend: &LlmBackend,
    cfg: &UfssConfig,
) -> Result<PredictionRecord, SensorError> {
    if ipdvs.kind != StoreKind::ProcessData {
        return Err(SensorError::WrongStoreKind {
            expected: StoreKind::ProcessData,
            found: ipdvs.kind,
        });
    }
    let stats = ipdvs.encoder_stats.as_ref().ok_or(SensorError::MissingEncoderStats)?;
    let test_projected = test.project(&selection.selected);
    let query = encode_sample(&test_projected, stats)?;
    let hits = ipdvs.query_top_k(&query, cfg.k_shots.max(1))?;

    let mut demonstrations = Vec::with_capacity(hits.len());
    for hit in &hits {
        match &hit.item.payload {
            Payload::Sample(sample) => demonstrations.push(sample.project(&selection.selected)),
            Payload::Chunk(_) => return Err(SensorError::NonSamplePayload(hit.item.id)),
        }
    }
    if cfg.demo_order == DemoOrder::NearestLast {
        demonstrations.reverse();
    }
    let context = ContextSet { demonstrations };
    run_trials(task, selection, &context, &test_projected, backend, cfg, ContextMode::Rac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::VariableSpec;

    fn task(names: &[&str]) -> TaskConfig {
        TaskConfig {
            industrial_process: "penicillin fermentation process".into(),
            facility: "fed-batch fermenter".into(),
            primary_variable_name: "Penicillin concentration".into(),
            feature_count: names.len(),
        }
    }

    fn selection(names: &[&str]) -> SelectionResult {
        SelectionResult::keep_all(
            &names.iter().map(|n| VariableSpec::named(n)).collect::<Vec<_>>(),
        )
    }

    fn sample(names: &[&str], xs: &[f64], label: Option<f64>) -> Sample {
        Sample::new(
            names
                .iter()
                .zip(xs)
                .map(|(n, x)| (n.to_string(), Some(*x)))
                .collect(),
            label,
        )
    }

    fn demo_context(names: &[&str]) -> ContextSet {
        ContextSet {
            demonstrations: vec![
                sample(names, &[9.6, 6.5], Some(26.123)),
                sample(names, &[12.3, 6.4], Some(29.0)),
                sample(names, &[8.0, 6.6], Some(20.7)),
            ],
        }
    }

    #[test]
    fn zero_temperature_trials_are_identical_with_degenerate_interval() {
        let names = ["Dissolved oxygen concentration", "pH"];
        let cfg = UfssConfig { trials: 10, ..UfssConfig::default() };
        let record = predict_fsc(
            &task(&names),
            &demo_context(&names),
            &sample(&names, &[9.6, 6.5], None),
            &selection(&names),
            &LlmBackend::stub(),
            &cfg,
        )
        .unwrap();
        assert_eq!(record.trials.len(), 10);
        let first = record.trials[0];
        assert!(record.trials.iter().all(|&t| t == first));
        assert_eq!(record.point_estimate, first);
        let ci = record.confidence_interval.unwrap();
        assert_eq!(ci.lo, ci.hi);
        assert!((first - 26.123).abs() < 1e-6);
    }

    #[test]
    fn noisy_trials_concentrate_as_temperature_shrinks() {
        let names = ["Dissolved oxygen concentration", "pH"];
        let spread = |temperature: f64| -> f64 {
            let mut cfg = UfssConfig { trials: 10, ..UfssConfig::default() };
            cfg.generation.temperature = temperature;
            cfg.generation.seed = Some(42);
            let record = predict_fsc(
                &task(&names),
                &demo_context(&names),
                &sample(&names, &[9.6, 6.5], None),
                &selection(&names),
                &LlmBackend::stub(),
                &cfg,
            )
            .unwrap();
            let ci = record.confidence_interval.unwrap();
            ci.hi - ci.lo
        };
        let wide = spread(0.5);
        let narrow = spread(0.005);
        assert!(wide > narrow);
        assert!(narrow < 0.1);
    }

    #[test]
    fn rac_identity_retrieval_returns_stored_label_exactly() {
        let names = ["a", "b"];
        let samples: Vec<Sample> = (0..30)
            .map(|i| sample(&names, &[i as f64, (i * i) as f64], Some(i as f64 * 1.5 + 0.123)))
            .collect();
        let store = VectorStore::build_process_data(&samples).unwrap();
        let cfg = UfssConfig {
            mode: ContextMode::Rac,
            k_shots: 1,
            trials: 1,
            ..UfssConfig::default()
        };
        let record = predict_rac(
            &task(&names),
            &store,
            &samples[7],
            &selection(&names),
            &LlmBackend::stub(),
            &cfg,
        )
        .unwrap();
        assert_eq!(record.point_estimate, samples[7].label.unwrap());
        assert!(record.confidence_interval.is_none());
        assert_eq!(record.k_shots, 1);
        assert_eq!(record.mode, ContextMode::Rac);
    }

    #[test]
    fn rac_requires_process_data_store_with_stats() {
        let names = ["a", "b"];
        let kb = VectorStore::new(StoreKind::Knowledge, 4);
        let err = predict_rac(
            &task(&names),
            &kb,
            &sample(&names, &[0.0, 0.0], None),
            &selection(&names),
            &LlmBackend::stub(),
            &UfssConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SensorError::WrongStoreKind { .. }));

        let mut no_stats = VectorStore::new(StoreKind::ProcessData, 2);
        no_stats
            .push(
                crate::store::EmbeddingVector(vec![0.0, 0.0]),
                Payload::Sample(sample(&names, &[0.0, 0.0], Some(1.0))),
            )
            .unwrap();
        no_stats.encoder_stats = None;
        let err = predict_rac(
            &task(&names),
            &no_stats,
            &sample(&names, &[0.0, 0.0], None),
            &selection(&names),
            &LlmBackend::stub(),
            &UfssConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SensorError::MissingEncoderStats));
    }

    #[test]
    fn masking_a_constant_store_coordinate_changes_nothing() {
        // "b" is constant across the store, so its std is 0 and both the
        // encoding and the stub distance ignore it; masking it in the test
        // sample must leave the record unchanged.
        let names = ["a", "b"];
        let samples: Vec<Sample> = (0..25)
            .map(|i| sample(&names, &[i as f64, 5.0], Some(2.0 * i as f64)))
            .collect();
        let store = VectorStore::build_process_data(&samples).unwrap();
        let cfg = UfssConfig {
            mode: ContextMode::Rac,
            k_shots: 5,
            trials: 1,
            ..UfssConfig::default()
        };
        let clean = sample(&names, &[12.2, 5.0], None);
        let mut masked = clean.clone();
        masked.values[1].1 = None;
        let task = task(&names);
        let sel = selection(&names);
        let backend = LlmBackend::stub();
        let a = predict_rac(&task, &store, &clean, &sel, &backend, &cfg).unwrap();
        let b = predict_rac(&task, &store, &masked, &sel, &backend, &cfg).unwrap();
        assert_eq!(a.point_estimate, b.point_estimate);
        assert_eq!(a.confidence_score, b.confidence_score);
    }

    #[test]
    fn interval_of_equal_trials_is_degenerate() {
        let ci = confidence_interval(&[2.5; 10], 0.95, CiMethod::TSpread).unwrap();
        assert_eq!((ci.lo, ci.hi), (2.5, 2.5));
    }

    #[test]
    fn interval_is_permutation_symmetric() {
        let trials = [1.0, 3.0, 2.0, 5.0, 4.0];
        let reversed: Vec<f64> = trials.iter().rev().copied().collect();
        let a = confidence_interval(&trials, 0.95, CiMethod::TSpread).unwrap();
        let b = confidence_interval(&reversed, 0.95, CiMethod::TSpread).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interval_width_grows_with_std() {
        let narrow = confidence_interval(&[1.0, 1.1, 0.9, 1.05, 0.95], 0.95, CiMethod::TSpread)
            .unwrap();
        let wide = confidence_interval(&[1.0, 2.0, 0.0, 1.5, 0.5], 0.95, CiMethod::TSpread)
            .unwrap();
        assert!(wide.hi - wide.lo > narrow.hi - narrow.lo);
    }

    #[test]
    fn interval_preconditions_are_typed() {
        assert!(matches!(
            confidence_interval(&[1.0], 0.95, CiMethod::TSpread),
            Err(SensorError::TooFewTrials { needed: 2, got: 1 })
        ));
        assert!(matches!(
            confidence_interval(&[1.0; 19], 0.95, CiMethod::Percentile),
            Err(SensorError::TooFewTrials { needed: 20, got: 19 })
        ));
        assert!(matches!(
            confidence_interval(&[1.0, 2.0], 1.5, CiMethod::TSpread),
            Err(SensorError::InvalidLevel(_))
        ));
    }

    #[test]
    fn percentile_interval_brackets_the_bulk() {
        let trials: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let ci = confidence_interval(&trials, 0.9, CiMethod::Percentile).unwrap();
        assert!((ci.lo - 4.95).abs() < 1e-12);
        assert!((ci.hi - 94.05).abs() < 1e-12);
    }

    #[test]
    fn records_serialize_to_json_lines() {
        let names = ["a"];
        let record = predict_fsc(
            &task(&names),
            &ContextSet {
                demonstrations: vec![
                    sample(&names, &[1.0], Some(2.0)),
                    sample(&names, &[3.0], Some(6.0)),
                ],
            },
            &sample(&names, &[2.0], None),
            &selection(&names),
            &LlmBackend::stub(),
            &UfssConfig { trials: 2, ..UfssConfig::default() },
        )
        .unwrap();
        let line = serde_json::to_string(&record).unwrap();
        let back: PredictionRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, record);
        assert!(line.contains("\"mode\":\"fsc\""));
    }
}
