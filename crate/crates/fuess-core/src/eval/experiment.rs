//! Experiment execution: runs the soft-sensor modes and baselines over
//! identical context/train splits and emits the CSV tables behind the study
//! shapes (method comparison, n-shot curves, missing-ratio robustness,
//! confidence-vs-error pairs, selection consistency).

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::baseline::{run_baseline, BaselineFit, BaselineKind, HyperGrid};
use super::metrics::{compute_metrics, Metrics};
use super::{samples_to_matrix, EvalError};
use crate::domain::{apply_missing_mask, split_contexts, Dataset, Sample};
use crate::llm::{GenerationParams, LlmBackend, StubBackend};
use crate::prompt::templates::TEMPLATE_VERSION;
use crate::prompt::ContextSet;
use crate::selector::{ascs, select_variables, SelectionResult, ZavsOptions};
use crate::sensor::{predict_fsc, predict_rac, CiMethod, ContextMode, PredictionRecord, UfssConfig};
use crate::store::{EmbeddingProvider, VectorStore};
use crate::synth::{generate, preset_spec};

fn default_pool() -> usize { 200 }
fn default_contexts() -> usize { 10 }
fn default_context_size() -> usize { 20 }
fn default_tests() -> usize { 20 }
fn default_split_seed() -> u64 { 42 }
fn default_trials() -> usize { 10 }
fn default_rac_shots() -> usize { 10 }
fn default_folds() -> usize { 5 }
fn default_fraction() -> f64 { 0.5 }
fn default_runs() -> usize { 5 }
fn default_preset_samples() -> usize { 600 }
fn default_noise() -> f64 { 0.05 }

/// Where the experiment's dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Preset {
        name: String,
        #[serde(default = "default_preset_samples")]
        samples: usize,
        #[serde(default = "default_noise")]
        noise_std: f64,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: String,
        primary: String,
        #[serde(default)]
        metadata: Option<String>,
    },
}

/// How stage-one selection is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionSpec {
    /// Run selection with the experiment backend.
    Fraction {
        #[serde(default = "default_fraction")]
        fraction: f64,
        #[serde(default = "default_runs")]
        runs: usize,
    },
    /// Load a serialized selection result.
    File { path: String },
    /// Keep every variable.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(default = "default_pool")]
    pub pool: usize,
    #[serde(default = "default_contexts")]
    pub contexts: usize,
    #[serde(default = "default_context_size")]
    pub context_size: usize,
    #[serde(default = "default_tests")]
    pub tests_per_context: usize,
    #[serde(default = "default_split_seed")]
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            pool: default_pool(),
            contexts: default_contexts(),
            context_size: default_context_size(),
            tests_per_context: default_tests(),
            seed: default_split_seed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Fsc,
    Rac,
    Lr,
    Knn,
    Pcr,
    Mlp,
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Fsc => "fsc",
            MethodSpec::Rac => "rac",
            MethodSpec::Lr => "lr",
            MethodSpec::Knn => "knn",
            MethodSpec::Pcr => "pcr",
            MethodSpec::Mlp => "mlp",
        }
    }

    fn baseline(&self) -> Option<BaselineKind> {
        match self {
            MethodSpec::Lr => Some(BaselineKind::Lr),
            MethodSpec::Knn => Some(BaselineKind::Knn),
            MethodSpec::Pcr => Some(BaselineKind::Pcr),
            MethodSpec::Mlp => Some(BaselineKind::Mlp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendSpec {
    Stub,
    Remote,
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Stub
    }
}

/// Full experiment description; deserializable from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: DatasetSource,
    pub selection: SelectionSpec,
    #[serde(default)]
    pub split: SplitSpec,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub shots: Vec<usize>,
    #[serde(default)]
    pub missing_ratios: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_rac_shots")]
    pub rac_shots: usize,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub confidence_study: bool,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub model_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub mode: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NshotRow {
    pub method: String,
    pub shots: usize,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingRow {
    pub ratio: f64,
    pub mae: f64,
    pub rmse: f64,
    pub mean_confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscsRow {
    pub runs: usize,
    pub m: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub cell: String,
    pub error: String,
}

/// Provenance for a run; the timestamp lives only here so every other
/// output file is byte-deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: ExperimentSpec,
    pub template_version: String,
    pub created_unix: u64,
    pub selection: SelectionResult,
}

/// Everything a run produced; every aggregate is recomputable from the
/// per-sample records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metrics: Vec<MetricsRow>,
    pub nshot: Vec<NshotRow>,
    pub missing: Vec<MissingRow>,
    pub confidence_error: Vec<(f64, f64)>,
    pub ascs: Option<AscsRow>,
    pub records: Vec<PredictionRecord>,
    pub failures: Vec<FailureRow>,
    pub manifest: Manifest,
}

fn mix_seed(base: u64, tag: &str, index: usize) -> u64 {
    let mut hasher = DefaultHasher::new();
    base.hash(&mut hasher);
    tag.hash(&mut hasher);
    index.hash(&mut hasher);
    hasher.finish()
}

fn resolve_dataset(source: &DatasetSource) -> Result<Dataset, EvalError> {
    match source {
        DatasetSource::Preset { name, samples, noise_std, seed } => {
            let spec = preset_spec(name, *samples, *noise_std, *seed)
                .ok_or_else(|| EvalError::Config(format!("unknown preset {name:?}")))?;
            Ok(generate(&spec)?)
        }
        DatasetSource::Csv { path, primary, metadata } => Ok(crate::domain::load_dataset(
            path,
            primary,
            metadata.as_ref().map(Path::new),
        )?),
    }
}

struct Runner<'a> {
    spec: &'a ExperimentSpec,
    dataset: Dataset,
    backend: LlmBackend,
    selection: SelectionResult,
    grid: HyperGrid,
}

impl Runner<'_> {
    fn generation(&self, seed: u64) -> GenerationParams {
        GenerationParams {
            temperature: self.spec.temperature,
            model_name: self
                .spec
                .model_name
                .clone()
                .unwrap_or_else(|| "stub-knn".to_string()),
            max_retries: 3,
            seed: Some(seed),
        }
    }

    fn ufss_config(&self, mode: ContextMode, k_shots: usize, trials: usize, seed: u64) -> UfssConfig {
        UfssConfig {
            mode,
            k_shots,
            trials,
            ci_level: 0.95,
            ci_method: CiMethod::TSpread,
            generation: self.generation(seed),
            ablation: Default::default(),
            demo_order: crate::sensor::DemoOrder::NearestLast,
        }
    }

    /// Training matrices restricted to the selected variables.
    fn matrices(&self, samples: &[Sample]) -> Result<(Vec<Vec<f64>>, Vec<f64>), EvalError> {
        let projected: Vec<Sample> =
            samples.iter().map(|s| s.project(&self.selection.selected)).collect();
        samples_to_matrix(&projected)
    }
}

/// Executes the experiment. Failed cells are recorded in
/// `report.failures` instead of aborting the run.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, EvalError> {
    let dataset = resolve_dataset(&spec.dataset)?;
    let backend = match spec.backend {
        BackendSpec::Stub => LlmBackend::Stub(StubBackend::with_dataset(&dataset)),
        BackendSpec::Remote => {
            LlmBackend::Remote(crate::llm::RemoteBackend::new(Default::default()))
        }
    };

    let provider = crate::store::HashEmbedder::default();
    let empty_kb = VectorStore::new(crate::store::StoreKind::Knowledge, provider.dimension());
    let mut ascs_row = None;
    let selection = match &spec.selection {
        SelectionSpec::All => SelectionResult::keep_all(&dataset.catalog),
        SelectionSpec::File { path } => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)?
        }
        SelectionSpec::Fraction { fraction, runs } => {
            let options = ZavsOptions {
                n_runs: *runs,
                fraction: *fraction,
                top_k: 4,
                generation: GenerationParams {
                    temperature: 0.0,
                    seed: Some(spec.seed),
                    ..GenerationParams::default()
                },
            };
            let result = select_variables(
                &dataset.task_config,
                &dataset.catalog,
                &empty_kb,
                &provider,
                &backend,
                &options,
            )?;
            if result.per_run.len() >= 2 {
                let sets: Vec<Vec<String>> =
                    result.per_run.iter().map(|r| r.selected.clone()).collect();
                let m = result.selected.len();
                if let Ok(score) = ascs(&sets, m) {
                    ascs_row = Some(AscsRow { runs: result.per_run.len(), m, score });
                }
            }
            result
        }
    };

    let runner = Runner {
        spec,
        dataset,
        backend,
        selection,
        grid: HyperGrid::default(),
    };

    let split = split_contexts(
        &runner.dataset,
        spec.split.pool,
        spec.split.contexts,
        spec.split.context_size,
        spec.split.tests_per_context,
        spec.split.seed,
    )?;
    let pool_samples: Vec<Sample> = split
        .contexts
        .iter()
        .flat_map(|pair| pair.context_samples.iter().cloned())
        .collect();
    let all_tests: Vec<Sample> = split
        .contexts
        .iter()
        .flat_map(|pair| pair.test_samples.iter().cloned())
        .collect();

    let ipdvs = {
        let projected: Vec<Sample> =
            pool_samples.iter().map(|s| s.project(&runner.selection.selected)).collect();
        VectorStore::build_process_data(&projected)?
    };

    let mut report = ExperimentReport {
        metrics: Vec::new(),
        nshot: Vec::new(),
        missing: Vec::new(),
        confidence_error: Vec::new(),
        ascs: ascs_row,
        records: Vec::new(),
        failures: Vec::new(),
        manifest: Manifest {
            spec: spec.clone(),
            template_version: TEMPLATE_VERSION.to_string(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            selection: runner.selection.clone(),
        },
    };

    let mut rac_records: Vec<PredictionRecord> = Vec::new();
    for method in &spec.methods {
        match method {
            MethodSpec::Fsc => {
                let mut y_true = Vec::new();
                let mut y_pred = Vec::new();
                for (pair_idx, pair) in split.contexts.iter().enumerate() {
                    let context = ContextSet { demonstrations: pair.context_samples.clone() };
                    for (test_idx, test) in pair.test_samples.iter().enumerate() {
                        let seed = mix_seed(spec.seed, "fsc", pair_idx * 10_000 + test_idx);
                        let cfg = runner.ufss_config(
                            ContextMode::Fsc,
                            pair.context_samples.len(),
                            spec.trials,
                            seed,
                        );
                        match predict_fsc(
                            &runner.dataset.task_config,
                            &context,
                            test,
                            &runner.selection,
                            &runner.backend,
                            &cfg,
                        ) {
                            Ok(record) => {
                                y_true.push(test.label.unwrap_or(f64::NAN));
                                y_pred.push(record.point_estimate);
                                report.records.push(record);
                            }
                            Err(e) => report.failures.push(FailureRow {
                                cell: format!("fsc/context{pair_idx}/test{test_idx}"),
                                error: e.to_string(),
                            }),
                        }
                    }
                }
                push_metrics(&mut report, "fsc", "fsc", &y_true, &y_pred);
            }
            MethodSpec::Rac => {
                let mut y_true = Vec::new();
                let mut y_pred = Vec::new();
                for (test_idx, test) in all_tests.iter().enumerate() {
                    let seed = mix_seed(spec.seed, "rac", test_idx);
                    let cfg =
                        runner.ufss_config(ContextMode::Rac, spec.rac_shots, 1, seed);
                    match predict_rac(
                        &runner.dataset.task_config,
                        &ipdvs,
                        test,
                        &runner.selection,
                        &runner.backend,
                        &cfg,
                    ) {
                        Ok(record) => {
                            y_true.push(test.label.unwrap_or(f64::NAN));
                            y_pred.push(record.point_estimate);
                            rac_records.push(record.clone());
                            report.records.push(record);
                        }
                        Err(e) => report.failures.push(FailureRow {
                            cell: format!("rac/test{test_idx}"),
                            error: e.to_string(),
                        }),
                    }
                }
                push_metrics(&mut report, "rac", "rac", &y_true, &y_pred);
            }
            baseline_method => {
                let Some(kind) = baseline_method.baseline() else { continue };
                // baselines train per context on the same demonstrations the
                // few-shot mode sees, and predict that context's tests
                let mut y_true = Vec::new();
                let mut y_pred = Vec::new();
                for (pair_idx, pair) in split.contexts.iter().enumerate() {
                    let cell = format!("{}/context{pair_idx}", baseline_method.name());
                    let outcome: Result<BaselineFit, EvalError> = (|| {
                        let (x_train, label_train) = runner.matrices(&pair.context_samples)?;
                        let (x_test, _) = runner.matrices(&pair.test_samples)?;
                        run_baseline(
                            kind,
                            &x_train,
                            &label_train,
                            &x_test,
                            &runner.grid,
                            spec.folds,
                            mix_seed(spec.seed, baseline_method.name(), pair_idx),
                        )
                    })();
                    match outcome {
                        Ok(fit) => {
                            for (test, pred) in pair.test_samples.iter().zip(&fit.predictions) {
                                y_true.push(test.label.unwrap_or(f64::NAN));
                                y_pred.push(*pred);
                            }
                        }
                        Err(e) => report
                            .failures
                            .push(FailureRow { cell, error: e.to_string() }),
                    }
                }
                push_metrics(&mut report, baseline_method.name(), "fsc", &y_true, &y_pred);
            }
        }
    }

    // n-shot study: RAC and baselines trained on the identical retrieved
    // demonstrations per test sample
    for &shots in &spec.shots {
        let mut per_method: std::collections::BTreeMap<String, (Vec<f64>, Vec<f64>)> =
            Default::default();
        for (test_idx, test) in all_tests.iter().enumerate() {
            let seed = mix_seed(spec.seed, "nshot", shots * 100_000 + test_idx);
            let cfg = runner.ufss_config(ContextMode::Rac, shots, 1, seed);
            let record = match predict_rac(
                &runner.dataset.task_config,
                &ipdvs,
                test,
                &runner.selection,
                &runner.backend,
                &cfg,
            ) {
                Ok(record) => record,
                Err(e) => {
                    report.failures.push(FailureRow {
                        cell: format!("nshot{shots}/rac/test{test_idx}"),
                        error: e.to_string(),
                    });
                    continue;
                }
            };
            let truth = test.label.unwrap_or(f64::NAN);
            let entry = per_method.entry("rac".into()).or_default();
            entry.0.push(truth);
            entry.1.push(record.point_estimate);

            // the demonstrations RAC saw, replayed as baseline training data
            let train = retrieve_demos(&runner, &ipdvs, test, shots)?;
            for method in &spec.methods {
                let Some(kind) = method.baseline() else { continue };
                let outcome: Result<BaselineFit, EvalError> = (|| {
                    let (x_train, label_train) = samples_to_matrix(&train)?;
                    let (x_test, _) =
                        samples_to_matrix(&[test.project(&runner.selection.selected)])?;
                    run_baseline(
                        kind,
                        &x_train,
                        &label_train,
                        &x_test,
                        &runner.grid,
                        spec.folds,
                        mix_seed(spec.seed, method.name(), shots * 100_000 + test_idx),
                    )
                })();
                match outcome {
                    Ok(fit) => {
                        let entry = per_method.entry(method.name().into()).or_default();
                        entry.0.push(truth);
                        entry.1.push(fit.predictions[0]);
                    }
                    Err(e) => report.failures.push(FailureRow {
                        cell: format!("nshot{shots}/{}/test{test_idx}", method.name()),
                        error: e.to_string(),
                    }),
                }
            }
        }
        for (method, (y_true, y_pred)) in per_method {
            match compute_metrics(&y_true, &y_pred) {
                Ok(m) => report.nshot.push(NshotRow {
                    method,
                    shots,
                    mae: m.mae,
                    rmse: m.rmse,
                }),
                Err(e) => report.failures.push(FailureRow {
                    cell: format!("nshot{shots}/{method}"),
                    error: e.to_string(),
                }),
            }
        }
    }

    // missing-ratio study: masked test samples through RAC
    for (ratio_idx, &ratio) in spec.missing_ratios.iter().enumerate() {
        let mut y_true = Vec::new();
        let mut y_pred = Vec::new();
        let mut confidences = Vec::new();
        for (test_idx, test) in all_tests.iter().enumerate() {
            let outcome: Result<PredictionRecord, EvalError> = (|| {
                let projected = test.project(&runner.selection.selected);
                let masked = apply_missing_mask(
                    &projected,
                    ratio,
                    mix_seed(spec.seed, "mask", ratio_idx * 100_000 + test_idx),
                )?;
                let seed = mix_seed(spec.seed, "missing", ratio_idx * 100_000 + test_idx);
                let cfg = runner.ufss_config(ContextMode::Rac, spec.rac_shots, 1, seed);
                Ok(predict_rac(
                    &runner.dataset.task_config,
                    &ipdvs,
                    &masked,
                    &runner.selection,
                    &runner.backend,
                    &cfg,
                )?)
            })();
            match outcome {
                Ok(record) => {
                    y_true.push(test.label.unwrap_or(f64::NAN));
                    y_pred.push(record.point_estimate);
                    confidences.push(record.confidence_score);
                }
                Err(e) => report.failures.push(FailureRow {
                    cell: format!("missing{ratio}/test{test_idx}"),
                    error: e.to_string(),
                }),
            }
        }
        match compute_metrics(&y_true, &y_pred) {
            Ok(m) => report.missing.push(MissingRow {
                ratio,
                mae: m.mae,
                rmse: m.rmse,
                mean_confidence: confidences.iter().sum::<f64>()
                    / confidences.len().max(1) as f64,
            }),
            Err(e) => report
                .failures
                .push(FailureRow { cell: format!("missing{ratio}"), error: e.to_string() }),
        }
    }

    if spec.confidence_study {
        if rac_records.is_empty() {
            // run RAC once if the method list did not include it
            for (test_idx, test) in all_tests.iter().enumerate() {
                let seed = mix_seed(spec.seed, "confidence", test_idx);
                let cfg = runner.ufss_config(ContextMode::Rac, spec.rac_shots, 1, seed);
                if let Ok(record) = predict_rac(
                    &runner.dataset.task_config,
                    &ipdvs,
                    test,
                    &runner.selection,
                    &runner.backend,
                    &cfg,
                ) {
                    rac_records.push(record);
                }
            }
        }
        for (record, test) in rac_records.iter().zip(&all_tests) {
            if let Some(truth) = test.label {
                report
                    .confidence_error
                    .push((record.confidence_score, (record.point_estimate - truth).abs()));
            }
        }
    }

    Ok(report)
}

fn push_metrics(
    report: &mut ExperimentReport,
    method: &str,
    mode: &str,
    y_true: &[f64],
    y_pred: &[f64],
) {
    match compute_metrics(y_true, y_pred) {
        Ok(metrics) => report.metrics.push(MetricsRow {
            method: method.to_string(),
            mode: mode.to_string(),
            metrics,
        }),
        Err(e) => report
            .failures
            .push(FailureRow { cell: format!("metrics/{method}"), error: e.to_string() }),
    }
}

/// The demonstrations RAC retrieves for this test, in prompt order.
fn retrieve_demos(
    runner: &Runner<'_>,
    ipdvs: &VectorStore,
    test: &Sample,
    shots: usize,
) -> Result<Vec<Sample>, EvalError> {
    let projected = test.project(&runner.selection.selected);
    let stats = ipdvs
        .encoder_stats
        .as_ref()
        .ok_or_else(|| EvalError::Config("store lacks encoder stats".into()))?;
    let query = crate::store::encode_sample(&projected, stats)?;
    let hits = ipdvs.query_top_k(&query, shots.max(1))?;
    Ok(hits
        .iter()
        .filter_map(|hit| match &hit.item.payload {
            crate::store::Payload::Sample(s) => Some(s.clone()),
            _ => None,
        })
        .collect())
}

/// Writes the report directory: `metrics.csv`, `nshot_curve.csv`,
/// `missing_ratio.csv`, `confidence_error.csv`, `ascs.csv`,
/// `failures.csv`, `records.jsonl`, and `manifest.json`.
pub fn write_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<(), EvalError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let mut metrics = String::from("method,mode,n,mae,rmse,r2,smape,mape\n");
    for row in &report.metrics {
        let m = &row.metrics;
        metrics.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.method, row.mode, m.n, m.mae, m.rmse, m.r2, m.smape, m.mape
        ));
    }
    std::fs::write(dir.join("metrics.csv"), metrics)?;

    let mut nshot = String::from("method,shots,mae,rmse\n");
    for row in &report.nshot {
        nshot.push_str(&format!("{},{},{},{}\n", row.method, row.shots, row.mae, row.rmse));
    }
    std::fs::write(dir.join("nshot_curve.csv"), nshot)?;

    let mut missing = String::from("ratio,mae,rmse,mean_confidence\n");
    for row in &report.missing {
        missing.push_str(&format!(
            "{},{},{},{}\n",
            row.ratio, row.mae, row.rmse, row.mean_confidence
        ));
    }
    std::fs::write(dir.join("missing_ratio.csv"), missing)?;

    let mut confidence = String::from("confidence,abs_error\n");
    for (c, e) in &report.confidence_error {
        confidence.push_str(&format!("{c},{e}\n"));
    }
    std::fs::write(dir.join("confidence_error.csv"), confidence)?;

    let mut ascs_csv = String::from("runs,m,ascs\n");
    if let Some(row) = &report.ascs {
        ascs_csv.push_str(&format!("{},{},{}\n", row.runs, row.m, row.score));
    }
    std::fs::write(dir.join("ascs.csv"), ascs_csv)?;

    let mut failures = String::from("cell,error\n");
    for row in &report.failures {
        failures.push_str(&format!("{},{}\n", row.cell, row.error.replace(',', ";")));
    }
    std::fs::write(dir.join("failures.csv"), failures)?;

    let mut records = std::fs::File::create(dir.join("records.jsonl"))?;
    for record in &report.records {
        writeln!(records, "{}", serde_json::to_string(record)?)?;
    }

    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&report.manifest)?,
    )?;
    Ok(())
}
