//! Stage-1 orchestration: retrieval-augmented global and local selection
//! queries, multi-run score aggregation, top-fraction selection, and the
//! selection-consistency score.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{round_half_up, TaskConfig, VariableSpec};
use crate::llm::{parse_response, AnswerKind, GenerationParams, LlmBackend, LlmError, StructuredAnswer};
use crate::prompt::{render_avs_pt, PromptError, QueryKind, RetrievedContext};
use crate::store::{EmbeddingProvider, StoreError, StoreKind, VectorStore};

#[derive(Debug, Error)]
pub enum SelectorError {
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("store has kind {found:?}, expected {expected:?}")]
    WrongStoreKind { expected: StoreKind, found: StoreKind },
    #[error("need at least two selections, got {0}")]
    TooFewSelections(usize),
    #[error("selection size mismatch: {0}")]
    SizeMismatch(String),
    #[error("all {runs} selection runs failed; last error: {last}")]
    AllRunsFailed { runs: usize, last: String },
    #[error("invalid selection options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Outcome of one selection run: extracted scores, the run's own top-m set,
/// and its explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub scores: BTreeMap<String, f64>,
    pub selected: Vec<String>,
    pub explanation: String,
}

/// Aggregated variable-selection result.
///
/// `ranking` is every catalog variable sorted by descending mean score with
/// lexicographic tie-break; `selected` is its first `m` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub scores: BTreeMap<String, f64>,
    pub ranking: Vec<String>,
    pub global_explanation: String,
    pub selected: Vec<String>,
    pub runs: usize,
    /// Per-run records, kept for consistency scoring and reports.
    pub per_run: Vec<RunOutcome>,
}

impl SelectionResult {
    /// A selection that keeps every catalog variable with uniform scores;
    /// used when stage one is skipped.
    pub fn keep_all(catalog: &[VariableSpec]) -> SelectionResult {
        let names: Vec<String> = catalog.iter().map(|v| v.name.clone()).collect();
        let scores = names.iter().map(|n| (n.clone(), 1.0)).collect();
        SelectionResult {
            scores,
            ranking: names.clone(),
            global_explanation: "All variables kept; no selection was performed.".into(),
            selected: names,
            runs: 0,
            per_run: Vec::new(),
        }
    }
}

/// A local-query explanation for one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub variable: String,
    pub reasoning: String,
}

/// Options for [`select_variables`].
#[derive(Debug, Clone)]
pub struct ZavsOptions {
    /// Independent completion runs to aggregate.
    pub n_runs: usize,
    /// Fraction of the catalog to keep; the kept count is
    /// `round_half_up(fraction * catalog_len)`.
    pub fraction: f64,
    /// Chunks retrieved from the knowledge store per query.
    pub top_k: usize,
    pub generation: GenerationParams,
}

impl Default for ZavsOptions {
    fn default() -> Self {
        ZavsOptions {
            n_runs: 5,
            fraction: 0.5,
            top_k: 4,
            generation: GenerationParams::default(),
        }
    }
}

/// Number of variables kept when selecting `fraction` of `catalog_len`.
pub fn selection_count(fraction: f64, catalog_len: usize) -> usize {
    round_half_up(fraction * catalog_len as f64)
}

fn retrieve_context(
    store: &VectorStore,
    provider: &dyn EmbeddingProvider,
    query_text: &str,
    top_k: usize,
) -> Result<RetrievedContext, SelectorError> {
    if store.is_empty() || top_k == 0 {
        return Ok(RetrievedContext::default());
    }
    let query = provider.embed(query_text)?;
    let hits = store.query_top_k(&query, top_k)?;
    let chunks = hits
        .iter()
        .filter_map(|hit| match &hit.item.payload {
            crate::store::Payload::Chunk(chunk) => Some(chunk.clone()),
            crate::store::Payload::Sample(_) => None,
        })
        .collect();
    Ok(RetrievedContext { chunks })
}

/// Extracts `(variable, score)` pairs from a "score and ranking" text.
///
/// Accepts one entry per line shaped like `"<rank>. <name>: <score>"` or
/// `"<rank>. <name> - <score>"`; the rank prefix is optional and names must
/// match the catalog exactly. Scores are clamped into [0, 1]. Unrecognized
/// lines are ignored.
pub fn extract_scores(score_and_ranking: &str, catalog: &[VariableSpec]) -> BTreeMap<String, f64> {
    let names: BTreeSet<&str> = catalog.iter().map(|v| v.name.as_str()).collect();
    let mut scores = BTreeMap::new();
    for line in score_and_ranking.lines() {
        let line = strip_rank_prefix(line.trim());
        let parsed = split_name_score(line, ':').or_else(|| split_name_score(line, '-'));
        if let Some((name, score)) = parsed {
            if names.contains(name) {
                scores.insert(name.to_string(), score.clamp(0.0, 1.0));
            }
        }
    }
    scores
}

fn strip_rank_prefix(line: &str) -> &str {
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return line;
    }
    let rest = &line[digits..];
    match rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
        Some(stripped) => stripped.trim_start(),
        None => line,
    }
}

fn split_name_score(line: &str, separator: char) -> Option<(&str, f64)> {
    let (name, score) = line.rsplit_once(separator)?;
    let score = score.trim().parse::<f64>().ok()?;
    Some((name.trim(), score))
}

fn rank_by_score(scores: &BTreeMap<String, f64>, catalog: &[VariableSpec]) -> Vec<String> {
    let mut entries: Vec<(String, f64)> = catalog
        .iter()
        .map(|v| (v.name.clone(), scores.get(&v.name).copied().unwrap_or(0.0)))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.into_iter().map(|(name, _)| name).collect()
}

/// Runs the global selection query `n_runs` times against the knowledge
/// store and backend, averages per-variable scores over the successful runs
/// (variables absent from a run's output score 0 for that run), ranks by
/// descending mean score with lexicographic tie-break, and keeps the top
/// `round_half_up(fraction * catalog_len)` variables. The surfaced
/// explanation is the last successful run's; every run is kept in
/// `per_run`.
pub fn select_variables(
    task: &TaskConfig,
    catalog: &[VariableSpec],
    ikvs: &VectorStore,
    provider: &dyn EmbeddingProvider,
    backend: &LlmBackend,
    options: &ZavsOptions,
) -> Result<SelectionResult, SelectorError> {
    if options.n_runs == 0 {
        return Err(SelectorError::InvalidOptions("n_runs must be at least 1".into()));
    }
    if !(options.fraction > 0.0 && options.fraction <= 1.0) {
        return Err(SelectorError::InvalidOptions(format!(
            "fraction {} outside (0, 1]",
            options.fraction
        )));
    }
    if !ikvs.is_empty() && ikvs.kind != StoreKind::Knowledge {
        return Err(SelectorError::WrongStoreKind {
            expected: StoreKind::Knowledge,
            found: ikvs.kind,
        });
    }

    let query_text: String = catalog
        .iter()
        .map(|v| v.name.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    let context = retrieve_context(ikvs, provider, &query_text, options.top_k)?;
    let prompt = render_avs_pt(task, catalog, &context, QueryKind::Global, None)?;
    let prompt_text = prompt.text();
    let m = selection_count(options.fraction, catalog.len());

    let mut per_run = Vec::new();
    let mut last_error: Option<LlmError> = None;
    for _ in 0..options.n_runs {
        let raw = match backend.complete(&prompt_text, &options.generation) {
            Ok(raw) => raw,
            Err(e) => {
                log::warn!("selection run failed: {e}");
                last_error = Some(e);
                continue;
            }
        };
        match parse_response(AnswerKind::ZavsGlobal, &raw) {
            Ok(StructuredAnswer::ZavsGlobal { score_and_ranking, reasoning }) => {
                let scores = extract_scores(&score_and_ranking, catalog);
                let ranking = rank_by_score(&scores, catalog);
                per_run.push(RunOutcome {
                    selected: ranking[..m.min(ranking.len())].to_vec(),
                    scores,
                    explanation: reasoning,
                });
            }
            Ok(_) => unreachable!("parse_response returns the requested kind"),
            Err(e) => {
                log::warn!("selection run unparseable: {e}");
                last_error = Some(e);
            }
        }
    }
    if per_run.is_empty() {
        return Err(SelectorError::AllRunsFailed {
            runs: options.n_runs,
            last: last_error.map(|e| e.to_string()).unwrap_or_default(),
        });
    }

    let n_success = per_run.len() as f64;
    let mut mean_scores = BTreeMap::new();
    for variable in catalog {
        let total: f64 = per_run
            .iter()
            .map(|run| run.scores.get(&variable.name).copied().unwrap_or(0.0))
            .sum();
        mean_scores.insert(variable.name.clone(), total / n_success);
    }
    let ranking = rank_by_score(&mean_scores, catalog);
    let selected = ranking[..m.min(ranking.len())].to_vec();
    let global_explanation = per_run.last().map(|r| r.explanation.clone()).unwrap_or_default();

    Ok(SelectionResult {
        scores: mean_scores,
        ranking,
        global_explanation,
        selected,
        runs: options.n_runs,
        per_run,
    })
}

/// Runs the local query for one catalog variable and returns its
/// explanation.
pub fn explain_variable(
    task: &TaskConfig,
    catalog: &[VariableSpec],
    variable: &str,
    ikvs: &VectorStore,
    provider: &dyn EmbeddingProvider,
    backend: &LlmBackend,
    options: &ZavsOptions,
) -> Result<LocalExplanation, SelectorError> {
    if !catalog.iter().any(|v| v.name == variable) {
        return Err(SelectorError::UnknownVariable(variable.to_string()));
    }
    if !ikvs.is_empty() && ikvs.kind != StoreKind::Knowledge {
        return Err(SelectorError::WrongStoreKind {
            expected: StoreKind::Knowledge,
            found: ikvs.kind,
        });
    }
    let context = retrieve_context(ikvs, provider, variable, options.top_k)?;
    let prompt = render_avs_pt(task, catalog, &context, QueryKind::Local, Some(variable))?;
    let raw = backend.complete(&prompt.text(), &options.generation)?;
    match parse_response(AnswerKind::ZavsLocal, &raw)? {
        StructuredAnswer::ZavsLocal { reasoning } => {
            Ok(LocalExplanation { variable: variable.to_string(), reasoning })
        }
        _ => unreachable!("parse_response returns the requested kind"),
    }
}

/// Consistency kernel: mean over pairs of `overlap / m`.
///
/// `overlaps` holds `|A_i ∩ A_j|` for every unordered pair; the score is
/// their average overlap fraction, 1 exactly when all selections agree.
pub fn ascs_from_overlaps(overlaps: &[f64], m: usize) -> Result<f64, SelectorError> {
    if m == 0 {
        return Err(SelectorError::SizeMismatch("selection size m must be positive".into()));
    }
    if overlaps.is_empty() {
        return Err(SelectorError::TooFewSelections(1));
    }
    let total: f64 = overlaps.iter().map(|o| o / m as f64).sum();
    Ok(total / overlaps.len() as f64)
}

/// Average selection consistency score over `n >= 2` selections of exactly
/// `m` variables each: the average pairwise overlap fraction, in [0, 1],
/// equal to 1 iff all selections are identical.
pub fn ascs(selections: &[Vec<String>], m: usize) -> Result<f64, SelectorError> {
    if selections.len() < 2 {
        return Err(SelectorError::TooFewSelections(selections.len()));
    }
    let sets: Vec<BTreeSet<&str>> = selections
        .iter()
        .map(|s| s.iter().map(String::as_str).collect())
        .collect();
    for (i, set) in sets.iter().enumerate() {
        if set.len() != m || selections[i].len() != m {
            return Err(SelectorError::SizeMismatch(format!(
                "selection {i} has {} distinct variables, expected {m}",
                set.len()
            )));
        }
    }
    let mut overlaps = Vec::new();
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            overlaps.push(sets[i].intersection(&sets[j]).count() as f64);
        }
    }
    ascs_from_overlaps(&overlaps, m)
}
