//! Deterministic rendering of the variable-selection and soft-sensor prompt
//! templates.
//!
//! Rendering is a pure function: identical inputs produce byte-identical
//! prompts, which golden tests pin. Ablation flags remove their block or
//! sentences and nothing else, so every ablated prompt is a pure deletion
//! from the full one.

mod format;
pub mod templates;

pub use format::{format_sample_text, parse_sample_line};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Sample, TaskConfig, VariableSpec};
use crate::selector::SelectionResult;
use crate::store::DocumentChunk;
use templates as t;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("local query requires a target variable")]
    MissingTargetVariable,
    #[error("context has no demonstrations")]
    EmptyContext,
    #[error("demonstration without a label at position {0}")]
    UnlabeledDemonstration(usize),
}

/// Global queries rank every candidate variable; local queries analyze one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryKind {
    Global,
    Local,
}

/// Which prompt components an ablation run removes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Remove the role block.
    pub no_role: bool,
    /// Remove the chain-of-thought sentences from the instruction block.
    pub no_cot: bool,
    /// Remove the explanation and confidence-score output requirements.
    pub no_ec: bool,
}

impl AblationFlags {
    pub const NONE: AblationFlags = AblationFlags { no_role: false, no_cot: false, no_ec: false };

    /// Parses a comma-separated flag list: `no-role,no-cot,no-ec`.
    pub fn parse(flags: &str) -> Result<AblationFlags, String> {
        let mut out = AblationFlags::default();
        for flag in flags.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            match flag {
                "no-role" => out.no_role = true,
                "no-cot" => out.no_cot = true,
                "no-ec" => out.no_ec = true,
                other => return Err(format!("unknown ablation flag {other:?}")),
            }
        }
        Ok(out)
    }
}

impl std::fmt::Display for AblationFlags {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if self.no_role {
            parts.push("no-role");
        }
        if self.no_cot {
            parts.push("no-cot");
        }
        if self.no_ec {
            parts.push("no-ec");
        }
        write!(f, "{}", if parts.is_empty() { "full".into() } else { parts.join(",") })
    }
}

/// Document chunks retrieved for a query, in retrieval-rank order.
#[derive(Debug, Clone, Default)]
pub struct RetrievedContext {
    pub chunks: Vec<DocumentChunk>,
}

/// Labeled demonstrations placed in a soft-sensor prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSet {
    pub demonstrations: Vec<Sample>,
}

/// A rendered variable-selection prompt, block by block.
#[derive(Debug, Clone, PartialEq)]
pub struct AvsPrompt {
    pub role_block: String,
    pub data_block: String,
    pub instruction_block: String,
    pub context_block: String,
    pub main_user_block: String,
    pub query_kind: QueryKind,
    pub target_variable: Option<String>,
}

impl AvsPrompt {
    /// The full prompt text: blocks joined by blank lines.
    pub fn text(&self) -> String {
        [
            self.role_block.as_str(),
            self.data_block.as_str(),
            self.instruction_block.as_str(),
            self.context_block.as_str(),
            self.main_user_block.as_str(),
        ]
        .join("\n\n")
    }
}

/// A rendered soft-sensor prompt, block by block.
#[derive(Debug, Clone, PartialEq)]
pub struct SsPrompt {
    pub role_block: String,
    pub data_block: String,
    pub importance_block: String,
    pub global_explanation_block: String,
    pub instruction_block: String,
    pub context_samples_block: String,
    pub main_user_block: String,
    pub ablation: AblationFlags,
}

impl SsPrompt {
    /// The full prompt text: non-empty blocks joined by blank lines.
    pub fn text(&self) -> String {
        [
            self.role_block.as_str(),
            self.data_block.as_str(),
            self.importance_block.as_str(),
            self.global_explanation_block.as_str(),
            self.instruction_block.as_str(),
            self.context_samples_block.as_str(),
            self.main_user_block.as_str(),
        ]
        .iter()
        .filter(|block| !block.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join("\n\n")
    }
}

fn render_chunks(chunks: &[DocumentChunk]) -> String {
    if chunks.is_empty() {
        return t::EMPTY_CONTEXT_NOTE.to_string();
    }
    chunks
        .iter()
        .map(|c| format!("[source: {}]\n{}", c.source, c.text))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Renders the variable-selection prompt: role, data, instruction, retrieved
/// context, and main user block. Global queries list every candidate name;
/// local queries name exactly one variable.
pub fn render_avs_pt(
    task: &TaskConfig,
    catalog: &[VariableSpec],
    context: &RetrievedContext,
    query_kind: QueryKind,
    target_variable: Option<&str>,
) -> Result<AvsPrompt, PromptError> {
    let feature_count = task.feature_count.to_string();
    let shared: Vec<(&str, &str)> = vec![
        ("{Industrial Process}", task.industrial_process.as_str()),
        ("{Facility}", task.facility.as_str()),
        ("{Primary Variable}", task.primary_variable_name.as_str()),
        ("{Feature Count}", feature_count.as_str()),
    ];
    let data_block = t::fill(t::AVS_DATA, &shared);
    let context_text = render_chunks(&context.chunks);
    let context_block = t::fill(t::AVS_CONTEXT, &[("{Context}", context_text.as_str())]);

    let (instruction_block, main_user_block, target) = match query_kind {
        QueryKind::Global => {
            let names = catalog
                .iter()
                .map(|v| v.name.as_str())
                .collect::<Vec<_>>()
                .join(", ");
            (
                t::fill(t::AVS_INSTRUCTION_GLOBAL, &shared),
                t::fill(t::AVS_MAIN_GLOBAL, &[("{Auxiliary Variables}", names.as_str())]),
                None,
            )
        }
        QueryKind::Local => {
            let target = target_variable.ok_or(PromptError::MissingTargetVariable)?;
            (
                t::fill(t::AVS_INSTRUCTION_LOCAL, &shared),
                t::fill(t::AVS_MAIN_LOCAL, &[("{Auxiliary Variable}", target)]),
                Some(target.to_string()),
            )
        }
    };

    Ok(AvsPrompt {
        role_block: t::ROLE.to_string(),
        data_block,
        instruction_block,
        context_block,
        main_user_block,
        query_kind,
        target_variable: target,
    })
}

/// Renders the soft-sensor prompt: role, data, importance scores and
/// ranking, global explanation, instruction, formatted demonstrations, and
/// the unlabeled test sample. Ablation flags excise the role block, the
/// chain-of-thought sentences, or the explanation-and-confidence output
/// requirements; each removal is a pure deletion from the full prompt.
pub fn render_ss_pt(
    task: &TaskConfig,
    selection: &SelectionResult,
    context: &ContextSet,
    test_sample: &Sample,
    ablation: AblationFlags,
) -> Result<SsPrompt, PromptError> {
    if context.demonstrations.is_empty() {
        return Err(PromptError::EmptyContext);
    }
    for (i, demo) in context.demonstrations.iter().enumerate() {
        if demo.label.is_none() {
            return Err(PromptError::UnlabeledDemonstration(i));
        }
    }

    let primary = task.primary_variable_name.as_str();
    let names = selection.selected.join(", ");
    let feature_count = selection.selected.len().to_string();
    let shared: Vec<(&str, &str)> = vec![
        ("{Industrial Process}", task.industrial_process.as_str()),
        ("{Facility}", task.facility.as_str()),
        ("{Primary Variable}", primary),
        ("{Feature Count}", feature_count.as_str()),
        ("{Auxiliary Variables}", names.as_str()),
    ];

    let importance_block = {
        let mut lines = vec![t::fill(t::SS_IMPORTANCE_HEADER, &shared)];
        for (rank, name) in selection.ranking.iter().enumerate() {
            let score = selection.scores.get(name).copied().unwrap_or(0.0);
            lines.push(format!("{}. {name}: {score}", rank + 1));
        }
        lines.join("\n")
    };

    let global_explanation_block = format!(
        "{}\n{}",
        t::SS_EXPLANATION_HEADER,
        selection.global_explanation
    );

    let mut instruction_parts = vec![t::fill(t::SS_INSTRUCTION_BASE, &shared)];
    if !ablation.no_cot {
        instruction_parts.push(t::fill(t::SS_INSTRUCTION_COT, &shared));
    }
    instruction_parts.push(t::fill(t::SS_INSTRUCTION_FORMAT, &shared));
    if !ablation.no_ec {
        instruction_parts.push(t::fill(t::SS_INSTRUCTION_EC, &shared));
    }
    let instruction_block = instruction_parts.join("\n");

    let demonstrations = context
        .demonstrations
        .iter()
        .map(|d| format_sample_text(d, Some(primary)))
        .collect::<Vec<_>>()
        .join("\n");
    let context_samples_block = t::fill(t::SS_CONTEXT, &[("{Samples}", demonstrations.as_str())]);

    let test_line = format_sample_text(test_sample, None);
    let mut main_subs = shared.clone();
    main_subs.push(("{Test Sample}", test_line.as_str()));
    let main_user_block = t::fill(t::SS_MAIN, &main_subs);

    Ok(SsPrompt {
        role_block: if ablation.no_role { String::new() } else { t::ROLE.to_string() },
        data_block: t::fill(t::SS_DATA, &shared),
        importance_block,
        global_explanation_block,
        instruction_block,
        context_samples_block,
        main_user_block,
        ablation,
    })
}
