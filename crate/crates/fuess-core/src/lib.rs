//! Two-stage soft sensing with retrieval-augmented language-model inference.
//!
//! Stage one selects auxiliary variables for an industrial process by querying
//! a chat backend augmented with knowledge retrieved from a vector store.
//! Stage two predicts the primary quality variable few-shot, placing formatted
//! demonstration samples in the prompt (either a fixed context or one
//! retrieved per test sample from a process-data vector store) and parsing a
//! structured JSON answer with a point prediction, confidence score, and
//! free-text reasoning. Repeated trials yield confidence intervals.
//!
//! The crate also ships the evaluation bench used to validate the pipeline:
//! regression metrics, classical feature-ranking and regression baselines,
//! synthetic dataset generators, and an experiment runner emitting CSV
//! reports.

pub mod domain;
pub mod eval;
pub mod llm;
pub mod prompt;
pub mod selector;
pub mod sensor;
pub mod store;
pub mod synth;

pub use domain::{ContextSplit, Dataset, DomainError, Sample, TaskConfig, VariableSpec};
pub use llm::{GenerationParams, LlmBackend, LlmError, StructuredAnswer};
pub use prompt::{AblationFlags, AvsPrompt, PromptError, QueryKind, SsPrompt};
pub use selector::{LocalExplanation, SelectionResult, SelectorError};
pub use sensor::{CiMethod, ContextMode, PredictionRecord, SensorError, UfssConfig};
pub use store::{EmbeddingVector, RetrievalHit, StoreError, StoreItem, StoreKind, VectorStore};
