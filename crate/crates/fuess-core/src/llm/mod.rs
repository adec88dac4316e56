//! Uniform chat-completion interface over a remote HTTP backend and a
//! deterministic stub oracle, plus strict parsing of the structured JSON
//! answer schemas.

mod parse;
mod remote;
mod stub;

pub use parse::{parse_response, AnswerKind, StructuredAnswer};
pub use remote::{extract_json_path, RemoteBackend, RemoteConfig, API_KEY_ENV, BASE_URL_ENV};
pub use stub::{knn_oracle, StubBackend, DISTANCE_EPSILON};

use thiserror::Error;

/// Errors from completion and answer parsing.
#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport failure{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },
    #[error("rate limited by the backend")]
    RateLimited,
    #[error("no API credential available (set {})", API_KEY_ENV)]
    CredentialMissing,
    #[error("stub could not interpret the prompt: {0}")]
    StubParseFailure(String),
    #[error("backend configuration error: {0}")]
    Config(String),
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("no JSON object found in the response")]
    NoJsonFound,
    #[error("response violates the answer schema: missing or invalid field {0:?}")]
    SchemaViolation(String),
    #[error("prediction is not a finite number")]
    NonNumericPrediction,
    #[error("confidence score {0} outside the accepted range")]
    ConfidenceOutOfRange(f64),
}

/// Generation controls shared by all backends. Temperature 0 (the default)
/// makes the stub a pure function of the prompt; the seed only drives stub
/// noise at temperature > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationParams {
    pub temperature: f64,
    pub model_name: String,
    pub max_retries: u32,
    pub seed: Option<u64>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.0,
            model_name: "stub-knn".into(),
            max_retries: 3,
            seed: None,
        }
    }
}

/// A chat-completion backend: remote HTTP endpoint or deterministic stub.
#[derive(Debug)]
pub enum LlmBackend {
    Remote(RemoteBackend),
    Stub(StubBackend),
}

impl LlmBackend {
    pub fn stub() -> Self {
        LlmBackend::Stub(StubBackend::new())
    }

    /// Sends the prompt and returns the raw assistant text.
    pub fn complete(&self, prompt: &str, params: &GenerationParams) -> Result<String, LlmError> {
        if prompt.is_empty() {
            return Err(LlmError::EmptyPrompt);
        }
        match self {
            LlmBackend::Remote(backend) => backend.complete(prompt, params),
            LlmBackend::Stub(backend) => backend.complete(prompt, params),
        }
    }
}

/// Free-function form of [`LlmBackend::complete`].
pub fn complete(
    backend: &LlmBackend,
    prompt: &str,
    params: &GenerationParams,
) -> Result<String, LlmError> {
    backend.complete(prompt, params)
}
