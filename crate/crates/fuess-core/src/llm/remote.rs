//! Remote chat-completion backend: provider-agnostic HTTP POST with
//! exponential-backoff retries, a concurrency bound, and a token-bucket
//! rate limit.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde_json::Value;

use super::{GenerationParams, LlmError};

/// Reads a value at a dot-separated path of object keys and array indices,
/// e.g. `["choices", "0", "message", "content"]`.
pub fn extract_json_path<'a>(value: &'a Value, path: &[String]) -> Option<&'a Value> {
    let mut current = value;
    for segment in path {
        current = match segment.parse::<usize>() {
            Ok(index) => current.as_array()?.get(index)?,
            Err(_) => current.as_object()?.get(segment)?,
        };
    }
    Some(current)
}

/// Counting semaphore bounding in-flight requests.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore { permits: Mutex::new(permits), available: Condvar::new() }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().unwrap();
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

/// Token bucket: `rate_per_sec` tokens accrue per second up to `burst`;
/// each request takes one token, blocking until one is available.
struct TokenBucket {
    state: Mutex<BucketState>,
    rate_per_sec: f64,
    burst: f64,
}

struct BucketState {
    tokens: f64,
    last_refill: Instant,
}

impl TokenBucket {
    fn new(rate_per_sec: f64, burst: f64) -> Self {
        TokenBucket {
            state: Mutex::new(BucketState { tokens: burst, last_refill: Instant::now() }),
            rate_per_sec,
            burst,
        }
    }

    fn take(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().unwrap();
                let now = Instant::now();
                let elapsed = now.duration_since(state.last_refill).as_secs_f64();
                state.tokens = (state.tokens + elapsed * self.rate_per_sec).min(self.burst);
                state.last_refill = now;
                if state.tokens >= 1.0 {
                    state.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - state.tokens) / self.rate_per_sec)
            };
            std::thread::sleep(wait);
        }
    }
}

/// Configuration for the remote backend. The endpoint and credential may be
/// set explicitly or resolved from `FUESS_API_BASE_URL` and `FUESS_API_KEY`
/// at call time.
#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    /// JSON path to the assistant text in the response body.
    pub response_path: Vec<String>,
    pub system_prompt: String,
    pub max_in_flight: usize,
    pub requests_per_second: f64,
    pub burst: usize,
    /// First backoff delay; doubles per retry.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: None,
            api_key: None,
            response_path: vec!["choices".into(), "0".into(), "message".into(), "content".into()],
            system_prompt: "You are a helpful assistant.".into(),
            max_in_flight: 4,
            requests_per_second: 2.0,
            burst: 4,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(120),
        }
    }
}

pub const API_KEY_ENV: &str = "FUESS_API_KEY";
pub const BASE_URL_ENV: &str = "FUESS_API_BASE_URL";

/// Remote chat backend.
pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    semaphore: Semaphore,
    bucket: TokenBucket,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("base_url", &self.config.base_url)
            .finish_non_exhaustive()
    }
}

enum AttemptError {
    Retryable(LlmError),
    Fatal(LlmError),
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .expect("reqwest client");
        let semaphore = Semaphore::new(config.max_in_flight.max(1));
        let bucket = TokenBucket::new(
            config.requests_per_second.max(0.001),
            config.burst.max(1) as f64,
        );
        RemoteBackend { config, client, semaphore, bucket }
    }

    fn endpoint(&self) -> Result<String, LlmError> {
        self.config
            .base_url
            .clone()
            .or_else(|| std::env::var(BASE_URL_ENV).ok())
            .ok_or_else(|| {
                LlmError::Config(format!("no endpoint configured and {BASE_URL_ENV} unset"))
            })
    }

    fn credential(&self) -> Result<String, LlmError> {
        self.config
            .api_key
            .clone()
            .or_else(|| std::env::var(API_KEY_ENV).ok())
            .ok_or(LlmError::CredentialMissing)
    }

    fn attempt(
        &self,
        endpoint: &str,
        key: &str,
        body: &Value,
    ) -> Result<String, AttemptError> {
        self.bucket.take();
        let response = self
            .client
            .post(endpoint)
            .bearer_auth(key)
            .json(body)
            .send()
            .map_err(|e| {
                AttemptError::Retryable(LlmError::Transport {
                    status: None,
                    message: e.to_string(),
                })
            })?;
        let status = response.status();
        if status.as_u16() == 429 {
            return Err(AttemptError::Retryable(LlmError::RateLimited));
        }
        if status.is_server_error() {
            return Err(AttemptError::Retryable(LlmError::Transport {
                status: Some(status.as_u16()),
                message: "server error".into(),
            }));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(LlmError::Transport {
                status: Some(status.as_u16()),
                message: "request rejected".into(),
            }));
        }
        let value: Value = response.json().map_err(|e| {
            AttemptError::Fatal(LlmError::Transport { status: Some(status.as_u16()), message: e.to_string() })
        })?;
        let text = extract_json_path(&value, &self.config.response_path)
            .and_then(Value::as_str)
            .ok_or_else(|| {
                AttemptError::Fatal(LlmError::Transport {
                    status: Some(status.as_u16()),
                    message: format!(
                        "no text at response path {}",
                        self.config.response_path.join(".")
                    ),
                })
            })?;
        Ok(text.to_string())
    }

    pub(super) fn complete(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<String, LlmError> {
        let endpoint = self.endpoint()?;
        let key = self.credential()?;
        let body = serde_json::json!({
            "model": params.model_name,
            "messages": [
                { "role": "system", "content": self.config.system_prompt },
                { "role": "user", "content": prompt },
            ],
            "temperature": params.temperature,
        });

        let _guard = self.semaphore.acquire();
        let mut last_error = LlmError::Transport { status: None, message: "no attempt made".into() };
        for attempt in 0..=params.max_retries {
            match self.attempt(&endpoint, &key, &body) {
                Ok(text) => return Ok(text),
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Retryable(e)) => {
                    log::warn!("attempt {} failed: {e}", attempt + 1);
                    last_error = e;
                    if attempt < params.max_retries {
                        std::thread::sleep(self.config.backoff * 2u32.pow(attempt));
                    }
                }
            }
        }
        Err(last_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn json_path_walks_objects_and_arrays() {
        let value: Value = serde_json::json!({
            "choices": [{ "message": { "content": "hello" } }]
        });
        let path: Vec<String> =
            ["choices", "0", "message", "content"].iter().map(|s| s.to_string()).collect();
        assert_eq!(extract_json_path(&value, &path).unwrap(), "hello");
        let missing: Vec<String> = ["choices", "7"].iter().map(|s| s.to_string()).collect();
        assert!(extract_json_path(&value, &missing).is_none());
    }

    #[test]
    fn token_bucket_spaces_requests() {
        let bucket = TokenBucket::new(1000.0, 2.0);
        let start = Instant::now();
        for _ in 0..12 {
            bucket.take();
        }
        // 12 takes at 1000/s with burst 2: at least ~10ms of accrual
        assert!(start.elapsed() >= Duration::from_millis(8));
    }

    #[test]
    fn semaphore_bounds_concurrency() {
        let semaphore = Arc::new(Semaphore::new(2));
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let mut handles = Vec::new();
        for _ in 0..8 {
            let semaphore = semaphore.clone();
            let active = active.clone();
            let peak = peak.clone();
            handles.push(std::thread::spawn(move || {
                let _guard = semaphore.acquire();
                let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(10));
                active.fetch_sub(1, Ordering::SeqCst);
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }

    /// One-thread HTTP server answering each connection with the next canned
    /// status; returns (url, hit counter).
    fn serve(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                let mut reader = BufReader::new(stream);
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(rest) = line.to_lowercase().strip_prefix("content-length:") {
                        content_length = rest.trim().parse().unwrap_or(0);
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body_buf = vec![0u8; content_length];
                reader.read_exact(&mut body_buf).unwrap();
                let mut stream = reader.into_inner();
                let reason = if status == 200 { "OK" } else { "ERR" };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\ncontent-length: {}\r\ncontent-type: application/json\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        (url, hits)
    }

    fn ok_body(text: &str) -> String {
        serde_json::json!({ "choices": [{ "message": { "content": text } }] }).to_string()
    }

    fn test_backend(url: &str) -> RemoteBackend {
        RemoteBackend::new(RemoteConfig {
            base_url: Some(url.to_string()),
            api_key: Some("test-key".into()),
            backoff: Duration::from_millis(1),
            requests_per_second: 10_000.0,
            burst: 100,
            ..RemoteConfig::default()
        })
    }

    #[test]
    fn retries_transient_errors_then_succeeds() {
        let (url, hits) = serve(vec![
            (500, "{}".into()),
            (429, "{}".into()),
            (200, ok_body("answer")),
        ]);
        let backend = test_backend(&url);
        let mut params = GenerationParams::default();
        params.max_retries = 3;
        let text = backend.complete("prompt", &params).unwrap();
        assert_eq!(text, "answer");
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn retry_count_never_exceeds_max_retries() {
        let (url, hits) = serve(vec![(500, "{}".into()); 10]);
        let backend = test_backend(&url);
        let mut params = GenerationParams::default();
        params.max_retries = 2;
        let err = backend.complete("prompt", &params).unwrap_err();
        assert!(matches!(err, LlmError::Transport { status: Some(500), .. }));
        // 1 initial + 2 retries
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn non_transient_errors_are_not_retried() {
        let (url, hits) = serve(vec![(400, "{}".into()); 5]);
        let backend = test_backend(&url);
        let mut params = GenerationParams::default();
        params.max_retries = 4;
        let err = backend.complete("prompt", &params).unwrap_err();
        assert!(matches!(err, LlmError::Transport { status: Some(400), .. }));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn missing_credential_is_typed() {
        let backend = RemoteBackend::new(RemoteConfig {
            base_url: Some("http://127.0.0.1:9".into()),
            api_key: None,
            ..RemoteConfig::default()
        });
        // guard against an ambient key in the environment
        if std::env::var(API_KEY_ENV).is_ok() {
            return;
        }
        let err = backend.complete("prompt", &GenerationParams::default()).unwrap_err();
        assert!(matches!(err, LlmError::CredentialMissing));
    }
}
