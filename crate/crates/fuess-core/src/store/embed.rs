//! Text embedding providers: a deterministic local hasher and a remote HTTP
//! adapter.

use super::{EmbeddingVector, StoreError};

/// Maps text to a fixed-dimension vector. All vectors produced by one
/// provider instance share the same dimension.
pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, StoreError>;
}

/// Deterministic offline embedder: lowercased tokens split on
/// non-alphanumerics, signed feature-hashed into `dimension` buckets,
/// L2-normalized.
///
/// The hash is FNV-1a 64, fixed forever, so the same text embeds to the same
/// vector across processes and platforms. Text with no tokens embeds to the
/// zero vector (the only unnormalized output).
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dimension: 256 }
    }
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashEmbedder { dimension }
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl EmbeddingProvider for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, StoreError> {
        let mut components = vec![0.0f64; self.dimension];
        for token in text.split(|c: char| !c.is_alphanumeric()) {
            if token.is_empty() {
                continue;
            }
            let token = token.to_lowercase();
            let hash = fnv1a64(token.as_bytes());
            let bucket = (hash % self.dimension as u64) as usize;
            let sign = if hash >> 63 == 0 { 1.0 } else { -1.0 };
            components[bucket] += sign;
        }
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            for c in &mut components {
                *c /= norm;
            }
        }
        Ok(EmbeddingVector(components))
    }
}

/// Remote embedding endpoint: POSTs `{model, input}` and reads the vector at
/// a configurable JSON path (default `data.0.embedding`).
pub struct RemoteEmbedder {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    model: String,
    response_path: Vec<String>,
    dimension: usize,
}

impl RemoteEmbedder {
    pub fn new(endpoint: &str, api_key: Option<String>, model: &str, dimension: usize) -> Self {
        RemoteEmbedder {
            client: reqwest::blocking::Client::new(),
            endpoint: endpoint.to_string(),
            api_key,
            model: model.to_string(),
            response_path: vec!["data".into(), "0".into(), "embedding".into()],
            dimension,
        }
    }

    pub fn with_response_path(mut self, path: &str) -> Self {
        self.response_path = path.split('.').map(str::to_string).collect();
        self
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, StoreError> {
        let body = serde_json::json!({ "model": self.model, "input": text });
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| StoreError::ProviderUnavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(StoreError::ProviderUnavailable(format!(
                "status {}",
                response.status()
            )));
        }
        let value: serde_json::Value = response
            .json()
            .map_err(|e| StoreError::ProviderUnavailable(e.to_string()))?;
        let at = crate::llm::extract_json_path(&value, &self.response_path).ok_or_else(|| {
            StoreError::ProviderUnavailable(format!(
                "response path {} not found",
                self.response_path.join(".")
            ))
        })?;
        let components: Vec<f64> = at
            .as_array()
            .map(|arr| arr.iter().filter_map(serde_json::Value::as_f64).collect())
            .unwrap_or_default();
        if components.len() != self.dimension {
            return Err(StoreError::DimensionMismatch {
                expected: self.dimension,
                found: components.len(),
            });
        }
        Ok(EmbeddingVector(components))
    }
}
