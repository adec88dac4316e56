//! Exact Euclidean top-K flat vector index with document-chunk and
//! process-sample payloads.
//!
//! Two stores back the pipeline: a knowledge store of embedded document
//! chunks and a process-data store of encoded historical samples. Both are
//! immutable after build; queries are exact (brute-force-equivalent) and
//! safe from any number of threads.

mod chunk;
mod embed;
mod encode;
mod persist;

pub use chunk::{chunk_documents, DocumentChunk};
pub use embed::{EmbeddingProvider, HashEmbedder, RemoteEmbedder};
pub use encode::{compute_encoder_stats, encode_sample, EncoderStats, VariableStat};
pub use persist::{load_store, save_store};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Sample;

/// Errors from store construction, querying, and persistence.
#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid chunk parameters: {0}")]
    InvalidChunkParams(String),
    #[error("dimension mismatch: store has {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("store is empty")]
    EmptyStore,
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("vector component not finite")]
    NonFiniteComponent,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported store format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt store at byte {offset}: {reason}")]
    CorruptStore { offset: u64, reason: String },
}

/// A fixed-dimension embedding, all components finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Exact Euclidean distance.
    pub fn distance(&self, other: &EmbeddingVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// What a stored vector points back to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Chunk(DocumentChunk),
    Sample(Sample),
}

/// One indexed item; ids are unique and monotone in insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreItem {
    pub id: u64,
    pub vector: EmbeddingVector,
    pub payload: Payload,
}

/// Which pipeline stage a store serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StoreKind {
    /// Embedded document chunks of domain knowledge (IKVS).
    Knowledge,
    /// Encoded historical process samples used as retrievable
    /// demonstrations (IPDVS).
    ProcessData,
}

/// A query hit: the stored item and its distance to the query.
#[derive(Debug, Clone, Copy)]
pub struct RetrievalHit<'a> {
    pub item: &'a StoreItem,
    pub distance: f64,
}

/// Flat exact-search vector store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorStore {
    pub kind: StoreKind,
    pub dimension: usize,
    pub items: Vec<StoreItem>,
    /// Per-variable z-score statistics, present for numeric process-data
    /// stores; queries must be encoded with the same frozen stats.
    pub encoder_stats: Option<EncoderStats>,
}

impl VectorStore {
    pub fn new(kind: StoreKind, dimension: usize) -> Self {
        VectorStore { kind, dimension, items: Vec::new(), encoder_stats: None }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends an item, assigning the next insertion-order id.
    pub fn push(&mut self, vector: EmbeddingVector, payload: Payload) -> Result<u64, StoreError> {
        if vector.dim() != self.dimension {
            return Err(StoreError::DimensionMismatch {
                expected: self.dimension,
                found: vector.dim(),
            });
        }
        if vector.0.iter().any(|c| !c.is_finite()) {
            return Err(StoreError::NonFiniteComponent);
        }
        let id = self.items.len() as u64;
        self.items.push(StoreItem { id, vector, payload });
        Ok(id)
    }

    /// Exact top-K query: the `min(k, len)` nearest items by Euclidean
    /// distance, sorted ascending, ties broken by ascending id.
    pub fn query_top_k(
        &self,
        query: &EmbeddingVector,
        k: usize,
    ) -> Result<Vec<RetrievalHit<'_>>, StoreError> {
        if self.items.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        if query.dim() != self.dimension {
            return Err(StoreError::DimensionMismatch {
                expected: self.dimension,
                found: query.dim(),
            });
        }
        let mut hits: Vec<RetrievalHit<'_>> = self
            .items
            .iter()
            .map(|item| RetrievalHit { item, distance: query.distance(&item.vector) })
            .collect();
        hits.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.item.id.cmp(&b.item.id))
        });
        hits.truncate(k);
        Ok(hits)
    }

    /// Builds a knowledge store by embedding each chunk's text.
    pub fn build_knowledge(
        chunks: Vec<DocumentChunk>,
        provider: &dyn EmbeddingProvider,
    ) -> Result<VectorStore, StoreError> {
        let mut store = VectorStore::new(StoreKind::Knowledge, provider.dimension());
        for chunk in chunks {
            let vector = provider.embed(&chunk.text)?;
            store.push(vector, Payload::Chunk(chunk))?;
        }
        Ok(store)
    }

    /// Builds a process-data store with the numeric encoder: per-variable
    /// z-score statistics are computed over the given samples and frozen
    /// into the store.
    pub fn build_process_data(samples: &[Sample]) -> Result<VectorStore, StoreError> {
        let stats = compute_encoder_stats(samples)?;
        let mut store = VectorStore::new(StoreKind::ProcessData, stats.variables.len());
        for sample in samples {
            let vector = encode_sample(sample, &stats)?;
            store.push(vector, Payload::Sample(sample.clone()))?;
        }
        store.encoder_stats = Some(stats);
        Ok(store)
    }

    /// Builds a process-data store with the text encoder: each sample is
    /// rendered to its prompt line (without label) and embedded.
    pub fn build_process_data_text(
        samples: &[Sample],
        provider: &dyn EmbeddingProvider,
    ) -> Result<VectorStore, StoreError> {
        let mut store = VectorStore::new(StoreKind::ProcessData, provider.dimension());
        for sample in samples {
            let text = crate::prompt::format_sample_text(sample, None);
            let vector = provider.embed(&text)?;
            store.push(vector, Payload::Sample(sample.clone()))?;
        }
        Ok(store)
    }
}
