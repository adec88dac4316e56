//! Sliding-window document chunking over characters.

use serde::{Deserialize, Serialize};

use super::StoreError;

/// A contiguous span of one source document, addressed in characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentChunk {
    pub source: String,
    pub text: String,
    pub start_char: usize,
    pub end_char: usize,
}

/// Splits documents into chunks of `chunk_size` characters advancing by
/// `chunk_size - overlap`, so consecutive chunks of one document share
/// exactly `overlap` characters (the last chunk is clipped to the text end).
/// Chunks cover the full text; a document shorter than `chunk_size` yields a
/// single chunk equal to the text. Empty documents yield no chunks.
pub fn chunk_documents(
    documents: &[(String, String)],
    chunk_size: usize,
    overlap: usize,
) -> Result<Vec<DocumentChunk>, StoreError> {
    if chunk_size == 0 || overlap >= chunk_size {
        return Err(StoreError::InvalidChunkParams(format!(
            "require chunk_size > overlap >= 0, got chunk_size {chunk_size}, overlap {overlap}"
        )));
    }
    let step = chunk_size - overlap;
    let mut chunks = Vec::new();
    for (source, text) in documents {
        let chars: Vec<char> = text.chars().collect();
        if chars.is_empty() {
            continue;
        }
        let mut start = 0usize;
        loop {
            let end = (start + chunk_size).min(chars.len());
            chunks.push(DocumentChunk {
                source: source.clone(),
                text: chars[start..end].iter().collect(),
                start_char: start,
                end_char: end,
            });
            if end == chars.len() {
                break;
            }
            start += step;
        }
    }
    Ok(chunks)
}
