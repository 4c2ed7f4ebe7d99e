use serde::{Deserialize, Serialize};

use super::IngestError;

/// Fixed-stride character chunking: windows of `size` characters advancing
/// by `size - overlap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPolicy {
    pub size: usize,
    pub overlap: usize,
}

impl Default for ChunkPolicy {
    fn default() -> Self {
        ChunkPolicy {
            size: 1600,
            overlap: 200,
        }
    }
}

impl ChunkPolicy {
    pub fn new(size: usize, overlap: usize) -> Result<Self, IngestError> {
        let policy = ChunkPolicy { size, overlap };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.size == 0 || self.overlap >= self.size {
            return Err(IngestError::InvalidPolicy {
                size: self.size,
                overlap: self.overlap,
            });
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.size - self.overlap
    }
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChunkSpan {
    pub start: usize,
    pub end: usize,
}

impl ChunkSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Spans for a text of `len` characters. Stops at the first span reaching `len`.
pub fn chunk_spans(len: usize, policy: ChunkPolicy) -> Result<Vec<ChunkSpan>, IngestError> {
    policy.validate()?;
    let mut spans = Vec::with_capacity(len / policy.stride() + 1);
    let mut start = 0;
    while start < len {
        let end = (start + policy.size).min(len);
        spans.push(ChunkSpan { start, end });
        if end == len {
            break;
        }
        start += policy.stride();
    }
    Ok(spans)
}

/// Chunks `text` by character offsets.
pub fn chunk_text(text: &str, policy: ChunkPolicy) -> Result<Vec<ChunkSpan>, IngestError> {
    chunk_spans(text.chars().count(), policy)
}

/// Maps character offsets of one text to byte offsets.
pub struct CharOffsets<'a> {
    text: &'a str,
    bytes: Vec<usize>,
}

impl<'a> CharOffsets<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        CharOffsets { text, bytes }
    }

    pub fn char_len(&self) -> usize {
        self.bytes.len() - 1
    }

    pub fn slice(&self, span: ChunkSpan) -> &'a str {
        &self.text[self.bytes[span.start]..self.bytes[span.end]]
    }
}
