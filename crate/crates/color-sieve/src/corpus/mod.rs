//! Documents, byte-level tokenization, and fixed-length sequence chunking.
//!
//! Every downstream stage operates on [`TokenSequence`]s of one fixed length
//! `C`, so raw (unnormalized) sequence log-likelihoods are directly
//! comparable. Trailing partial chunks are dropped, never padded.

mod jsonl;
mod store;
mod synth;

pub use jsonl::{load_jsonl, read_jsonl, write_jsonl, JsonlReader};
pub use store::{read_seqs, write_seqs, SeqStore};
pub use synth::{gen_synth, structured_chains, SynthCorpora, SynthSpec, DOMAIN_LABELS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token id marking the beginning of a document in the byte-level vocabulary.
pub const BYTE_BOS: u32 = 256;

/// A raw document prior to tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    /// Ground-truth domain, known only for synthetic corpora.
    pub domain_label: Option<String>,
}

/// Vocabulary over token ids `[0, size)`. `bos` is the id used both as the
/// document-start marker and as left-context padding when scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub size: u32,
    pub bos: u32,
}

impl Vocab {
    /// 256 byte values plus one begin-of-sequence marker.
    pub const fn byte_level() -> Self {
        Vocab {
            size: 257,
            bos: BYTE_BOS,
        }
    }

    /// Tiny vocabulary for tests; the padding marker sits outside the
    /// predicted range so it never competes for probability mass.
    pub const fn toy(size: u32) -> Self {
        Vocab { size, bos: size }
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab::byte_level()
    }
}

/// Fixed-length window of token ids; the atomic unit of scoring and selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    /// `"{doc_id}:{chunk_index:05}"`; unique corpus-wide.
    pub seq_id: String,
    pub tokens: Vec<u32>,
    pub source_domain: Option<String>,
}

/// Byte-level tokenization: `[BOS] ++ UTF-8 bytes`. Pure and reversible.
pub fn tokenize(text: &str) -> Vec<u32> {
    let mut out = Vec::with_capacity(1 + text.len());
    out.push(BYTE_BOS);
    out.extend(text.bytes().map(u32::from));
    out
}

/// Inverse of [`tokenize`] up to BOS markers.
pub fn detokenize(tokens: &[u32]) -> Result<String> {
    let mut bytes = Vec::with_capacity(tokens.len());
    for &t in tokens {
        if t == BYTE_BOS {
            continue;
        }
        let b = u8::try_from(t)
            .map_err(|_| Error::InvalidParam(format!("token id {t} is not a byte")))?;
        bytes.push(b);
    }
    String::from_utf8(bytes)
        .map_err(|e| Error::InvalidParam(format!("token stream is not valid UTF-8: {e}")))
}

/// Splits `tokens` into consecutive non-overlapping windows of exactly `c`
/// tokens. A final window shorter than `c` is dropped.
pub fn chunk(tokens: &[u32], c: usize) -> Result<Vec<Vec<u32>>> {
    if c < 2 {
        return Err(Error::InvalidParam(format!(
            "context length must be >= 2, got {c}"
        )));
    }
    Ok(tokens.chunks_exact(c).map(|w| w.to_vec()).collect())
}

/// Tokenizes and chunks one document. Chunk ids are zero-padded so that
/// lexicographic seq_id order matches (doc, chunk) order.
pub fn chunk_document(doc: &Document, c: usize) -> Result<Vec<TokenSequence>> {
    let tokens = tokenize(&doc.text);
    let windows = chunk(&tokens, c)?;
    Ok(windows
        .into_iter()
        .enumerate()
        .map(|(i, tokens)| TokenSequence {
            seq_id: format!("{}:{:05}", doc.doc_id, i),
            tokens,
            source_domain: doc.domain_label.clone(),
        })
        .collect())
}

/// Tokenizes and chunks a corpus in parallel. Output order is
/// (document order, chunk index) regardless of scheduling.
pub fn chunk_corpus(docs: &[Document], c: usize) -> Result<Vec<TokenSequence>> {
    if c < 2 {
        return Err(Error::InvalidParam(format!(
            "context length must be >= 2, got {c}"
        )));
    }
    let per_doc: Result<Vec<Vec<TokenSequence>>> =
        docs.par_iter().map(|d| chunk_document(d, c)).collect();
    Ok(per_doc?.into_iter().flatten().collect())
}
