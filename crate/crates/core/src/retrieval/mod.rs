//! Document retrieval over an external corpus.
//!
//! The default backend is a lexical BM25 index. An exhaustive cosine backend
//! over caller-supplied vectors is available for dense embeddings. Both
//! implement [`Retriever`], which is all the pipelines depend on.

mod bm25;
mod corpus;
mod dense;
mod persist;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bm25::{bm25_score, build_index, build_index_with, retrieve, Bm25Params, LexicalIndex};
pub use corpus::{chunk_text, load_corpus_dir, MAX_CHUNK_TOKENS};
pub use dense::{dense_retrieve, DenseIndex, EmbeddingRetriever, TextEmbedder};
pub use persist::{load_index, read_index, save_index, write_index, INDEX_MAGIC};

pub use crate::text::tokenize;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("duplicate document id `{0}`")]
    DuplicateDoc(String),
    #[error("unknown document id `{0}`")]
    UnknownDoc(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("vector for `{id}` has dimension {found}, expected {expected}")]
    DimensionMismatch { id: String, expected: usize, found: usize },
    #[error("vector for `{0}` has zero norm")]
    ZeroNorm(String),
    #[error("vectors must have dimension > 0")]
    EmptyVector,
    #[error("no corpus documents found under {0}")]
    EmptyCorpus(String),
    #[error("index file: {0}")]
    Format(String),
    #[error("embedding failed: {0}")]
    Embedding(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDoc {
    pub doc_id: String,
    pub text: String,
    pub source: String,
}

/// A scored document; `rank` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedDoc {
    pub doc: CorpusDoc,
    pub score: f64,
    pub rank: usize,
}

pub trait Retriever: Send + Sync {
    fn retrieve(&self, passage: &str, k: usize) -> Result<Vec<RetrievedDoc>, RetrievalError>;
}

/// Score descending, then doc id ascending.
pub(crate) fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(b.0))
}
