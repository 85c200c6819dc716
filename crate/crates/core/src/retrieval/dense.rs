use std::collections::HashSet;

use super::{rank_order, CorpusDoc, RetrievalError, RetrievedDoc, Retriever};

/// Maps a passage to a fixed-dimension vector.
pub trait TextEmbedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError>;
}

/// Exhaustive cosine search over stored document vectors.
#[derive(Debug, Clone)]
pub struct DenseIndex {
    docs: Vec<CorpusDoc>,
    /// unit-normalised copies of the input vectors
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl DenseIndex {
    pub fn new(entries: Vec<(CorpusDoc, Vec<f64>)>) -> Result<Self, RetrievalError> {
        let dim = entries.first().map_or(0, |(_, v)| v.len());
        if !entries.is_empty() && dim == 0 {
            return Err(RetrievalError::EmptyVector);
        }
        let mut seen = HashSet::new();
        let mut docs = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len());
        for (doc, v) in entries {
            if !seen.insert(doc.doc_id.clone()) {
                return Err(RetrievalError::DuplicateDoc(doc.doc_id));
            }
            if v.len() != dim {
                return Err(RetrievalError::DimensionMismatch {
                    id: doc.doc_id,
                    expected: dim,
                    found: v.len(),
                });
            }
            let n = norm(&v);
            if n == 0.0 || !n.is_finite() {
                return Err(RetrievalError::ZeroNorm(doc.doc_id));
            }
            vectors.push(v.iter().map(|x| x / n).collect());
            docs.push(doc);
        }
        Ok(Self { docs, vectors, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// Top-`k` documents by cosine similarity to `query`, ties by ascending doc id.
pub fn dense_retrieve(index: &DenseIndex, query: &[f64], k: usize) -> Result<Vec<RetrievedDoc>, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    if index.is_empty() {
        return Ok(Vec::new());
    }
    if query.len() != index.dim {
        return Err(RetrievalError::DimensionMismatch {
            id: "<query>".into(),
            expected: index.dim,
            found: query.len(),
        });
    }
    let qn = norm(query);
    if qn == 0.0 || !qn.is_finite() {
        return Err(RetrievalError::ZeroNorm("<query>".into()));
    }
    let mut scored: Vec<(usize, f64)> = index
        .vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let dot: f64 = v.iter().zip(query).map(|(a, b)| a * b).sum();
            (i, dot / qn)
        })
        .collect();
    scored.sort_by(|a, b| rank_order((&index.docs[a.0].doc_id, a.1), (&index.docs[b.0].doc_id, b.1)));
    Ok(scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(rank, (i, score))| RetrievedDoc {
            doc: index.docs[i].clone(),
            score,
            rank: rank + 1,
        })
        .collect())
}

/// A dense index paired with the embedder used to encode queries.
pub struct EmbeddingRetriever<E> {
    pub index: DenseIndex,
    pub embedder: E,
}

impl<E: TextEmbedder> Retriever for EmbeddingRetriever<E> {
    fn retrieve(&self, passage: &str, k: usize) -> Result<Vec<RetrievedDoc>, RetrievalError> {
        let query = self.embedder.embed(passage)?;
        dense_retrieve(&self.index, &query, k)
    }
}
