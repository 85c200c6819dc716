use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{rank_order, CorpusDoc, RetrievalError, RetrievedDoc, Retriever};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.5, b: 0.75 }
    }
}

/// Inverted index over a corpus.
///
/// Documents are stored sorted by id, so two indexes built from the same
/// documents in any order are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalIndex {
    pub(super) params: Bm25Params,
    pub(super) docs: Vec<CorpusDoc>,
    pub(super) doc_lengths: Vec<u32>,
    /// term -> (position in `docs`, term frequency), positions ascending
    pub(super) postings: BTreeMap<String, Vec<(u32, u32)>>,
    pub(super) positions: HashMap<String, usize>,
    pub(super) avg_doc_length: f64,
}

impl LexicalIndex {
    pub(super) fn from_parts(
        params: Bm25Params,
        docs: Vec<CorpusDoc>,
        doc_lengths: Vec<u32>,
        postings: BTreeMap<String, Vec<(u32, u32)>>,
    ) -> Self {
        let positions = docs.iter().enumerate().map(|(i, d)| (d.doc_id.clone(), i)).collect();
        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            doc_lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / doc_lengths.len() as f64
        };
        Self {
            params,
            docs,
            doc_lengths,
            postings,
            positions,
            avg_doc_length,
        }
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn docs(&self) -> &[CorpusDoc] {
        &self.docs
    }

    pub fn doc(&self, doc_id: &str) -> Option<&CorpusDoc> {
        self.positions.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.positions.get(doc_id).map(|&i| self.doc_lengths[i])
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    /// Postings for `term` as (doc id, term frequency).
    pub fn postings(&self, term: &str) -> Vec<(&str, u32)> {
        self.postings
            .get(term)
            .map(|list| {
                list.iter()
                    .map(|&(pos, tf)| (self.docs[pos as usize].doc_id.as_str(), tf))
                    .collect()
            })
            .unwrap_or_default()
    }

    fn idf(&self, doc_freq: usize) -> f64 {
        let n = self.docs.len() as f64;
        let df = doc_freq as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_frequency(&self, term: &str, pos: u32) -> Option<(u32, usize)> {
        let list = self.postings.get(term)?;
        list.binary_search_by_key(&pos, |&(p, _)| p)
            .ok()
            .map(|i| (list[i].1, list.len()))
    }

    /// Terms are visited in the given order; callers dedupe and sort first.
    fn score_position(&self, terms: &[&str], pos: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let dl = f64::from(self.doc_lengths[pos as usize]);
        let norm = if self.avg_doc_length > 0.0 {
            1.0 - b + b * dl / self.avg_doc_length
        } else {
            1.0
        };
        let mut score = 0.0;
        for term in terms {
            if let Some((tf, df)) = self.term_frequency(term, pos) {
                let tf = f64::from(tf);
                score += self.idf(df) * tf * (k1 + 1.0) / (tf + k1 * norm);
            }
        }
        score
    }
}

fn distinct_terms<S: AsRef<str>>(terms: &[S]) -> Vec<&str> {
    terms
        .iter()
        .map(AsRef::as_ref)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn build_index(docs: Vec<CorpusDoc>) -> Result<LexicalIndex, RetrievalError> {
    build_index_with(docs, Bm25Params::default())
}

pub fn build_index_with(mut docs: Vec<CorpusDoc>, params: Bm25Params) -> Result<LexicalIndex, RetrievalError> {
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    if let Some(pair) = docs.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
        return Err(RetrievalError::DuplicateDoc(pair[0].doc_id.clone()));
    }
    let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(docs.len());
    for (pos, doc) in docs.iter().enumerate() {
        let tokens = tokenize(&doc.text);
        doc_lengths.push(tokens.len() as u32);
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for token in tokens {
            *counts.entry(token).or_default() += 1;
        }
        for (term, tf) in counts {
            postings.entry(term).or_default().push((pos as u32, tf));
        }
    }
    Ok(LexicalIndex::from_parts(params, docs, doc_lengths, postings))
}

/// Okapi BM25 of one document for a bag of query terms (duplicates count once).
pub fn bm25_score<S: AsRef<str>>(index: &LexicalIndex, query_terms: &[S], doc_id: &str) -> Result<f64, RetrievalError> {
    let pos = *index
        .positions
        .get(doc_id)
        .ok_or_else(|| RetrievalError::UnknownDoc(doc_id.to_string()))?;
    Ok(index.score_position(&distinct_terms(query_terms), pos as u32))
}

/// Top-`k` documents for `passage`. Documents scoring 0 are left out.
pub fn retrieve(index: &LexicalIndex, passage: &str, k: usize) -> Result<Vec<RetrievedDoc>, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    let tokens = tokenize(passage);
    let terms = distinct_terms(&tokens);
    let candidates: BTreeSet<u32> = terms
        .iter()
        .filter_map(|t| index.postings.get(*t))
        .flat_map(|list| list.iter().map(|&(pos, _)| pos))
        .collect();
    let mut scored: Vec<(u32, f64)> = candidates
        .into_iter()
        .map(|pos| (pos, index.score_position(&terms, pos)))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    scored.sort_by(|a, b| {
        rank_order(
            (&index.docs[a.0 as usize].doc_id, a.1),
            (&index.docs[b.0 as usize].doc_id, b.1),
        )
    });
    Ok(scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (pos, score))| RetrievedDoc {
            doc: index.docs[pos as usize].clone(),
            score,
            rank: i + 1,
        })
        .collect())
}

impl Retriever for LexicalIndex {
    fn retrieve(&self, passage: &str, k: usize) -> Result<Vec<RetrievedDoc>, RetrievalError> {
        retrieve(self, passage, k)
    }
}
