use std::collections::BTreeMap;

use super::{EvalPair, MetricError, MetricKind, MetricScore};
use crate::text::tokenize;

/// Source of per-token vectors for greedy-matching BERTScore.
pub trait TokenEmbedder: Send + Sync {
    fn id(&self) -> &str;
    fn embed_tokens(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, MetricError>;
}

/// Context-free embedder: counts of hashed character trigrams of `#token#`.
///
/// Vectors are non-negative, so cosines fall in [0, 1]. Identical tokens
/// get identical vectors; tokens sharing subwords get partial credit.
#[derive(Debug, Clone)]
pub struct HashedTokenEmbedder {
    dim: usize,
}

pub const DEFAULT_HASH_DIM: usize = 64;

impl HashedTokenEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedTokenEmbedder { dim }
    }
}

impl Default for HashedTokenEmbedder {
    fn default() -> Self {
        HashedTokenEmbedder::new(DEFAULT_HASH_DIM)
    }
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl TokenEmbedder for HashedTokenEmbedder {
    fn id(&self) -> &str {
        "hashed-trigram"
    }

    fn embed_tokens(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, MetricError> {
        Ok(tokens
            .iter()
            .map(|t| {
                let padded: Vec<char> = format!("#{t}#").chars().collect();
                let mut v = vec![0.0; self.dim];
                for tri in padded.windows(3) {
                    let gram: String = tri.iter().collect();
                    v[(fnv1a(gram.bytes()) % self.dim as u64) as usize] += 1.0;
                }
                v
            })
            .collect())
    }
}

fn normalized(rows: &[Vec<f64>], side: &'static str, dim: usize) -> Result<Vec<Vec<f64>>, MetricError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != dim {
                return Err(MetricError::DimensionMismatch {
                    side,
                    row: i,
                    expected: dim,
                    found: row.len(),
                });
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(MetricError::ZeroRow { side, row: i });
            }
            Ok(row.iter().map(|x| x / norm).collect())
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy-matching BERTScore over precomputed token vectors.
pub fn bertscore_greedy(cand: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<MetricScore, MetricError> {
    if cand.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyMatrix);
    }
    let dim = cand[0].len();
    let c = normalized(cand, "candidate", dim)?;
    let r = normalized(reference, "reference", dim)?;
    let best = |from: &[Vec<f64>], to: &[Vec<f64>]| {
        from.iter()
            .map(|x| to.iter().map(|y| dot(x, y)).fold(f64::NEG_INFINITY, f64::max))
            .sum::<f64>()
            / from.len() as f64
    };
    let p = best(&c, &r);
    let rec = best(&r, &c);
    let f1 = if p + rec > 0.0 { 2.0 * p * rec / (p + rec) } else { 0.0 };
    let mut detail = BTreeMap::new();
    detail.insert("p".into(), p);
    detail.insert("r".into(), rec);
    detail.insert("f1".into(), f1);
    Ok(MetricScore::new(MetricKind::BertScore, 100.0 * f1, detail))
}

/// Tokenizes and embeds both sides, then applies greedy matching. A side
/// with no tokens scores 0.
pub fn bertscore(pair: &EvalPair, embedder: &dyn TokenEmbedder) -> Result<MetricScore, MetricError> {
    let cand = tokenize(&pair.candidate);
    let reference = tokenize(&pair.reference);
    if cand.is_empty() || reference.is_empty() {
        return Ok(MetricScore::new(MetricKind::BertScore, 0.0, BTreeMap::new()));
    }
    bertscore_greedy(&embedder.embed_tokens(&cand)?, &embedder.embed_tokens(&reference)?)
}
