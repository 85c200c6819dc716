use std::collections::{BTreeMap, HashMap};

use super::{EvalPair, MetricError, MetricKind, MetricScore};
use crate::text::tokenize;

pub const MAX_ORDER: usize = 4;
/// Numerator used for zero-match orders in smoothed sentence BLEU.
pub const SENTENCE_EPSILON: f64 = 0.1;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped matches and candidate n-gram totals for orders 1..=4.
struct Stats {
    matches: [usize; MAX_ORDER],
    totals: [usize; MAX_ORDER],
    cand_len: usize,
    ref_len: usize,
}

fn pair_stats(pair: &EvalPair) -> Stats {
    let cand = tokenize(&pair.candidate);
    let reference = tokenize(&pair.reference);
    let mut matches = [0; MAX_ORDER];
    let mut totals = [0; MAX_ORDER];
    for n in 1..=MAX_ORDER {
        let c = ngram_counts(&cand, n);
        let r = ngram_counts(&reference, n);
        matches[n - 1] = c
            .iter()
            .map(|(gram, &count)| count.min(r.get(gram).copied().unwrap_or(0)))
            .sum();
        totals[n - 1] = cand.len().saturating_sub(n - 1);
    }
    Stats {
        matches,
        totals,
        cand_len: cand.len(),
        ref_len: reference.len(),
    }
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len == 0 {
        0.0
    } else if cand_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    }
}

/// Corpus BLEU-4: clipped counts pooled over all pairs, no smoothing.
pub fn bleu4(pairs: &[EvalPair]) -> Result<MetricScore, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut matches = [0usize; MAX_ORDER];
    let mut totals = [0usize; MAX_ORDER];
    let (mut c, mut r) = (0, 0);
    for pair in pairs {
        let s = pair_stats(pair);
        for n in 0..MAX_ORDER {
            matches[n] += s.matches[n];
            totals[n] += s.totals[n];
        }
        c += s.cand_len;
        r += s.ref_len;
    }
    let mut detail = BTreeMap::new();
    let mut log_sum = 0.0;
    let mut zero = false;
    for n in 0..MAX_ORDER {
        let p = if totals[n] == 0 {
            0.0
        } else {
            matches[n] as f64 / totals[n] as f64
        };
        detail.insert(format!("p{}", n + 1), p);
        if p == 0.0 {
            zero = true;
        } else {
            log_sum += p.ln() / MAX_ORDER as f64;
        }
    }
    let bp = brevity_penalty(c, r);
    detail.insert("bp".into(), bp);
    detail.insert("cand_len".into(), c as f64);
    detail.insert("ref_len".into(), r as f64);
    let value = if zero { 0.0 } else { 100.0 * bp * log_sum.exp() };
    Ok(MetricScore::new(MetricKind::Bleu4, value, detail))
}

/// Sentence-level BLEU-4 with add-epsilon smoothing for orders that have
/// candidate n-grams but no matches. Orders the candidate is too short to
/// contain are left out of the geometric mean; no unigram match scores 0.
pub fn sentence_bleu4(pair: &EvalPair) -> MetricScore {
    let s = pair_stats(pair);
    let mut detail = BTreeMap::new();
    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 0..MAX_ORDER {
        if s.totals[n] == 0 {
            continue;
        }
        let numerator = if s.matches[n] == 0 {
            SENTENCE_EPSILON
        } else {
            s.matches[n] as f64
        };
        let p = numerator / s.totals[n] as f64;
        detail.insert(format!("p{}", n + 1), p);
        log_sum += p.ln();
        orders += 1;
    }
    let bp = brevity_penalty(s.cand_len, s.ref_len);
    detail.insert("bp".into(), bp);
    let value = if orders == 0 || s.matches[0] == 0 {
        0.0
    } else {
        100.0 * bp * (log_sum / orders as f64).exp()
    };
    MetricScore::new(MetricKind::Bleu4Sentence, value, detail)
}
