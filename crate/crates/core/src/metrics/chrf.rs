use std::collections::{BTreeMap, HashMap};

use super::{EvalPair, MetricKind, MetricScore};

pub const MAX_CHAR_ORDER: usize = 6;
pub const DEFAULT_BETA: f64 = 2.0;

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for gram in chars.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// chrF with the default recall weight.
pub fn chrf(pair: &EvalPair) -> MetricScore {
    chrf_with_beta(pair, DEFAULT_BETA)
}

/// Character n-gram F-score over orders 1..=6 with whitespace removed.
///
/// Precision is averaged over the orders for which the candidate has n-grams,
/// recall over the orders for which the reference has them.
pub fn chrf_with_beta(pair: &EvalPair, beta: f64) -> MetricScore {
    let cand: Vec<char> = pair.candidate.chars().filter(|c| !c.is_whitespace()).collect();
    let reference: Vec<char> = pair.reference.chars().filter(|c| !c.is_whitespace()).collect();
    let mut detail = BTreeMap::new();
    let mut precisions = Vec::new();
    let mut recalls = Vec::new();
    for n in 1..=MAX_CHAR_ORDER {
        let c = char_ngrams(&cand, n);
        let r = char_ngrams(&reference, n);
        let matches: usize = c
            .iter()
            .map(|(gram, &count)| count.min(r.get(gram).copied().unwrap_or(0)))
            .sum();
        let c_total = cand.len().saturating_sub(n - 1);
        let r_total = reference.len().saturating_sub(n - 1);
        if c_total > 0 {
            let p = matches as f64 / c_total as f64;
            detail.insert(format!("p{n}"), p);
            precisions.push(p);
        }
        if r_total > 0 {
            let r = matches as f64 / r_total as f64;
            detail.insert(format!("r{n}"), r);
            recalls.push(r);
        }
    }
    let p = mean(&precisions);
    let r = mean(&recalls);
    detail.insert("p_mean".into(), p);
    detail.insert("r_mean".into(), r);
    let b2 = beta * beta;
    let denom = b2 * p + r;
    let value = if denom > 0.0 {
        100.0 * (1.0 + b2) * p * r / denom
    } else {
        0.0
    };
    MetricScore::new(MetricKind::Chrf, value, detail)
}
