use std::collections::BTreeMap;

use super::{EvalPair, MetricKind, MetricScore};
use crate::text::tokenize;

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Sentence-level ROUGE-L F1 over tokens.
pub fn rouge_l(pair: &EvalPair) -> MetricScore {
    let cand = tokenize(&pair.candidate);
    let reference = tokenize(&pair.reference);
    let lcs = lcs_len(&cand, &reference);
    let mut detail = BTreeMap::new();
    detail.insert("lcs".into(), lcs as f64);
    if lcs == 0 {
        detail.insert("p".into(), 0.0);
        detail.insert("r".into(), 0.0);
        return MetricScore::new(MetricKind::RougeL, 0.0, detail);
    }
    let p = lcs as f64 / cand.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    detail.insert("p".into(), p);
    detail.insert("r".into(), r);
    MetricScore::new(MetricKind::RougeL, 100.0 * 2.0 * p * r / (p + r), detail)
}
