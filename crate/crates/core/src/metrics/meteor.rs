use std::collections::{BTreeMap, HashMap};

use super::porter::stem;
use super::{EvalPair, MetricKind, MetricScore};
use crate::text::tokenize;

pub const ALPHA: f64 = 0.9;
pub const GAMMA: f64 = 0.5;
pub const BETA: f64 = 3.0;

/// Upper bound on search nodes per pair. Short questions never come close.
const NODE_BUDGET: u64 = 2_000_000;

/// Result of aligning a candidate against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    pub exact: usize,
    pub matches: usize,
    pub chunks: usize,
}

fn intern(tokens: &[String], table: &mut HashMap<String, usize>) -> Vec<usize> {
    tokens
        .iter()
        .map(|t| {
            let next = table.len();
            *table.entry(t.clone()).or_insert(next)
        })
        .collect()
}

struct Search {
    c_word: Vec<usize>,
    c_stem: Vec<usize>,
    r_word: Vec<usize>,
    r_stem: Vec<usize>,
    word_stem: Vec<usize>,
    used: Vec<bool>,
    need_exact: Vec<usize>,
    need_total: Vec<usize>,
    rem_c_word: Vec<usize>,
    rem_c_stem: Vec<usize>,
    free_r_word: Vec<usize>,
    free_r_stem: Vec<usize>,
    best: usize,
    nodes: u64,
}

impl Search {
    /// Can the outstanding match requirements still be met?
    fn feasible(&self) -> bool {
        let mut exact_in_class = vec![0; self.need_total.len()];
        for (w, &need) in self.need_exact.iter().enumerate() {
            if need > self.rem_c_word[w].min(self.free_r_word[w]) {
                return false;
            }
            exact_in_class[self.word_stem[w]] += need;
        }
        self.need_total
            .iter()
            .enumerate()
            .all(|(s, &need)| need >= exact_in_class[s] && need <= self.rem_c_stem[s].min(self.free_r_stem[s]))
    }

    fn take(&mut self, j: usize, exact: bool, sign_take: bool) {
        let (w, s) = (self.r_word[j], self.r_stem[j]);
        if sign_take {
            self.used[j] = true;
            self.free_r_word[w] -= 1;
            self.free_r_stem[s] -= 1;
            self.need_total[s] -= 1;
            if exact {
                self.need_exact[w] -= 1;
            }
        } else {
            self.used[j] = false;
            self.free_r_word[w] += 1;
            self.free_r_stem[s] += 1;
            self.need_total[s] += 1;
            if exact {
                self.need_exact[w] += 1;
            }
        }
    }

    fn dfs(&mut self, i: usize, prev: Option<usize>, chunks: usize) {
        if self.nodes >= NODE_BUDGET || self.best <= 1 || chunks >= self.best {
            return;
        }
        self.nodes += 1;
        if !self.feasible() {
            return;
        }
        if i == self.c_word.len() {
            self.best = chunks;
            return;
        }
        let (cw, cs) = (self.c_word[i], self.c_stem[i]);
        self.rem_c_word[cw] -= 1;
        self.rem_c_stem[cs] -= 1;

        let diagonal = prev.map(|p| p + 1).filter(|&j| j < self.r_word.len());
        let order = diagonal
            .into_iter()
            .chain((0..self.r_word.len()).filter(|&j| Some(j) != diagonal));
        for j in order.collect::<Vec<_>>() {
            if self.used[j] || self.r_stem[j] != cs || self.need_total[cs] == 0 {
                continue;
            }
            let exact = self.r_word[j] == cw;
            if exact && self.need_exact[cw] == 0 {
                continue;
            }
            let next_chunks = if Some(j) == diagonal { chunks } else { chunks + 1 };
            self.take(j, exact, true);
            self.dfs(i + 1, Some(j), next_chunks);
            self.take(j, exact, false);
        }
        self.dfs(i + 1, None, chunks);

        self.rem_c_word[cw] += 1;
        self.rem_c_stem[cs] += 1;
    }
}

/// Two-stage unigram alignment: the largest number of exact matches, then
/// the largest number of stem matches among the rest, then the fewest chunks.
pub fn align(candidate: &[String], reference: &[String]) -> Alignment {
    let mut words = HashMap::new();
    let c_word = intern(candidate, &mut words);
    let r_word = intern(reference, &mut words);
    let mut word_list = vec![String::new(); words.len()];
    for (w, &id) in &words {
        word_list[id] = w.clone();
    }
    let mut stems = HashMap::new();
    let stem_tokens: Vec<String> = word_list.iter().map(|w| stem(w)).collect();
    let word_stem = intern(&stem_tokens, &mut stems);
    let c_stem: Vec<usize> = c_word.iter().map(|&w| word_stem[w]).collect();
    let r_stem: Vec<usize> = r_word.iter().map(|&w| word_stem[w]).collect();

    let count = |ids: &[usize], n: usize| {
        let mut v = vec![0usize; n];
        for &id in ids {
            v[id] += 1;
        }
        v
    };
    let cw = count(&c_word, words.len());
    let rw = count(&r_word, words.len());
    let cs = count(&c_stem, stems.len());
    let rs = count(&r_stem, stems.len());
    let need_exact: Vec<usize> = cw.iter().zip(&rw).map(|(a, b)| *a.min(b)).collect();
    let need_total: Vec<usize> = cs.iter().zip(&rs).map(|(a, b)| *a.min(b)).collect();
    let exact = need_exact.iter().sum();
    let matches = need_total.iter().sum();
    if matches == 0 {
        return Alignment {
            exact: 0,
            matches: 0,
            chunks: 0,
        };
    }

    let mut search = Search {
        used: vec![false; r_word.len()],
        c_word,
        c_stem,
        r_word,
        r_stem,
        word_stem,
        need_exact,
        need_total,
        rem_c_word: cw,
        rem_c_stem: cs,
        free_r_word: rw,
        free_r_stem: rs,
        best: usize::MAX,
        nodes: 0,
    };
    search.dfs(0, None, 0);
    let chunks = if search.best == usize::MAX {
        log::warn!("alignment search budget exhausted; assuming one chunk per match");
        matches
    } else {
        if search.nodes >= NODE_BUDGET {
            log::warn!("alignment search budget exhausted; chunk count may be above minimum");
        }
        search.best
    };
    Alignment { exact, matches, chunks }
}

/// Score from match and chunk counts.
pub fn meteor_from_counts(matches: usize, chunks: usize, cand_len: usize, ref_len: usize) -> f64 {
    if matches == 0 {
        return 0.0;
    }
    let p = matches as f64 / cand_len as f64;
    let r = matches as f64 / ref_len as f64;
    let fmean = p * r / (ALPHA * p + (1.0 - ALPHA) * r);
    let penalty = GAMMA * (chunks as f64 / matches as f64).powf(BETA);
    100.0 * fmean * (1.0 - penalty)
}

/// METEOR with exact and Porter-stem matching stages (no synonym stage).
pub fn meteor(pair: &EvalPair) -> MetricScore {
    let cand = tokenize(&pair.candidate);
    let reference = tokenize(&pair.reference);
    let a = align(&cand, &reference);
    let mut detail = BTreeMap::new();
    detail.insert("m".into(), a.matches as f64);
    detail.insert("exact".into(), a.exact as f64);
    detail.insert("chunks".into(), a.chunks as f64);
    let penalty = if a.matches == 0 {
        0.0
    } else {
        GAMMA * (a.chunks as f64 / a.matches as f64).powf(BETA)
    };
    detail.insert("penalty".into(), penalty);
    let value = meteor_from_counts(a.matches, a.chunks, cand.len(), reference.len());
    MetricScore::new(MetricKind::Meteor, value, detail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn worked_values() {
        let s = meteor(&EvalPair::new("the cat sat", "the cat sat"));
        assert_eq!(s.detail["chunks"], 1.0);
        assert!((s.value - 100.0 * (1.0 - 0.5 / 27.0)).abs() < 1e-12);
        assert!((s.value - 98.15).abs() < 0.01);

        let s = meteor(&EvalPair::new("sat the cat", "the cat sat"));
        assert_eq!(s.detail["chunks"], 2.0);
        assert!((s.detail["penalty"] - 0.148).abs() < 1e-3);
        assert!((s.value - 85.2).abs() < 0.05);

        assert_eq!(meteor(&EvalPair::new("x y", "a b")).value, 0.0);
    }

    #[test]
    fn stem_stage() {
        let a = align(&toks("running questions"), &toks("questions run"));
        assert_eq!(
            a,
            Alignment {
                exact: 1,
                matches: 2,
                chunks: 2
            }
        );
    }

    #[test]
    fn exact_matches_take_priority_over_chunks() {
        // pairing "runs" with "runs" is exact; the stem-only option would give
        // a single chunk but fewer exact matches
        let a = align(&toks("run runs"), &toks("runs run"));
        assert_eq!(a.exact, 2);
        assert_eq!(a.chunks, 2);
    }

    #[test]
    fn repeated_words_pick_fewest_chunks() {
        let a = align(&toks("the cat the dog"), &toks("the dog the cat"));
        assert_eq!(a.matches, 4);
        assert_eq!(a.chunks, 2);
    }
}
