//! Naive reference implementations and random input generators shared by the
//! integration and acceptance tests. Everything here favours obviousness over
//! speed.
#![allow(dead_code)]

use aqg_core::metrics::porter::stem;
use aqg_core::text::tokenize;
use rand::seq::SliceRandom;
use rand::Rng;

/// Small vocabulary with several words per Porter stem so that both exact and
/// stem matches show up often.
pub const VOCAB: &[&str] = &[
    "the",
    "a",
    "of",
    "river",
    "rivers",
    "run",
    "runs",
    "running",
    "trade",
    "trades",
    "trading",
    "power",
    "powers",
    "city",
    "cities",
    "rule",
    "ruled",
    "ruling",
    "question",
    "questions",
];

pub fn random_tokens<R: Rng>(rng: &mut R, max_len: usize) -> Vec<String> {
    let n = rng.gen_range(1..=max_len);
    (0..n).map(|_| VOCAB.choose(rng).unwrap().to_string()).collect()
}

/// Joins tokens with irregular spacing, occasional capitals and punctuation.
pub fn render_text<R: Rng>(rng: &mut R, tokens: &[String]) -> String {
    let mut out = String::new();
    if rng.gen_bool(0.2) {
        out.push(' ');
    }
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push_str(if rng.gen_bool(0.2) { "  " } else { " " });
        }
        if rng.gen_bool(0.15) {
            let mut cs = t.chars();
            let first = cs.next().unwrap().to_ascii_uppercase();
            out.push(first);
            out.extend(cs);
        } else {
            out.push_str(t);
        }
        if rng.gen_bool(0.1) {
            out.push(',');
        }
    }
    if rng.gen_bool(0.5) {
        out.push('?');
    }
    out
}

pub fn random_text<R: Rng>(rng: &mut R, max_len: usize) -> String {
    let toks = random_tokens(rng, max_len);
    render_text(rng, &toks)
}

fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
}

fn occurrences<T: PartialEq>(items: &[T], x: &T) -> usize {
    items.iter().filter(|y| *y == x).count()
}

fn clipped_matches<T: PartialEq>(cand: &[T], reference: &[T]) -> usize {
    let mut seen: Vec<&T> = Vec::new();
    let mut total = 0;
    for g in cand {
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        total += occurrences(cand, g).min(occurrences(reference, g));
    }
    total
}

/// Sentence BLEU-4 with epsilon 0.1 on zero-match orders, orders without
/// candidate n-grams dropped, zero when no unigram matches.
pub fn naive_sentence_bleu(candidate: &str, reference: &str) -> f64 {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    let mut logs = Vec::new();
    for n in 1..=4 {
        let cg = ngrams(&c, n);
        if cg.is_empty() {
            continue;
        }
        let m = clipped_matches(&cg, &ngrams(&r, n));
        if n == 1 && m == 0 {
            return 0.0;
        }
        let p = if m == 0 { 0.1 } else { m as f64 } / cg.len() as f64;
        logs.push(p.ln());
    }
    if logs.is_empty() {
        return 0.0;
    }
    let bp = if c.len() >= r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    };
    100.0 * bp * (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

/// Corpus BLEU-4 by direct enumeration, no smoothing.
pub fn naive_corpus_bleu(pairs: &[(String, String)]) -> f64 {
    let mut m = [0usize; 4];
    let mut t = [0usize; 4];
    let (mut cl, mut rl) = (0, 0);
    for (cand, reference) in pairs {
        let c = tokenize(cand);
        let r = tokenize(reference);
        cl += c.len();
        rl += r.len();
        for n in 1..=4 {
            let cg = ngrams(&c, n);
            m[n - 1] += clipped_matches(&cg, &ngrams(&r, n));
            t[n - 1] += cg.len();
        }
    }
    if cl == 0 || (0..4).any(|i| m[i] == 0) {
        return 0.0;
    }
    let bp = if cl >= rl {
        1.0
    } else {
        (1.0 - rl as f64 / cl as f64).exp()
    };
    let logmean: f64 = (0..4).map(|i| (m[i] as f64 / t[i] as f64).ln()).sum::<f64>() / 4.0;
    100.0 * bp * logmean.exp()
}

fn is_subsequence(needle: &[&String], hay: &[String]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|y| y == *x))
}

/// LCS by checking every subsequence of the candidate.
pub fn naive_lcs(c: &[String], r: &[String]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << c.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let sub: Vec<&String> = (0..c.len()).filter(|i| mask & (1 << i) != 0).map(|i| &c[i]).collect();
        if is_subsequence(&sub, r) {
            best = size;
        }
    }
    best
}

pub fn naive_rouge_l(candidate: &str, reference: &str) -> f64 {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    let l = naive_lcs(&c, &r);
    if l == 0 {
        return 0.0;
    }
    let p = l as f64 / c.len() as f64;
    let rec = l as f64 / r.len() as f64;
    100.0 * 2.0 * p * rec / (p + rec)
}

/// (exact matches, total matches, chunks) for the best alignment found by
/// trying every injective partial map between stem-compatible positions.
pub fn naive_alignment(c: &[String], r: &[String]) -> (usize, usize, usize) {
    let cs: Vec<String> = c.iter().map(|w| stem(w)).collect();
    let rs: Vec<String> = r.iter().map(|w| stem(w)).collect();
    let mut map: Vec<Option<usize>> = vec![None; c.len()];
    let mut used = vec![false; r.len()];
    let mut best: Option<(usize, usize, usize)> = None;

    fn score(map: &[Option<usize>], c: &[String], r: &[String]) -> (usize, usize, usize) {
        let mut exact = 0;
        let mut total = 0;
        let mut chunks = 0;
        for (i, m) in map.iter().enumerate() {
            let Some(j) = *m else { continue };
            total += 1;
            if c[i] == r[j] {
                exact += 1;
            }
            let continues = i > 0 && j > 0 && map[i - 1] == Some(j - 1);
            if !continues {
                chunks += 1;
            }
        }
        (exact, total, chunks)
    }

    fn better(a: (usize, usize, usize), b: Option<(usize, usize, usize)>) -> bool {
        match b {
            None => true,
            Some(b) => (a.0, a.1, std::cmp::Reverse(a.2)) > (b.0, b.1, std::cmp::Reverse(b.2)),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        c: &[String],
        r: &[String],
        cs: &[String],
        rs: &[String],
        map: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut Option<(usize, usize, usize)>,
    ) {
        if i == c.len() {
            let s = score(map, c, r);
            if better(s, *best) {
                *best = Some(s);
            }
            return;
        }
        for j in 0..r.len() {
            if !used[j] && cs[i] == rs[j] {
                used[j] = true;
                map[i] = Some(j);
                go(i + 1, c, r, cs, rs, map, used, best);
                map[i] = None;
                used[j] = false;
            }
        }
        go(i + 1, c, r, cs, rs, map, used, best);
    }

    go(0, c, r, &cs, &rs, &mut map, &mut used, &mut best);
    best.unwrap()
}

pub fn naive_meteor(candidate: &str, reference: &str) -> f64 {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    let (_, m, chunks) = naive_alignment(&c, &r);
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / c.len() as f64;
    let rec = m as f64 / r.len() as f64;
    let fmean = 10.0 * p * rec / (rec + 9.0 * p);
    let pen = 0.5 * (chunks as f64 / m as f64).powi(3);
    100.0 * fmean * (1.0 - pen)
}

fn char_ngrams(chars: &[char], n: usize) -> Vec<String> {
    if chars.len() < n {
        return Vec::new();
    }
    (0..=chars.len() - n)
        .map(|i| chars[i..i + n].iter().collect())
        .collect()
}

pub fn naive_chrf(candidate: &str, reference: &str, beta: f64) -> f64 {
    let c: Vec<char> = candidate.chars().filter(|ch| !ch.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|ch| !ch.is_whitespace()).collect();
    let mut ps = Vec::new();
    let mut rs = Vec::new();
    for n in 1..=6 {
        let cg = char_ngrams(&c, n);
        let rg = char_ngrams(&r, n);
        let m = clipped_matches(&cg, &rg) as f64;
        if !cg.is_empty() {
            ps.push(m / cg.len() as f64);
        }
        if !rg.is_empty() {
            rs.push(m / rg.len() as f64);
        }
    }
    let avg = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let (p, rec) = (avg(&ps), avg(&rs));
    let b2 = beta * beta;
    if b2 * p + rec == 0.0 {
        0.0
    } else {
        100.0 * (1.0 + b2) * p * rec / (b2 * p + rec)
    }
}

/// BM25 over raw token lists: every document scored, zero scores dropped,
/// score descending then id ascending. Query terms count once each.
pub fn brute_bm25(docs: &[(String, Vec<String>)], query: &[String], k: usize) -> Vec<(String, f64)> {
    let (k1, b) = (1.5, 0.75);
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    let mut terms: Vec<&String> = Vec::new();
    for q in query {
        if !terms.contains(&q) {
            terms.push(q);
        }
    }
    let mut scored: Vec<(String, f64)> = docs
        .iter()
        .map(|(id, toks)| {
            let dl = toks.len() as f64;
            let s: f64 = terms
                .iter()
                .map(|t| {
                    let df = docs.iter().filter(|(_, d)| d.contains(t)).count() as f64;
                    let tf = occurrences(toks, *t) as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl))
                })
                .sum();
            (id.clone(), s)
        })
        .filter(|(_, s)| *s > 0.0)
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Exhaustive cosine ranking, score descending then id ascending.
pub fn brute_cosine(docs: &[(String, Vec<f64>)], query: &[f64], k: usize) -> Vec<(String, f64)> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let qn = norm(query);
    let mut scored: Vec<(String, f64)> = docs
        .iter()
        .map(|(id, v)| {
            let dot: f64 = v.iter().zip(query).map(|(a, b)| a * b).sum();
            (id.clone(), dot / (norm(v) * qn))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Fleiss's kappa straight from (item, score) rating pairs.
pub fn kappa_from_ratings(ratings: &[(usize, u8)], n_items: usize, n_raters: usize) -> f64 {
    let n = n_raters as f64;
    let mut p_bar = 0.0;
    for item in 0..n_items {
        let mut agree_pairs = 0.0;
        for cat in 1..=5u8 {
            let c = ratings.iter().filter(|(i, s)| *i == item && *s == cat).count() as f64;
            agree_pairs += c * (c - 1.0);
        }
        p_bar += agree_pairs / (n * (n - 1.0));
    }
    p_bar /= n_items as f64;
    let total = ratings.len() as f64;
    let pe: f64 = (1..=5u8)
        .map(|cat| {
            let p = ratings.iter().filter(|(_, s)| *s == cat).count() as f64 / total;
            p * p
        })
        .sum();
    (p_bar - pe) / (1.0 - pe)
}

/// Student t density.
pub fn t_pdf(x: f64, df: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// CDF by composite Simpson integration of the density from 0 to t.
pub fn t_cdf_quadrature(t: f64, df: f64) -> f64 {
    let steps = 20_000;
    let h = t / steps as f64;
    let mut sum = t_pdf(0.0, df) + t_pdf(t, df);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * t_pdf(i as f64 * h, df);
    }
    0.5 + sum * h / 3.0
}
