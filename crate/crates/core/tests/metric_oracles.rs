mod common;

use aqg_core::metrics::{bleu4, chrf, chrf_with_beta, meteor, rouge_l, sentence_bleu4, EvalPair, MetricScore};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pairs(seed: u64, count: usize) -> Vec<EvalPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| EvalPair::new(random_text(&mut rng, 12), random_text(&mut rng, 12)))
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

#[test]
fn sentence_bleu_matches_enumeration() {
    for p in pairs(1, 500) {
        let got = sentence_bleu4(&p).value;
        let want = naive_sentence_bleu(&p.candidate, &p.reference);
        assert!(close(got, want), "{p:?}: {got} vs {want}");
    }
}

#[test]
fn corpus_bleu_matches_enumeration() {
    let ps = pairs(2, 60);
    for chunk in ps.chunks(6) {
        let got = bleu4(chunk).unwrap().value;
        let raw: Vec<(String, String)> = chunk
            .iter()
            .map(|p| (p.candidate.clone(), p.reference.clone()))
            .collect();
        let want = naive_corpus_bleu(&raw);
        assert!(close(got, want), "{got} vs {want}");
    }
}

#[test]
fn rouge_matches_subsequence_search() {
    for p in pairs(3, 500) {
        let got = rouge_l(&p).value;
        let want = naive_rouge_l(&p.candidate, &p.reference);
        assert!(close(got, want), "{p:?}: {got} vs {want}");
    }
}

#[test]
fn meteor_matches_exhaustive_alignment() {
    for p in pairs(4, 500) {
        let got = meteor(&p).value;
        let want = naive_meteor(&p.candidate, &p.reference);
        assert!(close(got, want), "{p:?}: {got} vs {want}");
    }
}

#[test]
fn chrf_matches_enumeration() {
    for p in pairs(5, 500) {
        let got = chrf(&p).value;
        let want = naive_chrf(&p.candidate, &p.reference, 2.0);
        assert!(close(got, want), "{p:?}: {got} vs {want}");
        let got1 = chrf_with_beta(&p, 1.0).value;
        assert!(close(got1, naive_chrf(&p.candidate, &p.reference, 1.0)));
    }
}

#[test]
fn identity_scores_100() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let x = random_text(&mut rng, 12);
        let p = EvalPair::new(x.clone(), x);
        let mut scores = vec![rouge_l(&p), chrf(&p)];
        // corpus BLEU needs at least one 4-gram
        if aqg_core::text::tokenize(&p.candidate).len() >= 4 {
            scores.push(bleu4(std::slice::from_ref(&p)).unwrap());
        }
        for s in scores {
            assert!(close(s.value, 100.0), "{:?} {p:?}", s.metric);
        }
    }
}

#[test]
fn disjoint_inputs_score_0() {
    let left = ["alpha", "beta", "gamma", "delta"];
    let right = ["one", "two", "three", "four"];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    use rand::seq::SliceRandom;
    use rand::Rng;
    for _ in 0..200 {
        let a: Vec<&str> = (0..rng.gen_range(1..8))
            .map(|_| *left.choose(&mut rng).unwrap())
            .collect();
        let b: Vec<&str> = (0..rng.gen_range(1..8))
            .map(|_| *right.choose(&mut rng).unwrap())
            .collect();
        let p = EvalPair::new(a.join(" "), b.join(" "));
        assert_eq!(bleu4(std::slice::from_ref(&p)).unwrap().value, 0.0);
        assert_eq!(rouge_l(&p).value, 0.0);
        assert_eq!(meteor(&p).value, 0.0);
    }
    // character-disjoint
    for _ in 0..200 {
        let a: String = (0..rng.gen_range(1..10)).map(|_| rng.gen_range('a'..='m')).collect();
        let b: String = (0..rng.gen_range(1..10)).map(|_| rng.gen_range('n'..='z')).collect();
        assert_eq!(chrf(&EvalPair::new(a, b)).value, 0.0);
    }
}

fn all_scores(p: &EvalPair) -> Vec<MetricScore> {
    vec![
        bleu4(std::slice::from_ref(p)).unwrap(),
        sentence_bleu4(p),
        rouge_l(p),
        meteor(p),
        chrf(p),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn values_stay_in_range(a in "[a-zA-Z ,?]{0,40}", b in "[a-zA-Z ,?]{0,40}") {
        for s in all_scores(&EvalPair::new(a.clone(), b.clone())) {
            prop_assert!((0.0..=100.0).contains(&s.value), "{:?} = {}", s.metric, s.value);
        }
    }

    #[test]
    fn extra_whitespace_is_ignored(words in prop::collection::vec("[a-z]{1,6}", 1..8), b in "[a-z ]{1,30}") {
        let tight = words.join(" ");
        let loose = format!("  {}  ", words.join("   "));
        let x = all_scores(&EvalPair::new(tight, b.clone()));
        let y = all_scores(&EvalPair::new(loose, b));
        for (s, t) in x.iter().zip(&y) {
            prop_assert_eq!(s.value, t.value);
        }
    }

    #[test]
    fn rouge_self_is_upper_bound(x in prop::collection::vec("[a-e]{1,3}", 1..10), y in prop::collection::vec("[a-e]{1,3}", 1..10)) {
        let x = x.join(" ");
        let y = y.join(" ");
        let own = rouge_l(&EvalPair::new(x.clone(), x.clone())).value;
        prop_assert_eq!(own, 100.0);
        prop_assert!(rouge_l(&EvalPair::new(y, x)).value <= own);
    }

    #[test]
    fn chrf_swap(a in "[a-d]{1,12}", b in "[a-d]{1,12}") {
        let ab = chrf(&EvalPair::new(a.clone(), b.clone()));
        let ba = chrf(&EvalPair::new(b.clone(), a.clone()));
        prop_assert_eq!(ab.detail["p_mean"], ba.detail["r_mean"]);
        prop_assert_eq!(ab.detail["r_mean"], ba.detail["p_mean"]);
        let ab1 = chrf_with_beta(&EvalPair::new(a.clone(), b.clone()), 1.0).value;
        let ba1 = chrf_with_beta(&EvalPair::new(b, a), 1.0).value;
        prop_assert!((ab1 - ba1).abs() < 1e-12);
    }
}
