//! The original Porter (1980) suffix-stripping stemmer for lowercase English words.
//!
//! Words of one or two letters and words with non-ASCII-lowercase characters
//! are returned unchanged.

pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w = word.as_bytes().to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5(&mut w);
    String::from_utf8(w).expect("ascii input")
}

fn is_cons(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(w, i - 1),
        _ => true,
    }
}

/// Number of vowel-consonant sequences, the m in [C](VC)^m[V].
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let cons = is_cons(w, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_cons(w, i))
}

fn ends_double_cons(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1)
}

/// consonant-vowel-consonant ending, final consonant not w, x or y
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3 && is_cons(w, n - 1) && !is_cons(w, n - 2) && is_cons(w, n - 3) && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

/// Length of the stem left after removing `suffix`, if `w` ends with it.
fn stem_len(w: &[u8], suffix: &str) -> Option<usize> {
    w.ends_with(suffix.as_bytes()).then(|| w.len() - suffix.len())
}

fn replace_tail(w: &mut Vec<u8>, stem: usize, with: &str) {
    w.truncate(stem);
    w.extend_from_slice(with.as_bytes());
}

fn step1a(w: &mut Vec<u8>) {
    if let Some(s) = stem_len(w, "sses") {
        replace_tail(w, s, "ss");
    } else if let Some(s) = stem_len(w, "ies") {
        replace_tail(w, s, "i");
    } else if w.ends_with(b"s") && !w.ends_with(b"ss") {
        w.pop();
    }
}

fn step1b(w: &mut Vec<u8>) {
    if let Some(s) = stem_len(w, "eed") {
        if measure(&w[..s]) > 0 {
            replace_tail(w, s, "ee");
        }
        return;
    }
    let stripped = ["ed", "ing"]
        .iter()
        .find_map(|suf| stem_len(w, suf).filter(|&s| has_vowel(&w[..s])));
    let Some(s) = stripped else { return };
    w.truncate(s);
    if w.ends_with(b"at") || w.ends_with(b"bl") || w.ends_with(b"iz") {
        w.push(b'e');
    } else if ends_double_cons(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.pop();
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut [u8]) {
    if let Some(s) = stem_len(w, "y") {
        if has_vowel(&w[..s]) {
            w[s] = b'i';
        }
    }
}

/// The first rule whose suffix matches decides; it fires only if the
/// remaining stem has m > 0.
fn apply_rules(w: &mut Vec<u8>, rules: &[(&str, &str)]) {
    for (suffix, replacement) in rules {
        if let Some(s) = stem_len(w, suffix) {
            if measure(&w[..s]) > 0 {
                replace_tail(w, s, replacement);
            }
            return;
        }
    }
}

fn step2(w: &mut Vec<u8>) {
    apply_rules(
        w,
        &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("bli", "ble"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
            ("logi", "log"),
        ],
    );
}

fn step3(w: &mut Vec<u8>) {
    apply_rules(
        w,
        &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ],
    );
}

fn step4(w: &mut Vec<u8>) {
    const SUFFIXES: [&str; 19] = [
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "ou", "ism", "ate",
        "iti", "ous", "ive", "ize",
    ];
    for suffix in SUFFIXES {
        let Some(s) = stem_len(w, suffix) else { continue };
        if suffix == "ion" && !(s > 0 && matches!(w[s - 1], b's' | b't')) {
            return;
        }
        if measure(&w[..s]) > 1 {
            w.truncate(s);
        }
        return;
    }
}

fn step5(w: &mut Vec<u8>) {
    if w.ends_with(b"e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
    if w.ends_with(b"ll") && measure(w) > 1 {
        w.pop();
    }
}
