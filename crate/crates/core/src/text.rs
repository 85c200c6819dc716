//! Shared text normalization used by retrieval, prompting and the token-level metrics.

/// Lowercased runs of Unicode alphanumerics; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Number of tokens `tokenize` would produce, without allocating them.
pub fn token_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_token = false;
    for ch in text.chars() {
        let alnum = ch.is_alphanumeric();
        if alnum && !in_token {
            count += 1;
        }
        in_token = alnum;
    }
    count
}

/// Collapses every whitespace run (including newlines) into a single space.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
