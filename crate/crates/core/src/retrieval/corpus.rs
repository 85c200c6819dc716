use std::fs;
use std::path::{Path, PathBuf};

use super::{CorpusDoc, RetrievalError};
use crate::text::{collapse_whitespace, token_count};

pub const MAX_CHUNK_TOKENS: usize = 200;

/// Splits at `.`, `!` or `?` followed by whitespace; the terminator stays with its sentence.
fn sentences(block: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = block.char_indices().peekable();
    while let Some((_, ch)) = chars.next() {
        if !matches!(ch, '.' | '!' | '?') {
            continue;
        }
        if let Some(&(j, next)) = chars.peek() {
            if next.is_whitespace() {
                out.push(block[start..j].trim());
                start = j;
            }
        }
    }
    let tail = block[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out.retain(|s| !s.is_empty());
    out
}

/// Word-level split for a single sentence longer than the limit.
fn split_words(sentence: &str, max_tokens: usize, out: &mut Vec<String>) {
    let mut current: Vec<&str> = Vec::new();
    let mut current_tokens = 0;
    for word in sentence.split_whitespace() {
        let n = token_count(word);
        if current_tokens + n > max_tokens && !current.is_empty() {
            out.push(current.join(" "));
            current.clear();
            current_tokens = 0;
        }
        current.push(word);
        current_tokens += n;
    }
    if !current.is_empty() {
        out.push(current.join(" "));
    }
}

/// Splits text into blank-line-separated blocks, each at most `max_tokens`
/// tokens; longer blocks are packed sentence by sentence.
pub fn chunk_text(text: &str, max_tokens: usize) -> Vec<Vec<String>> {
    let mut blocks: Vec<String> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(collapse_whitespace(&current.join(" ")));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        blocks.push(collapse_whitespace(&current.join(" ")));
    }

    blocks
        .into_iter()
        .map(|block| {
            if token_count(&block) <= max_tokens {
                return vec![block];
            }
            let mut parts = Vec::new();
            let mut current = String::new();
            let mut current_tokens = 0;
            for sentence in sentences(&block) {
                let n = token_count(sentence);
                if current_tokens + n > max_tokens && !current.is_empty() {
                    parts.push(std::mem::take(&mut current));
                    current_tokens = 0;
                }
                if n > max_tokens {
                    split_words(sentence, max_tokens, &mut parts);
                    continue;
                }
                if !current.is_empty() {
                    current.push(' ');
                }
                current.push_str(sentence);
                current_tokens += n;
            }
            if !current.is_empty() {
                parts.push(current);
            }
            parts
        })
        .collect()
}

fn collect_txt(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_txt(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "txt") {
            out.push(path);
        }
    }
    Ok(())
}

/// Reads every `*.txt` under `dir` (recursively, in path order) into chunked documents.
///
/// Document ids are `<relative path>#<block>` or `<relative path>#<block>.<part>`
/// when a block had to be split.
pub fn load_corpus_dir(dir: &Path, max_tokens: usize) -> Result<Vec<CorpusDoc>, RetrievalError> {
    let mut files = Vec::new();
    collect_txt(dir, &mut files)?;
    files.sort();
    let mut docs = Vec::new();
    for file in files {
        let rel = file
            .strip_prefix(dir)
            .unwrap_or(&file)
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        let text = fs::read_to_string(&file)?;
        for (b, parts) in chunk_text(&text, max_tokens).into_iter().enumerate() {
            let split = parts.len() > 1;
            for (p, part) in parts.into_iter().enumerate() {
                let doc_id = if split {
                    format!("{rel}#{}.{}", b + 1, p + 1)
                } else {
                    format!("{rel}#{}", b + 1)
                };
                docs.push(CorpusDoc {
                    doc_id,
                    text: part,
                    source: rel.clone(),
                });
            }
        }
    }
    if docs.is_empty() {
        return Err(RetrievalError::EmptyCorpus(dir.display().to_string()));
    }
    Ok(docs)
}
