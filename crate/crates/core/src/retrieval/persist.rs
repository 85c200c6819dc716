//! Line-based index file.
//!
//! ```text
//! AQG-BM25-INDEX v1
//! params <k1> <b>
//! docs <n>
//! <length>\t<json CorpusDoc>        (n lines, sorted by doc id)
//! terms <m>
//! <term>\t<pos>:<tf> <pos>:<tf> ...  (m lines, sorted by term)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::bm25::{Bm25Params, LexicalIndex};
use super::{CorpusDoc, RetrievalError};

pub const INDEX_MAGIC: &str = "AQG-BM25-INDEX v1";

pub fn write_index<W: Write>(index: &LexicalIndex, mut out: W) -> Result<(), RetrievalError> {
    writeln!(out, "{INDEX_MAGIC}")?;
    writeln!(out, "params {} {}", index.params.k1, index.params.b)?;
    writeln!(out, "docs {}", index.docs.len())?;
    for (doc, len) in index.docs.iter().zip(&index.doc_lengths) {
        let json = serde_json::to_string(doc).map_err(|e| RetrievalError::Format(e.to_string()))?;
        writeln!(out, "{len}\t{json}")?;
    }
    writeln!(out, "terms {}", index.postings.len())?;
    for (term, list) in &index.postings {
        let entries: Vec<String> = list.iter().map(|(p, tf)| format!("{p}:{tf}")).collect();
        writeln!(out, "{term}\t{}", entries.join(" "))?;
    }
    Ok(())
}

fn format_err(line: usize, msg: impl std::fmt::Display) -> RetrievalError {
    RetrievalError::Format(format!("line {line}: {msg}"))
}

fn header_count(line: Option<(usize, String)>, key: &str) -> Result<(usize, usize), RetrievalError> {
    let (no, text) = line.ok_or_else(|| RetrievalError::Format(format!("missing `{key}` header")))?;
    let value = text
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| format_err(no, format!("expected `{key} <count>`")))?;
    let n = value.trim().parse().map_err(|e| format_err(no, e))?;
    Ok((no, n))
}

pub fn read_index<R: BufRead>(input: R) -> Result<LexicalIndex, RetrievalError> {
    let mut lines = input.lines().enumerate().map(|(i, l)| l.map(|l| (i + 1, l)));
    let mut next = || lines.next().transpose();

    match next()? {
        Some((_, magic)) if magic == INDEX_MAGIC => {}
        _ => return Err(RetrievalError::Format("not an index file (bad magic header)".into())),
    }
    let (no, params_line) = next()?.ok_or_else(|| RetrievalError::Format("missing params".into()))?;
    let fields: Vec<&str> = params_line.split(' ').collect();
    let params = match fields.as_slice() {
        ["params", k1, b] => Bm25Params {
            k1: k1.parse().map_err(|e| format_err(no, e))?,
            b: b.parse().map_err(|e| format_err(no, e))?,
        },
        _ => return Err(format_err(no, "expected `params <k1> <b>`")),
    };

    let (_, n_docs) = header_count(next()?, "docs")?;
    let mut docs: Vec<CorpusDoc> = Vec::with_capacity(n_docs);
    let mut doc_lengths = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let (no, line) = next()?.ok_or_else(|| RetrievalError::Format("truncated doc section".into()))?;
        let (len, json) = line.split_once('\t').ok_or_else(|| format_err(no, "expected tab"))?;
        doc_lengths.push(len.parse::<u32>().map_err(|e| format_err(no, e))?);
        let doc: CorpusDoc = serde_json::from_str(json).map_err(|e| format_err(no, e))?;
        if docs.last().is_some_and(|prev| prev.doc_id >= doc.doc_id) {
            return Err(format_err(no, "documents not strictly sorted by id"));
        }
        docs.push(doc);
    }

    let (_, n_terms) = header_count(next()?, "terms")?;
    let mut postings = BTreeMap::new();
    for _ in 0..n_terms {
        let (no, line) = next()?.ok_or_else(|| RetrievalError::Format("truncated term section".into()))?;
        let (term, rest) = line.split_once('\t').ok_or_else(|| format_err(no, "expected tab"))?;
        let mut list = Vec::new();
        for entry in rest.split(' ') {
            let (p, tf) = entry.split_once(':').ok_or_else(|| format_err(no, "expected pos:tf"))?;
            let p: u32 = p.parse().map_err(|e| format_err(no, e))?;
            let tf: u32 = tf.parse().map_err(|e| format_err(no, e))?;
            if p as usize >= docs.len() || tf == 0 {
                return Err(format_err(no, "posting out of range"));
            }
            list.push((p, tf));
        }
        postings.insert(term.to_string(), list);
    }
    if let Some((no, _)) = next()? {
        return Err(format_err(no, "trailing data"));
    }
    Ok(LexicalIndex::from_parts(params, docs, doc_lengths, postings))
}

pub fn save_index(index: &LexicalIndex, path: &Path) -> Result<(), RetrievalError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut buf = Vec::new();
    write_index(index, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<LexicalIndex, RetrievalError> {
    read_index(BufReader::new(fs::File::open(path)?))
}
