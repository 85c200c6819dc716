//! Automatic metrics on a 0-100 scale.
//!
//! BLEU, ROUGE-L and METEOR run over the shared lowercase word tokenizer;
//! chrF works on raw characters with whitespace removed.

mod bertscore;
mod bleu;
mod chrf;
mod meteor;
pub mod porter;
mod rouge;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ContextRecord;
use crate::generation::GeneratedQuestion;

pub use bertscore::{bertscore, bertscore_greedy, HashedTokenEmbedder, TokenEmbedder, DEFAULT_HASH_DIM};
pub use bleu::{bleu4, sentence_bleu4, MAX_ORDER, SENTENCE_EPSILON};
pub use chrf::{chrf, chrf_with_beta, DEFAULT_BETA, MAX_CHAR_ORDER};
pub use meteor::{align, meteor, meteor_from_counts, Alignment};
pub use rouge::rouge_l;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("no pairs to score")]
    EmptyInput,
    #[error("question for record {record_id:?} has no gold record")]
    UnknownRecord { record_id: String },
    #[error("embedding matrix is empty")]
    EmptyMatrix,
    #[error("{side} row {row} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        side: &'static str,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{side} row {row} has zero norm")]
    ZeroRow { side: &'static str, row: usize },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    Bleu4,
    Bleu4Sentence,
    RougeL,
    Meteor,
    Chrf,
    BertScore,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Bleu4,
        MetricKind::Bleu4Sentence,
        MetricKind::RougeL,
        MetricKind::Meteor,
        MetricKind::Chrf,
        MetricKind::BertScore,
    ];

    /// Columns of the automatic-evaluation table, in display order.
    pub const TABLE: [MetricKind; 5] = [
        MetricKind::Bleu4,
        MetricKind::RougeL,
        MetricKind::Meteor,
        MetricKind::Chrf,
        MetricKind::BertScore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Bleu4 => "BLEU-4",
            MetricKind::Bleu4Sentence => "BLEU-4-sent",
            MetricKind::RougeL => "ROUGE-L",
            MetricKind::Meteor => "METEOR",
            MetricKind::Chrf => "ChRF",
            MetricKind::BertScore => "BERTScore",
        }
    }

    /// The per-item metric whose samples stand in for this one in t-tests.
    /// Corpus BLEU has no per-item value, so smoothed sentence BLEU is used.
    pub fn item_metric(self) -> MetricKind {
        match self {
            MetricKind::Bleu4 => MetricKind::Bleu4Sentence,
            other => other,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| MetricError::UnknownMetric(s.to_string()))
    }
}

/// A metric value plus its components (precisions, recalls, penalties).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricScore {
    pub metric: MetricKind,
    pub value: f64,
    pub detail: BTreeMap<String, f64>,
}

impl MetricScore {
    pub fn new(metric: MetricKind, value: f64, detail: BTreeMap<String, f64>) -> Self {
        MetricScore {
            metric,
            value: value.clamp(0.0, 100.0),
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPair {
    pub candidate: String,
    pub reference: String,
}

impl EvalPair {
    pub fn new(candidate: impl Into<String>, reference: impl Into<String>) -> Self {
        EvalPair {
            candidate: candidate.into(),
            reference: reference.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemScore {
    pub record_id: String,
    pub metric: MetricKind,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct CorpusEvaluation {
    /// One score per metric in `MetricKind::ALL` order.
    pub summary: Vec<MetricScore>,
    /// Per-item scores, grouped by record in input order.
    pub items: Vec<ItemScore>,
}

impl CorpusEvaluation {
    pub fn value(&self, metric: MetricKind) -> Option<f64> {
        self.summary.iter().find(|s| s.metric == metric).map(|s| s.value)
    }
}

/// Item values for one metric, in file order.
pub fn item_values(items: &[ItemScore], metric: MetricKind) -> Vec<f64> {
    items.iter().filter(|i| i.metric == metric).map(|i| i.value).collect()
}

fn per_item(pair: &EvalPair, embedder: &dyn TokenEmbedder) -> Result<[MetricScore; 5], MetricError> {
    Ok([
        sentence_bleu4(pair),
        rouge_l(pair),
        meteor(pair),
        chrf(pair),
        bertscore(pair, embedder)?,
    ])
}

/// Scores generated questions against their gold questions.
///
/// BLEU-4 is pooled over the corpus; the others are macro-averaged.
pub fn evaluate_corpus(
    questions: &[GeneratedQuestion],
    gold: &[ContextRecord],
    embedder: &dyn TokenEmbedder,
) -> Result<CorpusEvaluation, MetricError> {
    if questions.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let by_id: HashMap<&str, &ContextRecord> = gold.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut pairs = Vec::with_capacity(questions.len());
    for q in questions {
        let record = by_id
            .get(q.record_id.as_str())
            .ok_or_else(|| MetricError::UnknownRecord {
                record_id: q.record_id.clone(),
            })?;
        pairs.push(EvalPair::new(q.question_text.clone(), record.question.clone()));
    }

    let mut items = Vec::with_capacity(pairs.len() * 5);
    let mut sums: BTreeMap<MetricKind, f64> = BTreeMap::new();
    for (q, pair) in questions.iter().zip(&pairs) {
        for score in per_item(pair, embedder)? {
            *sums.entry(score.metric).or_insert(0.0) += score.value;
            items.push(ItemScore {
                record_id: q.record_id.clone(),
                metric: score.metric,
                value: score.value,
            });
        }
    }
    let n = pairs.len() as f64;
    let mut summary = vec![bleu4(&pairs)?];
    summary.extend(sums.into_iter().map(|(metric, total)| {
        let mut detail = BTreeMap::new();
        detail.insert("items".into(), n);
        MetricScore::new(metric, total / n, detail)
    }));
    summary.sort_by_key(|s| s.metric);
    Ok(CorpusEvaluation { summary, items })
}

pub fn write_items_csv<W: Write>(out: W, items: &[ItemScore]) -> Result<(), MetricError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| MetricError::Io(e.into());
    w.write_record(["record_id", "metric", "value"]).map_err(io)?;
    for item in items {
        w.write_record([
            item.record_id.as_str(),
            item.metric.name(),
            &format!("{:.6}", item.value),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, summary: &[MetricScore]) -> Result<(), MetricError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| MetricError::Io(e.into());
    w.write_record(["metric", "value"]).map_err(io)?;
    for s in summary {
        w.write_record([s.metric.name(), &format!("{:.6}", s.value)])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read>(input: R, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>, MetricError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let csv_err = |row: usize, e: csv::Error| MetricError::Csv {
        row,
        message: e.to_string(),
    };
    let found = r.headers().map_err(|e| csv_err(1, e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(MetricError::Csv {
            row: 1,
            message: format!("expected header {}", header.join(",")),
        });
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| rec.map(|rec| (i + 2, rec)).map_err(|e| csv_err(i + 2, e)))
        .collect()
}

fn parse_value(row: usize, raw: &str) -> Result<f64, MetricError> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| MetricError::Csv {
            row,
            message: format!("invalid value {raw:?}"),
        })
}

fn parse_metric(row: usize, raw: &str) -> Result<MetricKind, MetricError> {
    raw.parse().map_err(|_| MetricError::Csv {
        row,
        message: format!("unknown metric {raw:?}"),
    })
}

pub fn read_items_csv<R: Read>(input: R) -> Result<Vec<ItemScore>, MetricError> {
    read_rows(input, &["record_id", "metric", "value"])?
        .into_iter()
        .map(|(row, rec)| {
            Ok(ItemScore {
                record_id: rec[0].to_string(),
                metric: parse_metric(row, &rec[1])?,
                value: parse_value(row, &rec[2])?,
            })
        })
        .collect()
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<(MetricKind, f64)>, MetricError> {
    read_rows(input, &["metric", "value"])?
        .into_iter()
        .map(|(row, rec)| Ok((parse_metric(row, &rec[0])?, parse_value(row, &rec[1])?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Subject;
    use crate::prompting::Method;

    fn record(id: &str, q: &str) -> ContextRecord {
        ContextRecord {
            id: id.into(),
            context: "Some passage.".into(),
            question: q.into(),
            subject: Subject::History,
        }
    }

    fn question(id: &str, text: &str) -> GeneratedQuestion {
        GeneratedQuestion::for_test(id, Method::Baseline, text)
    }

    #[test]
    fn identical_corpus_scores_100() {
        let gold = vec![record("a", "What is PPP?"), record("b", "Who ruled Delhi in 1200?")];
        let qs = vec![question("a", "What is PPP?"), question("b", "Who ruled Delhi in 1200?")];
        let eval = evaluate_corpus(&qs, &gold, &HashedTokenEmbedder::default()).unwrap();
        for k in [
            MetricKind::Bleu4,
            MetricKind::RougeL,
            MetricKind::Chrf,
            MetricKind::BertScore,
        ] {
            assert!((eval.value(k).unwrap() - 100.0).abs() < 1e-9, "{k}");
        }
        assert_eq!(eval.items.len(), 10);
    }

    #[test]
    fn macro_average_and_single_pair_bleu() {
        let gold = vec![record("a", "a c b d"), record("b", "x y")];
        let qs = vec![question("a", "a b c d"), question("b", "x y")];
        let eval = evaluate_corpus(&qs, &gold, &HashedTokenEmbedder::default()).unwrap();
        assert!((eval.value(MetricKind::RougeL).unwrap() - 87.5).abs() < 1e-12);

        let gold = vec![record("a", "the cat sat on the mat")];
        let qs = vec![question("a", "the cat sat on mat")];
        let eval = evaluate_corpus(&qs, &gold, &HashedTokenEmbedder::default()).unwrap();
        let single = bleu4(&[EvalPair::new("the cat sat on mat", "the cat sat on the mat")]).unwrap();
        assert_eq!(eval.value(MetricKind::Bleu4).unwrap(), single.value);
    }

    #[test]
    fn unknown_record_is_error() {
        let err = evaluate_corpus(
            &[question("zz", "q")],
            &[record("a", "q")],
            &HashedTokenEmbedder::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("zz"));
    }

    #[test]
    fn csv_round_trip() {
        let items = vec![
            ItemScore {
                record_id: "r,1".into(),
                metric: MetricKind::RougeL,
                value: 75.0,
            },
            ItemScore {
                record_id: "r2".into(),
                metric: MetricKind::BertScore,
                value: 12.5,
            },
        ];
        let mut buf = Vec::new();
        write_items_csv(&mut buf, &items).unwrap();
        assert_eq!(read_items_csv(buf.as_slice()).unwrap(), items);

        let bad = "metric,value\nROUGE-L,12\nBLEU-9,3\n";
        let err = read_summary_csv(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn metric_names_parse() {
        for k in MetricKind::ALL {
            assert_eq!(k.name().parse::<MetricKind>().unwrap(), k);
        }
    }
}
