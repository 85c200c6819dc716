//! Line-delimited passage/question records.
//!
//! Each non-blank line is a JSON object with `context`, `question`, and
//! optionally `id` and `subject`. Any other fields (for example the long and
//! short prompt columns of the original release) are ignored.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::hashing::content_hash;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{source_name}:{line}: malformed record: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{source_name}:{line}: missing field `{field}`")]
    MissingField {
        source_name: String,
        line: usize,
        field: &'static str,
    },
    #[error("{source_name}:{line}: field `{field}` is empty")]
    EmptyField {
        source_name: String,
        line: usize,
        field: &'static str,
    },
    #[error("{source_name}:{line}: duplicate id `{id}`")]
    DuplicateId {
        source_name: String,
        line: usize,
        id: String,
    },
    #[error("train and test splits share ids: {0:?}")]
    OverlappingSplits(Vec<String>),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subject {
    History,
    Geography,
    Economics,
    EnvironmentalStudies,
    Science,
    Other,
}

impl Subject {
    pub const ALL: [Subject; 6] = [
        Subject::History,
        Subject::Geography,
        Subject::Economics,
        Subject::EnvironmentalStudies,
        Subject::Science,
        Subject::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Subject::History => "History",
            Subject::Geography => "Geography",
            Subject::Economics => "Economics",
            Subject::EnvironmentalStudies => "EnvironmentalStudies",
            Subject::Science => "Science",
            Subject::Other => "Other",
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownSubject(pub String);

impl FromStr for Subject {
    type Err = UnknownSubject;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "history" => Ok(Subject::History),
            "geography" => Ok(Subject::Geography),
            "economics" => Ok(Subject::Economics),
            "environmentalstudies" | "evs" => Ok(Subject::EnvironmentalStudies),
            "science" => Ok(Subject::Science),
            "other" => Ok(Subject::Other),
            _ => Err(UnknownSubject(s.to_string())),
        }
    }
}

/// One dataset row: a passage and its gold question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRecord {
    pub id: String,
    pub context: String,
    pub question: String,
    pub subject: Subject,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    train: Vec<ContextRecord>,
    test: Vec<ContextRecord>,
}

impl DatasetSplit {
    pub fn new(train: Vec<ContextRecord>, test: Vec<ContextRecord>) -> Result<Self, DatasetError> {
        let train_ids: HashSet<&str> = train.iter().map(|r| r.id.as_str()).collect();
        let shared: Vec<String> = test
            .iter()
            .filter(|r| train_ids.contains(r.id.as_str()))
            .map(|r| r.id.clone())
            .collect();
        if !shared.is_empty() {
            return Err(DatasetError::OverlappingSplits(shared));
        }
        Ok(Self { train, test })
    }

    pub fn train(&self) -> &[ContextRecord] {
        &self.train
    }

    pub fn test(&self) -> &[ContextRecord] {
        &self.test
    }
}

fn required_text(
    obj: &serde_json::Map<String, Value>,
    field: &'static str,
    source_name: &str,
    line: usize,
) -> Result<String, DatasetError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(DatasetError::MissingField {
            source_name: source_name.to_string(),
            line,
            field,
        }),
        Some(Value::String(s)) if s.trim().is_empty() => Err(DatasetError::EmptyField {
            source_name: source_name.to_string(),
            line,
            field,
        }),
        Some(Value::String(s)) => Ok(s.trim().to_string()),
        Some(other) => Err(DatasetError::Malformed {
            source_name: source_name.to_string(),
            line,
            message: format!("field `{field}` must be a string, found {other}"),
        }),
    }
}

fn parse_line(raw: &str, source_name: &str, line: usize) -> Result<ContextRecord, DatasetError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| DatasetError::Malformed {
        source_name: source_name.to_string(),
        line,
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(DatasetError::Malformed {
            source_name: source_name.to_string(),
            line,
            message: "expected a JSON object".into(),
        });
    };
    let context = required_text(&obj, "context", source_name, line)?;
    let question = required_text(&obj, "question", source_name, line)?;
    let id = match obj.get("id") {
        None | Some(Value::Null) => format!("{source_name}:{line}"),
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        Some(Value::Number(n)) => n.to_string(),
        Some(other) => {
            return Err(DatasetError::Malformed {
                source_name: source_name.to_string(),
                line,
                message: format!("unusable id {other}"),
            })
        }
    };
    let subject = match obj.get("subject") {
        Some(Value::String(s)) => s.parse().unwrap_or_else(|UnknownSubject(raw)| {
            log::warn!("{source_name}:{line}: unknown subject {raw:?}, using Other");
            Subject::Other
        }),
        _ => Subject::Other,
    };
    Ok(ContextRecord {
        id,
        context,
        question,
        subject,
    })
}

/// Parses line-delimited records. Line numbers are 1-based and count blank lines.
pub fn parse_dataset<R: BufRead>(raw: R, source_name: &str) -> Result<Vec<ContextRecord>, DatasetError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| DatasetError::Malformed {
            source_name: source_name.to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record = parse_line(trimmed, source_name, line_no)?;
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId {
                source_name: source_name.to_string(),
                line: line_no,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_dataset(path: &Path) -> Result<Vec<ContextRecord>, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_dataset(io::BufReader::new(file), &name)
}

pub fn write_dataset<W: Write>(records: &[ContextRecord], mut out: W) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Per-subject counts; every subject is present, zero when absent.
pub fn dataset_stats(records: &[ContextRecord]) -> BTreeMap<Subject, usize> {
    let mut counts: BTreeMap<Subject, usize> = Subject::ALL.iter().map(|&s| (s, 0)).collect();
    for record in records {
        *counts.entry(record.subject).or_default() += 1;
    }
    counts
}

/// Stable fingerprint of a record list, recorded in run manifests.
pub fn dataset_fingerprint(records: &[ContextRecord]) -> String {
    content_hash(records.iter().flat_map(|r| {
        [
            r.id.as_bytes(),
            r.context.as_bytes(),
            r.question.as_bytes(),
            r.subject.as_str().as_bytes(),
        ]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Vec<ContextRecord>, DatasetError> {
        parse_dataset(text.as_bytes(), "mem")
    }

    #[test]
    fn single_line_maps_fields() {
        let records = parse(r#"{"context":"C","question":"Q","subject":"History"}"#).unwrap();
        assert_eq!(
            records,
            vec![ContextRecord {
                id: "mem:1".into(),
                context: "C".into(),
                question: "Q".into(),
                subject: Subject::History,
            }]
        );
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn missing_question_names_line_and_field() {
        let err = parse("{\"context\":\"a\",\"question\":\"b\"}\n{\"context\":\"C\"}").unwrap_err();
        match &err {
            DatasetError::MissingField { line, field, .. } => {
                assert_eq!(*line, 2);
                assert_eq!(*field, "question");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("mem:2"));
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        assert!(matches!(
            parse("{\"context\":\"a\",\"question\":\"b\"}\nnot json"),
            Err(DatasetError::Malformed { line: 2, .. })
        ));
        let dup =
            "{\"id\":\"x\",\"context\":\"a\",\"question\":\"b\"}\n{\"id\":\"x\",\"context\":\"c\",\"question\":\"d\"}";
        assert!(matches!(parse(dup), Err(DatasetError::DuplicateId { line: 2, .. })));
        assert!(matches!(
            parse("{\"context\":\"  \",\"question\":\"b\"}"),
            Err(DatasetError::EmptyField { field: "context", .. })
        ));
    }

    #[test]
    fn extra_fields_ignored_and_unknown_subject_is_other() {
        let r =
            parse(r#"{"id":7,"context":"c","question":"q","long_prompt":"x","short_prompt":"y","subject":"Civics"}"#)
                .unwrap();
        assert_eq!(r[0].id, "7");
        assert_eq!(r[0].subject, Subject::Other);
        let r = parse(r#"{"context":"c","question":"q","subject":"Environmental Studies"}"#).unwrap();
        assert_eq!(r[0].subject, Subject::EnvironmentalStudies);
    }

    #[test]
    fn stats_over_published_composition() {
        let composition = [
            (Subject::History, 858),
            (Subject::Geography, 861),
            (Subject::Economics, 802),
            (Subject::EnvironmentalStudies, 606),
            (Subject::Science, 375),
        ];
        let mut records = Vec::new();
        for (subject, n) in composition {
            for i in 0..n {
                records.push(ContextRecord {
                    id: format!("{subject}-{i}"),
                    context: "c".into(),
                    question: "q".into(),
                    subject,
                });
            }
        }
        let stats = dataset_stats(&records);
        for (subject, n) in composition {
            assert_eq!(stats[&subject], n);
        }
        assert_eq!(stats[&Subject::Other], 0);
        assert_eq!(stats.values().sum::<usize>(), 3502);
    }

    #[test]
    fn stats_edge_cases() {
        assert!(dataset_stats(&[]).values().all(|&c| c == 0));
        let two = parse(
            "{\"context\":\"a\",\"question\":\"b\",\"subject\":\"History\"}\n{\"context\":\"c\",\"question\":\"d\",\"subject\":\"History\"}",
        )
        .unwrap();
        assert_eq!(dataset_stats(&two)[&Subject::History], 2);
    }

    #[test]
    fn split_rejects_overlap() {
        let r = parse("{\"id\":\"a\",\"context\":\"c\",\"question\":\"q\"}").unwrap();
        assert!(DatasetSplit::new(r.clone(), r.clone()).is_err());
        assert!(DatasetSplit::new(r, vec![]).is_ok());
    }

    fn arb_record() -> impl Strategy<Value = (String, String, usize)> {
        ("[a-zA-Z0-9 ,.?é\"\\\\]{1,30}", "[a-zA-Z ?]{1,20}", 0usize..6)
    }

    proptest! {
        #[test]
        fn round_trip_and_totals(rows in proptest::collection::vec(arb_record(), 0..20)) {
            let records: Vec<ContextRecord> = rows
                .into_iter()
                .enumerate()
                .filter(|(_, (c, q, _))| !c.trim().is_empty() && !q.trim().is_empty())
                .map(|(i, (c, q, s))| ContextRecord {
                    id: format!("r{i}"),
                    context: c.trim().to_string(),
                    question: q.trim().to_string(),
                    subject: Subject::ALL[s],
                })
                .collect();
            let mut buf = Vec::new();
            write_dataset(&records, &mut buf).unwrap();
            let parsed = parse_dataset(buf.as_slice(), "rt").unwrap();
            prop_assert_eq!(&parsed, &records);
            let again = parse_dataset(buf.as_slice(), "rt").unwrap();
            prop_assert_eq!(&again, &parsed);
            prop_assert_eq!(dataset_stats(&records).values().sum::<usize>(), records.len());
        }
    }
}
