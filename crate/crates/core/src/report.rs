//! Comparison tables with best-value marking and significance stars, plus
//! side-by-side sample sheets of generated questions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::ContextRecord;
use crate::generation::GeneratedQuestion;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("table has no columns")]
    EmptyColumns,
    #[error("table has no rows")]
    NoRows,
    #[error("duplicate column {0:?}")]
    DuplicateColumn(String),
    #[error("duplicate row {0:?}")]
    DuplicateRow(String),
    #[error("row {model:?}: {message}")]
    Ragged { model: String, message: String },
    #[error("significance mark for unknown cell ({model:?}, {column:?})")]
    UnknownCell { model: String, column: String },
    #[error("no {method} question for sampled record {record_id:?}")]
    MissingOutput { method: String, record_id: String },
    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("unknown output format {0:?}")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    Plain,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "plain" | "text" | "txt" => Ok(Format::Plain),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub model: String,
    /// one value per column, in column order
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
    /// (model, column) cells marked significant
    pub stars: BTreeSet<(String, String)>,
    /// column -> model holding its maximum (first row on ties)
    pub best: BTreeMap<String, String>,
    /// columns where more than one row shares the maximum
    pub ties: BTreeMap<String, Vec<String>>,
}

/// Assembles a table from per-model values and the set of starred cells.
pub fn build_table(
    columns: Vec<String>,
    rows: Vec<(String, BTreeMap<String, f64>)>,
    significance: &BTreeSet<(String, String)>,
) -> Result<ResultsTable, ReportError> {
    if columns.is_empty() {
        return Err(ReportError::EmptyColumns);
    }
    if rows.is_empty() {
        return Err(ReportError::NoRows);
    }
    let mut seen = BTreeSet::new();
    for c in &columns {
        if !seen.insert(c.as_str()) {
            return Err(ReportError::DuplicateColumn(c.clone()));
        }
    }
    let mut models = BTreeSet::new();
    let mut table_rows = Vec::with_capacity(rows.len());
    for (model, mut values) in rows {
        if !models.insert(model.clone()) {
            return Err(ReportError::DuplicateRow(model));
        }
        let mut ordered = Vec::with_capacity(columns.len());
        for c in &columns {
            let v = values.remove(c).ok_or_else(|| ReportError::Ragged {
                model: model.clone(),
                message: format!("missing column {c:?}"),
            })?;
            if !v.is_finite() {
                return Err(ReportError::Ragged {
                    model: model.clone(),
                    message: format!("non-finite value in column {c:?}"),
                });
            }
            ordered.push(v);
        }
        if let Some(extra) = values.keys().next() {
            return Err(ReportError::Ragged {
                model,
                message: format!("unexpected column {extra:?}"),
            });
        }
        table_rows.push(TableRow { model, values: ordered });
    }
    for (model, column) in significance {
        if !models.contains(model) || !seen.contains(column.as_str()) {
            return Err(ReportError::UnknownCell {
                model: model.clone(),
                column: column.clone(),
            });
        }
    }

    let mut best = BTreeMap::new();
    let mut ties = BTreeMap::new();
    for (ci, column) in columns.iter().enumerate() {
        let max = table_rows
            .iter()
            .map(|r| r.values[ci])
            .fold(f64::NEG_INFINITY, f64::max);
        let holders: Vec<String> = table_rows
            .iter()
            .filter(|r| r.values[ci] == max)
            .map(|r| r.model.clone())
            .collect();
        best.insert(column.clone(), holders[0].clone());
        if holders.len() > 1 {
            ties.insert(column.clone(), holders);
        }
    }
    Ok(ResultsTable {
        columns,
        rows: table_rows,
        stars: significance.clone(),
        best,
        ties,
    })
}

impl ResultsTable {
    fn is_best(&self, model: &str, column: &str) -> bool {
        self.best.get(column).is_some_and(|m| m == model)
    }

    fn is_starred(&self, model: &str, column: &str) -> bool {
        self.stars.contains(&(model.to_string(), column.to_string()))
    }

    pub fn value(&self, model: &str, column: &str) -> Option<f64> {
        let ci = self.columns.iter().position(|c| c == column)?;
        self.rows.iter().find(|r| r.model == model).map(|r| r.values[ci])
    }
}

pub fn render(table: &ResultsTable, format: Format) -> String {
    match format {
        Format::Markdown => render_markdown(table),
        Format::Csv => render_csv(table),
        Format::Plain => render_plain(table),
    }
}

fn escape_cell(text: &str) -> String {
    text.replace('|', "\\|")
}

fn tie_notes(table: &ResultsTable) -> Vec<String> {
    table
        .columns
        .iter()
        .filter_map(|c| table.ties.get_key_value(c))
        .map(|(column, models)| {
            format!(
                "Tie for best {column} between {}; the first row is marked.",
                models.join(", ")
            )
        })
        .collect()
}

/// Markdown table: best value per column in bold, starred cells with a
/// trailing `*`, values to two decimals.
pub fn render_markdown(table: &ResultsTable) -> String {
    let mut out = String::new();
    out.push_str("| Model |");
    for c in &table.columns {
        let _ = write!(out, " {} |", escape_cell(c));
    }
    out.push_str("\n|---|");
    for _ in &table.columns {
        out.push_str("---:|");
    }
    out.push('\n');
    for row in &table.rows {
        let _ = write!(out, "| {} |", escape_cell(&row.model));
        for (c, v) in table.columns.iter().zip(&row.values) {
            let mut cell = format!("{v:.2}");
            if table.is_best(&row.model, c) {
                cell = format!("**{cell}**");
            }
            if table.is_starred(&row.model, c) {
                cell.push('*');
            }
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    let notes = tie_notes(table);
    if !notes.is_empty() {
        out.push('\n');
        for n in notes {
            let _ = writeln!(out, "{n}");
        }
    }
    out
}

/// CSV with full-precision values and `*` on starred cells. Best marks are
/// derived, so they are not stored.
pub fn render_csv(table: &ResultsTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["model".to_string()];
    header.extend(table.columns.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for row in &table.rows {
        let mut rec = vec![row.model.clone()];
        for (c, v) in table.columns.iter().zip(&row.values) {
            let star = if table.is_starred(&row.model, c) { "*" } else { "" };
            rec.push(format!("{v}{star}"));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn parse_csv(text: &str) -> Result<ResultsTable, ReportError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |row: usize, message: String| ReportError::Csv { row, message };
    let header = r.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    if header.get(0) != Some("model") {
        return Err(csv_err(1, "first column must be `model`".into()));
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut stars = BTreeSet::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| csv_err(row, e.to_string()))?;
        let model = rec[0].to_string();
        let mut values = BTreeMap::new();
        for (c, raw) in columns.iter().zip(rec.iter().skip(1)) {
            let (num, starred) = match raw.strip_suffix('*') {
                Some(n) => (n, true),
                None => (raw, false),
            };
            let v: f64 = num
                .parse()
                .map_err(|_| csv_err(row, format!("invalid value {raw:?} in column {c:?}")))?;
            if starred {
                stars.insert((model.clone(), c.clone()));
            }
            values.insert(c.clone(), v);
        }
        rows.push((model, values));
    }
    build_table(columns, rows, &stars)
}

/// Aligned text; `^` marks the best value, `*` a significant one.
pub fn render_plain(table: &ResultsTable) -> String {
    let mut grid: Vec<Vec<String>> = Vec::with_capacity(table.rows.len() + 1);
    let mut header = vec!["Model".to_string()];
    header.extend(table.columns.iter().cloned());
    grid.push(header);
    for row in &table.rows {
        let mut line = vec![row.model.clone()];
        for (c, v) in table.columns.iter().zip(&row.values) {
            let best = if table.is_best(&row.model, c) { "^" } else { " " };
            let star = if table.is_starred(&row.model, c) { "*" } else { " " };
            line.push(format!("{v:.2}{best}{star}"));
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|i| grid.iter().map(|l| l[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &grid {
        let mut text = String::new();
        for (i, cell) in line.iter().enumerate() {
            if i == 0 {
                let _ = write!(text, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(text, "  {cell:>w$}", w = widths[i]);
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    }
    out.push_str("^ best in column, * significant\n");
    for n in tie_notes(table) {
        out.push_str(&n);
        out.push('\n');
    }
    out
}

/// Picks `count` records with a seeded shuffle, returned in input order.
pub fn sample_records(records: &[ContextRecord], count: usize, seed: u64) -> Vec<&ContextRecord> {
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(count);
    idx.sort_unstable();
    idx.into_iter().map(|i| &records[i]).collect()
}

/// One block per record: context, gold question, then each method's question
/// in the order given.
pub fn sample_sheet(
    records: &[&ContextRecord],
    outputs: &[(String, Vec<GeneratedQuestion>)],
) -> Result<String, ReportError> {
    let lookup: Vec<HashMap<&str, &str>> = outputs
        .iter()
        .map(|(_, qs)| {
            qs.iter()
                .map(|q| (q.record_id.as_str(), q.question_text.as_str()))
                .collect()
        })
        .collect();
    let mut out = String::new();
    for (n, record) in records.iter().enumerate() {
        if n > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "### {} ({})\n", record.id, record.subject);
        let _ = writeln!(out, "**Context:** {}\n", record.context);
        out.push_str("| Source | Question |\n|---|---|\n");
        let _ = writeln!(out, "| Gold | {} |", escape_cell(&record.question));
        for ((method, _), questions) in outputs.iter().zip(&lookup) {
            let q = questions
                .get(record.id.as_str())
                .ok_or_else(|| ReportError::MissingOutput {
                    method: method.clone(),
                    record_id: record.id.clone(),
                })?;
            let _ = writeln!(out, "| {} | {} |", escape_cell(method), escape_cell(q));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Subject;
    use crate::prompting::Method;

    fn row(model: &str, vals: &[(&str, f64)]) -> (String, BTreeMap<String, f64>) {
        (model.into(), vals.iter().map(|(c, v)| (c.to_string(), *v)).collect())
    }

    fn cols(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_row_is_best_everywhere() {
        let t = build_table(
            cols(&["A", "B"]),
            vec![row("m", &[("A", 1.0), ("B", 2.0)])],
            &BTreeSet::new(),
        )
        .unwrap();
        assert_eq!(t.best["A"], "m");
        assert_eq!(t.best["B"], "m");
        assert!(t.stars.is_empty());
        assert_eq!(
            render_markdown(&t),
            "| Model | A | B |\n|---|---:|---:|\n| m | **1.00** | **2.00** |\n"
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            build_table(vec![], vec![row("m", &[])], &BTreeSet::new()),
            Err(ReportError::EmptyColumns)
        );
        assert!(matches!(
            build_table(cols(&["A"]), vec![row("m", &[("B", 1.0)])], &BTreeSet::new()),
            Err(ReportError::Ragged { .. })
        ));
        assert!(matches!(
            build_table(
                cols(&["A"]),
                vec![row("m", &[("A", 1.0), ("B", 1.0)])],
                &BTreeSet::new()
            ),
            Err(ReportError::Ragged { .. })
        ));
        let stars = BTreeSet::from([("x".to_string(), "A".to_string())]);
        assert!(matches!(
            build_table(cols(&["A"]), vec![row("m", &[("A", 1.0)])], &stars),
            Err(ReportError::UnknownCell { .. })
        ));
    }

    #[test]
    fn ties_go_to_first_row_with_note() {
        let t = build_table(
            cols(&["A"]),
            vec![
                row("p", &[("A", 2.0)]),
                row("q", &[("A", 2.0)]),
                row("r", &[("A", 1.0)]),
            ],
            &BTreeSet::new(),
        )
        .unwrap();
        assert_eq!(t.best["A"], "p");
        assert_eq!(t.ties["A"], vec!["p".to_string(), "q".to_string()]);
        assert!(render_markdown(&t).contains("Tie for best A between p, q"));
    }

    #[test]
    fn csv_round_trip() {
        let t = build_table(
            cols(&["X", "Y"]),
            vec![
                row("a", &[("X", 21.593812), ("Y", 0.1)]),
                row("b,c", &[("X", 1.0 / 3.0), ("Y", 7.25)]),
            ],
            &BTreeSet::from([("b,c".to_string(), "Y".to_string())]),
        )
        .unwrap();
        assert_eq!(parse_csv(&render_csv(&t)).unwrap(), t);
        let err = parse_csv("model,X\na,1\nb,zz\n").unwrap_err();
        assert!(matches!(err, ReportError::Csv { row: 3, .. }));
    }

    #[test]
    fn plain_marks_best_and_stars() {
        let stars = BTreeSet::from([("b".to_string(), "X".to_string())]);
        let t = build_table(
            cols(&["X"]),
            vec![row("a", &[("X", 1.0)]), row("b", &[("X", 2.0)])],
            &stars,
        )
        .unwrap();
        let text = render_plain(&t);
        assert!(text.contains("2.00^*"));
        assert!(text.contains("1.00"));
    }

    fn rec(id: &str) -> ContextRecord {
        ContextRecord {
            id: id.into(),
            context: format!("context {id}"),
            question: format!("gold {id}?"),
            subject: Subject::Economics,
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let records: Vec<_> = (0..30).map(|i| rec(&format!("r{i}"))).collect();
        let a: Vec<_> = sample_records(&records, 5, 7).iter().map(|r| r.id.clone()).collect();
        let b: Vec<_> = sample_records(&records, 5, 7).iter().map(|r| r.id.clone()).collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert_eq!(sample_records(&records, 100, 1).len(), 30);
    }

    #[test]
    fn sheet_has_one_block_per_record() {
        let r = rec("r1");
        let outputs: Vec<(String, Vec<GeneratedQuestion>)> = ["A", "B", "C"]
            .iter()
            .map(|m| {
                (
                    m.to_string(),
                    vec![GeneratedQuestion::for_test("r1", Method::Icl, &format!("{m} asks?"))],
                )
            })
            .collect();
        let sheet = sample_sheet(&[&r], &outputs).unwrap();
        assert_eq!(sheet.matches("### ").count(), 1);
        assert_eq!(sheet.matches(" asks? |").count(), 3);
        let missing = sample_sheet(&[&rec("r2")], &outputs).unwrap_err();
        assert!(matches!(missing, ReportError::MissingOutput { .. }));
    }
}
