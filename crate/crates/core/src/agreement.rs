//! Human ratings on the five question-quality criteria and Fleiss's kappa.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CATEGORIES: usize = 5;

#[derive(Debug, Error)]
pub enum AgreementError {
    #[error("ratings row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("duplicate rating by `{rater}` for item `{item}` on {criterion}")]
    Duplicate {
        rater: String,
        item: String,
        criterion: Criterion,
    },
    #[error("no ratings for {0}")]
    NoItems(Criterion),
    #[error("{criterion}: need at least 2 raters, found {found}")]
    TooFewRaters { criterion: Criterion, found: usize },
    #[error("incomplete rater coverage: {}", describe_missing(.0))]
    IncompleteCoverage(Vec<(String, Vec<String>)>),
    #[error("all ratings fall in one category (observed agreement {observed}); kappa is undefined")]
    DegenerateDistribution { observed: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn describe_missing(missing: &[(String, Vec<String>)]) -> String {
    missing
        .iter()
        .map(|(item, raters)| format!("item `{item}` lacks {}", raters.join(", ")))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    Grammaticality,
    Appropriateness,
    Relevance,
    Complexity,
    Answerability,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Grammaticality,
        Criterion::Appropriateness,
        Criterion::Relevance,
        Criterion::Complexity,
        Criterion::Answerability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Grammaticality => "grammaticality",
            Criterion::Appropriateness => "appropriateness",
            Criterion::Relevance => "relevance",
            Criterion::Complexity => "complexity",
            Criterion::Answerability => "answerability",
        }
    }

    /// Column heading used in result tables.
    pub fn short(self) -> &'static str {
        match self {
            Criterion::Grammaticality => "Gramm",
            Criterion::Appropriateness => "Appr",
            Criterion::Relevance => "Rel",
            Criterion::Complexity => "Comp",
            Criterion::Answerability => "Answ",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == key || c.short().to_ascii_lowercase() == key)
            .ok_or_else(|| format!("unknown criterion `{}`", s.trim()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub rater_id: String,
    pub item_id: String,
    pub criterion: Criterion,
    /// 1 (worst) to 5 (best)
    pub score: u8,
}

#[derive(Debug, Deserialize)]
struct RawRating {
    rater_id: String,
    item_id: String,
    criterion: String,
    score: String,
}

/// Reads `rater_id,item_id,criterion,score` CSV. Row numbers in errors count
/// the header as row 1.
pub fn parse_ratings<R: Read>(input: R) -> Result<Vec<RatingRecord>, AgreementError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RawRating>().enumerate() {
        let row_no = i + 2;
        let raw = row.map_err(|e| AgreementError::Row {
            row: row_no,
            message: e.to_string(),
        })?;
        let criterion: Criterion = raw
            .criterion
            .parse()
            .map_err(|message| AgreementError::Row { row: row_no, message })?;
        let score: u8 = match raw.score.parse() {
            Ok(s @ 1..=5) => s,
            _ => {
                return Err(AgreementError::Row {
                    row: row_no,
                    message: format!("score `{}` is not an integer in 1..=5", raw.score),
                })
            }
        };
        if !seen.insert((raw.rater_id.clone(), raw.item_id.clone(), criterion)) {
            return Err(AgreementError::Duplicate {
                rater: raw.rater_id,
                item: raw.item_id,
                criterion,
            });
        }
        out.push(RatingRecord {
            rater_id: raw.rater_id,
            item_id: raw.item_id,
            criterion,
            score,
        });
    }
    Ok(out)
}

/// Per-item counts over the five score categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementMatrix {
    pub items: Vec<String>,
    pub counts: Vec<[u32; CATEGORIES]>,
    pub n_raters: u32,
}

impl AgreementMatrix {
    /// Builds a matrix directly from counts; every row must sum to the same n ≥ 2.
    pub fn from_counts(counts: Vec<[u32; CATEGORIES]>) -> Option<Self> {
        let n = counts.first()?.iter().sum::<u32>();
        if n < 2 || counts.iter().any(|row| row.iter().sum::<u32>() != n) {
            return None;
        }
        Some(Self {
            items: (1..=counts.len()).map(|i| i.to_string()).collect(),
            counts,
            n_raters: n,
        })
    }

    /// Mean per-item agreement P̄.
    pub fn observed_agreement(&self) -> f64 {
        let n = f64::from(self.n_raters);
        let total: f64 = self
            .counts
            .iter()
            .map(|row| {
                let sq: f64 = row.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
                (sq - n) / (n * (n - 1.0))
            })
            .sum();
        total / self.counts.len() as f64
    }
}

pub fn build_matrix(ratings: &[RatingRecord], criterion: Criterion) -> Result<AgreementMatrix, AgreementError> {
    let mut by_item: BTreeMap<&str, BTreeMap<&str, u8>> = BTreeMap::new();
    let mut raters: BTreeSet<&str> = BTreeSet::new();
    for r in ratings.iter().filter(|r| r.criterion == criterion) {
        raters.insert(&r.rater_id);
        if by_item
            .entry(&r.item_id)
            .or_default()
            .insert(&r.rater_id, r.score)
            .is_some()
        {
            return Err(AgreementError::Duplicate {
                rater: r.rater_id.clone(),
                item: r.item_id.clone(),
                criterion,
            });
        }
    }
    if by_item.is_empty() {
        return Err(AgreementError::NoItems(criterion));
    }
    if raters.len() < 2 {
        return Err(AgreementError::TooFewRaters {
            criterion,
            found: raters.len(),
        });
    }
    let missing: Vec<(String, Vec<String>)> = by_item
        .iter()
        .filter(|(_, scores)| scores.len() != raters.len())
        .map(|(item, scores)| {
            let absent = raters
                .iter()
                .filter(|r| !scores.contains_key(*r))
                .map(|r| r.to_string())
                .collect();
            (item.to_string(), absent)
        })
        .collect();
    if !missing.is_empty() {
        return Err(AgreementError::IncompleteCoverage(missing));
    }
    let mut items = Vec::with_capacity(by_item.len());
    let mut counts = Vec::with_capacity(by_item.len());
    for (item, scores) in by_item {
        let mut row = [0u32; CATEGORIES];
        for &s in scores.values() {
            row[usize::from(s) - 1] += 1;
        }
        items.push(item.to_string());
        counts.push(row);
    }
    Ok(AgreementMatrix {
        items,
        counts,
        n_raters: raters.len() as u32,
    })
}

/// Fleiss's kappa, (P̄ − P̄ₑ) / (1 − P̄ₑ).
pub fn fleiss_kappa(matrix: &AgreementMatrix) -> Result<f64, AgreementError> {
    let n_items = matrix.counts.len();
    let total = u64::from(matrix.n_raters) * n_items as u64;
    let mut column_totals = [0u64; CATEGORIES];
    for row in &matrix.counts {
        for (t, &c) in column_totals.iter_mut().zip(row) {
            *t += u64::from(c);
        }
    }
    let observed = matrix.observed_agreement();
    if column_totals.contains(&total) {
        return Err(AgreementError::DegenerateDistribution { observed });
    }
    let expected: f64 = column_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / total as f64;
            p * p
        })
        .sum();
    Ok((observed - expected) / (1.0 - expected))
}

/// Advisory interpretation bands for kappa values.
pub fn kappa_band(kappa: f64) -> &'static str {
    match kappa {
        k if k < 0.0 => "poor",
        k if k <= 0.20 => "slight",
        k if k <= 0.40 => "fair",
        k if k <= 0.60 => "moderate",
        k if k <= 0.80 => "substantial",
        _ => "almost perfect",
    }
}

/// Model part of an item id of the form `<model>/<record id>`.
pub fn model_of_item(item_id: &str) -> &str {
    item_id.split_once('/').map_or("all", |(m, _)| m)
}

/// Mean score per (group, criterion) over all raters and items.
pub fn mean_ratings<F>(ratings: &[RatingRecord], group_of: F) -> BTreeMap<(String, Criterion), f64>
where
    F: Fn(&str) -> String,
{
    let mut sums: BTreeMap<(String, Criterion), (f64, usize)> = BTreeMap::new();
    for r in ratings {
        let cell = sums.entry((group_of(&r.item_id), r.criterion)).or_default();
        cell.0 += f64::from(r.score);
        cell.1 += 1;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Per-item mean across raters for one criterion, keyed by item id.
pub fn item_means(ratings: &[RatingRecord], criterion: Criterion) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in ratings.iter().filter(|r| r.criterion == criterion) {
        let cell = sums.entry(r.item_id.clone()).or_default();
        cell.0 += f64::from(r.score);
        cell.1 += 1;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}
