use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use aqg_core::agreement::{item_means, mean_ratings, model_of_item, Criterion, RatingRecord};
use aqg_core::generation::read_questions;
use aqg_core::metrics::{item_values, read_items_csv, read_summary_csv, MetricKind};
use aqg_core::report::{build_table, render, sample_records, sample_sheet, Format, ResultsTable};
use aqg_core::stats::{compare_to_weakest_baseline, Comparison, SampleVector};

use crate::commands::{
    items_path, kappa_csv, kappa_table, load_records, questions_path, read_ratings, summary_path, DEFAULT_SEED,
};
use crate::config::FileConfig;
use crate::error::{CliError, CliResult};
use crate::ReportArgs;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// (model, column) -> per-item samples
type Samples = BTreeMap<String, BTreeMap<String, Vec<f64>>>;

struct SignificanceRow {
    table: &'static str,
    column: String,
    comparison: Comparison,
}

fn open(path: &Path) -> CliResult<fs::File> {
    fs::File::open(path).map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))
}

/// Labels with a metric summary under `<out_dir>/metrics`, sorted.
fn evaluated_labels(out_dir: &Path) -> CliResult<Vec<String>> {
    let dir = out_dir.join("metrics");
    let entries = fs::read_dir(&dir).map_err(|e| CliError::data(format!("reading {}: {e}", dir.display())))?;
    let mut labels = Vec::new();
    for entry in entries {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(label) = name.strip_suffix(".summary.csv") {
            labels.push(label.to_string());
        }
    }
    labels.sort();
    if labels.is_empty() {
        return Err(CliError::data(format!("no metric summaries under {}", dir.display())));
    }
    Ok(labels)
}

/// Explicit order if given, else baselines in the order named, then the rest sorted.
fn row_order(available: &BTreeSet<String>, explicit: &[String], baselines: &[String]) -> Vec<String> {
    if !explicit.is_empty() {
        return explicit.iter().filter(|m| available.contains(*m)).cloned().collect();
    }
    let mut order: Vec<String> = baselines.iter().filter(|b| available.contains(*b)).cloned().collect();
    order.extend(available.iter().filter(|m| !baselines.contains(m)).cloned());
    order
}

/// Stars each non-baseline row whose column samples beat the weakest baseline.
fn stars(
    table: &'static str,
    columns: &[String],
    samples: &Samples,
    baselines: &[String],
    alpha: f64,
    log: &mut Vec<SignificanceRow>,
) -> BTreeSet<(String, String)> {
    let mut starred = BTreeSet::new();
    for column in columns {
        let vectors = |want_baseline: bool| -> BTreeMap<String, SampleVector> {
            samples
                .iter()
                .filter(|(m, _)| baselines.contains(m) == want_baseline)
                .filter_map(|(m, cols)| {
                    let values = cols.get(column)?.clone();
                    match SampleVector::new(m.clone(), values) {
                        Ok(v) => Some((m.clone(), v)),
                        Err(e) => {
                            log::warn!("{table} {column}: {m} left out of significance testing: {e}");
                            None
                        }
                    }
                })
                .collect()
        };
        let base = vectors(true);
        if base.is_empty() {
            continue;
        }
        for comparison in compare_to_weakest_baseline(&vectors(false), &base, alpha) {
            if comparison.star {
                starred.insert((comparison.model.clone(), column.clone()));
            }
            log.push(SignificanceRow {
                table,
                column: column.clone(),
                comparison,
            });
        }
    }
    starred
}

fn significance_csv(rows: &[SignificanceRow]) -> String {
    let mut out = String::from("table,column,model,baseline,t,df,p,significant\n");
    for r in rows {
        let c = &r.comparison;
        let (t, df, p) = match &c.result {
            Some(res) => (
                format!("{:.6}", res.t),
                format!("{}", res.df),
                format!("{:.6}", res.p_two_sided),
            ),
            None => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{},{},{t},{df},{p},{}\n",
            r.table, r.column, c.model, c.baseline, c.star
        ));
    }
    out
}

fn automatic_table(
    out_dir: &Path,
    order: &[String],
    baselines: &[String],
    alpha: f64,
    log: &mut Vec<SignificanceRow>,
) -> CliResult<ResultsTable> {
    let columns: Vec<String> = MetricKind::TABLE.iter().map(|m| m.name().to_string()).collect();
    let mut rows = Vec::with_capacity(order.len());
    let mut samples = Samples::new();
    for label in order {
        let summary_file = summary_path(out_dir, label);
        let summary =
            read_summary_csv(open(&summary_file)?).map_err(|e| CliError::from(e).context(summary_file.display()))?;
        let values: BTreeMap<String, f64> = summary
            .into_iter()
            .filter(|(m, _)| MetricKind::TABLE.contains(m))
            .map(|(m, v)| (m.name().to_string(), v))
            .collect();
        rows.push((label.clone(), values));

        let items_file = items_path(out_dir, label);
        let items = read_items_csv(open(&items_file)?).map_err(|e| CliError::from(e).context(items_file.display()))?;
        let per_column = MetricKind::TABLE
            .iter()
            .map(|m| (m.name().to_string(), item_values(&items, m.item_metric())))
            .collect();
        samples.insert(label.clone(), per_column);
    }
    let starred = stars("automatic", &columns, &samples, baselines, alpha, log);
    Ok(build_table(columns, rows, &starred)?)
}

fn human_table(
    ratings: &[RatingRecord],
    explicit: &[String],
    baselines: &[String],
    alpha: f64,
    log: &mut Vec<SignificanceRow>,
) -> CliResult<ResultsTable> {
    let criteria: Vec<Criterion> = Criterion::ALL
        .into_iter()
        .filter(|c| ratings.iter().any(|r| r.criterion == *c))
        .collect();
    let columns: Vec<String> = criteria.iter().map(|c| c.short().to_string()).collect();
    let means = mean_ratings(ratings, |item| model_of_item(item).to_string());
    let models: BTreeSet<String> = means.keys().map(|(m, _)| m.clone()).collect();
    let order = row_order(&models, explicit, baselines);

    let mut samples = Samples::new();
    for c in &criteria {
        for (item, mean) in item_means(ratings, *c) {
            samples
                .entry(model_of_item(&item).to_string())
                .or_default()
                .entry(c.short().to_string())
                .or_default()
                .push(mean);
        }
    }
    let rows = order
        .iter()
        .map(|m| {
            let values = criteria
                .iter()
                .filter_map(|c| means.get(&(m.clone(), *c)).map(|v| (c.short().to_string(), *v)))
                .collect();
            (m.clone(), values)
        })
        .collect();
    let starred = stars("human", &columns, &samples, baselines, alpha, log);
    Ok(build_table(columns, rows, &starred)?)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    crate::commands::create_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::data(format!("writing {}: {e}", path.display())))
}

pub fn report(args: &ReportArgs, f: &FileConfig) -> CliResult<()> {
    let out_dir = f
        .pick(args.out_dir.clone(), "out_dir")?
        .ok_or_else(|| CliError::usage("missing --out-dir"))?;
    let alpha = f.pick_or(args.alpha, "alpha", DEFAULT_ALPHA)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::usage(format!("--alpha {alpha} must be within (0, 1)")));
    }
    let baselines = f.pick_list(args.baselines.clone(), "baselines");
    let explicit = f.pick_list(args.models.clone(), "models");
    let ratings_path = f.pick(args.ratings.clone(), "ratings")?;
    let samples = f.pick_or(args.samples, "samples", 0usize)?;
    let test = f.pick(args.test.clone(), "test")?;
    if samples > 0 && test.is_none() {
        return Err(CliError::usage("--samples needs --test"));
    }
    let seed = f.pick_or(args.seed, "seed", DEFAULT_SEED)?;

    let labels: BTreeSet<String> = evaluated_labels(&out_dir)?.into_iter().collect();
    for name in baselines.iter().chain(&explicit) {
        if !labels.contains(name) {
            return Err(CliError::usage(format!("no metric summary for run {name:?}")));
        }
    }
    if baselines.is_empty() {
        log::warn!("no --baseline given; tables carry no significance stars");
    }
    let order = row_order(&labels, &explicit, &baselines);
    let reports = out_dir.join("reports");
    let mut sig_log = Vec::new();

    let automatic = automatic_table(&out_dir, &order, &baselines, alpha, &mut sig_log)?;
    write(&reports.join("automatic.md"), &render(&automatic, Format::Markdown))?;
    write(&reports.join("automatic.csv"), &render(&automatic, Format::Csv))?;
    print!("{}", render(&automatic, Format::Plain));

    if let Some(path) = ratings_path {
        let ratings = read_ratings(&path)?;
        let human = human_table(&ratings, &explicit, &baselines, alpha, &mut sig_log)?;
        write(&reports.join("human.md"), &render(&human, Format::Markdown))?;
        write(&reports.join("human.csv"), &render(&human, Format::Csv))?;
        write(&reports.join("kappa.csv"), &kappa_csv(&kappa_table(&ratings)?))?;
        println!();
        print!("{}", render(&human, Format::Plain));
    }
    write(&reports.join("significance.csv"), &significance_csv(&sig_log))?;

    if let Some(test) = test.filter(|_| samples > 0) {
        let records = load_records(&test)?;
        let picked = sample_records(&records, samples, seed);
        let mut outputs = Vec::with_capacity(order.len());
        for label in &order {
            let path = questions_path(&out_dir, label);
            let questions = read_questions(&path).map_err(|e| CliError::data(e).context(path.display()))?;
            outputs.push((label.clone(), questions));
        }
        write(&reports.join("samples.md"), &sample_sheet(&picked, &outputs)?)?;
    }
    println!("reports written to {}", reports.display());
    Ok(())
}
