use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aqg_core::agreement::{build_matrix, fleiss_kappa, kappa_band, parse_ratings, Criterion, RatingRecord};
use aqg_core::dataset::{dataset_stats as subject_counts, load_dataset, ContextRecord, DatasetSplit};
use aqg_core::generation::{
    self, run_experiment, write_manifest, write_questions, GenerationParams, HttpProvider, MockProvider, Provider,
    ResponseCache, RunOptions, DEFAULT_FAILURE_THRESHOLD, DEFAULT_MAX_IN_FLIGHT,
};
use aqg_core::metrics::{evaluate_corpus, write_items_csv, write_summary_csv, HashedTokenEmbedder};
use aqg_core::prompting::{
    Method, PipelineConfig, PromptPipeline, PromptTemplate, SelectionStrategy, DEFAULT_TOKEN_BUDGET,
};
use aqg_core::retrieval::{build_index, load_corpus_dir, load_index, save_index, LexicalIndex, MAX_CHUNK_TOKENS};

use crate::config::FileConfig;
use crate::error::{CliError, CliResult};
use crate::{AgreementArgs, EvaluateArgs, GenerateArgs};

pub const DEFAULT_SEED: u64 = 42;

pub fn questions_path(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join("questions").join(format!("{label}.jsonl"))
}

pub fn manifest_path(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join("manifests").join(format!("{label}.json"))
}

pub fn items_path(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join("metrics").join(format!("{label}.items.csv"))
}

pub fn summary_path(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join("metrics").join(format!("{label}.summary.csv"))
}

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("missing --{flag}")))
}

pub fn create_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::data(format!("creating {}: {e}", dir.display())))?;
    }
    Ok(())
}

pub fn load_records(path: &Path) -> CliResult<Vec<ContextRecord>> {
    Ok(load_dataset(path)?)
}

pub fn dataset_stats(files: &[PathBuf]) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    for path in files {
        let records = load_records(path)?;
        writeln!(out, "{}: {} records", path.display(), records.len())?;
        for (subject, n) in subject_counts(&records) {
            writeln!(out, "  {:<22}{n:>6}", subject.as_str())?;
        }
    }
    Ok(())
}

pub fn index(corpus: Option<PathBuf>, out: Option<PathBuf>) -> CliResult<()> {
    let corpus = required(corpus, "corpus (positional CORPUS_DIR)")?;
    let out = required(out, "out")?;
    let index = build_index(load_corpus_dir(&corpus, MAX_CHUNK_TOKENS)?)?;
    create_parent(&out)?;
    save_index(&index, &out)?;
    log::info!("indexed {} documents into {}", index.doc_count(), out.display());
    println!("{} documents indexed to {}", index.doc_count(), out.display());
    Ok(())
}

/// Everything `generate` needs, resolved and validated before any data is read.
struct GenerateSettings {
    train: PathBuf,
    test: PathBuf,
    pipeline: PipelineConfig,
    index: Option<PathBuf>,
    corpus: Option<PathBuf>,
    endpoint: Option<String>,
    params: GenerationParams,
    cache_dir: PathBuf,
    out_dir: PathBuf,
    label: String,
    template: Option<PathBuf>,
    token_budget: usize,
    max_in_flight: usize,
    failure_threshold: f64,
}

fn resolve_generate(a: &GenerateArgs, f: &FileConfig) -> CliResult<GenerateSettings> {
    let defaults = PipelineConfig::default();
    let method: Method = required(f.pick(a.method.clone(), "method")?, "method")?
        .parse::<Method>()
        .map_err(CliError::usage)?;
    let selection: SelectionStrategy = match f.pick::<String>(a.selection.clone(), "selection")? {
        Some(s) => s.parse().map_err(CliError::usage)?,
        None => SelectionStrategy::default(),
    };
    let pipeline = PipelineConfig {
        method,
        icl_shots: f.pick_or(a.icl_shots, "icl_shots", defaults.icl_shots)?,
        retrieval_k: f.pick_or(a.retrieval_k, "retrieval_k", defaults.retrieval_k)?,
        hybrid_shots: f.pick_or(a.hybrid_shots, "hybrid_shots", defaults.hybrid_shots)?,
        seed: f.pick_or(a.seed, "seed", DEFAULT_SEED)?,
        selection_strategy: selection,
    };
    pipeline.validate().map_err(CliError::usage)?;

    let index = f.pick(a.index.clone(), "index")?;
    let corpus = f.pick(a.corpus.clone(), "corpus")?;
    if pipeline.needs_retrieval() && index.is_none() && corpus.is_none() {
        return Err(CliError::usage(format!("--method {method} needs --index or --corpus")));
    }
    let mock = f.pick_flag(a.mock, "mock")?;
    let endpoint = f.pick(a.endpoint.clone(), "endpoint")?;
    if mock == endpoint.is_some() {
        return Err(CliError::usage("give exactly one of --mock or --endpoint"));
    }
    let params = GenerationParams {
        model_name: f.pick_or(a.model.clone(), "model", generation::DEFAULT_MODEL.to_string())?,
        temperature: f.pick_or(a.temperature, "temperature", generation::DEFAULT_TEMPERATURE)?,
        max_output_tokens: f.pick_or(a.max_tokens, "max_tokens", generation::DEFAULT_MAX_OUTPUT_TOKENS)?,
        stop_marker: None,
    };
    params.validate().map_err(CliError::usage)?;
    let out_dir = required(f.pick(a.out_dir.clone(), "out_dir")?, "out-dir")?;
    let label = f.pick_or(a.label.clone(), "label", pipeline.label())?;
    if label.is_empty() || label.contains(['/', '\\']) {
        return Err(CliError::usage(format!("invalid label {label:?}")));
    }
    let max_in_flight = f.pick_or(a.max_in_flight, "max_in_flight", DEFAULT_MAX_IN_FLIGHT)?;
    if max_in_flight == 0 {
        return Err(CliError::usage("--max-in-flight must be at least 1"));
    }
    let failure_threshold = f.pick_or(a.failure_threshold, "failure_threshold", DEFAULT_FAILURE_THRESHOLD)?;
    if !(0.0..=1.0).contains(&failure_threshold) {
        return Err(CliError::usage("--failure-threshold must be within [0, 1]"));
    }
    Ok(GenerateSettings {
        train: required(f.pick(a.train.clone(), "train")?, "train")?,
        test: required(f.pick(a.test.clone(), "test")?, "test")?,
        pipeline,
        index,
        corpus,
        endpoint,
        params,
        cache_dir: f.pick_or(a.cache_dir.clone(), "cache_dir", out_dir.join("cache"))?,
        label,
        template: f.pick(a.template.clone(), "template")?,
        token_budget: f.pick_or(a.token_budget, "token_budget", DEFAULT_TOKEN_BUDGET)?,
        max_in_flight,
        failure_threshold,
        out_dir,
    })
}

fn load_retrieval(s: &GenerateSettings) -> CliResult<Option<LexicalIndex>> {
    if !s.pipeline.needs_retrieval() {
        return Ok(None);
    }
    let index = match (&s.index, &s.corpus) {
        (Some(path), _) => load_index(path)?,
        (None, Some(dir)) => build_index(load_corpus_dir(dir, MAX_CHUNK_TOKENS)?)?,
        (None, None) => unreachable!("checked while resolving settings"),
    };
    log::info!("retrieval index holds {} documents", index.doc_count());
    Ok(Some(index))
}

pub fn generate(args: &GenerateArgs, file: &FileConfig) -> CliResult<()> {
    let s = resolve_generate(args, file)?;
    let template = match &s.template {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("reading template {}: {e}", path.display())))?;
            PromptTemplate::parse(&text)?
        }
        None => PromptTemplate::default(),
    }
    .with_budget(s.token_budget);

    let split = DatasetSplit::new(load_records(&s.train)?, load_records(&s.test)?)?;
    let index = load_retrieval(&s)?;
    let retriever = index.as_ref().map(|i| i as &dyn aqg_core::retrieval::Retriever);
    let pipeline = PromptPipeline::new(s.pipeline.clone(), template, split.train().to_vec(), retriever)?;

    let provider: Box<dyn Provider> = match &s.endpoint {
        Some(url) => Box::new(HttpProvider::new(url.clone())),
        None => Box::new(MockProvider),
    };
    let cache = ResponseCache::new(&s.cache_dir);
    let options = RunOptions {
        label: s.label.clone(),
        max_in_flight: s.max_in_flight,
        failure_threshold: s.failure_threshold,
        cache: Some(&cache),
        index_doc_count: index.as_ref().map(|i| i.doc_count()),
    };
    let output = run_experiment(&pipeline, split.test(), &s.params, provider.as_ref(), &options)?;

    let qpath = questions_path(&s.out_dir, &s.label);
    write_questions(&qpath, &output.questions)?;
    write_manifest(&manifest_path(&s.out_dir, &s.label), &output.manifest)?;
    for failure in &output.manifest.failures {
        log::warn!("record {} skipped: {}", failure.record_id, failure.message);
    }
    println!(
        "{}: {} questions ({} failed) written to {}",
        s.label,
        output.questions.len(),
        output.manifest.failures.len(),
        qpath.display()
    );
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs, file: &FileConfig) -> CliResult<()> {
    let test = required(file.pick(args.test.clone(), "test")?, "test")?;
    let out_dir = required(file.pick(args.out_dir.clone(), "out_dir")?, "out-dir")?;
    let label = match &args.label {
        Some(l) => l.clone(),
        None => args
            .questions
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::usage("cannot derive a label from --questions; pass --label"))?,
    };
    let questions = generation::read_questions(&args.questions)
        .map_err(|e| CliError::data(e).context(format!("reading {}", args.questions.display())))?;
    let gold = load_records(&test)?;
    let result = evaluate_corpus(&questions, &gold, &HashedTokenEmbedder::default())?;

    let items = items_path(&out_dir, &label);
    create_parent(&items)?;
    write_items_csv(BufWriter::new(fs::File::create(&items)?), &result.items)?;
    write_summary_csv(
        BufWriter::new(fs::File::create(summary_path(&out_dir, &label))?),
        &result.summary,
    )?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{label} ({} questions)", questions.len())?;
    for s in &result.summary {
        writeln!(out, "  {:<12}{:>8.2}", s.metric.name(), s.value)?;
    }
    Ok(())
}

/// Kappa per criterion, in criterion order, skipping criteria without ratings.
pub fn kappa_table(ratings: &[RatingRecord]) -> CliResult<Vec<(Criterion, f64)>> {
    let mut rows = Vec::new();
    for c in Criterion::ALL {
        if !ratings.iter().any(|r| r.criterion == c) {
            continue;
        }
        let matrix = build_matrix(ratings, c)?;
        rows.push((c, fleiss_kappa(&matrix)?));
    }
    Ok(rows)
}

pub fn kappa_csv(rows: &[(Criterion, f64)]) -> String {
    let mut out = String::from("criterion,kappa,band\n");
    for (c, k) in rows {
        out.push_str(&format!("{},{k:.4},{}\n", c.short(), kappa_band(*k)));
    }
    out
}

pub fn read_ratings(path: &Path) -> CliResult<Vec<RatingRecord>> {
    let file = fs::File::open(path).map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))?;
    parse_ratings(file).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn agreement(args: &AgreementArgs, file: &FileConfig) -> CliResult<()> {
    let path = required(
        file.pick(args.ratings.clone(), "ratings")?,
        "ratings (positional RATINGS)",
    )?;
    let rows = kappa_table(&read_ratings(&path)?)?;
    let mut out = std::io::stdout().lock();
    for (c, k) in &rows {
        writeln!(out, "{:<6}{k:>8.3}  {}", c.short(), kappa_band(*k))?;
    }
    if let Some(dest) = &args.out {
        create_parent(dest)?;
        fs::write(dest, kappa_csv(&rows))?;
    }
    Ok(())
}
