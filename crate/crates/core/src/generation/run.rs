use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use serde::{Deserialize, Serialize};

use super::{
    generate, read_questions_from, write_questions_to, GeneratedQuestion, GenerationError, GenerationParams, Provider,
    ResponseCache,
};
use crate::dataset::{dataset_fingerprint, ContextRecord};
use crate::prompting::{PipelineConfig, PromptBundle, PromptPipeline};

pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;
pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct RunOptions<'a> {
    pub label: String,
    pub max_in_flight: usize,
    /// largest tolerated fraction of failed records
    pub failure_threshold: f64,
    pub cache: Option<&'a ResponseCache>,
    /// documents in the loaded retrieval index, recorded in the manifest
    pub index_doc_count: Option<usize>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions {
            label: String::new(),
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            cache: None,
            index_doc_count: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub record_id: String,
    pub message: String,
}

/// Everything needed to replay a run. Holds no wall-clock data so reruns
/// produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub label: String,
    pub config: PipelineConfig,
    pub template_id: String,
    pub provider_id: String,
    pub params: GenerationParams,
    pub train_fingerprint: String,
    pub test_fingerprint: String,
    pub train_records: usize,
    pub test_records: usize,
    pub index_doc_count: Option<usize>,
    pub generated: usize,
    pub failures: Vec<RecordFailure>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// One per successful record, in input order.
    pub questions: Vec<GeneratedQuestion>,
    pub manifest: RunManifest,
}

/// Builds every prompt, then runs them through the provider with at most
/// `max_in_flight` calls outstanding.
pub fn run_experiment(
    pipeline: &PromptPipeline<'_>,
    test: &[ContextRecord],
    params: &GenerationParams,
    provider: &dyn Provider,
    options: &RunOptions<'_>,
) -> Result<ExperimentOutput, GenerationError> {
    params.validate()?;
    if options.max_in_flight == 0 {
        return Err(GenerationError::Config("max_in_flight must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&options.failure_threshold) {
        return Err(GenerationError::Config(format!(
            "failure threshold {} outside [0, 1]",
            options.failure_threshold
        )));
    }

    let mut failures: Vec<(usize, RecordFailure)> = Vec::new();
    let mut jobs: Vec<(usize, &ContextRecord, PromptBundle)> = Vec::with_capacity(test.len());
    for (i, record) in test.iter().enumerate() {
        match pipeline.build(record) {
            Ok(bundle) => jobs.push((i, record, bundle)),
            Err(e) => failures.push((
                i,
                RecordFailure {
                    record_id: record.id.clone(),
                    message: e.to_string(),
                },
            )),
        }
    }

    let next = AtomicUsize::new(0);
    let workers = options.max_in_flight.min(jobs.len()).max(1);
    let mut results: Vec<(usize, Result<GeneratedQuestion, GenerationError>)> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let j = next.fetch_add(1, Ordering::SeqCst);
                        let Some((i, record, bundle)) = jobs.get(j) else { break };
                        done.push((*i, generate(&record.id, bundle, params, provider, options.cache)));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("generation worker panicked"))
            .collect()
    });
    results.sort_by_key(|(i, _)| *i);

    let mut questions = Vec::with_capacity(results.len());
    for (i, result) in results {
        match result {
            Ok(q) => questions.push(q),
            Err(e) => {
                log::warn!("record {} failed: {e}", test[i].id);
                failures.push((
                    i,
                    RecordFailure {
                        record_id: test[i].id.clone(),
                        message: e.to_string(),
                    },
                ));
            }
        }
    }
    failures.sort_by_key(|(i, _)| *i);
    let failures: Vec<RecordFailure> = failures.into_iter().map(|(_, f)| f).collect();

    if !test.is_empty() && failures.len() as f64 / test.len() as f64 > options.failure_threshold {
        return Err(GenerationError::TooManyFailures {
            failed: failures.len(),
            total: test.len(),
            threshold: options.failure_threshold,
        });
    }

    let mut notes = Vec::new();
    if params.temperature == super::DEFAULT_TEMPERATURE && params.max_output_tokens == super::DEFAULT_MAX_OUTPUT_TOKENS
    {
        notes.push("decoding parameters are the toolkit defaults (temperature 0.0, 128 output tokens)".into());
    }
    let label = if options.label.is_empty() {
        pipeline.config().label()
    } else {
        options.label.clone()
    };
    let manifest = RunManifest {
        label,
        config: pipeline.config().clone(),
        template_id: pipeline.template().id().to_string(),
        provider_id: provider.id(),
        params: params.clone(),
        train_fingerprint: dataset_fingerprint(pipeline.train()),
        test_fingerprint: dataset_fingerprint(test),
        train_records: pipeline.train().len(),
        test_records: test.len(),
        index_doc_count: options.index_doc_count,
        generated: questions.len(),
        failures,
        notes,
    };
    Ok(ExperimentOutput { questions, manifest })
}

fn ensure_parent(path: &Path) -> std::io::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir),
        _ => Ok(()),
    }
}

pub fn write_questions(path: &Path, questions: &[GeneratedQuestion]) -> Result<(), GenerationError> {
    ensure_parent(path)?;
    write_questions_to(questions, BufWriter::new(fs::File::create(path)?))?;
    Ok(())
}

pub fn read_questions(path: &Path) -> Result<Vec<GeneratedQuestion>, GenerationError> {
    read_questions_from(BufReader::new(fs::File::open(path)?))
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), GenerationError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(manifest).map_err(std::io::Error::from)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Subject;
    use crate::generation::MockProvider;
    use crate::prompting::{Method, PromptTemplate};
    use std::sync::atomic::AtomicUsize;
    use std::time::Duration;

    fn records(prefix: &str, n: usize) -> Vec<ContextRecord> {
        (0..n)
            .map(|i| ContextRecord {
                id: format!("{prefix}{i}"),
                context: format!("Passage {prefix} {i} describes rivers and trade routes."),
                question: format!("What about {i}?"),
                subject: Subject::ALL[i % 5],
            })
            .collect()
    }

    fn pipeline(config: PipelineConfig, train: Vec<ContextRecord>) -> PromptPipeline<'static> {
        PromptPipeline::new(config, PromptTemplate::default(), train, None).unwrap()
    }

    #[test]
    fn baseline_run_with_mock() {
        let test = records("t", 10);
        let p = pipeline(PipelineConfig::default(), records("tr", 5));
        let out = run_experiment(
            &p,
            &test,
            &GenerationParams::default(),
            &MockProvider,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(out.questions.len(), 10);
        let ids: Vec<_> = out.questions.iter().map(|q| q.record_id.clone()).collect();
        let expected: Vec<_> = test.iter().map(|r| r.id.clone()).collect();
        assert_eq!(ids, expected);
        assert_eq!(out.manifest.config.method, Method::Baseline);
        assert_eq!(out.manifest.label, "baseline");
        let json = serde_json::to_string(&out.manifest).unwrap();
        assert!(json.contains("\"method\":\"baseline\""));
    }

    #[test]
    fn hybrid_without_index_is_config_error() {
        let config = PipelineConfig {
            method: Method::Hybrid,
            ..PipelineConfig::default()
        };
        assert!(PromptPipeline::new(config, PromptTemplate::default(), records("tr", 10), None).is_err());
    }

    struct Flaky {
        in_flight: AtomicUsize,
        peak: AtomicUsize,
        calls: AtomicUsize,
        fail_every: usize,
    }

    impl Provider for Flaky {
        fn id(&self) -> String {
            "flaky".into()
        }
        fn cacheable(&self) -> bool {
            false
        }
        fn complete(&self, bundle: &PromptBundle, _: &GenerationParams) -> Result<String, GenerationError> {
            let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            thread::sleep(Duration::from_millis(3));
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if self.fail_every > 0 && n.is_multiple_of(self.fail_every) {
                Ok(String::new())
            } else {
                Ok(format!("Question: {}?", &bundle.target_passage[..10]))
            }
        }
    }

    fn flaky(fail_every: usize) -> Flaky {
        Flaky {
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
            fail_every,
        }
    }

    #[test]
    fn bounded_concurrency_and_input_order() {
        let test = records("t", 40);
        let p = pipeline(PipelineConfig::default(), records("tr", 5));
        let provider = flaky(0);
        let opts = RunOptions {
            max_in_flight: 3,
            ..RunOptions::default()
        };
        let out = run_experiment(&p, &test, &GenerationParams::default(), &provider, &opts).unwrap();
        assert!(provider.peak.load(Ordering::SeqCst) <= 3);
        assert_eq!(out.questions.len(), 40);
        for (q, r) in out.questions.iter().zip(&test) {
            assert_eq!(q.record_id, r.id);
        }
    }

    #[test]
    fn failure_threshold() {
        let test = records("t", 20);
        let p = pipeline(PipelineConfig::default(), records("tr", 5));
        // 1 of 20 fails: exactly 5 %, tolerated
        let provider = flaky(20);
        let out = run_experiment(
            &p,
            &test,
            &GenerationParams::default(),
            &provider,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(out.questions.len(), 19);
        assert_eq!(out.manifest.failures.len(), 1);

        let provider = flaky(2);
        let err = run_experiment(
            &p,
            &test,
            &GenerationParams::default(),
            &provider,
            &RunOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            GenerationError::TooManyFailures {
                failed: 10,
                total: 20,
                ..
            }
        ));
    }

    #[test]
    fn warm_rerun_is_byte_identical() {
        struct Fixed;
        impl Provider for Fixed {
            fn id(&self) -> String {
                "fixed".into()
            }
            fn complete(&self, b: &PromptBundle, _: &GenerationParams) -> Result<String, GenerationError> {
                Ok(format!("Question: {}", b.prompt_hash))
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path().join("cache"));
        let test = records("t", 6);
        let p = pipeline(PipelineConfig::default(), records("tr", 5));
        let opts = RunOptions {
            cache: Some(&cache),
            ..RunOptions::default()
        };
        let a = run_experiment(&p, &test, &GenerationParams::default(), &Fixed, &opts).unwrap();
        thread::sleep(Duration::from_millis(5));
        let b = run_experiment(&p, &test, &GenerationParams::default(), &Fixed, &opts).unwrap();
        assert!(b.questions.iter().all(|q| q.from_cache));
        let (pa, pb) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        write_questions(&pa, &a.questions).unwrap();
        write_questions(&pb, &b.questions).unwrap();
        assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
        assert_eq!(read_questions(&pa).unwrap().len(), 6);
        assert_eq!(a.manifest, b.manifest);
    }
}
