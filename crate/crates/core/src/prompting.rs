//! Few-shot example selection and prompt assembly for each generation method.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ContextRecord;
use crate::hashing::{content_hash, seed_from_str};
use crate::retrieval::{self, CorpusDoc, LexicalIndex, RetrievalError, RetrievedDoc, Retriever};
use crate::text::{collapse_whitespace, token_count, tokenize};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
    #[error("requested {requested} few-shot examples but only {available} training records are usable")]
    NotEnoughExamples { requested: usize, available: usize },
    #[error("invalid prompt template: {0}")]
    Template(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    Icl,
    Rag,
    Hybrid,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Icl => "icl",
            Method::Rag => "rag",
            Method::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" => Ok(Method::Baseline),
            "icl" => Ok(Method::Icl),
            "rag" => Ok(Method::Rag),
            "hybrid" => Ok(Method::Hybrid),
            other => Err(PromptError::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    #[default]
    StratifiedRandom,
    SimilarityTopM,
}

impl FromStr for SelectionStrategy {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "stratified" | "stratified_random" => Ok(SelectionStrategy::StratifiedRandom),
            "similarity" | "similarity_top_m" => Ok(SelectionStrategy::SimilarityTopM),
            other => Err(PromptError::InvalidConfig(format!(
                "unknown selection strategy `{other}`"
            ))),
        }
    }
}

/// `icl_shots` and `hybrid_shots` count few-shot examples; `retrieval_k`
/// counts retrieved documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub method: Method,
    pub icl_shots: usize,
    pub retrieval_k: usize,
    pub hybrid_shots: usize,
    pub seed: u64,
    pub selection_strategy: SelectionStrategy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::Baseline,
            icl_shots: 5,
            retrieval_k: 5,
            hybrid_shots: 5,
            seed: 0,
            selection_strategy: SelectionStrategy::StratifiedRandom,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PromptError> {
        let fail = |msg: &str| Err(PromptError::InvalidConfig(msg.to_string()));
        match self.method {
            Method::Icl if self.icl_shots == 0 => fail("icl requires icl_shots >= 1"),
            Method::Rag if self.retrieval_k == 0 => fail("rag requires retrieval_k >= 1"),
            Method::Hybrid if self.retrieval_k == 0 || self.hybrid_shots == 0 => {
                fail("hybrid requires retrieval_k >= 1 and hybrid_shots >= 1")
            }
            _ => Ok(()),
        }
    }

    pub fn needs_retrieval(&self) -> bool {
        matches!(self.method, Method::Rag | Method::Hybrid)
    }

    /// Number of few-shot examples the method uses, if any.
    pub fn shots(&self) -> Option<usize> {
        match self.method {
            Method::Icl => Some(self.icl_shots),
            Method::Hybrid => Some(self.hybrid_shots),
            _ => None,
        }
    }

    /// Short run label, e.g. `icl-k5` or `hybrid-k5-m5`.
    pub fn label(&self) -> String {
        match self.method {
            Method::Baseline => "baseline".into(),
            Method::Icl => format!("icl-k{}", self.icl_shots),
            Method::Rag => format!("rag-k{}", self.retrieval_k),
            Method::Hybrid => format!("hybrid-k{}-m{}", self.retrieval_k, self.hybrid_shots),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    /// id of the training record the example came from
    pub record_id: String,
    pub passage: String,
    pub question: String,
}

pub const PASSAGE_LABEL: &str = "Passage:";
pub const QUESTION_LABEL: &str = "Question:";
pub const CONTEXT_HEADER: &str = "Related material:";
pub const DEFAULT_TOKEN_BUDGET: usize = 3000;

pub const DEFAULT_TEMPLATE: &str = "\
You write exam questions for school students. Read the final passage and write one question \
that a student can answer from it. Reply with the question only.

{examples}{contexts}Passage: {passage}
Question:";

/// Prompt layout with `{examples}`, `{contexts}` and `{passage}` placeholders,
/// each exactly once and in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    id: String,
    text: String,
    /// upper bound on prompt tokens; retrieved documents are dropped to fit
    pub token_budget: usize,
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut last = 0;
        for placeholder in ["{examples}", "{contexts}", "{passage}"] {
            let count = text.matches(placeholder).count();
            if count != 1 {
                return Err(PromptError::Template(format!(
                    "`{placeholder}` must appear exactly once (found {count})"
                )));
            }
            let at = text.find(placeholder).unwrap_or_default();
            if at < last {
                return Err(PromptError::Template(
                    "placeholders must appear in the order {examples}, {contexts}, {passage}".into(),
                ));
            }
            last = at;
        }
        Ok(Self {
            id: format!("tpl-{}", &content_hash([text])[..16]),
            text: text.to_string(),
            token_budget: DEFAULT_TOKEN_BUDGET,
        })
    }

    pub fn with_budget(mut self, token_budget: usize) -> Self {
        self.token_budget = token_budget;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    fn render(&self, examples: &[FewShotExample], retrieved: &[RetrievedDoc], passage: &str) -> String {
        let mut example_text = String::new();
        for ex in examples {
            example_text.push_str(&format!(
                "{PASSAGE_LABEL} {}\n{QUESTION_LABEL} {}\n\n",
                collapse_whitespace(&ex.passage),
                collapse_whitespace(&ex.question)
            ));
        }
        let mut context_text = String::new();
        if !retrieved.is_empty() {
            context_text.push_str(CONTEXT_HEADER);
            context_text.push('\n');
            for doc in retrieved {
                context_text.push_str(&format!(
                    "[Document {} | {}]\n{}\n",
                    doc.rank,
                    doc.doc.doc_id,
                    collapse_whitespace(&doc.doc.text)
                ));
            }
            context_text.push('\n');
        }
        self.text
            .replacen("{examples}", &example_text, 1)
            .replacen("{contexts}", &context_text, 1)
            .replacen("{passage}", passage, 1)
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATE).expect("default template is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub method: Method,
    pub target_passage: String,
    pub examples: Vec<FewShotExample>,
    pub retrieved: Vec<RetrievedDoc>,
    pub rendered_text: String,
    /// hash of the rendered text and method; generation parameters enter the cache key
    pub prompt_hash: String,
    pub template_id: String,
}

fn bundle(
    method: Method,
    target_passage: &str,
    examples: &[FewShotExample],
    retrieved: &[RetrievedDoc],
    template: &PromptTemplate,
) -> PromptBundle {
    let passage = collapse_whitespace(target_passage);
    let mut docs: Vec<RetrievedDoc> = retrieved.to_vec();
    docs.sort_by(|a, b| retrieval::rank_order((&a.doc.doc_id, a.score), (&b.doc.doc_id, b.score)));
    for (i, d) in docs.iter_mut().enumerate() {
        d.rank = i + 1;
    }
    let mut rendered = template.render(examples, &docs, &passage);
    while !docs.is_empty() && token_count(&rendered) > template.token_budget {
        docs.pop();
        rendered = template.render(examples, &docs, &passage);
    }
    PromptBundle {
        method,
        prompt_hash: content_hash([rendered.as_str(), method.as_str()]),
        target_passage: passage,
        examples: examples.to_vec(),
        retrieved: docs,
        rendered_text: rendered,
        template_id: template.id().to_string(),
    }
}

/// Passage-only prompt.
pub fn assemble_baseline_prompt(target_passage: &str, template: &PromptTemplate) -> PromptBundle {
    bundle(Method::Baseline, target_passage, &[], &[], template)
}

/// Instruction header, the examples in selection order, then the target.
pub fn assemble_icl_prompt(
    examples: &[FewShotExample],
    target_passage: &str,
    template: &PromptTemplate,
) -> PromptBundle {
    bundle(Method::Icl, target_passage, examples, &[], template)
}

/// Retrieved documents in rank order, then the target. With nothing
/// retrieved the text equals the baseline prompt.
pub fn assemble_rag_input(target_passage: &str, retrieved: &[RetrievedDoc], template: &PromptTemplate) -> PromptBundle {
    bundle(Method::Rag, target_passage, &[], retrieved, template)
}

/// Examples, then retrieved documents, then the target.
pub fn assemble_hybrid_prompt(
    target_passage: &str,
    retrieved: &[RetrievedDoc],
    examples: &[FewShotExample],
    template: &PromptTemplate,
) -> PromptBundle {
    bundle(Method::Hybrid, target_passage, examples, retrieved, template)
}

/// Training pool for few-shot selection. The BM25 index over training
/// passages is only built when similarity selection is requested.
pub struct ExampleSelector {
    train: Vec<ContextRecord>,
    index: std::sync::OnceLock<Result<LexicalIndex, String>>,
}

impl ExampleSelector {
    pub fn new(train: Vec<ContextRecord>) -> Self {
        Self {
            train,
            index: std::sync::OnceLock::new(),
        }
    }

    pub fn train(&self) -> &[ContextRecord] {
        &self.train
    }

    fn index(&self) -> Result<&LexicalIndex, PromptError> {
        self.index
            .get_or_init(|| {
                let docs = self
                    .train
                    .iter()
                    .map(|r| CorpusDoc {
                        doc_id: r.id.clone(),
                        text: r.context.clone(),
                        source: "train".into(),
                    })
                    .collect();
                retrieval::build_index(docs).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| PromptError::InvalidConfig(format!("training pool: {e}")))
    }

    pub fn select(
        &self,
        count: usize,
        strategy: SelectionStrategy,
        seed: u64,
        target: &ContextRecord,
    ) -> Result<Vec<FewShotExample>, PromptError> {
        if count == 0 {
            return Err(PromptError::InvalidConfig("example count must be >= 1".into()));
        }
        let candidates: Vec<&ContextRecord> = self.train.iter().filter(|r| r.id != target.id).collect();
        if count > self.train.len() || count > candidates.len() {
            return Err(PromptError::NotEnoughExamples {
                requested: count,
                available: candidates.len(),
            });
        }
        let chosen: Vec<&ContextRecord> = match strategy {
            SelectionStrategy::StratifiedRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ seed_from_str(&target.id));
                let (mut same, mut other): (Vec<&ContextRecord>, Vec<&ContextRecord>) =
                    candidates.into_iter().partition(|r| r.subject == target.subject);
                same.shuffle(&mut rng);
                other.shuffle(&mut rng);
                same.into_iter().chain(other).take(count).collect()
            }
            SelectionStrategy::SimilarityTopM => {
                let index = self.index()?;
                let query = tokenize(&target.context);
                let mut scored = Vec::with_capacity(candidates.len());
                for r in candidates {
                    scored.push((r, retrieval::bm25_score(index, &query, &r.id)?));
                }
                scored.sort_by(|a, b| retrieval::rank_order((&a.0.id, a.1), (&b.0.id, b.1)));
                scored.into_iter().take(count).map(|(r, _)| r).collect()
            }
        };
        Ok(chosen
            .into_iter()
            .map(|r| FewShotExample {
                record_id: r.id.clone(),
                passage: r.context.clone(),
                question: r.question.clone(),
            })
            .collect())
    }
}

pub fn select_examples(
    train: &[ContextRecord],
    count: usize,
    strategy: SelectionStrategy,
    seed: u64,
    target: &ContextRecord,
) -> Result<Vec<FewShotExample>, PromptError> {
    ExampleSelector::new(train.to_vec()).select(count, strategy, seed, target)
}

/// Builds the prompt for each test record under one configuration.
pub struct PromptPipeline<'a> {
    config: PipelineConfig,
    template: PromptTemplate,
    selector: ExampleSelector,
    retriever: Option<&'a dyn Retriever>,
}

impl<'a> PromptPipeline<'a> {
    pub fn new(
        config: PipelineConfig,
        template: PromptTemplate,
        train: Vec<ContextRecord>,
        retriever: Option<&'a dyn Retriever>,
    ) -> Result<Self, PromptError> {
        config.validate()?;
        if config.needs_retrieval() && retriever.is_none() {
            return Err(PromptError::InvalidConfig(format!(
                "method {} needs a retrieval index",
                config.method
            )));
        }
        if let Some(shots) = config.shots() {
            if shots > train.len() {
                return Err(PromptError::NotEnoughExamples {
                    requested: shots,
                    available: train.len(),
                });
            }
        }
        Ok(Self {
            config,
            template,
            selector: ExampleSelector::new(train),
            retriever,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    pub fn train(&self) -> &[ContextRecord] {
        self.selector.train()
    }

    fn retrieve(&self, passage: &str) -> Result<Vec<RetrievedDoc>, PromptError> {
        match self.retriever {
            Some(r) => Ok(r.retrieve(passage, self.config.retrieval_k)?),
            None => Err(PromptError::InvalidConfig("no retrieval index loaded".into())),
        }
    }

    fn examples(&self, count: usize, target: &ContextRecord) -> Result<Vec<FewShotExample>, PromptError> {
        self.selector
            .select(count, self.config.selection_strategy, self.config.seed, target)
    }

    pub fn build(&self, target: &ContextRecord) -> Result<PromptBundle, PromptError> {
        let c = &self.config;
        let passage = target.context.as_str();
        Ok(match c.method {
            Method::Baseline => assemble_baseline_prompt(passage, &self.template),
            Method::Icl => assemble_icl_prompt(&self.examples(c.icl_shots, target)?, passage, &self.template),
            Method::Rag => assemble_rag_input(passage, &self.retrieve(passage)?, &self.template),
            Method::Hybrid => assemble_hybrid_prompt(
                passage,
                &self.retrieve(passage)?,
                &self.examples(c.hybrid_shots, target)?,
                &self.template,
            ),
        })
    }
}
