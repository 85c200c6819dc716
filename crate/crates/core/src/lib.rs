//! Question-generation benchmark toolkit.
//!
//! Three generation pipelines are supported over a passage: few-shot prompting
//! (ICL), retrieval-augmented input (RAG) and the hybrid of both, plus a
//! passage-only baseline. Outputs are scored with BLEU-4, ROUGE-L, METEOR,
//! chrF and greedy-matching BERTScore, human ratings are checked with Fleiss's
//! kappa, and improvements are starred with a Student's t-test before being
//! rendered into comparison tables.

pub mod agreement;
pub mod dataset;
pub mod generation;
pub mod hashing;
pub mod metrics;
pub mod prompting;
pub mod report;
pub mod retrieval;
pub mod stats;
pub mod text;

pub use dataset::{ContextRecord, DatasetSplit, Subject};
pub use generation::{GeneratedQuestion, GenerationParams};
pub use prompting::{Method, PipelineConfig, PromptBundle, PromptTemplate};
pub use retrieval::{CorpusDoc, LexicalIndex, RetrievedDoc};
