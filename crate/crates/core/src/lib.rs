//! Ontology alignment with a chat model used as a naive matcher.
//!
//! The pipeline ingests RDF/XML ontologies, renders their triples as
//! `Predicate (Subject, Object)` lines, packs them into one of seven prompt
//! layouts under a token budget, sends the conversation to a chat backend
//! (or a deterministic string-equivalence mock), extracts correspondences
//! from the free-text replies and scores them against reference alignments.

pub mod alignment_format;
pub mod backend;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod extract;
pub mod model;
pub mod prompt;
pub mod rdfxml;
pub mod synthetic;
pub mod report;
pub mod verbalize;

pub use alignment_format::{parse_alignment, serialize_alignment};
pub use backend::{
    build_backend, complete, complete_with, mock_respond, BackendConfig, BackendKind, ChatBackend,
    MockBackend, ResponseCache, Transcript,
};
pub use corpus::{all_pairs, fetch_corpus, Corpus};
pub use diagnostics::{classify_false_positives, Category, DiagnosticsReport};
pub use error::{AlignError, BackendError, Result};
pub use eval::{evaluate, macro_average, micro_average, Averages, EvalResult};
pub use experiment::{run_experiment, ExperimentSummary, RunConfig};
pub use extract::{extract, merge_reports, ExtractionReport};
pub use model::{
    Alignment, Correspondence, EntityId, EntityKind, Ontology, Provenance, Relation, ResolveError,
    SkipReport, Statement, Term,
};
pub use prompt::{
    build_prompts, estimate_tokens, list_strategies, PromptPlan, Strategy, StrategyId, TokenBudget,
};
pub use rdfxml::parse_ontology;
pub use report::{CellOutcome, CellStatus, ResultGrid};
pub use verbalize::{humanize, verbalize_ontology, verbalize_statement, Ordering, VerbalizedLine};
