//! Strategy × pair grid runs: plan, complete, extract, evaluate, diagnose, report.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::alignment_format::serialize_alignment_with;
use crate::backend::{build_backend, complete_run, BackendConfig, ChatBackend, ResponseCache, Transcript};
use crate::corpus::{all_pairs, pair_name, parse_pair, Corpus};
use crate::diagnostics::{classify_false_positives, DiagnosticsReport};
use crate::error::{AlignError, Result};
use crate::eval::{evaluate, EvalResult};
use crate::extract::{extract, merge_reports, ExtractionReport};
use crate::model::{Alignment, Ontology};
use crate::prompt::{build_prompts_with, PlanOptions, PromptPlan, StrategyId, TokenBudget};
use crate::report::{Aggregate, CellOutcome, CellStatus, ResultGrid};

/// Run configuration, loadable from a flat JSON object. Missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus: PathBuf,
    /// Pairs such as `cmt-sigkdd`; empty means all 21.
    pub pairs: Vec<String>,
    /// Empty means P1–P7.
    pub strategies: Vec<StrategyId>,
    #[serde(flatten)]
    pub backend: BackendConfig,
    pub budget: usize,
    /// Tokens kept free for the reply; derived from `budget` when absent.
    pub reserve: Option<usize>,
    pub min_confidence: f64,
    pub out: PathBuf,
    pub workers: usize,
    /// Response cache directory; `<out>/cache` when absent.
    pub cache_dir: Option<PathBuf>,
    pub no_cache: bool,
    pub use_labels: bool,
    /// Repetitions per cell; the run with the best F1 is kept.
    pub runs: u32,
    pub aggregate: Aggregate,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus"),
            pairs: Vec::new(),
            strategies: Vec::new(),
            backend: BackendConfig::default(),
            budget: 8192,
            reserve: None,
            min_confidence: 0.0,
            out: PathBuf::from("out"),
            workers: 4,
            cache_dir: None,
            no_cache: false,
            use_labels: false,
            runs: 1,
            aggregate: Aggregate::Macro,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AlignError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AlignError::Config(format!("{}: {e}", path.display())))
    }

    pub fn token_budget(&self) -> Result<TokenBudget> {
        match self.reserve {
            Some(r) => TokenBudget::new(self.budget, r),
            None => TokenBudget::with_max(self.budget),
        }
    }

    pub fn resolved_pairs(&self) -> Result<Vec<(&'static str, &'static str)>> {
        if self.pairs.is_empty() {
            return Ok(all_pairs());
        }
        let mut out = Vec::new();
        for p in &self.pairs {
            let pair = parse_pair(p)?;
            if !out.contains(&pair) {
                out.push(pair);
            }
        }
        // Rows always follow the canonical order.
        let order = all_pairs();
        out.sort_by_key(|p| order.iter().position(|q| q == p));
        Ok(out)
    }

    pub fn resolved_strategies(&self) -> Vec<StrategyId> {
        if self.strategies.is_empty() {
            return StrategyId::ALL.to_vec();
        }
        let mut s = self.strategies.clone();
        s.sort();
        s.dedup();
        s
    }

    pub fn cache_path(&self) -> Option<PathBuf> {
        if self.no_cache {
            None
        } else {
            Some(self.cache_dir.clone().unwrap_or_else(|| self.out.join("cache")))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(AlignError::Config(format!(
                "min_confidence must lie in [0, 1], got {}",
                self.min_confidence
            )));
        }
        if self.workers == 0 {
            return Err(AlignError::Config("workers must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(AlignError::Config("runs must be at least 1".into()));
        }
        self.backend.validate()?;
        self.token_budget()?;
        self.resolved_pairs()?;
        Ok(())
    }
}

/// Settings shared by every cell of a run.
#[derive(Debug, Clone, Copy)]
pub struct CellSettings {
    pub budget: TokenBudget,
    pub min_confidence: f64,
    pub use_labels: bool,
    pub runs: u32,
}

impl Default for CellSettings {
    fn default() -> Self {
        Self {
            budget: TokenBudget::default(),
            min_confidence: 0.0,
            use_labels: false,
            runs: 1,
        }
    }
}

/// Everything produced for one (pair, strategy) cell.
#[derive(Debug, Clone)]
pub struct CellArtifacts {
    pub plan: PromptPlan,
    pub transcript: Transcript,
    pub extraction: ExtractionReport,
    pub alignment: Alignment,
    pub result: EvalResult,
    pub diagnostics: DiagnosticsReport,
    /// F1 of every repetition, in run order.
    pub run_f1: Vec<f64>,
}

/// Extract each reply of the transcript and merge the per-turn reports.
pub fn extract_transcript(t: &Transcript, a: &Ontology, b: &Ontology) -> Result<ExtractionReport> {
    let reports: Vec<ExtractionReport> = t.responses().map(|r| extract(r, a, b, t.strategy)).collect();
    if reports.is_empty() {
        return Ok(ExtractionReport {
            pair: (a.name.clone(), b.name.clone()),
            ..ExtractionReport::default()
        });
    }
    merge_reports(&reports)
}

/// Run a single cell end to end.
pub fn run_cell(
    strategy: StrategyId,
    a: &Ontology,
    b: &Ontology,
    reference: &Alignment,
    backend: &dyn ChatBackend,
    cache: Option<&ResponseCache>,
    settings: &CellSettings,
) -> Result<CellArtifacts> {
    let opts = PlanOptions {
        use_labels: settings.use_labels,
        ..PlanOptions::default()
    };
    let plan = build_prompts_with(strategy, a, b, settings.budget, &opts)?;
    let mut best: Option<CellArtifacts> = None;
    let mut run_f1 = Vec::new();
    for run in 0..settings.runs.max(1) {
        let transcript = complete_run(&plan, backend, cache, run)?;
        let extraction = extract_transcript(&transcript, a, b)?;
        let alignment = extraction.to_alignment().filtered(settings.min_confidence);
        let result = evaluate(&alignment, reference)?;
        run_f1.push(result.f1);
        if best.as_ref().is_none_or(|bst| result.f1 > bst.result.f1) {
            let diagnostics = classify_false_positives(&alignment, reference, a, b)?;
            best = Some(CellArtifacts {
                plan: plan.clone(),
                transcript,
                extraction,
                alignment,
                result,
                diagnostics,
                run_f1: Vec::new(),
            });
        }
    }
    let mut best = best.expect("at least one run");
    best.run_f1 = run_f1;
    Ok(best)
}

fn namespace(o: &Ontology) -> String {
    match o.namespace.as_deref() {
        Some(ns) if ns.ends_with('#') || ns.ends_with('/') => ns.to_string(),
        Some(ns) => format!("{ns}#"),
        None => format!("http://{}#", o.name),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| AlignError::io(path, e))
}

/// Write the per-cell artifacts into `dir`.
pub fn write_cell_artifacts(dir: &Path, art: &CellArtifacts, a: &Ontology, b: &Ontology) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AlignError::io(dir, e))?;
    write_json(&dir.join("plan.json"), &art.plan)?;
    write_json(&dir.join("transcript.json"), &art.transcript)?;
    write_json(&dir.join("extraction.json"), &art.extraction)?;
    write_json(&dir.join("eval.json"), &art.result)?;
    write_json(&dir.join("diagnostics.json"), &art.diagnostics)?;
    let xml = serialize_alignment_with(&art.alignment, &namespace(a), &namespace(b));
    let path = dir.join("alignment.rdf");
    fs::write(&path, xml).map_err(|e| AlignError::io(&path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub grid: ResultGrid,
    pub out: PathBuf,
}

impl ExperimentSummary {
    pub fn failures(&self) -> usize {
        self.grid
            .cells
            .iter()
            .filter(|c| matches!(c.status, CellStatus::Failed { .. }))
            .count()
    }

    pub fn token_limited(&self) -> usize {
        self.grid
            .cells
            .iter()
            .filter(|c| matches!(c.status, CellStatus::TokenLimit { .. }))
            .count()
    }

    /// 0 when every cell completed or was token-limited, 1 when some cell failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures() > 0 {
            1
        } else {
            0
        }
    }
}

struct Loaded {
    ontologies: Vec<Ontology>,
    references: Vec<Alignment>,
}

fn load(corpus: &Corpus, pairs: &[(&str, &str)]) -> Result<Loaded> {
    let mut names: Vec<&str> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    names.sort_unstable();
    names.dedup();
    let mut missing = Vec::new();
    for n in &names {
        if !corpus.ontology_path(n).is_file() {
            missing.push(format!("ontologies/{n}.owl"));
        }
    }
    for (a, b) in pairs {
        if !corpus.reference_path(a, b).is_file() {
            missing.push(format!("reference/{}.rdf", pair_name(a, b)));
        }
    }
    if !missing.is_empty() {
        return Err(AlignError::LayoutInvalid(missing));
    }
    let ontologies = names
        .par_iter()
        .map(|n| corpus.load_ontology(n))
        .collect::<Result<Vec<_>>>()?;
    let find = |n: &str| ontologies.iter().find(|o| o.name == n).expect("loaded");
    let references = pairs
        .iter()
        .map(|(a, b)| corpus.load_reference(find(a), find(b)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Loaded { ontologies, references })
}

/// Run the configured grid with the configured backend.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let backend = build_backend(&cfg.backend)?;
    run_experiment_with(cfg, backend)
}

/// Run the configured grid with an explicit backend.
///
/// Configuration and corpus problems are returned as errors before anything is
/// written; per-cell problems are recorded in the grid.
pub fn run_experiment_with(cfg: &RunConfig, backend: Arc<dyn ChatBackend>) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let pairs = cfg.resolved_pairs()?;
    let strategies = cfg.resolved_strategies();
    let corpus = Corpus::open(&cfg.corpus)?;
    let loaded = load(&corpus, &pairs)?;
    let find = |n: &str| {
        loaded
            .ontologies
            .iter()
            .find(|o| o.name == n)
            .expect("loaded")
    };

    fs::create_dir_all(&cfg.out).map_err(|e| AlignError::io(&cfg.out, e))?;
    let cache = cfg.cache_path().map(ResponseCache::open).transpose()?;
    let settings = CellSettings {
        budget: cfg.token_budget()?,
        min_confidence: cfg.min_confidence,
        use_labels: cfg.use_labels,
        runs: cfg.runs,
    };

    let jobs: Vec<(usize, StrategyId)> = (0..pairs.len())
        .flat_map(|i| strategies.iter().map(move |&s| (i, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| AlignError::Config(format!("thread pool: {e}")))?;

    let cells: Vec<CellOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, strategy)| {
                let (an, bn) = pairs[i];
                let (a, b) = (find(an), find(bn));
                let pair = pair_name(an, bn);
                let dir = cfg.out.join("cells").join(&pair).join(strategy.to_string());
                let status = match run_cell(strategy, a, b, &loaded.references[i], backend.as_ref(), cache.as_ref(), &settings)
                    .and_then(|art| write_cell_artifacts(&dir, &art, a, b).map(|_| art.result))
                {
                    Ok(result) => {
                        info!(%pair, %strategy, f1 = result.f1, "cell done");
                        CellStatus::Completed { result }
                    }
                    Err(e) if e.is_token_limit() => {
                        info!(%pair, %strategy, "cell exceeds token budget");
                        CellStatus::TokenLimit { message: e.to_string() }
                    }
                    Err(e) => {
                        warn!(%pair, %strategy, error = %e, "cell failed");
                        CellStatus::Failed { message: e.to_string() }
                    }
                };
                CellOutcome { pair, strategy, status }
            })
            .collect()
    });

    let grid = ResultGrid {
        pairs: pairs.iter().map(|(a, b)| pair_name(a, b)).collect(),
        strategies,
        cells,
        aggregate: cfg.aggregate,
    };
    let write = |name: &str, text: String| {
        let path = cfg.out.join(name);
        fs::write(&path, text).map_err(|e| AlignError::io(&path, e))
    };
    write("report.csv", grid.to_csv())?;
    write("report.md", grid.to_markdown())?;
    write_json(&cfg.out.join("summary.json"), &grid)?;
    Ok(ExperimentSummary {
        grid,
        out: cfg.out.clone(),
    })
}
