use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tracing::error;

use ontoalign::backend::{build_backend, BackendKind, ResponseCache};
use ontoalign::corpus::{parse_pair, Corpus, DEFAULT_SOURCE};
use ontoalign::experiment::{extract_transcript, run_cell, run_experiment, write_cell_artifacts, CellSettings, RunConfig};
use ontoalign::prompt::{build_prompts_with, PlanOptions};
use ontoalign::report::Aggregate;
use ontoalign::verbalize::verbalize_ontology_with;
use ontoalign::{
    classify_false_positives, evaluate, fetch_corpus, list_strategies, parse_alignment, parse_ontology, AlignError,
    Ontology, Ordering, StrategyId,
};

/// Ontology matching with a chat model acting as a naive matcher.
#[derive(Parser)]
#[command(name = "ontoalign", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Corpus root (ontologies/ and reference/).
    #[arg(long, global = true, env = "ONTOALIGN_CORPUS")]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    backend: Option<BackendKind>,
    /// Base URL of an OpenAI-compatible endpoint.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    /// Maximum tokens per message, reply reserve included.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Drop correspondences below this confidence before scoring.
    #[arg(long, global = true)]
    min_confidence: Option<f64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    no_cache: bool,
    /// Verbalize with rdfs:label text where available.
    #[arg(long, global = true)]
    labels: bool,
    /// Repetitions per cell (best F1 kept).
    #[arg(long, global = true)]
    runs: Option<u32>,
    /// Pool counts over pairs instead of averaging per-pair scores.
    #[arg(long, global = true)]
    micro: bool,
    /// More logging (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Gather the corpus from URLs, directories or zip files.
    Fetch {
        /// Defaults to the public conference-track archive.
        #[arg(long = "source")]
        sources: Vec<String>,
        /// Write the built-in synthetic corpus instead.
        #[arg(long, conflicts_with = "sources")]
        synthetic: bool,
    },
    /// Parse an ontology and print a summary.
    Ingest(OntologyArg),
    /// Print an ontology as triple lines.
    Verbalize {
        #[command(flatten)]
        onto: OntologyArg,
        #[arg(long, default_value = "as-parsed")]
        order: Ordering,
    },
    /// Show the messages a strategy would send for a pair.
    Plan {
        #[arg(long)]
        strategy: StrategyId,
        #[arg(long)]
        pair: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run one strategy on one pair and score it.
    Match {
        #[arg(long)]
        strategy: StrategyId,
        #[arg(long)]
        pair: String,
        /// Also write the extraction report here.
        #[arg(long)]
        dump_extraction: Option<PathBuf>,
    },
    /// Score an alignment file against the pair's reference.
    Eval {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        predicted: PathBuf,
    },
    /// Run the strategy × pair grid and write report.csv / report.md.
    Report {
        /// Comma-separated strategies; default all.
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<StrategyId>,
        /// Comma-separated pairs such as cmt-sigkdd; default all 21.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
    },
    /// Bucket the false positives of an alignment file.
    Diagnose {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        predicted: PathBuf,
    },
    /// List the prompt strategies.
    Strategies,
}

#[derive(Args)]
struct OntologyArg {
    /// Ontology name in the corpus.
    #[arg(long, required_unless_present = "file")]
    ontology: Option<String>,
    /// Or an RDF/XML file.
    #[arg(long, conflicts_with = "ontology")]
    file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Failures mapped to process exit codes.
enum Failure {
    /// A cell could not be completed.
    Cell(AlignError),
    /// Bad configuration, missing or broken corpus, unreadable inputs.
    Setup(AlignError),
}

impl From<AlignError> for Failure {
    fn from(e: AlignError) -> Self {
        Failure::Setup(e)
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();

    match run(cli) {
        Ok(code) => code,
        Err(Failure::Cell(e)) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Setup(e)) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn config(g: &Global) -> Result<RunConfig, AlignError> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &g.corpus {
        cfg.corpus = v.clone();
    }
    if let Some(v) = g.backend {
        cfg.backend.kind = v;
        if v == BackendKind::Remote && cfg.backend.model == ontoalign::backend::MOCK_MODEL {
            cfg.backend.model = String::new();
        }
    }
    if let Some(v) = &g.endpoint {
        cfg.backend.endpoint = Some(v.clone());
    }
    if let Some(v) = &g.model {
        cfg.backend.model = v.clone();
    }
    if let Some(v) = g.temperature {
        cfg.backend.temperature = v;
    }
    if let Some(v) = g.budget {
        cfg.budget = v;
        cfg.reserve = None;
    }
    if let Some(v) = g.min_confidence {
        cfg.min_confidence = v;
    }
    if let Some(v) = &g.out {
        cfg.out = v.clone();
    }
    if let Some(v) = g.workers {
        cfg.workers = v;
    }
    if let Some(v) = &g.cache_dir {
        cfg.cache_dir = Some(v.clone());
    }
    if let Some(v) = g.runs {
        cfg.runs = v;
    }
    cfg.no_cache |= g.no_cache;
    cfg.use_labels |= g.labels;
    if g.micro {
        cfg.aggregate = Aggregate::Micro;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), AlignError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_ontology(cfg: &RunConfig, arg: &OntologyArg) -> Result<Ontology, AlignError> {
    match (&arg.ontology, &arg.file) {
        (_, Some(file)) => {
            let bytes = fs::read(file).map_err(|e| AlignError::io(file, e))?;
            let name = file
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("ontology")
                .to_string();
            parse_ontology(&bytes, &name)
        }
        (Some(name), None) => Corpus::open(&cfg.corpus)?.load_ontology(name),
        (None, None) => Err(AlignError::Config("give --ontology or --file".into())),
    }
}

fn load_pair(cfg: &RunConfig, pair: &str) -> Result<(Ontology, Ontology), AlignError> {
    let (a, b) = parse_pair(pair)?;
    let corpus = Corpus::open(&cfg.corpus)?;
    Ok((corpus.load_ontology(a)?, corpus.load_ontology(b)?))
}

fn load_predicted(path: &Path, a: &Ontology, b: &Ontology) -> Result<ontoalign::Alignment, AlignError> {
    let bytes = fs::read(path).map_err(|e| AlignError::io(path, e))?;
    parse_alignment(&bytes, a, b)
}

fn run(cli: Cli) -> Outcome {
    let cfg = config(&cli.global)?;
    match cli.command {
        Command::Fetch { sources, synthetic } => {
            if synthetic {
                ontoalign::synthetic::write_corpus(&cfg.corpus)?;
                println!("wrote synthetic corpus to {}", cfg.corpus.display());
                return Ok(ExitCode::SUCCESS);
            }
            let sources = if sources.is_empty() {
                vec![DEFAULT_SOURCE.to_string()]
            } else {
                sources
            };
            let sums = fetch_corpus(&sources, &cfg.corpus)?;
            println!("wrote {} files to {}", sums.len(), cfg.corpus.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Ingest(arg) => {
            let o = load_ontology(&cfg, &arg)?;
            print_json(&json!({
                "name": o.name,
                "namespace": o.namespace,
                "classes": o.classes().count(),
                "properties": o.properties().count(),
                "statements": o.statements.len(),
                "subclass_statements": o.statements.iter().filter(|s| s.is_subclass()).count(),
                "skipped": o.skipped,
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verbalize { onto, order } => {
            let o = load_ontology(&cfg, &onto)?;
            for line in verbalize_ontology_with(&o, order, cfg.use_labels) {
                println!("{}", line.text);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plan { strategy, pair, format } => {
            let (a, b) = load_pair(&cfg, &pair)?;
            let opts = PlanOptions {
                use_labels: cfg.use_labels,
                ..PlanOptions::default()
            };
            let plan = build_prompts_with(strategy, &a, &b, cfg.token_budget()?, &opts).map_err(|e| {
                if e.is_token_limit() {
                    Failure::Cell(e)
                } else {
                    Failure::Setup(e)
                }
            })?;
            match format {
                Format::Text => print!("{}", plan.render_text()),
                Format::Json => print_json(&plan)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Match {
            strategy,
            pair,
            dump_extraction,
        } => {
            let (a, b) = load_pair(&cfg, &pair)?;
            let corpus = Corpus::open(&cfg.corpus)?;
            let reference = corpus.load_reference(&a, &b)?;
            let backend = build_backend(&cfg.backend).map_err(AlignError::from)?;
            let cache = cfg
                .cache_path()
                .map(ResponseCache::open)
                .transpose()
                .map_err(AlignError::from)?;
            let settings = CellSettings {
                budget: cfg.token_budget()?,
                min_confidence: cfg.min_confidence,
                use_labels: cfg.use_labels,
                runs: cfg.runs,
            };
            let art = run_cell(strategy, &a, &b, &reference, backend.as_ref(), cache.as_ref(), &settings)
                .map_err(Failure::Cell)?;
            let dir = cfg.out.join("cells").join(format!("{}-{}", a.name, b.name)).join(strategy.to_string());
            write_cell_artifacts(&dir, &art, &a, &b)?;
            if let Some(path) = dump_extraction {
                let report = extract_transcript(&art.transcript, &a, &b)?;
                let text = serde_json::to_string_pretty(&report).map_err(AlignError::from)? + "\n";
                fs::write(&path, text).map_err(|e| AlignError::io(&path, e))?;
            }
            print_json(&json!({
                "pair": format!("{}-{}", a.name, b.name),
                "strategy": strategy,
                "result": art.result,
                "unresolved": art.extraction.unresolved.len(),
                "hedged": art.extraction.hedged_count,
                "messages": art.plan.messages.len(),
                "cached": art.transcript.all_cached(),
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { pair, predicted } => {
            let (a, b) = load_pair(&cfg, &pair)?;
            let reference = Corpus::open(&cfg.corpus)?.load_reference(&a, &b)?;
            let predicted = load_predicted(&predicted, &a, &b)?.filtered(cfg.min_confidence);
            print_json(&evaluate(&predicted, &reference)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { strategies, pairs } => {
            let mut cfg = cfg;
            if !strategies.is_empty() {
                cfg.strategies = strategies;
            }
            if !pairs.is_empty() {
                cfg.pairs = pairs;
            }
            let summary = run_experiment(&cfg)?;
            print!("{}", summary.grid.to_markdown());
            eprintln!(
                "{} cells: {} completed, {} over token budget, {} failed; artifacts in {}",
                summary.grid.cells.len(),
                summary.grid.cells.iter().filter(|c| c.result().is_some()).count(),
                summary.token_limited(),
                summary.failures(),
                summary.out.display()
            );
            Ok(ExitCode::from(summary.exit_code() as u8))
        }
        Command::Diagnose { pair, predicted } => {
            let (a, b) = load_pair(&cfg, &pair)?;
            let reference = Corpus::open(&cfg.corpus)?.load_reference(&a, &b)?;
            let predicted = load_predicted(&predicted, &a, &b)?;
            print_json(&classify_false_positives(&predicted, &reference, &a, &b)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Strategies => {
            for s in list_strategies() {
                println!("{}\t{}", s.id, s.description);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
