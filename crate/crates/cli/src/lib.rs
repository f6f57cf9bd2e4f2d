//! Command-line entry points: direct solver access on anchor fixtures, the
//! full document-inversion pipeline, operand proposal, and benchmark
//! generation/evaluation. Structured results go to stdout, logs to stderr.

pub mod config;
pub mod oracle_spec;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use arithprobe::bench::{self, BenchConfig, Pipeline};
use arithprobe::fixtures::{AnchorSetFile, DocumentFile};
use arithprobe::linsys::{cross_validate, solve_analytical, AnchorSet};
use arithprobe::oracle::Oracle;
use arithprobe::probe::{
    invert, propose_operands_with_evidence, Inversion, ProbeError, SolverChoice,
};
use arithprobe::rational::{render_decimal, MAX_RENDER_DECIMALS};
use arithprobe::search::{enumerate_space_with, solve_search};
use arithprobe::{to_rational_form, InvertError};
use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use serde::Serialize;

/// Process exit codes: validation failures, solver failures, and oracle
/// failures are distinguished for scripting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Validation,
    Solver,
    Oracle,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        match self {
            ExitKind::Validation => 2,
            ExitKind::Solver => 3,
            ExitKind::Oracle => 4,
        }
    }
}

#[derive(Debug)]
pub struct AppError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl AppError {
    fn validation(error: anyhow::Error) -> Self {
        AppError {
            kind: ExitKind::Validation,
            error,
        }
    }

    fn solver(error: anyhow::Error) -> Self {
        AppError {
            kind: ExitKind::Solver,
            error,
        }
    }
}

fn classify_probe(e: &ProbeError) -> ExitKind {
    match e {
        ProbeError::Oracle(_) => ExitKind::Oracle,
        ProbeError::NoSpans | ProbeError::RangeTooSmall { .. } | ProbeError::TooFewGroups { .. } => {
            ExitKind::Validation
        }
        ProbeError::TooManyOperands { .. } | ProbeError::NoOperands => ExitKind::Solver,
    }
}

fn classify_invert(e: &InvertError) -> ExitKind {
    match e {
        InvertError::Probe(p) => classify_probe(p),
        InvertError::UnparseableAnswer { .. } => ExitKind::Oracle,
        InvertError::Linsys(_) | InvertError::Search(_) | InvertError::AnswerUndefined => {
            ExitKind::Solver
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "arithprobe",
    about = "Recover the arithmetic expression behind a black-box answerer via anchor-number probing",
    version
)]
pub struct Cli {
    /// Path to a TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for all randomness in the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Oracle spec: calc, expr:<text>, replay:<path>, http[:<url>].
    #[arg(long, global = true)]
    pub oracle: Option<String>,

    /// Concurrent oracle queries.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an anchor-set fixture directly with one of the solvers.
    Solve(SolveArgs),
    /// Run the full pipeline on a document fixture.
    Invert(InvertArgs),
    /// Propose which numbers in a document feed the answer.
    Propose(ProposeArgs),
    /// Generate a synthetic expression benchmark dataset (JSONL).
    BenchGen(BenchGenArgs),
    /// Evaluate an oracle or pipeline on a dataset, emitting per-bucket CSV.
    BenchEval(BenchEvalArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Anchor-set fixture (JSON).
    pub anchors: PathBuf,
    /// analytical, search, or anneal.
    #[arg(long)]
    pub solver: Option<String>,
    /// Cross-validation folds for the analytical solver.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Exact matches required for match-count ranking (search).
    #[arg(long)]
    pub c_threshold: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// Document fixture (JSON).
    pub document: PathBuf,
    #[arg(long)]
    pub solver: Option<String>,
    /// Skip operand proposal and use these span indices (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub operands: Option<Vec<usize>>,
    /// Anchor groups to sample (defaults per operand count).
    #[arg(long)]
    pub group_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProposeArgs {
    /// Document fixture (JSON).
    pub document: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchGenArgs {
    /// TOML file holding the generator configuration.
    #[arg(long)]
    pub bench_config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub operand_counts: Option<Vec<u8>>,
    /// Range exponents: operands stay below 10^e.
    #[arg(long, value_delimiter = ',')]
    pub ranges: Option<Vec<u8>>,
    /// Decimal precisions (0..=3).
    #[arg(long, value_delimiter = ',')]
    pub precisions: Option<Vec<u8>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub max_expressions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchEvalArgs {
    /// Dataset file (JSONL) produced by bench-gen.
    pub dataset: PathBuf,
    /// direct, analytical, search, or anneal.
    #[arg(long, default_value = "direct")]
    pub pipeline: String,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Exact-match tolerance as 10^-digits relative.
    #[arg(long, default_value_t = 6)]
    pub tolerance_digits: u32,
}

fn load_run_config(cli: &Cli) -> Result<RunConfig, AppError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(AppError::validation)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(oracle) = &cli.oracle {
        cfg.oracle.spec = oracle.clone();
    }
    if let Some(parallelism) = cli.parallelism {
        cfg.parallelism = parallelism;
    }
    Ok(cfg)
}

fn build_oracle(cfg: &RunConfig) -> Result<Box<dyn Oracle>, AppError> {
    oracle_spec::build_oracle(&cfg.oracle).map_err(AppError::validation)
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    let cfg = load_run_config(&cli)?;
    match &cli.command {
        Command::Solve(args) => cmd_solve(args, cfg),
        Command::Invert(args) => cmd_invert(args, cfg),
        Command::Propose(args) => cmd_propose(args, cfg),
        Command::BenchGen(args) => cmd_bench_gen(args, cfg),
        Command::BenchEval(args) => cmd_bench_eval(args, cfg),
    }
}

fn load_anchor_set(path: &PathBuf) -> Result<AnchorSet, AppError> {
    AnchorSetFile::load(path)
        .and_then(|f| f.to_anchor_set())
        .map_err(|e| AppError::validation(anyhow::Error::new(e)))
}

fn cmd_solve(args: &SolveArgs, mut cfg: RunConfig) -> Result<(), AppError> {
    if let Some(solver) = &args.solver {
        cfg.solver = solver.clone();
    }
    if let Some(folds) = args.folds {
        cfg.analytical.folds = folds;
    }
    if let Some(t) = args.c_threshold {
        cfg.search.c_threshold = t;
    }
    let solver = cfg.solver_choice().map_err(AppError::validation)?;
    let set = load_anchor_set(&args.anchors)?;
    let mut out = String::new();

    match solver {
        SolverChoice::Search => {
            let invert_cfg = cfg.invert_config().map_err(AppError::validation)?;
            let space = enumerate_space_with(
                set.arity(),
                &invert_cfg.constants,
                invert_cfg.include_lower_arities,
            )
            .map_err(|e| AppError::solver(anyhow::Error::new(e)))?;
            let solution = solve_search(&set, &space, &invert_cfg.search)
                .map_err(|e| AppError::solver(anyhow::Error::new(e)))?;
            writeln!(out, "y = {}", solution.expression).unwrap();
            writeln!(out, "solver = search").unwrap();
            writeln!(out, "groups = {}", set.len()).unwrap();
            writeln!(out, "matches = {}/{}", solution.exact_matches, set.len()).unwrap();
            writeln!(
                out,
                "error = {}",
                render_decimal(&solution.total_error, MAX_RENDER_DECIMALS)
            )
            .unwrap();
        }
        SolverChoice::Analytical => {
            let folds = cfg.analytical.folds.max(1);
            let (vector, expression, agreement) = if folds > 1 {
                let cv = cross_validate(&set, folds)
                    .map_err(|e| AppError::solver(anyhow::Error::new(e)))?;
                let agreement = format!("{}/{}", cv.agreeing_folds, cv.folds);
                (cv.consensus, cv.expression, Some(agreement))
            } else {
                let v = solve_analytical(&set)
                    .map_err(|e| AppError::solver(anyhow::Error::new(e)))?;
                let e = to_rational_form(&v)
                    .map_err(|e| AppError::solver(anyhow::Error::new(e)))?;
                (v, e, None)
            };
            writeln!(out, "y = {expression}").unwrap();
            writeln!(out, "solver = analytical").unwrap();
            writeln!(out, "groups = {}", set.len()).unwrap();
            if let Some(a) = agreement {
                writeln!(out, "agreement = {a}").unwrap();
            }
            for (mask, coeff) in vector.iter() {
                if *coeff != arithprobe::rational::int(0) {
                    writeln!(out, "coeff[{}] = {}", mask.label(set.arity()), coeff).unwrap();
                }
            }
        }
        SolverChoice::Anneal => {
            let invert_cfg = cfg.invert_config().map_err(AppError::validation)?;
            let outcome = arithprobe::anneal::solve_anneal(&set, &invert_cfg.anneal);
            let expression = to_rational_form(&outcome.coefficients)
                .map_err(|e| AppError::solver(anyhow::Error::new(e)))?;
            writeln!(out, "y = {expression}").unwrap();
            writeln!(out, "solver = anneal").unwrap();
            writeln!(out, "groups = {}", set.len()).unwrap();
            writeln!(out, "loss = {}", outcome.state.loss).unwrap();
            writeln!(out, "converged = {}", outcome.converged).unwrap();
        }
    }
    print!("{out}");
    Ok(())
}

#[derive(Serialize)]
struct InversionOutput {
    expression: String,
    answer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold: Option<String>,
    anchors: AnchorSetFile,
    diagnostics: arithprobe::probe::Diagnostics,
}

fn inversion_to_json(inv: &Inversion, gold: Option<String>) -> String {
    let output = InversionOutput {
        expression: inv.expression.to_string(),
        answer: render_decimal(&inv.answer, MAX_RENDER_DECIMALS),
        gold,
        anchors: AnchorSetFile::from_anchor_set(&inv.anchors),
        diagnostics: inv.diagnostics.clone(),
    };
    serde_json::to_string_pretty(&output).expect("inversion serializes")
}

fn cmd_invert(args: &InvertArgs, mut cfg: RunConfig) -> Result<(), AppError> {
    if let Some(solver) = &args.solver {
        cfg.solver = solver.clone();
    }
    let doc = DocumentFile::load(&args.document)
        .and_then(|f| f.to_document())
        .map_err(|e| AppError::validation(anyhow::Error::new(e)))?;
    let oracle = build_oracle(&cfg)?;
    let mut invert_cfg = cfg.invert_config().map_err(AppError::validation)?;
    invert_cfg.group_size = args.group_size;
    invert_cfg.operand_override = args.operands.clone();
    let inversion = invert(&doc, oracle.as_ref(), &invert_cfg)
        .map_err(|e| AppError {
            kind: classify_invert(&e),
            error: anyhow::Error::new(e),
        })?;
    let gold = doc
        .gold
        .as_ref()
        .map(|g| render_decimal(g, MAX_RENDER_DECIMALS));
    println!("{}", inversion_to_json(&inversion, gold));
    Ok(())
}

#[derive(Serialize)]
struct ProposalOutput {
    operand_spans: Vec<usize>,
    spans: Vec<arithprobe::probe::SpanProposal>,
}

fn cmd_propose(args: &ProposeArgs, cfg: RunConfig) -> Result<(), AppError> {
    let doc = DocumentFile::load(&args.document)
        .and_then(|f| f.to_document())
        .map_err(|e| AppError::validation(anyhow::Error::new(e)))?;
    let oracle = build_oracle(&cfg)?;
    let invert_cfg = cfg.invert_config().map_err(AppError::validation)?;
    let (template, spans) =
        propose_operands_with_evidence(&doc, oracle.as_ref(), &invert_cfg.proposal).map_err(
            |e| AppError {
                kind: classify_probe(&e),
                error: anyhow::Error::new(e),
            },
        )?;
    let output = ProposalOutput {
        operand_spans: template.operand_spans,
        spans,
    };
    println!("{}", serde_json::to_string_pretty(&output).unwrap());
    Ok(())
}

fn write_or_stdout(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), AppError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(AppError::validation),
        None => {
            std::io::stdout()
                .write_all(bytes)
                .context("writing stdout")
                .map_err(AppError::validation)
        }
    }
}

fn cmd_bench_gen(args: &BenchGenArgs, cfg: RunConfig) -> Result<(), AppError> {
    let mut bench_cfg = match &args.bench_config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(AppError::validation)?;
            toml::from_str::<BenchConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(AppError::validation)?
        }
        None => BenchConfig {
            seed: cfg.seed,
            ..Default::default()
        },
    };
    if let Some(v) = &args.operand_counts {
        bench_cfg.operand_counts = v.clone();
    }
    if let Some(v) = &args.ranges {
        bench_cfg.range_exponents = v.clone();
    }
    if let Some(v) = &args.precisions {
        bench_cfg.precisions = v.clone();
    }
    if let Some(v) = args.samples {
        bench_cfg.samples_per_expression = v;
    }
    if let Some(v) = args.max_expressions {
        bench_cfg.max_expressions_per_bucket = v;
    }
    let dataset =
        bench::generate(&bench_cfg).map_err(|e| AppError::validation(anyhow::Error::new(e)))?;
    let mut buf = Vec::new();
    bench::write_jsonl(&dataset, &mut buf)
        .context("serializing dataset")
        .map_err(AppError::validation)?;
    write_or_stdout(&args.out, &buf)
}

fn cmd_bench_eval(args: &BenchEvalArgs, cfg: RunConfig) -> Result<(), AppError> {
    let file = std::fs::File::open(&args.dataset)
        .with_context(|| format!("opening {}", args.dataset.display()))
        .map_err(AppError::validation)?;
    let dataset = bench::read_jsonl(std::io::BufReader::new(file))
        .map_err(|e| AppError::validation(anyhow::Error::new(e)))?;
    let pipeline: Pipeline = args
        .pipeline
        .parse()
        .map_err(|e: String| AppError::validation(anyhow::anyhow!(e)))?;
    let oracle = build_oracle(&cfg)?;
    let invert_cfg = cfg.invert_config().map_err(AppError::validation)?;
    let tolerance = arithprobe::rational::rel_tolerance(args.tolerance_digits);
    let report = bench::evaluate(&dataset, pipeline, oracle.as_ref(), &tolerance, &invert_cfg);
    if report.errors > 0 {
        log::warn!("{} items errored and were scored as misses", report.errors);
    }
    let mut buf = Vec::new();
    report
        .to_csv(&mut buf)
        .context("writing CSV")
        .map_err(AppError::validation)?;
    write_or_stdout(&args.out, &buf)
}
