//! `ssg`: solve, generate, analyze and benchmark simple stochastic
//! games in the line-oriented `.ssg` text format.
//!
//! Exit codes: 0 on success, 1 when a solver did not converge (timeout,
//! iteration cap or stall), 2 on usage and I/O errors.

mod bench;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ssg_core::analysis::{aggregate_features, compute_features, FEATURE_NAMES};
use ssg_core::format::{parse_model, serialize_model};
use ssg_core::generate::{
    generate_random, generate_scc_chain, generate_tree, simple_scc, tvi_chain, GenParams,
    SccChainParams, TreeParams,
};
use ssg_core::generate::{ovi_easy, ovi_hard};
use ssg_core::graph::classify_states;
use ssg_core::model::SsgModel;
use ssg_core::solvers::{
    solve_bvi, solve_ovi, solve_ptvi, solve_si, solve_topological, solve_vi, InnerSolver,
    PtviInner, SolverConfig, SolverResult,
};
use ssg_core::value::DiffMode;

#[derive(Parser)]
#[command(name = "ssg", version, about = "Simple stochastic game workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one model and print the initial-state bounds.
    Solve(SolveArgs),
    /// Generate models into .ssg files.
    Generate(GenerateArgs),
    /// Compute structural features of models into a CSV.
    Analyze(AnalyzeArgs),
    /// Run a solver matrix over a directory of models into a CSV.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    /// Value iteration with the naive stopping criterion (no guarantee).
    Vi,
    /// Bounded value iteration with deflating.
    Bvi,
    /// Optimistic value iteration.
    Ovi,
    /// Topological bounded solving, component by component.
    Tvi,
    /// Precise topological solving (exact values).
    Ptvi,
    /// Strategy iteration (exact values).
    Si,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Vi => "vi",
            Algorithm::Bvi => "bvi",
            Algorithm::Ovi => "ovi",
            Algorithm::Tvi => "tvi",
            Algorithm::Ptvi => "ptvi",
            Algorithm::Si => "si",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Absolute,
    Relative,
}

#[derive(Args)]
pub(crate) struct SolverOpts {
    /// Target precision of the returned bounds.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Naive criterion precision (defaults to epsilon).
    #[arg(long)]
    naive_epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "absolute")]
    mode: ModeArg,
    /// Deflate the upper bound every N bounded iterations.
    #[arg(long, default_value_t = 100)]
    deflate_every: usize,
    #[arg(long)]
    gauss_seidel: bool,
    /// Wall-clock limit per solver run, in seconds.
    #[arg(long)]
    timeout_s: Option<f64>,
    /// Sweep cap per solver run.
    #[arg(long, default_value_t = 100_000_000)]
    max_iter: u64,
    /// Disable the early lower-bound abort of optimistic verification.
    #[arg(long)]
    no_ovi_lower_check: bool,
}

impl SolverOpts {
    fn config(&self) -> Result<SolverConfig> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            bail!("epsilon must lie in (0, 1)");
        }
        if let Some(naive) = self.naive_epsilon {
            if !(naive > 0.0 && naive < 1.0) {
                bail!("naive epsilon must lie in (0, 1)");
            }
        }
        if self.deflate_every == 0 {
            bail!("deflate-every must be at least 1");
        }
        Ok(SolverConfig {
            epsilon: self.epsilon,
            naive_epsilon: self.naive_epsilon.unwrap_or(self.epsilon),
            mode: match self.mode {
                ModeArg::Absolute => DiffMode::Absolute,
                ModeArg::Relative => DiffMode::Relative,
            },
            deflate_every: self.deflate_every,
            gauss_seidel: self.gauss_seidel,
            max_iterations: self.max_iter,
            timeout: self.timeout_s.map(Duration::from_secs_f64),
            ovi_lower_check: !self.no_ovi_lower_check,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Model file in .ssg format.
    model: PathBuf,
    #[arg(long, value_enum)]
    alg: Algorithm,
    /// Inner solver: vi|bvi|ovi for tvi, naive|bounded for ptvi.
    #[arg(long)]
    inner: Option<String>,
    #[command(flatten)]
    opts: SolverOpts,
    /// Print one CSV record instead of the human-readable report.
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenerateKind {
    Random,
    Tree,
    SccChain,
    TviChain,
    OviEasy,
    OviHard,
    SimpleScc,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: GenerateKind,
    /// Number of states (handcrafted kinds add their goal/sink pair).
    #[arg(long)]
    n: usize,
    /// Number of models; seeds are seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Per-state chance of belonging to Minimizer (random kind).
    #[arg(long, default_value_t = 0.5)]
    minimizer_prob: f64,
    /// Smallest permitted transition probability (random kind).
    #[arg(long, default_value_t = 1e-4)]
    min_prob: f64,
    /// Chance of adding another action in the backward pass.
    #[arg(long, default_value_t = 0.5)]
    extra_action_geom: f64,
    /// Cap on transitions per action.
    #[arg(long)]
    max_transitions: Option<usize>,
    /// Re-draw fills whose closing entry violates min-prob.
    #[arg(long)]
    strict_min_prob: bool,
    /// Children/actions per inner node (tree kind).
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Smallest SCC block size (scc-chain kind).
    #[arg(long, default_value_t = 5)]
    scc_min: usize,
    /// Largest SCC block size (scc-chain kind).
    #[arg(long, default_value_t = 10)]
    scc_max: usize,
    /// Number of SCC trees (simple-scc kind).
    #[arg(long, default_value_t = 1)]
    m: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Model files to analyze.
    models: Vec<PathBuf>,
    /// Directory of .ssg files (added to any listed models).
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => run_solve(&args),
        Command::Generate(args) => run_generate(&args),
        Command::Analyze(args) => run_analyze(&args),
        Command::Bench(args) => bench::run_bench(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

pub(crate) fn load_model(path: &Path) -> Result<SsgModel> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read model file {}", path.display()))?;
    parse_model(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub(crate) fn run_algorithm(
    model: &SsgModel,
    alg: Algorithm,
    inner: Option<&str>,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    let classes = classify_states(model);
    let result = match alg {
        Algorithm::Vi => solve_vi(model, &classes, cfg),
        Algorithm::Bvi => solve_bvi(model, &classes, cfg),
        Algorithm::Ovi => solve_ovi(model, &classes, cfg),
        Algorithm::Tvi => {
            let inner = match inner.unwrap_or("bvi") {
                "vi" => InnerSolver::Vi,
                "bvi" => InnerSolver::Bvi,
                "ovi" => InnerSolver::Ovi,
                other => bail!("unknown inner solver '{other}' (expected vi|bvi|ovi)"),
            };
            solve_topological(model, &classes, cfg, inner)
        }
        Algorithm::Ptvi => {
            let inner = match inner.unwrap_or("naive") {
                "naive" => PtviInner::Naive,
                "bounded" => PtviInner::Bounded,
                other => bail!("unknown inner criterion '{other}' (expected naive|bounded)"),
            };
            solve_ptvi(model, &classes, cfg, inner)
        }
        Algorithm::Si => solve_si(model, &classes, cfg, None),
    };
    result.map_err(|e| anyhow::anyhow!("solver failed: {e}"))
}

fn run_solve(args: &SolveArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let cfg = args.opts.config()?;
    if args.alg == Algorithm::Vi {
        eprintln!("warning: the naive stopping criterion gives no precision guarantee");
    }
    let result = run_algorithm(&model, args.alg, args.inner.as_deref(), &cfg)?;
    let initial = model.initial();

    if args.csv {
        println!("{}", bench::CSV_HEADER);
        let name = args
            .model
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| args.model.display().to_string());
        println!("{}", bench::csv_record(&name, args.alg, &cfg, &result, initial));
    } else {
        println!(
            "model: {} ({} states, {} actions)",
            args.model.display(),
            model.num_states(),
            model.num_actions_total()
        );
        println!(
            "algorithm: {}  epsilon: {:e}  mode: {}",
            args.alg.name(),
            cfg.epsilon,
            match cfg.mode {
                DiffMode::Absolute => "absolute",
                DiffMode::Relative => "relative",
            }
        );
        println!("status: {}", result.status);
        let (lower, upper) = result.bounds_at(initial);
        println!(
            "initial state {}: lower={lower} upper={upper} width={:e}",
            initial.index(),
            upper - lower
        );
        println!(
            "iterations: {}  backups: {}  verification phases: {}",
            result.iterations, result.bellman_backups, result.verification_phases
        );
        if result.si_fallbacks > 0 || result.local_checks_passed > 0 {
            println!(
                "local checks passed: {}  strategy-iteration fallbacks: {}",
                result.local_checks_passed, result.si_fallbacks
            );
        }
        println!("wall time: {:?}", result.wall_time);
        for line in &result.diagnostics {
            println!("note: {line}");
        }
    }
    Ok(if result.status.is_success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_generate(args: &GenerateArgs) -> Result<ExitCode> {
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let handcrafted = matches!(
        args.kind,
        GenerateKind::TviChain | GenerateKind::OviEasy | GenerateKind::OviHard
            | GenerateKind::SimpleScc
    );
    let count = if handcrafted {
        if args.count > 1 {
            eprintln!("note: {} is deterministic, writing one file", kind_name(args.kind));
        }
        1
    } else {
        args.count
    };

    for i in 0..count {
        let seed = args.seed + i as u64;
        let (model, name) = match args.kind {
            GenerateKind::Random => {
                let params = GenParams {
                    n: args.n,
                    minimizer_prob: args.minimizer_prob,
                    extra_action_geom: args.extra_action_geom,
                    min_prob: args.min_prob,
                    max_transitions_per_action: args.max_transitions,
                    strict_min_prob: args.strict_min_prob,
                    seed,
                };
                (generate_random(&params)?, format!("random_{}_{}.ssg", args.n, seed))
            }
            GenerateKind::Tree => {
                let params = TreeParams {
                    n: args.n,
                    k: args.k,
                    seed,
                };
                (generate_tree(&params)?, format!("tree_{}_{}_{}.ssg", args.n, args.k, seed))
            }
            GenerateKind::SccChain => {
                let params = SccChainParams {
                    n: args.n,
                    scc_size_min: args.scc_min,
                    scc_size_max: args.scc_max,
                    seed,
                };
                (
                    generate_scc_chain(&params)?,
                    format!("scc-chain_{}_{}_{}_{}.ssg", args.n, args.scc_min, args.scc_max, seed),
                )
            }
            GenerateKind::TviChain => (tvi_chain(args.n), format!("tvi-chain_{}.ssg", args.n)),
            GenerateKind::OviEasy => (ovi_easy(args.n), format!("ovi-easy_{}.ssg", args.n)),
            GenerateKind::OviHard => (ovi_hard(args.n), format!("ovi-hard_{}.ssg", args.n)),
            GenerateKind::SimpleScc => (
                simple_scc(args.n, args.m),
                format!("simple-scc_{}_{}.ssg", args.n, args.m),
            ),
        };
        let report = model.validate();
        if !report.is_ok() {
            bail!("generated model failed validation: {report}");
        }
        let path = args.out_dir.join(name);
        fs::write(&path, serialize_model(&model))
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn kind_name(kind: GenerateKind) -> &'static str {
    match kind {
        GenerateKind::Random => "random",
        GenerateKind::Tree => "tree",
        GenerateKind::SccChain => "scc-chain",
        GenerateKind::TviChain => "tvi-chain",
        GenerateKind::OviEasy => "ovi-easy",
        GenerateKind::OviHard => "ovi-hard",
        GenerateKind::SimpleScc => "simple-scc",
    }
}

pub(crate) fn ssg_files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "ssg"))
        .collect();
    files.sort();
    Ok(files)
}

fn run_analyze(args: &AnalyzeArgs) -> Result<ExitCode> {
    let mut files = args.models.clone();
    if let Some(dir) = &args.dir {
        files.extend(ssg_files_in(dir)?);
    }
    if files.is_empty() {
        bail!("no model files given (list them or pass --dir)");
    }

    let mut rows = String::new();
    rows.push_str("model,");
    rows.push_str(&FEATURE_NAMES.join(","));
    rows.push('\n');
    let mut reports = Vec::with_capacity(files.len());
    for path in &files {
        let model = load_model(path)?;
        let report = compute_features(&model);
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        rows.push_str(&name);
        for v in report.values() {
            rows.push(',');
            rows.push_str(&v.to_string());
        }
        rows.push('\n');
        reports.push(report);
    }
    let stats = aggregate_features(&reports).expect("nonempty corpus");
    rows.push_str("aggregate_mean");
    for s in &stats.stats {
        rows.push(',');
        rows.push_str(&s.mean.to_string());
    }
    rows.push('\n');

    match &args.out {
        Some(path) => fs::write(path, rows)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{rows}"),
    }
    Ok(ExitCode::SUCCESS)
}
