//! Benchmark harness: every (model, algorithm) pair runs in a bounded
//! worker pool with a per-run wall-clock budget, and each finished run
//! appends one flushed CSV record under a lock, so a partially completed
//! matrix still leaves a valid file behind.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::Args;

use ssg_core::model::StateId;
use ssg_core::solvers::{SolverConfig, SolverResult};
use ssg_core::value::DiffMode;

use crate::{load_model, run_algorithm, ssg_files_in, Algorithm, SolverOpts};

pub const CSV_HEADER: &str = "model_name,algorithm,epsilon,mode,iterations,verification_phases,wall_time_ms,status,value_at_initial_lower,value_at_initial_upper";

pub fn csv_record(
    model_name: &str,
    alg: Algorithm,
    cfg: &SolverConfig,
    result: &SolverResult,
    initial: StateId,
) -> String {
    let (lower, upper) = result.bounds_at(initial);
    format!(
        "{},{},{:e},{},{},{},{},{},{},{}",
        model_name,
        alg.name(),
        cfg.epsilon,
        match cfg.mode {
            DiffMode::Absolute => "absolute",
            DiffMode::Relative => "relative",
        },
        result.iterations,
        result.verification_phases,
        result.wall_time.as_millis(),
        result.status,
        lower,
        upper
    )
}

#[derive(Args)]
pub struct BenchArgs {
    /// Directory of .ssg model files.
    #[arg(long)]
    models: PathBuf,
    /// Comma-separated algorithms, e.g. bvi,ovi,ptvi.
    #[arg(long, value_delimiter = ',', required = true)]
    algs: Vec<Algorithm>,
    /// Output CSV; appended to without a header when it already exists.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    opts: SolverOpts,
}

pub fn run_bench(args: &BenchArgs) -> Result<ExitCode> {
    let files = ssg_files_in(&args.models)?;
    if files.is_empty() {
        bail!("no .ssg files in {}", args.models.display());
    }
    let mut cfg = args.opts.config()?;
    if cfg.timeout.is_none() {
        cfg.timeout = Some(std::time::Duration::from_secs(60));
    }

    let mut tasks: Vec<(PathBuf, Algorithm)> = Vec::new();
    for file in &files {
        for &alg in &args.algs {
            tasks.push((file.clone(), alg));
        }
    }

    let fresh = !args.out.exists();
    let mut out = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&args.out)
        .with_context(|| format!("cannot open {}", args.out.display()))?;
    if fresh {
        writeln!(out, "{CSV_HEADER}")?;
        out.flush()?;
    }
    let writer = Mutex::new(out);
    let queue = Mutex::new(tasks);
    let jobs = args
        .jobs
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        })
        .max(1);
    let failures = Mutex::new(Vec::<String>::new());

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let task = queue.lock().expect("queue lock").pop();
                let Some((path, alg)) = task else {
                    break;
                };
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                let record = match load_model(&path)
                    .and_then(|model| {
                        run_algorithm(&model, alg, None, &cfg)
                            .map(|result| (model.initial(), result))
                    }) {
                    Ok((initial, result)) => csv_record(&name, alg, &cfg, &result, initial),
                    Err(err) => {
                        failures
                            .lock()
                            .expect("failure lock")
                            .push(format!("{name} [{}]: {err:#}", alg.name()));
                        continue;
                    }
                };
                let mut out = writer.lock().expect("writer lock");
                writeln!(out, "{record}").and_then(|()| out.flush()).expect("write record");
            });
        }
    });

    let failures = failures.into_inner().expect("failure lock");
    for failure in &failures {
        eprintln!("bench run failed: {failure}");
    }
    println!(
        "wrote {} ({} models x {} algorithms)",
        args.out.display(),
        files.len(),
        args.algs.len()
    );
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
