use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use seminmf::bench::{parse_suite, preset, quality_from_errors, run_experiment, summarize, write_csv, PRESETS};
use seminmf::cd::{cd_semi_nmf_with, CdOptions};
use seminmf::dense::{singular_values, tail_norm};
use seminmf::factor::semi_rank_with;
use seminmf::halfspace::{DEFAULT_REL_PREC, DEFAULT_ZERO_TOL};
use seminmf::init::{initialize, InitKind, InitStrategy};
use seminmf::{Factorization, RngSeed};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{read_matrix, write_matrix, MatrixFormat};

#[derive(Debug, Parser)]
#[command(name = "seminmf", version, about = "Semi-nonnegative matrix factorization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank, semi-nonnegative rank and an exact semi-NMF of a matrix.
    Rank(RankArgs),
    /// Approximate semi-NMF by coordinate descent.
    Factorize(FactorizeArgs),
    /// Run a seeded experiment suite.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Matrix file (CSV, or MatrixMarket for .mtx/.mm).
    pub input: PathBuf,
    /// Override the format detected from the file extension.
    #[arg(long, value_enum)]
    pub format: Option<MatrixFormat>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Columns with 2-norm at most this times max|M| count as zero.
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    pub zero_tol: f64,
    /// Write a JSON report to this path (`-` for stdout).
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub out_u: Option<PathBuf>,
    #[arg(long)]
    pub out_v: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short = 'r', value_parser = clap::value_parser!(u64).range(1..))]
    pub rank: u64,
    #[arg(long, default_value = "a3", value_parser = parse_init)]
    pub init: InitKind,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub maxiter: u64,
    #[arg(long, env = "SEMINMF_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Bisection precision for A3.
    #[arg(long, default_value_t = DEFAULT_REL_PREC)]
    pub rel_prec: f64,
    #[arg(long)]
    pub out_u: Option<PathBuf>,
    #[arg(long)]
    pub out_v: Option<PathBuf>,
    /// Write `iteration,error,quality` rows to this CSV file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Suite description file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub suite: Option<PathBuf>,
    /// Built-in suite: paper-desk (50×100, 50 trials) or full (100×200, 500 trials).
    #[arg(long)]
    pub preset: Option<String>,
    /// Matrices per config; overrides the suite's value.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    /// Master seed; overrides the suite's value.
    #[arg(long, env = "SEMINMF_SEED")]
    pub seed: Option<u64>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary output path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Append a wall_time_ms column. This makes the CSV nondeterministic.
    #[arg(long)]
    pub timings: bool,
}

fn parse_init(s: &str) -> Result<InitKind, String> {
    s.parse().map_err(|e: seminmf::Error| e.to_string())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Rank(a) => cmd_rank(&a, out),
        Command::Factorize(a) => cmd_factorize(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn write_text(path: &Path, text: &str, out: &mut dyn Write) -> CliResult<()> {
    if path == Path::new("-") {
        out.write_all(text.as_bytes()).map_err(stdout_err)
    } else {
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

fn write_factors(f: &Factorization, u: &Option<PathBuf>, v: &Option<PathBuf>) -> CliResult<()> {
    if let Some(p) = u {
        write_matrix(p, &f.u, None)?;
    }
    if let Some(p) = v {
        write_matrix(p, &f.v, None)?;
    }
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

pub fn cmd_rank(a: &RankArgs, out: &mut dyn Write) -> CliResult<()> {
    if !(a.zero_tol >= 0.0) {
        return Err(CliError::Usage(format!("--zero-tol must be nonnegative, got {}", a.zero_tol)));
    }
    let m = read_matrix(&a.input.input, a.input.format)?;
    let report = semi_rank_with(&m, a.zero_tol)?;
    let f = &report.factorization;
    writeln!(
        out,
        "rank={} semi_rank={} feasible={}",
        report.rank, report.semi_rank, report.certificate.feasible
    )
    .map_err(stdout_err)?;
    if let Some(z) = &report.certificate.z {
        writeln!(out, "z={}", fmt_vec(z)).map_err(stdout_err)?;
    }
    writeln!(out, "error={:e} relative_error={:e}", f.frob_error, f.frob_error / m.frobenius_norm().max(f64::MIN_POSITIVE))
        .map_err(stdout_err)?;
    write_factors(f, &a.out_u, &a.out_v)?;
    if let Some(path) = &a.json {
        let doc = json!({
            "rows": m.rows(),
            "cols": m.cols(),
            "rank": report.rank,
            "semi_rank": report.semi_rank,
            "feasible": report.certificate.feasible,
            "z": report.certificate.z,
            "margin": report.certificate.margin,
            "lp_objective": report.certificate.lp_objective,
            "singular_values": report.singular_values,
            "error": f.frob_error,
        });
        let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
        write_text(path, &text, out)?;
    }
    Ok(())
}

pub fn cmd_factorize(a: &FactorizeArgs, out: &mut dyn Write) -> CliResult<()> {
    let r = a.rank as usize;
    if a.init == InitKind::A2 && r < 2 {
        return Err(CliError::Usage(
            "--init a2 needs --rank >= 2: it lifts a rank-(r-1) SVD to rank r".into(),
        ));
    }
    let m = read_matrix(&a.input.input, a.input.format)?;
    let q = m.rows().min(m.cols());
    if r > q {
        return Err(CliError::Usage(format!("--rank {r} exceeds min(rows, cols) = {q}")));
    }
    let strategy = InitStrategy { rel_prec: a.rel_prec, ..InitStrategy::new(a.init, RngSeed(a.seed)) };
    let init = initialize(&m, r, &strategy)?;
    let (f, trace) = cd_semi_nmf_with(&m, &init.v0, &CdOptions::new(a.maxiter as usize))?;

    let best = tail_norm(&singular_values(&m)?, r);
    let m_norm = m.frobenius_norm();
    let q_final = quality_from_errors(f.frob_error, best, m_norm);
    write!(out, "error={:e} quality={:e} iterations={}", f.frob_error, q_final, trace.iterations_run)
        .map_err(stdout_err)?;
    if let Some(b) = &init.bisection {
        write!(out, " epsilon_star={:e}", b.epsilon_star).map_err(stdout_err)?;
    }
    writeln!(out).map_err(stdout_err)?;

    write_factors(&f, &a.out_u, &a.out_v)?;
    if let Some(path) = &a.trace {
        let mut text = String::from("iteration,error,quality\n");
        for (t, &e) in trace.errors.iter().enumerate() {
            text.push_str(&format!("{t},{e:e},{:e}\n", quality_from_errors(e, best, m_norm)));
        }
        write_text(path, &text, out)?;
    }
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let suite = match (&a.suite, &a.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_suite(&text).map_err(|e| match e {
                seminmf::Error::InvalidArgument(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
                other => other.into(),
            })?
        }
        (None, Some(name)) => preset(name).map_err(|e| {
            CliError::Usage(format!("{e}; choose one of {}", PRESETS.join(", ")))
        })?,
        (None, None) => return Err(CliError::Usage("pass --suite or --preset".into())),
    };
    let trials = a.trials.map(|t| t as usize).or(suite.trials).unwrap_or(1);
    let seed = RngSeed(a.seed.or(suite.seed).unwrap_or(0));
    let records = run_experiment(&suite.configs, trials, seed, a.jobs)?;

    let mut csv = Vec::new();
    write_csv(&records, &mut csv, a.timings).map_err(stdout_err)?;
    match &a.out {
        Some(p) => fs::write(p, &csv).map_err(|e| CliError::io(p, e))?,
        None => out.write_all(&csv).map_err(stdout_err)?,
    }
    let summary = summarize(&records, trials, seed);
    if let Some(p) = &a.summary {
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
        fs::write(p, text).map_err(|e| CliError::io(p, e))?;
    }
    let failures = records.iter().filter(|r| r.failure.is_some()).count();
    eprintln!(
        "bench: {} configs x {trials} trials, {} records, {failures} failed, seed {}",
        suite.configs.len(),
        records.len(),
        seed.0
    );
    Ok(())
}
