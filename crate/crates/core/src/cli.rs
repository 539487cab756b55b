//! `vbb` command line: problem generation, solves, constant-`p` sweeps and
//! stability-grid analysis.
//!
//! Data goes to files (or stdout when no `--out` is given for JSON reports);
//! one-line summaries go to stdout.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{stability_grid, RecurrenceKind};
use crate::error::{Error, Result};
use crate::problem::{make_log_spectrum_problem, QuadraticProblem};
use crate::solver::{solve, SolveStatus, SolveTrace, StepPolicy, DEFAULT_MAXIT, DEFAULT_TOL};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MAX_ITERATIONS: i32 = 3;
pub const EXIT_BREAKDOWN: i32 = 4;

/// Exit code for a finished solve.
pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => EXIT_CONVERGED,
        SolveStatus::MaxIterations => EXIT_MAX_ITERATIONS,
        SolveStatus::NumericalBreakdown => EXIT_BREAKDOWN,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "vbb",
    version,
    about = "Barzilai-Borwein family step sizes on convex quadratics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a log-spaced diagonal benchmark problem as JSON.
    GenProblem(GenArgs),
    /// Run one gradient iteration and write its trace.
    Solve(SolveArgs),
    /// Run a constant-p policy over a list of p values on a 2-D problem.
    SweepP(SweepArgs),
    /// Classify the ε-recurrence equilibria on a (λ, p) grid.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Generator parameters, written `n=10,ncond=4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub ncond: f64,
}

impl FromStr for GenSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (mut n, mut ncond) = (None, None);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            match key.trim() {
                "n" => n = Some(value.trim().parse().map_err(|e| format!("n: {e}"))?),
                "ncond" => ncond = Some(value.trim().parse().map_err(|e| format!("ncond: {e}"))?),
                other => return Err(format!("unknown generator key {other:?}")),
            }
        }
        Ok(GenSpec {
            n: n.ok_or("missing n")?,
            ncond: ncond.ok_or("missing ncond")?,
        })
    }
}

/// Builds the benchmark problem. `n = 1` gives the single eigenvalue
/// `10^ncond`, which is how one-dimensional exactness runs are requested.
pub fn generate(spec: GenSpec) -> Result<QuadraticProblem> {
    if spec.n == 1 {
        if !spec.ncond.is_finite() {
            return Err(Error::Usage(format!(
                "ncond must be finite, got {}",
                spec.ncond
            )));
        }
        return QuadraticProblem::new(vec![10f64.powf(spec.ncond)], vec![1.0]);
    }
    make_log_spectrum_problem(spec.n, spec.ncond)
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Problem file (JSON with n, spectrum, x_star).
    #[arg(long, conflicts_with_all = ["gen", "n", "ncond"])]
    pub problem: Option<PathBuf>,
    /// Generator shorthand, e.g. n=10,ncond=4.
    #[arg(long, conflicts_with_all = ["n", "ncond"])]
    pub gen: Option<GenSpec>,
    #[arg(long)]
    pub n: Option<usize>,
    /// log10 of the condition number.
    #[arg(long)]
    pub ncond: Option<f64>,
}

impl ProblemArgs {
    fn load(&self, default: GenSpec) -> Result<QuadraticProblem> {
        if let Some(path) = &self.problem {
            return QuadraticProblem::load(path);
        }
        let spec = self.gen.unwrap_or(GenSpec {
            n: self.n.unwrap_or(default.n),
            ncond: self.ncond.unwrap_or(default.ncond),
        });
        generate(spec)
    }
}

const BENCHMARK: GenSpec = GenSpec { n: 10, ncond: 4.0 };
const PLANAR: GenSpec = GenSpec { n: 2, ncond: 4.0 };

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = BENCHMARK.n)]
    pub n: usize,
    #[arg(long, default_value_t = BENCHMARK.ncond)]
    pub ncond: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// BB1, BB2, VBB, LEFT, RIGHT, ML, MR, CONST_P_LEFT, CONST_P_RIGHT.
    #[arg(long, default_value = "BB1")]
    pub method: String,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAXIT)]
    pub maxit: usize,
    /// Trace file; no trace is written when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Start from x₁ ~ U[-1, 1)ⁿ drawn from ChaCha8 with this seed instead
    /// of x₁ = 0.
    #[arg(long)]
    pub random_start: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// LEFT or RIGHT (run as the constant-p variant).
    #[arg(long, default_value = "LEFT")]
    pub method: String,
    /// Comma-separated p values in [1, 2].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub maxit: usize,
    /// Output directory for per-p traces and the summary table.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Left,
    Right,
    Both,
}

impl KindArg {
    fn kinds(self) -> Vec<RecurrenceKind> {
        match self {
            KindArg::Left => vec![RecurrenceKind::Left],
            KindArg::Right => vec![RecurrenceKind::Right],
            KindArg::Both => vec![RecurrenceKind::Left, RecurrenceKind::Right],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Both)]
    pub kind: KindArg,
    /// Comma-separated λ values, each > 1.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambdas: Vec<f64>,
    /// Comma-separated p values in (1, 2).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub p: Vec<f64>,
    /// Recurrence steps per simulated cell.
    #[arg(long, default_value_t = 5000)]
    pub steps: usize,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// One CSV trace row. Empty fields stand for absent values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub f: f64,
    pub gnorm: f64,
    pub alpha: Option<f64>,
    pub contraction: Option<f64>,
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(trace: &SolveTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "f", "gnorm", "alpha", "contraction"])?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            fmt_float(r.f),
            fmt_float(r.gnorm),
            fmt_opt(r.alpha),
            fmt_opt(r.contraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<TraceRow>, _>>()?;
    Ok(rows)
}

pub fn write_trace_json<W: Write>(trace: &SolveTrace, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, trace)?;
    writeln!(out)?;
    Ok(())
}

fn write_trace(trace: &SolveTrace, path: &Path, format: Format) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => write_trace_csv(trace, file),
        Format::Json => write_trace_json(trace, file),
    }
}

fn write_json_to<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut file, value)?;
            writeln!(file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, value)?;
            writeln!(lock)?;
        }
    }
    Ok(())
}

pub fn summary_line(trace: &SolveTrace) -> String {
    format!(
        "method={} status={} iterations={} gnorm={:.6e}",
        trace.method,
        trace.status,
        trace.iterations,
        trace.final_gnorm()
    )
}

/// `x₁ = 0`, or `U[-1, 1)ⁿ` from `ChaCha8Rng::seed_from_u64(seed)`.
pub fn starting_point(n: usize, seed: Option<u64>) -> Vec<f64> {
    match seed {
        None => vec![0.0; n],
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
    }
}

fn run_gen(args: &GenArgs) -> Result<i32> {
    let problem = generate(GenSpec {
        n: args.n,
        ncond: args.ncond,
    })?;
    write_json_to(&problem.to_file()?, args.out.as_deref())?;
    Ok(EXIT_CONVERGED)
}

fn run_solve(args: &SolveArgs) -> Result<i32> {
    let problem = args.problem.load(BENCHMARK)?;
    let policy = StepPolicy::from_parts(&args.method, args.m, args.p)?;
    let x1 = starting_point(problem.dimension(), args.random_start);
    let trace = solve(&problem, policy, &x1, args.tol, args.maxit)?;
    if let Some(path) = &args.out {
        write_trace(&trace, path, args.format)?;
    }
    println!("{}", summary_line(&trace));
    Ok(exit_code(trace.status))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub final_gnorm: f64,
}

/// Runs the constant-`p` variant of `method` for each `p`, in order.
pub fn sweep(
    problem: &QuadraticProblem,
    method: &str,
    ps: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<Vec<(f64, SolveTrace)>> {
    if ps.is_empty() {
        return Err(Error::Usage("empty p list".into()));
    }
    let build: fn(f64) -> StepPolicy = match method.to_ascii_uppercase().replace('-', "_").as_str()
    {
        "LEFT" | "CONST_P_LEFT" => |p| StepPolicy::ConstPLeft { p },
        "RIGHT" | "CONST_P_RIGHT" => |p| StepPolicy::ConstPRight { p },
        other => {
            return Err(Error::Usage(format!(
                "sweep needs LEFT or RIGHT, got {other:?}"
            )))
        }
    };
    let x1 = vec![0.0; problem.dimension()];
    ps.iter()
        .map(|&p| Ok((p, solve(problem, build(p), &x1, tol, maxit)?)))
        .collect()
}

fn run_sweep(args: &SweepArgs) -> Result<i32> {
    let problem = args.problem.load(PLANAR)?;
    let runs = sweep(&problem, &args.method, &args.p, args.tol, args.maxit)?;
    fs::create_dir_all(&args.out)?;
    let ext = args.format.extension();
    let mut rows = Vec::with_capacity(runs.len());
    for (p, trace) in &runs {
        write_trace(
            trace,
            &args.out.join(format!("trace_p{p}.{ext}")),
            args.format,
        )?;
        println!("p={p} {}", summary_line(trace));
        rows.push(SweepRow {
            p: *p,
            iterations: trace.iterations,
            status: trace.status,
            final_gnorm: trace.final_gnorm(),
        });
    }
    let summary = args.out.join(format!("summary.{ext}"));
    match args.format {
        Format::Json => write_json_to(&rows, Some(&summary))?,
        Format::Csv => {
            let mut w = csv::Writer::from_path(&summary)?;
            w.write_record(["p", "iterations", "status", "final_gnorm"])?;
            for row in &rows {
                w.write_record([
                    row.p.to_string(),
                    row.iterations.to_string(),
                    row.status.to_string(),
                    fmt_float(row.final_gnorm),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(EXIT_CONVERGED)
}

fn run_analyze(args: &AnalyzeArgs) -> Result<i32> {
    if args.format != Format::Json {
        return Err(Error::Usage("stability reports are JSON only".into()));
    }
    if args.lambdas.is_empty() || args.p.is_empty() {
        return Err(Error::Usage("--lambdas and --p must be nonempty".into()));
    }
    if let Some(l) = args.lambdas.iter().find(|&&l| !(l.is_finite() && l > 1.0)) {
        return Err(Error::Usage(format!("lambda must exceed 1, got {l}")));
    }
    if let Some(p) = args.p.iter().find(|&&p| !(p > 1.0 && p < 2.0)) {
        return Err(Error::Usage(format!("p must lie in (1, 2), got {p}")));
    }
    let cells = stability_grid(&args.kind.kinds(), &args.lambdas, &args.p, args.steps)?;
    write_json_to(&cells, args.out.as_deref())?;
    if args.out.is_some() {
        let agree = cells.iter().filter(|c| c.agreement == Some(true)).count();
        let checked = cells.iter().filter(|c| c.agreement.is_some()).count();
        println!("cells={} agreement={agree}/{checked}", cells.len());
    }
    Ok(EXIT_CONVERGED)
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::GenProblem(a) => run_gen(a),
        Command::Solve(a) => run_solve(a),
        Command::SweepP(a) => run_sweep(a),
        Command::Analyze(a) => run_analyze(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_CONVERGED
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
