use std::path::PathBuf;

use atsolve::policy::{KernelRequest, SolverKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "atsolve",
    version,
    about = "Run an auto-tuned sparse solver under a numerical policy and report the measurements",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated test matrix in Matrix Market format.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Linear,
    Eigen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Matrix Market file; symmetric headers keep upper-triangle storage.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "linear")]
    pub mode: Mode,
    /// gmres, bicgstab, lanczos or arnoldi; overrides SOLVER.
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverKind>,
    /// Number of eigenpairs (eigen mode).
    #[arg(short = 'k', default_value_t = 4)]
    pub k: usize,
    /// Policy file of `KEYWORD = VALUE` lines.
    #[arg(long)]
    pub policy_file: Option<PathBuf>,
    /// Inline overrides, e.g. `POLICY=ACCURACY,RESIDUAL=1e-10`; applied after the file.
    #[arg(long)]
    pub policy: Option<String>,
    /// Worker count; overrides CPU.
    #[arg(long)]
    pub threads: Option<usize>,
    /// auto, u1-u4 or s1-s3. A forced kernel skips the timing search.
    #[arg(long, default_value = "auto", value_parser = parse_kernel)]
    pub kernel: KernelRequest,
    /// Lane count for the segmented-scan kernels.
    #[arg(long)]
    pub jl: Option<usize>,
    /// Overrides RESIDUAL.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seconds; overrides MAXTIME.
    #[arg(long)]
    pub max_time: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value = "json")]
    pub report: ReportFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for start vectors and generated matrices.
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Poisson2d,
    Laplacian1d,
    Diag,
    #[value(name = "skewed_rows")]
    SkewedRows,
    Convdiff2d,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Dimension (laplacian1d, diag, skewed_rows).
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Grid side (poisson2d, convdiff2d).
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    /// Condition number (diag).
    #[arg(long, default_value_t = 1e6)]
    pub cond: f64,
    /// Convection strength (convdiff2d).
    #[arg(long, default_value_t = 1.0)]
    pub wind: f64,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn parse_kernel(s: &str) -> Result<KernelRequest, String> {
    s.parse()
}
