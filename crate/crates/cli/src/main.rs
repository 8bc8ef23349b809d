//! `atsolve`: load a matrix, run a meta-solver under a policy, report.
//!
//! Exit codes: 0 converged and policy satisfied, 1 usage or I/O error,
//! 2 not converged, 3 converged but the true residual misses the requirement.

mod args;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use atsolve::gen::MatrixKind;
use atsolve::policy::{eigensolve_meta, linear_solve_meta, parse_policy_file, MetaOptions, PolicyConfig};
use atsolve::sparse::{load_matrix_market_auto, LoadedMatrix};
use atsolve::spmv::spmv_ref;
use clap::{CommandFactory, Parser};

use args::{Cli, Command, GenKind, GenerateArgs, Mode, ReportFormat, RunArgs};
use report::{BenchReport, ConfigEcho, MatrixInfo};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Some(Command::Generate(g)) => generate(&g).map(|()| 0),
        None => run(&cli.run),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("atsolve: {msg}");
            ExitCode::from(1)
        }
    }
}

fn generate(g: &GenerateArgs) -> Result<(), String> {
    let kind = match g.kind {
        GenKind::Poisson2d => MatrixKind::Poisson2d { grid: g.grid },
        GenKind::Laplacian1d => MatrixKind::Laplacian1d { n: g.n },
        GenKind::Diag => MatrixKind::Diag { n: g.n, cond: g.cond },
        GenKind::SkewedRows => MatrixKind::SkewedRows { n: g.n },
        GenKind::Convdiff2d => MatrixKind::ConvDiff2d { grid: g.grid, wind: g.wind },
    };
    let m = kind.write(&g.out, g.seed).map_err(|e| e.to_string())?;
    eprintln!("wrote {} ({}, n = {})", g.out.display(), kind.name(), m.n());
    Ok(())
}

fn resolve_policy(a: &RunArgs) -> Result<PolicyConfig, String> {
    let mut p = match &a.policy_file {
        Some(path) => {
            if !path.exists() {
                return Err(format!("policy file {} not found", path.display()));
            }
            parse_policy_file(path).map_err(|e| e.to_string())?
        }
        None => PolicyConfig::default(),
    };
    if let Some(spec) = &a.policy {
        p.apply_overrides(spec).map_err(|e| e.to_string())?;
    }
    if let Some(t) = a.threads {
        if t == 0 {
            return Err("--threads must be at least 1".into());
        }
        p.cpu = Some(t);
    }
    if let Some(tol) = a.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err("--tol must be positive".into());
        }
        p.residual = tol;
    }
    if let Some(t) = a.max_time {
        if !(t > 0.0 && t.is_finite()) {
            return Err("--max-time must be positive".into());
        }
        p.maxtime = t;
    }
    if let Some(s) = a.solver {
        p.solver = Some(s);
    }
    Ok(p)
}

fn run(a: &RunArgs) -> Result<i32, String> {
    let Some(path) = &a.matrix else {
        eprintln!("atsolve: --matrix is required\n");
        let _ = Cli::command().write_help(&mut io::stderr());
        return Ok(1);
    };
    let policy = resolve_policy(a)?;
    if let Some(s) = policy.solver {
        let want_eigen = a.mode == Mode::Eigen;
        if s.is_eigen() != want_eigen {
            return Err(format!("solver {} does not match --mode {:?}", s.name(), a.mode).to_lowercase());
        }
    }
    let matrix = load_matrix_market_auto(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let opts = MetaOptions {
        kernel: a.kernel,
        jl: a.jl,
        seed: a.seed,
        max_iters: a.max_iters,
        ..MetaOptions::default()
    };
    let (nnz, symmetric) = match &matrix {
        LoadedMatrix::General(m) => (m.nnz(), false),
        LoadedMatrix::Symmetric(s) => (s.nnz(), true),
    };
    let outcome = match a.mode {
        Mode::Linear => {
            let full = matrix.to_full();
            // right-hand side with the all-ones vector as exact solution
            let b = spmv_ref(&full, &vec![1.0; full.n()]).map_err(|e| e.to_string())?;
            linear_solve_meta(&full, &b, &policy, &opts)
        }
        Mode::Eigen => eigensolve_meta(&matrix, a.k, &policy, &opts),
    }
    .map_err(|e| e.to_string())?;

    let info = MatrixInfo {
        name: path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
        path: path.display().to_string(),
        n: matrix.n(),
        nnz,
        symmetric,
    };
    let config = ConfigEcho {
        mode: match a.mode {
            Mode::Linear => "linear",
            Mode::Eigen => "eigen",
        },
        policy,
        kernel_request: a.kernel.to_string(),
        jl: a.jl,
        k: (a.mode == Mode::Eigen).then_some(a.k),
        max_iters: a.max_iters,
        seed: a.seed,
    };
    let report = BenchReport::new(info, config, outcome);
    let code = report.exit_code;
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match a.report {
        ReportFormat::Json => report.write_json(&mut sink).map_err(|e| e.to_string())?,
        ReportFormat::Csv => report.write_csv(&mut sink).map_err(|e| e.to_string())?,
    }
    sink.flush().map_err(|e| e.to_string())?;
    Ok(code)
}
