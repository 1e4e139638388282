mod args;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use inertial_admm::data::{gen_synthetic, load, preprocess, Dataset};
use inertial_admm::harness::{bench, solve, synthetic_suite, write_iterates_csv};
use inertial_admm::{Error, Problem};
use thiserror::Error;

use args::{BenchArgs, Cli, Command, DataOpts, SolveArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o or parse failure: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(_) => 1,
            CliError::Io(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) | Error::Parse { .. } | Error::Empty(_) | Error::NonFinite { .. } => {
                CliError::Io(e.to_string())
            }
            Error::InvalidParameter(_) => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let f = File::create(path).map_err(io_err(path))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value).map_err(|e| CliError::Io(e.to_string()))
}

fn dataset(opts: &DataOpts) -> Result<(Dataset, f64), CliError> {
    let raw = match (&opts.data, opts.gen) {
        (Some(path), _) => load(path)?,
        (None, Some((n, d))) => gen_synthetic(n, d, opts.sparsity, opts.noise, opts.seed)?.0,
        (None, None) => return Err(CliError::Config("one of --data or --gen is required".into())),
    };
    Ok(preprocess(&raw)?)
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let config = args.solver.resolve()?;
    let (ds, nu) = dataset(&args.data)?;
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let problem = Problem::lasso(ds.a.clone(), ds.b.clone(), nu)?;
    let outcome = solve(&problem, &config, &ds.name, args.rates)?;

    write_json(&args.out.join("run_summary.json"), &outcome.summary)?;
    let path = args.out.join("iterates.csv");
    let f = File::create(&path).map_err(io_err(&path))?;
    write_iterates_csv(&outcome.rows, BufWriter::new(f)).map_err(io_err(&path))?;
    if let Some(report) = &outcome.rates {
        write_json(&args.out.join("rates.json"), report)?;
    }

    let s = &outcome.summary;
    println!(
        "{}: n={} d={} nu={nu:.4e}\n  alpha={} sigma={} tau={} gamma={} rule={:?} tol={:e}\n  \
         status={:?} outer={} inner={} residual={:.3e} time={:.3}s",
        s.name,
        ds.rows(),
        ds.features(),
        config.alpha,
        config.sigma,
        config.tau,
        config.gamma,
        config.rule,
        config.tol,
        s.status,
        s.outer_iters,
        s.total_inner_iters,
        s.final_residual,
        s.wall_time_seconds
    );
    if let Some(r) = &outcome.rates {
        println!("  rates: d0={:.4e} C={:?} D={:?} bounds_ok={}", r.d0, r.c, r.d, r.bounds_ok);
    }
    if !s.status.converged() {
        return Err(CliError::Solver(format!("no convergence within {} outer iterations", config.max_outer)));
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let config = args.solver.resolve()?;
    let mut problems = Vec::new();
    for path in &args.data {
        problems.push(preprocess(&load(path)?)?);
    }
    for (i, &(n, d)) in args.gen.iter().enumerate() {
        problems.push(preprocess(&gen_synthetic(n, d, 0.1, 0.1, args.seed + i as u64)?.0)?);
    }
    if problems.is_empty() {
        problems = synthetic_suite(args.seed)?;
    }
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let table = bench(&problems, &config);

    let csv = args.out.join("bench_table.csv");
    fs::write(&csv, table.to_csv()).map_err(io_err(&csv))?;
    let md_path = args.out.join("bench_table.md");
    let md = table.to_markdown();
    fs::write(&md_path, &md).map_err(io_err(&md_path))?;
    print!("{md}");

    let failed: Vec<_> = table.rows.iter().filter(|r| r.error.is_some()).map(|r| r.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(CliError::Solver(format!("failed problems: {}", failed.join(", "))));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
