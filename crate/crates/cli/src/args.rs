use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use inertial_admm::admm::{beta_bound, AdmmConfig, InertialRule, Schedule};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "iadmm", version, about = "Inexact inertial ADMM for LASSO problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write its summary and iterate log.
    Solve(SolveArgs),
    /// Compare the inertial run against alpha = 0 on several problems.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Constant,
    Summability,
    Belowbeta,
}

#[derive(Debug, Clone, Args)]
pub struct SolverOpts {
    /// JSON file with any of the flag names below as keys; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleKind>,
    /// Assert the per-iteration identities while running.
    #[arg(long)]
    pub checked: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DataOpts {
    /// Dataset file: `.csv` (last column is b) or LibSVM-style text.
    #[arg(long, conflicts_with = "gen")]
    pub data: Option<PathBuf>,
    /// Synthetic problem of shape `N,D`.
    #[arg(long, value_parser = parse_shape)]
    pub gen: Option<(usize, usize)>,
    #[arg(long, default_value_t = 0.1)]
    pub sparsity: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub data: DataOpts,
    #[command(flatten)]
    pub solver: SolverOpts,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write rates.json (uses the LASSO oracle for d0).
    #[arg(long)]
    pub rates: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Dataset files; repeatable. Without any, the seeded synthetic suite is used.
    #[arg(long)]
    pub data: Vec<PathBuf>,
    /// Synthetic problems of shape `N,D`; repeatable.
    #[arg(long, value_parser = parse_shape)]
    pub gen: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverOpts,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (n, d) = s.split_once(',').ok_or("expected N,D")?;
    let n = n.trim().parse().map_err(|_| format!("bad row count {n:?}"))?;
    let d = d.trim().parse().map_err(|_| format!("bad feature count {d:?}"))?;
    if n == 0 || d == 0 {
        return Err("N and D must be positive".into());
    }
    Ok((n, d))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    alpha: Option<f64>,
    sigma: Option<f64>,
    tau: Option<f64>,
    gamma: Option<f64>,
    theta: Option<f64>,
    tol: Option<f64>,
    max_outer: Option<usize>,
    max_inner: Option<usize>,
    rule: Option<RuleKind>,
    checked: Option<bool>,
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl SolverOpts {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<AdmmConfig, CliError> {
        let file = match &self.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let base = AdmmConfig::default();
        let pick = |flag: Option<f64>, file: Option<f64>, default: f64| flag.or(file).unwrap_or(default);
        let alpha = pick(self.alpha, file.alpha, base.alpha);
        let sigma = pick(self.sigma, file.sigma, base.sigma);
        let tau = pick(self.tau, file.tau, base.tau);
        let theta = pick(self.theta, file.theta, 0.99);
        let rule = match self.rule.or(file.rule).unwrap_or(RuleKind::Summability) {
            RuleKind::Constant => InertialRule::ConstantAlpha,
            RuleKind::Summability => InertialRule::Summability { theta, k0: 1 },
            RuleKind::Belowbeta => InertialRule::NondecreasingBelowBeta(Schedule::Constant),
        };
        let config = AdmmConfig {
            alpha,
            sigma,
            tau,
            gamma: pick(self.gamma, file.gamma, base.gamma),
            rule,
            tol: pick(self.tol, file.tol, base.tol),
            max_outer: self.max_outer.or(file.max_outer).unwrap_or(base.max_outer),
            max_inner: self.max_inner.or(file.max_inner).unwrap_or(base.max_inner),
            checked: self.checked || file.checked.unwrap_or(false),
            reference_mode: false,
        };
        config.validate().map_err(|e| {
            let hint = match (rule, beta_bound(sigma, tau)) {
                (InertialRule::NondecreasingBelowBeta(_), Ok((_, beta))) => {
                    format!(" (beta(sigma, tau) = {beta:.6e})")
                }
                _ => String::new(),
            };
            CliError::Config(format!("{e}{hint}"))
        })?;
        Ok(config)
    }
}
