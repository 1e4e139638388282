//! Experiment plumbing: timed single runs with per-iteration logs, and the
//! inertial versus non-inertial comparison table.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::admm::{run_observed, AdmmConfig, Problem, Status};
use crate::data::{gen_synthetic, preprocess, Dataset};
use crate::error::{Error, Result};
use crate::oracle::lasso_reference;
use crate::rates::{RateReport, RateTracker};
use crate::spaces::{GammaMetric, PrimalDualPoint, Vector};

/// Geometric means of the inertial/non-inertial ratios reported for the
/// original dataset suite: outer iterations, inner iterations, time.
pub const PAPER_GEOMEAN_RATIOS: (f64, f64, f64) = (0.7149, 0.7466, 0.7414);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub config: AdmmConfig,
    pub outer_iters: usize,
    pub total_inner_iters: usize,
    /// Solve loop only; loading and preprocessing are excluded.
    pub wall_time_seconds: f64,
    pub final_residual: f64,
    pub objective: Option<f64>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRow {
    pub k: usize,
    pub alpha_k: f64,
    pub residual: f64,
    pub inner_iters: usize,
    pub pointwise_r: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub summary: RunSummary,
    pub rows: Vec<IterateRow>,
    pub x: Vector,
    pub rates: Option<RateReport>,
}

/// Runs one configuration; with `rates` the iterates are streamed into a
/// [`RateTracker`] and `d0` is measured against the oracle reference point.
pub fn solve(problem: &Problem, config: &AdmmConfig, name: &str, rates: bool) -> Result<SolveOutcome> {
    let m = GammaMetric::new(config.gamma)?;
    let dim = problem.dim();
    let mut tracker = if rates {
        Some(RateTracker::new(config, problem.op.input_dim(), dim)?)
    } else {
        None
    };
    if let Some(ls) = problem.least_squares() {
        ls.gram();
    }
    let mut rows = Vec::new();
    let mut track_err = None;
    let start = Instant::now();
    let end = run_observed(problem, config, None, |rec| {
        rows.push(IterateRow {
            k: rec.k,
            alpha_k: rec.alpha_k,
            residual: rec.stopping_residual,
            inner_iters: rec.approx.inner_iters,
            pointwise_r: rec.pointwise_residual(m),
        });
        if let Some(t) = tracker.as_mut() {
            if let Err(e) = t.observe(&rec) {
                track_err.get_or_insert(e);
            }
        }
    })?;
    let wall_time_seconds = start.elapsed().as_secs_f64();
    if let Some(e) = track_err {
        return Err(e);
    }

    let rates = match tracker {
        Some(t) => {
            let ls = problem.least_squares().ok_or_else(|| {
                Error::InvalidParameter("rate report needs the least-squares second block".into())
            })?;
            let nu = match problem.first {
                crate::prox::FirstBlock::L1 { nu } => nu,
                _ => return Err(Error::InvalidParameter("rate report needs the l1 first block".into())),
            };
            let (rp, _) = lasso_reference(ls.a(), ls.b(), nu)?;
            let d0 = rp.distance_from(&PrimalDualPoint::zeros(dim), m);
            Some(t.finish(config, d0))
        }
        None => None,
    };

    let summary = RunSummary {
        name: name.to_owned(),
        config: config.clone(),
        outer_iters: end.outer_iters,
        total_inner_iters: rows.iter().map(|r| r.inner_iters).sum(),
        wall_time_seconds,
        final_residual: rows.last().map_or(f64::NAN, |r| r.residual),
        objective: problem.objective(&end.x),
        status: end.status,
    };
    Ok(SolveOutcome { summary, rows, x: end.x, rates })
}

pub fn write_iterates_csv(rows: &[IterateRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "k,alpha_k,residual,inner_iters,pointwise_r")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e},{},{:e}", r.k, r.alpha_k, r.residual, r.inner_iters, r.pointwise_r)?;
    }
    Ok(())
}

/// One problem of the comparison; `error` is set when either run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub rows: usize,
    pub features: usize,
    pub inertial: Option<RunSummary>,
    pub baseline: Option<RunSummary>,
    pub error: Option<String>,
}

impl BenchRow {
    /// `(outer, inner, time)` ratios inertial / non-inertial.
    pub fn ratios(&self) -> Option<(f64, f64, f64)> {
        let (i, b) = (self.inertial.as_ref()?, self.baseline.as_ref()?);
        Some((
            i.outer_iters as f64 / b.outer_iters as f64,
            i.total_inner_iters as f64 / b.total_inner_iters as f64,
            i.wall_time_seconds / b.wall_time_seconds,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    /// Geometric means over rows where both runs converged.
    pub geomean: Option<(f64, f64, f64)>,
    pub paper_geomean: (f64, f64, f64),
}

pub fn geometric_mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x.ln(), n + 1));
    (n > 0).then(|| (sum / n as f64).exp())
}

fn converged(s: &Option<RunSummary>) -> bool {
    s.as_ref().is_some_and(|s| s.status.converged())
}

/// Runs `config` and its `α = 0` counterpart on every preprocessed problem.
pub fn bench(problems: &[(Dataset, f64)], config: &AdmmConfig) -> BenchTable {
    let base_cfg = config.non_inertial();
    let rows = problems
        .iter()
        .map(|(ds, nu)| {
            let mut row = BenchRow {
                name: ds.name.clone(),
                rows: ds.rows(),
                features: ds.features(),
                inertial: None,
                baseline: None,
                error: None,
            };
            let problem = match Problem::lasso(ds.a.clone(), ds.b.clone(), *nu) {
                Ok(p) => p,
                Err(e) => {
                    row.error = Some(e.to_string());
                    return row;
                }
            };
            match solve(&problem, config, &ds.name, false) {
                Ok(o) => row.inertial = Some(o.summary),
                Err(e) => row.error = Some(format!("inertial: {e}")),
            }
            match solve(&problem, &base_cfg, &ds.name, false) {
                Ok(o) => row.baseline = Some(o.summary),
                Err(e) => {
                    let msg = format!("non-inertial: {e}");
                    row.error = Some(row.error.map_or(msg.clone(), |p| format!("{p}; {msg}")));
                }
            }
            row
        })
        .collect::<Vec<_>>();
    let ok: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| converged(&r.inertial) && converged(&r.baseline))
        .filter_map(BenchRow::ratios)
        .collect();
    let geomean = (|| {
        Some((
            geometric_mean(ok.iter().map(|r| r.0))?,
            geometric_mean(ok.iter().map(|r| r.1))?,
            geometric_mean(ok.iter().map(|r| r.2))?,
        ))
    })();
    BenchTable { rows, geomean, paper_geomean: PAPER_GEOMEAN_RATIOS }
}

/// The fixed seeded suite used for the inertial comparison: ten Gaussian
/// problems of varying shape, preprocessed.
pub fn synthetic_suite(seed: u64) -> Result<Vec<(Dataset, f64)>> {
    const SHAPES: [(usize, usize); 10] = [
        (100, 50),
        (100, 200),
        (150, 100),
        (200, 400),
        (80, 300),
        (300, 150),
        (120, 120),
        (60, 240),
        (250, 500),
        (200, 80),
    ];
    SHAPES
        .iter()
        .enumerate()
        .map(|(i, &(n, d))| {
            let (ds, _) = gen_synthetic(n, d, 0.1, 0.1, seed + i as u64)?;
            preprocess(&ds)
        })
        .collect()
}

fn fmt_opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or_else(|| "-".to_owned(), f)
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "problem,n,d,outer_inertial,inner_inertial,time_inertial,outer_noninertial,inner_noninertial,time_noninertial,ratio_outer,ratio_inner,ratio_time,error\n",
        );
        for r in &self.rows {
            let i = r.inertial.as_ref();
            let b = r.baseline.as_ref();
            let ratios = r.ratios();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.name,
                r.rows,
                r.features,
                fmt_opt(i, |s| s.outer_iters.to_string()),
                fmt_opt(i, |s| s.total_inner_iters.to_string()),
                fmt_opt(i, |s| format!("{:.6}", s.wall_time_seconds)),
                fmt_opt(b, |s| s.outer_iters.to_string()),
                fmt_opt(b, |s| s.total_inner_iters.to_string()),
                fmt_opt(b, |s| format!("{:.6}", s.wall_time_seconds)),
                fmt_opt(ratios, |r| format!("{:.4}", r.0)),
                fmt_opt(ratios, |r| format!("{:.4}", r.1)),
                fmt_opt(ratios, |r| format!("{:.4}", r.2)),
                r.error.as_deref().unwrap_or("").replace(',', ";"),
            );
        }
        if let Some((o, n, t)) = self.geomean {
            let _ = writeln!(s, "geometric_mean,,,,,,,,,{o:.4},{n:.4},{t:.4},");
        }
        let (o, n, t) = self.paper_geomean;
        let _ = writeln!(s, "paper_geometric_mean,,,,,,,,,{o:.4},{n:.4},{t:.4},");
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| Problem | n | d | Outer (inertial) | Inner (inertial) | Time s (inertial) | Outer (α=0) | Inner (α=0) | Time s (α=0) | Outer ratio | Inner ratio | Time ratio |\n\
             |---|---|---|---|---|---|---|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            let i = r.inertial.as_ref();
            let b = r.baseline.as_ref();
            let ratios = r.ratios();
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                r.name,
                r.rows,
                r.features,
                fmt_opt(i, |s| s.outer_iters.to_string()),
                fmt_opt(i, |s| s.total_inner_iters.to_string()),
                fmt_opt(i, |s| format!("{:.4}", s.wall_time_seconds)),
                fmt_opt(b, |s| s.outer_iters.to_string()),
                fmt_opt(b, |s| s.total_inner_iters.to_string()),
                fmt_opt(b, |s| format!("{:.4}", s.wall_time_seconds)),
                fmt_opt(ratios, |r| format!("{:.4}", r.0)),
                fmt_opt(ratios, |r| format!("{:.4}", r.1)),
                fmt_opt(ratios, |r| format!("{:.4}", r.2)),
            );
        }
        if let Some((o, n, t)) = self.geomean {
            let _ = writeln!(s, "| **Geometric mean** | | | | | | | | | {o:.4} | {n:.4} | {t:.4} |");
        }
        let (o, n, t) = self.paper_geomean;
        let _ = writeln!(s, "| Reference suite geometric mean | | | | | | | | | {o:.4} | {n:.4} | {t:.4} |");
        for r in self.rows.iter().filter(|r| r.error.is_some()) {
            let _ = writeln!(s, "\n{}: {}", r.name, r.error.as_deref().unwrap_or_default());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (Dataset, f64) {
        let (ds, _) = gen_synthetic(20, 10, 0.2, 0.05, 1).unwrap();
        preprocess(&ds).unwrap()
    }

    #[test]
    fn summary_totals_and_log_shape() {
        let (ds, nu) = tiny();
        let p = Problem::lasso(ds.a, ds.b, nu).unwrap();
        let out = solve(&p, &AdmmConfig::default(), "tiny", true).unwrap();
        assert!(out.summary.status.converged());
        assert_eq!(out.summary.outer_iters, out.rows.len());
        assert_eq!(out.summary.total_inner_iters, out.rows.iter().map(|r| r.inner_iters).sum::<usize>());
        assert!(out.summary.final_residual <= 1e-6);
        assert!(out.rates.is_some());

        let mut buf = Vec::new();
        write_iterates_csv(&out.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,alpha_k,residual,inner_iters,pointwise_r\n"));
        assert_eq!(text.lines().count(), out.rows.len() + 1);
    }

    #[test]
    fn runs_are_deterministic() {
        let (ds, nu) = tiny();
        let p = Problem::lasso(ds.a, ds.b, nu).unwrap();
        let a = solve(&p, &AdmmConfig::default(), "t", false).unwrap();
        let b = solve(&p, &AdmmConfig::default(), "t", false).unwrap();
        assert_eq!(a.rows, b.rows);
        let strip = |s: &RunSummary| RunSummary { wall_time_seconds: 0.0, ..s.clone() };
        assert_eq!(strip(&a.summary), strip(&b.summary));
    }

    #[test]
    fn ratio_columns_are_quotients() {
        let t = bench(&[tiny()], &AdmmConfig::default());
        let r = &t.rows[0];
        let (o, n, tm) = r.ratios().unwrap();
        let (i, b) = (r.inertial.as_ref().unwrap(), r.baseline.as_ref().unwrap());
        assert!((o - i.outer_iters as f64 / b.outer_iters as f64).abs() <= 1e-12 * o);
        assert!((n - i.total_inner_iters as f64 / b.total_inner_iters as f64).abs() <= 1e-12 * n);
        assert!((tm - i.wall_time_seconds / b.wall_time_seconds).abs() <= 1e-12 * tm);
        let csv = t.to_csv();
        assert!(csv.contains("geometric_mean,"));
        assert!(csv.contains("0.7149"));
        assert!(t.to_markdown().contains("Geometric mean"));
    }

    #[test]
    fn geometric_mean_examples() {
        assert_eq!(geometric_mean([]), None);
        assert!((geometric_mean([2.0, 8.0]).unwrap() - 4.0).abs() < 1e-12);
    }
}
