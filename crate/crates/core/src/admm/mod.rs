//! The inexact inertial ADMM outer loop.
//!
//! One iteration, for `k ≥ 0` and `p_k = (z_k, y_k)`:
//!
//! 1. extrapolate `p̂_k = p_k + α_k (p_k - p_{k-1})`;
//! 2. solve the first block exactly for `x_k`;
//! 3. solve the second block σ-approximately for `(ỹ_k, v_k, ε_k)`;
//! 4. take the relaxed step to `p_{k+1}`.
//!
//! The loop stops once the stopping residual at `x_k` drops below `tol`, after
//! completing that iteration so every emitted record is whole.

mod config;
pub mod invariants;
mod step;

pub use config::{AdmmConfig, InertialRule, Schedule};
pub use step::{
    alpha_summability, beta_bound, breve_point, extrapolate, q_eval, step_length_sq,
    stopping_residual_lasso, update, z_prime,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{admissible, ApproxSolution, InnerRequest, LeastSquares, SecondBlock};
use crate::prox::{solve_first_block, FirstBlock};
use crate::spaces::{ensure_dim, GammaMetric, LinearOp, Matrix, PrimalDualPoint, Vector};

/// `min_x f(x) + g(Lx)`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub first: FirstBlock,
    pub second: SecondBlock,
    pub op: LinearOp,
}

impl Problem {
    pub fn new(first: FirstBlock, second: SecondBlock, op: LinearOp) -> Result<Self> {
        if !op.is_identity() {
            return Err(Error::InvalidParameter(
                "first-block solvers require L = I".into(),
            ));
        }
        ensure_dim("operator output vs second block", op.output_dim(), second.dim())?;
        if let Some(d) = first.dim() {
            ensure_dim("first block vs operator input", d, op.input_dim())?;
        }
        Ok(Self { first, second, op })
    }

    /// `½|Ax - b|² + ν|x|_1`
    pub fn lasso(a: Matrix, b: Vector, nu: f64) -> Result<Self> {
        let d = a.ncols();
        Self::new(
            FirstBlock::l1(nu)?,
            SecondBlock::QuadraticLeastSquares(LeastSquares::new(a, b)?),
            LinearOp::Identity(d),
        )
    }

    pub fn dim(&self) -> usize {
        self.op.output_dim()
    }

    pub fn least_squares(&self) -> Option<&LeastSquares> {
        match &self.second {
            SecondBlock::QuadraticLeastSquares(ls) => Some(ls),
            SecondBlock::Custom { .. } => None,
        }
    }

    /// `f(x) + g(Lx)`, when `g` can be evaluated.
    pub fn objective(&self, x: &Vector) -> Option<f64> {
        let ls = self.least_squares()?;
        let lx = self.op.apply(x).ok()?;
        Some(self.first.value(x) + ls.value(&lx))
    }

    /// `dist_∞(0, ∂f(x) + L*∇g(Lx))` for smooth `g`; with a custom second block
    /// the square root of the pointwise residual stands in.
    fn stopping_residual(&self, x: &Vector, lx: &Vector, pointwise: f64) -> Result<f64> {
        let Some(ls) = self.least_squares() else {
            return Ok(pointwise.sqrt());
        };
        let grad = self.op.adjoint(&ls.gradient(lx))?;
        Ok(match &self.first {
            FirstBlock::L1 { nu } => step::lasso_residual_from_gradient(x, &grad, *nu),
            FirstBlock::CustomQuadratic { q, c } => (q * x + c + grad).amax(),
        })
    }
}

/// `p_k`, `p_{k-1}`, the iteration counter and the inner warm start.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub z: Vector,
    pub y: Vector,
    pub z_prev: Vector,
    pub y_prev: Vector,
    pub k: usize,
    pub warm: Option<Vector>,
}

impl AdmmState {
    /// `p_0 = p_{-1} = (z0, y0)`.
    pub fn new(z0: Vector, y0: Vector) -> Self {
        Self {
            z_prev: z0.clone(),
            y_prev: y0.clone(),
            z: z0,
            y: y0,
            k: 0,
            warm: None,
        }
    }

    pub fn point(&self) -> PrimalDualPoint {
        PrimalDualPoint {
            z: self.z.clone(),
            w: self.y.clone(),
        }
    }
}

/// Full trace of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub alpha_k: f64,
    /// `p_k`
    pub z: Vector,
    pub y: Vector,
    /// `|p_k - p_{k-1}|²_γ`
    pub step_sq: f64,
    pub z_hat: Vector,
    pub y_hat: Vector,
    pub x: Vector,
    pub lx: Vector,
    pub approx: ApproxSolution,
    pub z_prime: Vector,
    pub breve_z: Vector,
    pub breve_y: Vector,
    pub z_next: Vector,
    pub y_next: Vector,
    pub stopping_residual: f64,
}

impl IterateRecord {
    pub fn p(&self) -> PrimalDualPoint {
        PrimalDualPoint { z: self.z.clone(), w: self.y.clone() }
    }

    pub fn p_hat(&self) -> PrimalDualPoint {
        PrimalDualPoint { z: self.z_hat.clone(), w: self.y_hat.clone() }
    }

    /// `p̃_k = (v_k, L x_k)`
    pub fn p_tilde(&self) -> PrimalDualPoint {
        PrimalDualPoint { z: self.approx.v.clone(), w: self.lx.clone() }
    }

    pub fn p_breve(&self) -> PrimalDualPoint {
        PrimalDualPoint { z: self.breve_z.clone(), w: self.breve_y.clone() }
    }

    pub fn p_next(&self) -> PrimalDualPoint {
        PrimalDualPoint { z: self.z_next.clone(), w: self.y_next.clone() }
    }

    /// `γ|Lx - ỹ|² + (1/γ)|z' - v|²`
    pub fn pointwise_residual(&self, m: GammaMetric) -> f64 {
        let g = m.gamma();
        g * (&self.lx - &self.approx.y_tilde).norm_squared()
            + (&self.z_prime - &self.approx.v).norm_squared() / g
    }

    pub fn inner_request(&self, m: GammaMetric, sigma: f64) -> InnerRequest<'_> {
        InnerRequest {
            lx: &self.lx,
            z_hat: &self.z_hat,
            y_hat: &self.y_hat,
            metric: m,
            sigma,
            max_iters: 0,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "k", rename_all = "snake_case")]
pub enum Status {
    Converged(usize),
    MaxIterations,
}

impl Status {
    pub fn converged(self) -> bool {
        matches!(self, Status::Converged(_))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<IterateRecord>,
    pub status: Status,
    pub x: Vector,
    pub state: AdmmState,
}

/// Runs to convergence and keeps every iterate.
pub fn run(problem: &Problem, config: &AdmmConfig, init: Option<(Vector, Vector)>) -> Result<RunOutput> {
    let mut records = Vec::new();
    let end = run_observed(problem, config, init, |rec| records.push(rec))?;
    Ok(RunOutput {
        records,
        status: end.status,
        x: end.x,
        state: end.state,
    })
}

#[derive(Debug, Clone)]
pub struct RunEnd {
    pub status: Status,
    pub x: Vector,
    pub state: AdmmState,
    pub outer_iters: usize,
}

/// Runs the loop, handing each finished record to `observer` instead of storing it.
pub fn run_observed(
    problem: &Problem,
    config: &AdmmConfig,
    init: Option<(Vector, Vector)>,
    mut observer: impl FnMut(IterateRecord),
) -> Result<RunEnd> {
    config.validate()?;
    let dim = problem.dim();
    let (z0, y0) = init.unwrap_or_else(|| (Vector::zeros(dim), Vector::zeros(dim)));
    ensure_dim("initial z", dim, z0.len())?;
    ensure_dim("initial y", dim, y0.len())?;
    let m = GammaMetric::new(config.gamma)?;
    let mut state = AdmmState::new(z0, y0);
    let mut x_last = Vector::zeros(problem.op.input_dim());

    for k in 0..config.max_outer {
        state.k = k;
        let rec = iterate(problem, config, m, &state).map_err(|e| match e {
            e @ Error::Invariant { .. } => e,
            e => e.at_iteration(k),
        })?;
        let done = rec.stopping_residual <= config.tol;
        state.z_prev = std::mem::replace(&mut state.z, rec.z_next.clone());
        state.y_prev = std::mem::replace(&mut state.y, rec.y_next.clone());
        state.warm = Some(rec.approx.y_tilde.clone());
        x_last = rec.x.clone();
        observer(rec);
        if done {
            state.k = k + 1;
            return Ok(RunEnd {
                status: Status::Converged(k),
                x: x_last,
                state,
                outer_iters: k + 1,
            });
        }
    }
    state.k = config.max_outer;
    Ok(RunEnd {
        status: Status::MaxIterations,
        x: x_last,
        state,
        outer_iters: config.max_outer,
    })
}

fn inertia(config: &AdmmConfig, state: &AdmmState, m: GammaMetric) -> f64 {
    let k = state.k;
    match config.rule {
        InertialRule::ConstantAlpha => config.alpha,
        InertialRule::Summability { .. } if k == 0 => 0.0,
        InertialRule::Summability { theta, k0 } => {
            alpha_summability(k, state, config.alpha, theta, k0, m)
        }
        InertialRule::NondecreasingBelowBeta(schedule) => schedule.value(k, config.alpha),
    }
}

fn iterate(
    problem: &Problem,
    config: &AdmmConfig,
    m: GammaMetric,
    state: &AdmmState,
) -> Result<IterateRecord> {
    let k = state.k;
    let alpha_k = inertia(config, state, m);
    let (z_hat, y_hat) = extrapolate(state, alpha_k);
    let x = solve_first_block(&problem.first, &z_hat, &y_hat, m)?;
    let lx = problem.op.apply(&x)?;

    let req = InnerRequest {
        lx: &lx,
        z_hat: &z_hat,
        y_hat: &y_hat,
        metric: m,
        sigma: config.sigma,
        max_iters: config.max_inner,
        warm_start: state.warm.as_ref(),
    };
    let approx = problem.second.solve(&req)?;
    if !admissible(&approx, &req) {
        return Err(Error::Invariant {
            k,
            what: "inner solution fails the relative-error criterion".into(),
        });
    }

    let zp = z_prime(&z_hat, &y_hat, &lx, m);
    let (breve_z, breve_y) = breve_point(&z_hat, &lx, &approx, m);
    let (z_next, y_next) = update(&z_hat, &y_hat, &lx, &approx, config.tau, m);

    let g = m.gamma();
    let pointwise = g * (&lx - &approx.y_tilde).norm_squared()
        + (&zp - &approx.v).norm_squared() / g;
    let stopping_residual = problem.stopping_residual(&x, &lx, pointwise)?;

    let rec = IterateRecord {
        k,
        alpha_k,
        z: state.z.clone(),
        y: state.y.clone(),
        step_sq: step_length_sq(state, m),
        z_hat,
        y_hat,
        x,
        lx,
        approx,
        z_prime: zp,
        breve_z,
        breve_y,
        z_next,
        y_next,
        stopping_residual,
    };
    if config.checked {
        invariants::check_record(&rec, problem, config)?;
    }
    Ok(rec)
}
