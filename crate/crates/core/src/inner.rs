//! σ-approximate solvers for the second-block subproblem
//!
//! ```text
//! min_y  g(y) + <ẑ, Lx - y> + (γ/2) |Lx - y|²
//! ```
//!
//! An answer is a triple `(ỹ, v, ε)` with `v ∈ ∂_ε g(ỹ)` and residual
//! `e = v - ẑ + γ(ỹ - Lx)`, accepted when
//!
//! ```text
//! |e|² + 2γε <= σ² min{ γ² |Lx - ŷ|², |v - ẑ|² }.
//! ```

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::spaces::{ensure_dim, GammaMetric, Matrix, Vector};

/// Magnitude of `e` still accepted as "exact" once only an exact solution qualifies
/// (σ = 0 or a zero right-hand side), relative to the size of the linear system.
pub const EXACT_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxSolution {
    pub y_tilde: Vector,
    pub v: Vector,
    pub eps: f64,
    pub e: Vector,
    pub inner_iters: usize,
    /// Produced by a direct solve because only the exact solution satisfies the criterion.
    pub exact: bool,
}

/// Inputs of one second-block subproblem. `lx` is the image `L x_k`.
#[derive(Debug, Clone, Copy)]
pub struct InnerRequest<'a> {
    pub lx: &'a Vector,
    pub z_hat: &'a Vector,
    pub y_hat: &'a Vector,
    pub metric: GammaMetric,
    pub sigma: f64,
    pub max_iters: usize,
    pub warm_start: Option<&'a Vector>,
}

pub type CustomInnerSolver = Arc<dyn Fn(&InnerRequest<'_>) -> Result<ApproxSolution> + Send + Sync>;

#[derive(Clone)]
pub enum SecondBlock {
    QuadraticLeastSquares(LeastSquares),
    Custom {
        dim: usize,
        solve: CustomInnerSolver,
    },
}

impl fmt::Debug for SecondBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SecondBlock::QuadraticLeastSquares(ls) => {
                f.debug_tuple("QuadraticLeastSquares").field(ls).finish()
            }
            SecondBlock::Custom { dim, .. } => f.debug_struct("Custom").field("dim", dim).finish(),
        }
    }
}

impl SecondBlock {
    pub fn dim(&self) -> usize {
        match self {
            SecondBlock::QuadraticLeastSquares(ls) => ls.dim(),
            SecondBlock::Custom { dim, .. } => *dim,
        }
    }

    pub fn solve(&self, req: &InnerRequest<'_>) -> Result<ApproxSolution> {
        match self {
            SecondBlock::QuadraticLeastSquares(ls) => cg_inner_solve(ls, req),
            SecondBlock::Custom { solve, .. } => solve(req),
        }
    }
}

/// `g(y) = ½ |Ay - b|²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: Matrix,
    b: Vector,
    atb: Vector,
    gram: OnceLock<Matrix>,
}

impl LeastSquares {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        ensure_dim("least-squares rows", a.nrows(), b.len())?;
        let atb = a.tr_mul(&b);
        Ok(Self {
            a,
            b,
            atb,
            gram: OnceLock::new(),
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn value(&self, y: &Vector) -> f64 {
        0.5 * (&self.a * y - &self.b).norm_squared()
    }

    pub fn gradient(&self, y: &Vector) -> Vector {
        self.a.tr_mul(&(&self.a * y - &self.b))
    }

    /// `AᵀA`, computed on first use and cached.
    pub fn gram(&self) -> &Matrix {
        self.gram.get_or_init(|| self.a.tr_mul(&self.a))
    }

    /// `Aᵀb + ẑ + γ Lx`
    fn rhs(&self, req: &InnerRequest<'_>) -> Vector {
        &self.atb + req.z_hat + req.lx * req.metric.gamma()
    }
}

/// `e = v - ẑ + γ(ỹ - Lx)`
pub fn residual_e(v: &Vector, z_hat: &Vector, y_tilde: &Vector, lx: &Vector, m: GammaMetric) -> Vector {
    v - z_hat + (y_tilde - lx) * m.gamma()
}

/// Relative-error acceptance test for a candidate triple.
pub fn check_sigma(
    e: &Vector,
    eps: f64,
    m: GammaMetric,
    sigma: f64,
    lx_minus_yhat_sq: f64,
    v_minus_zhat_sq: f64,
) -> bool {
    let g = m.gamma();
    let lhs = e.norm_squared() + 2.0 * g * eps;
    let rhs = sigma * sigma * (g * g * lx_minus_yhat_sq).min(v_minus_zhat_sq);
    lhs <= rhs
}

/// Both sides of the acceptance test, recomputed from the stored triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub lhs: f64,
    pub rhs: f64,
    /// Stored `e` agrees with `v - ẑ + γ(ỹ - Lx)`.
    pub e_consistent: bool,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.e_consistent && self.lhs <= self.rhs
    }

    /// The right-hand side vanishes, so only an exact solution is admissible.
    pub fn degenerate(&self) -> bool {
        self.rhs == 0.0
    }
}

pub fn certify(sol: &ApproxSolution, req: &InnerRequest<'_>) -> Certificate {
    let m = req.metric;
    let g = m.gamma();
    let e = residual_e(&sol.v, req.z_hat, &sol.y_tilde, req.lx, m);
    let scale = sol.v.norm() + req.z_hat.norm() + g * (sol.y_tilde.norm() + req.lx.norm());
    let e_consistent = (&e - &sol.e).norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE);
    let lhs = e.norm_squared() + 2.0 * g * sol.eps;
    let lx_yhat = (req.lx - req.y_hat).norm_squared();
    let v_zhat = (&sol.v - req.z_hat).norm_squared();
    let rhs = req.sigma * req.sigma * (g * g * lx_yhat).min(v_zhat);
    Certificate {
        lhs,
        rhs,
        e_consistent,
    }
}

/// Accepts `sol` if it passes the criterion, or, when only an exact solution can pass
/// (σ = 0 or vanishing right-hand side), if it is an exact solve whose residual is at
/// rounding level.
pub fn admissible(sol: &ApproxSolution, req: &InnerRequest<'_>) -> bool {
    let cert = certify(sol, req);
    if cert.holds() {
        return true;
    }
    let only_exact = req.sigma == 0.0 || cert.degenerate();
    only_exact && sol.exact && sol.eps == 0.0 && cert.e_consistent && {
        let scale = 1.0 + sol.v.norm() + req.z_hat.norm() + req.metric.gamma() * req.lx.norm();
        cert.lhs.sqrt() <= EXACT_RESIDUAL_TOL * scale
    }
}

/// Conjugate gradient on `(AᵀA + γI) y = Aᵀb + ẑ + γ Lx`, stopped at the first iterate
/// whose triple `(y, Aᵀ(Ay - b), 0)` passes the relative-error test.
///
/// Requires `L = I` (the image `Lx` lives in the same space as `y`). Starts from the
/// warm start when given, else from `ŷ`.
pub fn cg_inner_solve(ls: &LeastSquares, req: &InnerRequest<'_>) -> Result<ApproxSolution> {
    cg_inner_solve_traced(ls, req, |_, _, _| {})
}

/// [`cg_inner_solve`] reporting `(iteration, y, |e|)` for every iterate examined.
pub fn cg_inner_solve_traced(
    ls: &LeastSquares,
    req: &InnerRequest<'_>,
    mut trace: impl FnMut(usize, &Vector, f64),
) -> Result<ApproxSolution> {
    let d = ls.dim();
    ensure_dim("inner solve (Lx)", d, req.lx.len())?;
    ensure_dim("inner solve (z_hat)", d, req.z_hat.len())?;
    ensure_dim("inner solve (y_hat)", d, req.y_hat.len())?;
    if !(0.0..1.0).contains(&req.sigma) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in [0, 1), got {}",
            req.sigma
        )));
    }
    let m = req.metric;
    let g = m.gamma();
    let sigma_sq = req.sigma * req.sigma;
    let left = g * g * (req.lx - req.y_hat).norm_squared();
    if req.sigma == 0.0 || left == 0.0 {
        return exact_inner_solve(ls, req);
    }

    let a = &ls.a;
    let rhs = ls.rhs(req);
    let mut y = match req.warm_start {
        Some(w) => {
            ensure_dim("inner warm start", d, w.len())?;
            w.clone()
        }
        None => req.y_hat.clone(),
    };

    let mut r = Vector::zeros(d);
    let mut p = Vector::zeros(d);
    let mut rr = 0.0;
    let mut last = f64::INFINITY;
    for it in 0..=req.max_iters {
        let v = ls.gradient(&y);
        let e = residual_e(&v, req.z_hat, &y, req.lx, m);
        let e_sq = e.norm_squared();
        last = e_sq.sqrt();
        trace(it, &y, last);
        let right = left.min((&v - req.z_hat).norm_squared());
        if e_sq <= sigma_sq * right {
            return Ok(ApproxSolution {
                y_tilde: y,
                v,
                eps: 0.0,
                e,
                inner_iters: it,
                exact: false,
            });
        }
        if it == req.max_iters {
            break;
        }
        if it == 0 {
            r = &rhs - (a.tr_mul(&(a * &y)) + &y * g);
            p = r.clone();
            rr = r.norm_squared();
        }
        if rr == 0.0 {
            break;
        }
        let kp = a.tr_mul(&(a * &p)) + &p * g;
        let step = rr / p.dot(&kp);
        y.axpy(step, &p, 1.0);
        r.axpy(-step, &kp, 1.0);
        let rr_next = r.norm_squared();
        p = &r + &p * (rr_next / rr);
        rr = rr_next;
    }
    Err(Error::InnerNotCertified {
        iters: req.max_iters,
        residual: last,
    })
}

/// Direct Cholesky solve of the inner linear system with one step of iterative refinement.
pub fn exact_inner_solve(ls: &LeastSquares, req: &InnerRequest<'_>) -> Result<ApproxSolution> {
    let d = ls.dim();
    ensure_dim("exact inner solve (Lx)", d, req.lx.len())?;
    ensure_dim("exact inner solve (z_hat)", d, req.z_hat.len())?;
    let g = req.metric.gamma();
    let mut k = ls.gram().clone();
    for i in 0..d {
        k[(i, i)] += g;
    }
    let chol = Cholesky::new(k.clone())
        .ok_or_else(|| Error::Factorization("AᵀA + γI is not positive definite".into()))?;
    let rhs = ls.rhs(req);
    let mut y = chol.solve(&rhs);
    let refine = &rhs - &k * &y;
    y += chol.solve(&refine);
    let v = ls.gradient(&y);
    let e = residual_e(&v, req.z_hat, &y, req.lx, req.metric);
    Ok(ApproxSolution {
        y_tilde: y,
        v,
        eps: 0.0,
        e,
        inner_iters: 0,
        exact: true,
    })
}
