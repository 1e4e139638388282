//! Independent ground truth for LASSO instances `½|Ax - b|² + ν|x|_1`: an exact
//! support/sign enumeration for small `d`, a restarted FISTA with a support
//! polish for larger problems, certified reference saddle points, and the
//! classical ADMM iteration.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::admm::stopping_residual_lasso;
use crate::error::{Error, Result};
use crate::prox::soft_threshold;
use crate::spaces::{ensure_dim, GammaMetric, Matrix, PrimalDualPoint, Vector};

pub const MAX_ENUM_DIM: usize = 12;
pub const CERT_TOL: f64 = 1e-10;
const TIE_SLACK: f64 = 1e-12;

pub fn lasso_objective(a: &Matrix, b: &Vector, nu: f64, x: &Vector) -> f64 {
    0.5 * (a * x - b).norm_squared() + nu * x.lp_norm(1)
}

fn check_shapes(a: &Matrix, b: &Vector, nu: f64) -> Result<()> {
    ensure_dim("A rows vs b", a.nrows(), b.len())?;
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::InvalidParameter(format!("nu must be nonnegative, got {nu}")));
    }
    Ok(())
}

/// Solves `A_Sᵀ A_S x_S = A_Sᵀ b - ν s` for a fixed support and sign vector.
fn reduced_solve(a: &Matrix, b: &Vector, nu: f64, support: &[usize], signs: &[f64]) -> Option<Vector> {
    if support.is_empty() {
        return Some(Vector::zeros(a.ncols()));
    }
    let a_s = a.select_columns(support);
    let chol = Cholesky::new(a_s.tr_mul(&a_s))?;
    let rhs = a_s.tr_mul(b) - Vector::from_row_slice(signs) * nu;
    let x_s = chol.solve(&rhs);
    let mut x = Vector::zeros(a.ncols());
    for (&i, &xi) in support.iter().zip(x_s.iter()) {
        x[i] = xi;
    }
    Some(x)
}

/// Sign consistency on the support and `|A_iᵀ(Ax - b)| ≤ ν` off it.
fn kkt_consistent(a: &Matrix, b: &Vector, nu: f64, x: &Vector, support: &[usize], signs: &[f64]) -> bool {
    if support.iter().zip(signs).any(|(&i, &s)| x[i] * s <= 0.0) {
        return false;
    }
    let grad = a.tr_mul(&(a * x - b));
    (0..a.ncols())
        .filter(|i| !support.contains(i))
        .all(|i| grad[i].abs() <= nu * (1.0 + TIE_SLACK) + TIE_SLACK)
}

/// Supports of size `size` in lexicographic order.
fn supports(d: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=d - left {
            cur.push(i);
            rec(i + 1, d, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, size, &mut Vec::with_capacity(size), &mut out);
    out
}

/// Exact minimizer by enumerating supports (by size, then lexicographically) and
/// sign patterns, accepting the first that satisfies the optimality conditions.
/// Falls back to [`lasso_fista`] when no pattern is consistent.
pub fn lasso_support_enum(a: &Matrix, b: &Vector, nu: f64) -> Result<(Vector, f64)> {
    check_shapes(a, b, nu)?;
    let d = a.ncols();
    if d > MAX_ENUM_DIM {
        return Err(Error::InvalidParameter(format!(
            "support enumeration is limited to d <= {MAX_ENUM_DIM}, got {d}"
        )));
    }
    for size in 0..=d.min(a.nrows()) {
        for support in supports(d, size) {
            for mask in 0u32..(1 << size) {
                let signs: Vec<f64> =
                    (0..size).map(|j| if mask >> j & 1 == 1 { -1.0 } else { 1.0 }).collect();
                let Some(x) = reduced_solve(a, b, nu, &support, &signs) else { break };
                if kkt_consistent(a, b, nu, &x, &support, &signs) {
                    let obj = lasso_objective(a, b, nu, &x);
                    return Ok((x, obj));
                }
            }
        }
    }
    let x = lasso_fista(a, b, nu, 1e-12, 200_000)?;
    let obj = lasso_objective(a, b, nu, &x);
    Ok((x, obj))
}

/// Re-solves on the support of `x` with its signs; kept only if it improves the residual.
fn polish(a: &Matrix, b: &Vector, nu: f64, x: &Vector) -> Option<(Vector, f64)> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    let signs: Vec<f64> = support.iter().map(|&i| x[i].signum()).collect();
    let cand = reduced_solve(a, b, nu, &support, &signs)?;
    if support.iter().zip(&signs).any(|(&i, &s)| cand[i] * s <= 0.0) {
        return None;
    }
    let res = stopping_residual_lasso(&cand, a, b, nu).ok()?;
    Some((cand, res))
}

/// Accelerated proximal gradient with gradient-based restart, run until the
/// stopping residual drops to `tol`.
pub fn lasso_fista(a: &Matrix, b: &Vector, nu: f64, tol: f64, max_iters: usize) -> Result<Vector> {
    check_shapes(a, b, nu)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let gram = a.tr_mul(a);
    let atb = a.tr_mul(b);
    let lip = SymmetricEigen::new(gram.clone()).eigenvalues.max().max(f64::MIN_POSITIVE);
    let step = 1.0 / lip;

    let d = a.ncols();
    let mut x = Vector::zeros(d);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut best = f64::INFINITY;
    for it in 0..max_iters {
        let grad = &gram * &y - &atb;
        let x_next = soft_threshold(&(&y - &grad * step), nu * step);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let restart = (&y - &x_next).dot(&(&x_next - &x)) > 0.0;
        if restart {
            y = x_next.clone();
            t = 1.0;
        } else {
            y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
            t = t_next;
        }
        x = x_next;

        if it % 10 == 0 {
            let res = stopping_residual_lasso(&x, a, b, nu)?;
            if res <= tol {
                return Ok(x);
            }
            if res < best.min(1e-4) {
                best = res;
                if let Some((cand, r)) = polish(a, b, nu, &x) {
                    if r <= tol {
                        return Ok(cand);
                    }
                }
            }
        }
    }
    let res = stopping_residual_lasso(&x, a, b, nu)?;
    if res <= tol {
        return Ok(x);
    }
    Err(Error::Oracle(format!(
        "FISTA reached {max_iters} iterations with residual {res:.3e} > {tol:.1e}"
    )))
}

/// A certified point `p* = (z*, w*)` of the extended solution set with `L = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePoint {
    pub z_star: Vector,
    pub w_star: Vector,
    pub x_star: Vector,
    pub certified_residual: f64,
}

impl ReferencePoint {
    pub fn point(&self) -> PrimalDualPoint {
        PrimalDualPoint { z: self.z_star.clone(), w: self.w_star.clone() }
    }

    /// `|p_0 - p*|_γ`
    pub fn distance_from(&self, p0: &PrimalDualPoint, m: GammaMetric) -> f64 {
        m.dist_sq(p0, &self.point()).sqrt()
    }
}

/// Builds `(Aᵀ(Ax* - b), x*)` and certifies `-z* ∈ ν∂|x*|_1` coordinatewise.
pub fn reference_point(a: &Matrix, b: &Vector, nu: f64, x_star: &Vector) -> Result<ReferencePoint> {
    check_shapes(a, b, nu)?;
    ensure_dim("A cols vs x*", a.ncols(), x_star.len())?;
    let z_star = a.tr_mul(&(a * x_star - b));
    for (i, (&xi, &zi)) in x_star.iter().zip(z_star.iter()).enumerate() {
        let (ok, what) = if xi == 0.0 {
            (zi.abs() <= nu + CERT_TOL, format!("|z*_{i}| = {:.3e} exceeds nu = {nu:.3e}", zi.abs()))
        } else {
            let gap = (-zi - nu * xi.signum()).abs();
            (gap <= CERT_TOL, format!("-z*_{i} misses nu*sign(x*_{i}) by {gap:.3e}"))
        };
        if !ok {
            return Err(Error::Certification { index: i, what });
        }
    }
    let certified_residual = stopping_residual_lasso(x_star, a, b, nu)?;
    if certified_residual > CERT_TOL {
        return Err(Error::Certification {
            index: usize::MAX,
            what: format!("stopping residual {certified_residual:.3e}"),
        });
    }
    Ok(ReferencePoint { z_star, w_star: x_star.clone(), x_star: x_star.clone(), certified_residual })
}

/// Solution by enumeration when `d` permits, FISTA otherwise, then certified.
pub fn lasso_reference(a: &Matrix, b: &Vector, nu: f64) -> Result<(ReferencePoint, f64)> {
    let x = if a.ncols() <= MAX_ENUM_DIM {
        lasso_support_enum(a, b, nu)?.0
    } else {
        lasso_fista(a, b, nu, 1e-12, 500_000)?
    };
    let rp = reference_point(a, b, nu, &x)?;
    let obj = lasso_objective(a, b, nu, &x);
    Ok((rp, obj))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardIterate {
    pub x: Vector,
    pub y: Vector,
    pub z: Vector,
}

/// Classical ADMM from `(y0, z0)`:
///
/// ```text
/// x+ = S(y - z/γ, ν/γ)
/// y+ = (AᵀA + γI)⁻¹ (Aᵀb + z + γ x+)
/// z+ = z + γ (x+ - y+)
/// ```
pub fn standard_admm_reference(
    a: &Matrix,
    b: &Vector,
    nu: f64,
    gamma: f64,
    iters: usize,
    init: (Vector, Vector),
) -> Result<Vec<StandardIterate>> {
    check_shapes(a, b, nu)?;
    let m = GammaMetric::new(gamma)?;
    let d = a.ncols();
    let (mut y, mut z) = init;
    ensure_dim("initial y", d, y.len())?;
    ensure_dim("initial z", d, z.len())?;
    let mut sys = a.tr_mul(a);
    for i in 0..d {
        sys[(i, i)] += m.gamma();
    }
    let chol = Cholesky::new(sys).ok_or_else(|| Error::Factorization("AᵀA + γI".into()))?;
    let atb = a.tr_mul(b);

    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        let x = soft_threshold(&(&y - &z / gamma), nu / gamma);
        y = chol.solve(&(&atb + &z + &x * gamma));
        z += (&x - &y) * gamma;
        out.push(StandardIterate { x, y: y.clone(), z: z.clone() });
    }
    Ok(out)
}
