//! Exact solvers for the first-block subproblem
//!
//! ```text
//! x ∈ argmin_x  f(x) + <ẑ, Lx - ŷ> + (γ/2) |Lx - ŷ|²
//! ```
//!
//! Both shipped blocks use `L = I`, where the subproblem has a closed form.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::spaces::{ensure_dim, GammaMetric, Matrix, Vector};

/// Componentwise `sign(u_i) max(|u_i| - kappa, 0)`.
pub fn soft_threshold(u: &Vector, kappa: f64) -> Vector {
    u.map(|ui| ui.signum() * (ui.abs() - kappa).max(0.0))
}

#[derive(Debug, Clone)]
pub enum FirstBlock {
    /// `f(x) = nu |x|_1`
    L1 { nu: f64 },
    /// `f(x) = ½ xᵀQx + cᵀx` with `Q` symmetric positive definite.
    CustomQuadratic { q: Matrix, c: Vector },
}

impl FirstBlock {
    pub fn l1(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > 0.0 {
            Ok(FirstBlock::L1 { nu })
        } else {
            Err(Error::InvalidParameter(format!("l1 weight must be positive, got {nu}")))
        }
    }

    pub fn quadratic(q: Matrix, c: Vector) -> Result<Self> {
        ensure_dim("quadratic block rows/cols", q.nrows(), q.ncols())?;
        ensure_dim("quadratic block linear term", q.nrows(), c.len())?;
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 * (1.0 + q.amax()) {
            return Err(Error::Factorization(format!(
                "quadratic block is not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        if Cholesky::new(q.clone()).is_none() {
            return Err(Error::Factorization(
                "quadratic block is not positive definite".into(),
            ));
        }
        Ok(FirstBlock::CustomQuadratic { q, c })
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            FirstBlock::L1 { .. } => None,
            FirstBlock::CustomQuadratic { c, .. } => Some(c.len()),
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            FirstBlock::L1 { nu } => nu * x.lp_norm(1),
            FirstBlock::CustomQuadratic { q, c } => 0.5 * x.dot(&(q * x)) + c.dot(x),
        }
    }

    /// Largest componentwise violation of `u ∈ ∂f(x)`.
    pub fn subgradient_violation(&self, x: &Vector, u: &Vector) -> Result<f64> {
        ensure_dim("subgradient check", x.len(), u.len())?;
        Ok(match self {
            FirstBlock::L1 { nu } => l1_subgradient_violation(x, u, *nu),
            FirstBlock::CustomQuadratic { q, c } => (q * x + c - u).amax(),
        })
    }
}

/// Largest violation of `u ∈ ∂(nu |·|_1)(x)`: on the zero set `|u_i| <= nu`, elsewhere
/// `u_i = nu sign(x_i)`.
pub fn l1_subgradient_violation(x: &Vector, u: &Vector, nu: f64) -> f64 {
    x.iter()
        .zip(u.iter())
        .map(|(&xi, &ui)| {
            if xi == 0.0 {
                (ui.abs() - nu).max(0.0)
            } else {
                (ui - nu * xi.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn solve_first_block(
    fb: &FirstBlock,
    z_hat: &Vector,
    y_hat: &Vector,
    m: GammaMetric,
) -> Result<Vector> {
    ensure_dim("first block (z_hat vs y_hat)", z_hat.len(), y_hat.len())?;
    let g = m.gamma();
    match fb {
        FirstBlock::L1 { nu } => Ok(soft_threshold(&(y_hat - z_hat / g), nu / g)),
        FirstBlock::CustomQuadratic { q, c } => {
            ensure_dim("first block (Q vs y_hat)", q.nrows(), y_hat.len())?;
            let mut k = q.clone();
            for i in 0..k.nrows() {
                k[(i, i)] += g;
            }
            let chol = Cholesky::new(k)
                .ok_or_else(|| Error::Factorization("Q + γI is not positive definite".into()))?;
            Ok(chol.solve(&(y_hat * g - z_hat - c)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::vector;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&v(&[3.0]), 1.0), v(&[2.0]));
        assert_eq!(soft_threshold(&v(&[0.5, -0.5]), 1.0), v(&[0.0, 0.0]));
        assert_eq!(soft_threshold(&v(&[-2.0]), 0.5), v(&[-1.5]));
    }

    #[test]
    fn l1_block_examples() {
        let m1 = GammaMetric::new(1.0).unwrap();
        let fb = FirstBlock::l1(1.0).unwrap();
        assert_eq!(solve_first_block(&fb, &v(&[0.0]), &v(&[2.0]), m1).unwrap(), v(&[1.0]));
        assert_eq!(solve_first_block(&fb, &v(&[0.0]), &v(&[0.5]), m1).unwrap(), v(&[0.0]));

        let fb2 = FirstBlock::l1(2.0).unwrap();
        let m2 = GammaMetric::new(2.0).unwrap();
        assert_eq!(solve_first_block(&fb2, &v(&[1.0]), &v(&[3.0]), m2).unwrap(), v(&[1.5]));
    }

    #[test]
    fn quadratic_block_solves_normal_equations() {
        let q = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = v(&[1.0, -1.0]);
        let fb = FirstBlock::quadratic(q.clone(), c.clone()).unwrap();
        let m = GammaMetric::new(0.7).unwrap();
        let (zh, yh) = (v(&[0.3, -0.2]), v(&[1.0, 2.0]));
        let x = solve_first_block(&fb, &zh, &yh, m).unwrap();
        // gradient of the subproblem vanishes: Qx + c + ẑ + γ(x - ŷ) = 0
        let grad = &q * &x + &c + &zh + (&x - &yh) * 0.7;
        assert!(grad.amax() < 1e-12);
    }

    #[test]
    fn quadratic_block_rejects_non_spd() {
        let q = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            FirstBlock::quadratic(q, v(&[0.0, 0.0])),
            Err(Error::Factorization(_))
        ));
        let q = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(FirstBlock::quadratic(q, v(&[0.0, 0.0])).is_err());
        assert!(FirstBlock::l1(0.0).is_err());
    }

    proptest! {
        #[test]
        fn l1_solution_carries_a_subgradient_certificate(
            nu in 0.01..3.0f64, g in 0.1..10.0f64,
            zs in prop::collection::vec(-5.0..5.0f64, 5),
            ys in prop::collection::vec(-5.0..5.0f64, 5),
        ) {
            let m = GammaMetric::new(g).unwrap();
            let fb = FirstBlock::l1(nu).unwrap();
            let (zh, yh) = (vector(zs).unwrap(), vector(ys).unwrap());
            let x = solve_first_block(&fb, &zh, &yh, m).unwrap();
            let z_prime = &zh + (&x - &yh) * g;
            let viol = fb.subgradient_violation(&x, &(-z_prime)).unwrap();
            prop_assert!(viol <= 1e-10, "violation {viol}");
        }

        #[test]
        fn soft_threshold_is_nonexpansive(
            kappa in 0.0..3.0f64,
            a in prop::collection::vec(-5.0..5.0f64, 6),
            b in prop::collection::vec(-5.0..5.0f64, 6),
        ) {
            let (u, w) = (vector(a).unwrap(), vector(b).unwrap());
            let lhs = (soft_threshold(&u, kappa) - soft_threshold(&w, kappa)).norm();
            prop_assert!(lhs <= (&u - &w).norm() + 1e-15);
        }
    }
}
