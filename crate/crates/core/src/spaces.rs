//! Vectors, linear operators and the γ-weighted geometry on the product space `G × G`.
//!
//! Points of the product space are pairs `p = (z, w)`; the first block carries the
//! multiplier and the second the primal image. All convergence statements in this
//! crate are measured in
//!
//! ```text
//! <p, q>_γ = (1/γ) <p.z, q.z> + γ <p.w, q.w>,      |p|²_γ = <p, p>_γ.
//! ```

use nalgebra::{DMatrix, DVector};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Builds a vector, rejecting NaN and infinities.
pub fn vector(entries: Vec<f64>) -> Result<Vector> {
    if entries.is_empty() {
        return Err(Error::Empty("vector"));
    }
    if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(Vector::from_vec(entries))
}

/// Builds a dense matrix from row-major data, rejecting non-finite entries.
pub fn matrix(rows: usize, cols: usize, row_major: Vec<f64>) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Empty("matrix"));
    }
    if row_major.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            context: "matrix data length",
            left: rows * cols,
            right: row_major.len(),
        });
    }
    if let Some(index) = row_major.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(Matrix::from_row_slice(rows, cols, &row_major))
}

pub(crate) fn ensure_dim(context: &'static str, left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            left,
            right,
        })
    }
}

/// The penalty parameter γ, which also fixes the product-space metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMetric(f64);

impl GammaMetric {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(Self(gamma))
        } else {
            Err(Error::InvalidParameter(format!(
                "gamma must be positive and finite, got {gamma}"
            )))
        }
    }

    #[inline]
    pub fn gamma(self) -> f64 {
        self.0
    }

    pub fn inner(self, p: &PrimalDualPoint, q: &PrimalDualPoint) -> Result<f64> {
        gamma_inner(p, q, self)
    }

    pub fn norm_sq(self, p: &PrimalDualPoint) -> f64 {
        gamma_norm_sq(p, self)
    }

    pub fn norm(self, p: &PrimalDualPoint) -> f64 {
        self.norm_sq(p).sqrt()
    }

    /// `|p - q|²_γ` without materialising the difference.
    pub fn dist_sq(self, p: &PrimalDualPoint, q: &PrimalDualPoint) -> f64 {
        let g = self.0;
        (&p.z - &q.z).norm_squared() / g + g * (&p.w - &q.w).norm_squared()
    }
}

/// A pair `(z, w)` in `G × G` with blocks of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub z: Vector,
    pub w: Vector,
}

impl PrimalDualPoint {
    pub fn new(z: Vector, w: Vector) -> Result<Self> {
        ensure_dim("primal-dual point blocks", z.len(), w.len())?;
        Ok(Self { z, w })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            z: Vector::zeros(dim),
            w: Vector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// `(1 - t) self + t other`
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        Self {
            z: &self.z * (1.0 - t) + &other.z * t,
            w: &self.w * (1.0 - t) + &other.w * t,
        }
    }
}

impl<'a> Sub<&'a PrimalDualPoint> for &'a PrimalDualPoint {
    type Output = PrimalDualPoint;
    fn sub(self, rhs: &'a PrimalDualPoint) -> PrimalDualPoint {
        PrimalDualPoint {
            z: &self.z - &rhs.z,
            w: &self.w - &rhs.w,
        }
    }
}

impl<'a> Add<&'a PrimalDualPoint> for &'a PrimalDualPoint {
    type Output = PrimalDualPoint;
    fn add(self, rhs: &'a PrimalDualPoint) -> PrimalDualPoint {
        PrimalDualPoint {
            z: &self.z + &rhs.z,
            w: &self.w + &rhs.w,
        }
    }
}

impl Mul<f64> for &PrimalDualPoint {
    type Output = PrimalDualPoint;
    fn mul(self, s: f64) -> PrimalDualPoint {
        PrimalDualPoint {
            z: &self.z * s,
            w: &self.w * s,
        }
    }
}

pub fn gamma_inner(p: &PrimalDualPoint, q: &PrimalDualPoint, m: GammaMetric) -> Result<f64> {
    ensure_dim("gamma inner product (z blocks)", p.z.len(), q.z.len())?;
    ensure_dim("gamma inner product (w blocks)", p.w.len(), q.w.len())?;
    let g = m.gamma();
    Ok(p.z.dot(&q.z) / g + g * p.w.dot(&q.w))
}

pub fn gamma_norm_sq(p: &PrimalDualPoint, m: GammaMetric) -> f64 {
    let g = m.gamma();
    p.z.norm_squared() / g + g * p.w.norm_squared()
}

/// Linear map `L: H -> G` with its adjoint.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOp {
    Identity(usize),
    Dense(Matrix),
}

impl LinearOp {
    pub fn input_dim(&self) -> usize {
        match self {
            LinearOp::Identity(n) => *n,
            LinearOp::Dense(m) => m.ncols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            LinearOp::Identity(n) => *n,
            LinearOp::Dense(m) => m.nrows(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, LinearOp::Identity(_))
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        ensure_dim("operator input", self.input_dim(), x.len())?;
        Ok(match self {
            LinearOp::Identity(_) => x.clone(),
            LinearOp::Dense(m) => m * x,
        })
    }

    pub fn adjoint(&self, u: &Vector) -> Result<Vector> {
        ensure_dim("adjoint input", self.output_dim(), u.len())?;
        Ok(match self {
            LinearOp::Identity(_) => u.clone(),
            LinearOp::Dense(m) => m.tr_mul(u),
        })
    }
}

/// `|a - b| <= tol * max(|a|, |b|, scale)`
pub fn rel_close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(z: &[f64], w: &[f64]) -> PrimalDualPoint {
        PrimalDualPoint::new(Vector::from_row_slice(z), Vector::from_row_slice(w)).unwrap()
    }

    #[test]
    fn gamma_inner_examples() {
        let m1 = GammaMetric::new(1.0).unwrap();
        let p = pt(&[2.0], &[3.0]);
        assert_eq!(gamma_inner(&p, &p, m1).unwrap(), 13.0);

        let m2 = GammaMetric::new(2.0).unwrap();
        let p = pt(&[2.0], &[1.0]);
        assert_eq!(gamma_inner(&p, &p, m2).unwrap(), 4.0);

        let zero = PrimalDualPoint::zeros(2);
        let q = pt(&[5.0, -1.0], &[0.3, 7.0]);
        assert_eq!(gamma_inner(&zero, &q, GammaMetric::new(3.7).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn gamma_inner_dimension_error_names_both_dims() {
        let p = pt(&[1.0, 2.0], &[1.0, 2.0]);
        let q = pt(&[1.0], &[1.0]);
        let err = gamma_inner(&p, &q, GammaMetric::new(1.0).unwrap()).unwrap_err();
        match err {
            Error::DimensionMismatch { left, right, .. } => assert_eq!((left, right), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gamma_norm_examples() {
        assert_eq!(gamma_norm_sq(&pt(&[0.0], &[0.0]), GammaMetric::new(7.0).unwrap()), 0.0);
        assert_eq!(gamma_norm_sq(&pt(&[3.0], &[0.0]), GammaMetric::new(3.0).unwrap()), 3.0);
        assert_eq!(gamma_norm_sq(&pt(&[1.0], &[2.0]), GammaMetric::new(0.5).unwrap()), 4.0);
    }

    #[test]
    fn operator_examples() {
        let id = LinearOp::Identity(3);
        let x = vector(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(id.apply(&x).unwrap(), x);

        let l = LinearOp::Dense(matrix(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap());
        let y = l.apply(&vector(vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 1.0]);
        let u = l.adjoint(&vector(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(u.as_slice(), &[1.0, 2.0]);

        assert!(matches!(
            l.apply(&vector(vec![1.0; 3]).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert!(matches!(
            vector(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(matches!(
            matrix(1, 2, vec![f64::INFINITY, 0.0]),
            Err(Error::NonFinite { index: 0 })
        ));
        assert!(GammaMetric::new(0.0).is_err());
        assert!(GammaMetric::new(-1.0).is_err());
        assert!(PrimalDualPoint::new(Vector::zeros(2), Vector::zeros(3)).is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        -10.0..10.0f64
    }

    proptest! {
        #[test]
        fn adjoint_identity(
            rows in 1usize..6, cols in 1usize..6,
            seed in prop::collection::vec(finite(), 36),
            xs in prop::collection::vec(finite(), 6),
            us in prop::collection::vec(finite(), 6),
        ) {
            let m = Matrix::from_fn(rows, cols, |i, j| seed[i * 6 + j]);
            let ops = [LinearOp::Dense(m), LinearOp::Identity(cols)];
            for op in &ops {
                let x = Vector::from_row_slice(&xs[..op.input_dim()]);
                let u = Vector::from_row_slice(&us[..op.output_dim()]);
                let lhs = op.apply(&x).unwrap().dot(&u);
                let rhs = x.dot(&op.adjoint(&u).unwrap());
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn gamma_metric_is_an_inner_product(
            g in 0.01..100.0f64,
            a in prop::collection::vec(finite(), 8),
        ) {
            let m = GammaMetric::new(g).unwrap();
            let p = pt(&a[0..2], &a[2..4]);
            let q = pt(&a[4..6], &a[6..8]);
            let pq = m.inner(&p, &q).unwrap();
            let (pp, qq) = (m.norm_sq(&p), m.norm_sq(&q));
            prop_assert!(pq * pq <= pp * qq * (1.0 + 1e-12) + 1e-300);

            let lhs = m.norm_sq(&(&p + &q)) + m.norm_sq(&(&p - &q));
            let rhs = 2.0 * (pp + qq);
            prop_assert!(rel_close(lhs, rhs, 1e-12, 0.0));
            prop_assert!(rel_close(m.dist_sq(&p, &q), m.norm_sq(&(&p - &q)), 1e-12, 0.0));
        }
    }
}
