//! The pieces of one outer iteration, as free functions over plain vectors.

use crate::error::{Error, Result};
use crate::inner::ApproxSolution;
use crate::spaces::{ensure_dim, GammaMetric, Matrix, Vector};

use super::AdmmState;

/// `(ẑ, ŷ) = (z_k, y_k) + α_k ((z_k, y_k) - (z_{k-1}, y_{k-1}))`
pub fn extrapolate(state: &AdmmState, alpha_k: f64) -> (Vector, Vector) {
    let z_hat = &state.z + (&state.z - &state.z_prev) * alpha_k;
    let y_hat = &state.y + (&state.y - &state.y_prev) * alpha_k;
    (z_hat, y_hat)
}

/// `|p_k - p_{k-1}|²_γ` for the current state.
pub fn step_length_sq(state: &AdmmState, m: GammaMetric) -> f64 {
    let g = m.gamma();
    (&state.z - &state.z_prev).norm_squared() / g + g * (&state.y - &state.y_prev).norm_squared()
}

/// Summability rule: `min{α, θ^k / |p_k - p_{k-1}|²_γ}` with `1/0 = ∞`; `α` before `k0`.
pub fn alpha_summability(
    k: usize,
    state: &AdmmState,
    alpha: f64,
    theta: f64,
    k0: usize,
    m: GammaMetric,
) -> f64 {
    if k < k0 {
        return alpha;
    }
    let dk = step_length_sq(state, m);
    if dk == 0.0 {
        return alpha;
    }
    alpha.min(theta.powi(k as i32) / dk)
}

/// `η = (1-τ)(1-σ)²/(4τ)` and the largest admissible inertia `β = 2η / (1 + 2η + √(1+8η))`.
pub fn beta_bound(sigma: f64, tau: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {tau}")));
    }
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::InvalidParameter(format!("sigma must lie in [0, 1), got {sigma}")));
    }
    let eta = (1.0 - tau) * (1.0 - sigma).powi(2) / (4.0 * tau);
    let beta = 2.0 * eta / (1.0 + 2.0 * eta + (1.0 + 8.0 * eta).sqrt());
    Ok((eta, beta))
}

/// `q(t) = (η - 1) t² - (1 + 2η) t + η`
pub fn q_eval(t: f64, eta: f64) -> f64 {
    (eta - 1.0) * t * t - (1.0 + 2.0 * eta) * t + eta
}

/// Relaxed update
///
/// ```text
/// z_{k+1} = ẑ + τγ (Lx - ỹ)
/// y_{k+1} = (1 - τ) ŷ + (τ/γ)(ẑ + γ Lx - v)
/// ```
pub fn update(
    z_hat: &Vector,
    y_hat: &Vector,
    lx: &Vector,
    approx: &ApproxSolution,
    tau: f64,
    m: GammaMetric,
) -> (Vector, Vector) {
    let g = m.gamma();
    let z_next = z_hat + (lx - &approx.y_tilde) * (tau * g);
    let y_next = y_hat * (1.0 - tau) + (z_hat + lx * g - &approx.v) * (tau / g);
    (z_next, y_next)
}

/// The unrelaxed point `p̆ = (ẑ + γ(Lx - ỹ), (ẑ + γ Lx - v)/γ)`.
pub fn breve_point(
    z_hat: &Vector,
    lx: &Vector,
    approx: &ApproxSolution,
    m: GammaMetric,
) -> (Vector, Vector) {
    let g = m.gamma();
    let breve_z = z_hat + (lx - &approx.y_tilde) * g;
    let breve_y = (z_hat + lx * g - &approx.v) / g;
    (breve_z, breve_y)
}

/// `z' = ẑ + γ(Lx - ŷ)`, the multiplier certifying the first-block solve.
pub fn z_prime(z_hat: &Vector, y_hat: &Vector, lx: &Vector, m: GammaMetric) -> Vector {
    z_hat + (lx - y_hat) * m.gamma()
}

/// `dist_∞(0, ∂(ν|·|_1)(x) + Aᵀ(Ax - b))`
pub fn stopping_residual_lasso(x: &Vector, a: &Matrix, b: &Vector, nu: f64) -> Result<f64> {
    ensure_dim("stopping residual (A cols vs x)", a.ncols(), x.len())?;
    ensure_dim("stopping residual (A rows vs b)", a.nrows(), b.len())?;
    let grad = a.tr_mul(&(a * x - b));
    Ok(lasso_residual_from_gradient(x, &grad, nu))
}

pub(crate) fn lasso_residual_from_gradient(x: &Vector, grad: &Vector, nu: f64) -> f64 {
    x.iter()
        .zip(grad.iter())
        .map(|(&xi, &gi)| {
            if xi != 0.0 {
                (gi + nu * xi.signum()).abs()
            } else {
                (gi.abs() - nu).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::matrix;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn m(g: f64) -> GammaMetric {
        GammaMetric::new(g).unwrap()
    }

    fn approx(y_tilde: &[f64], v_: &[f64]) -> ApproxSolution {
        ApproxSolution {
            y_tilde: v(y_tilde),
            v: v(v_),
            eps: 0.0,
            e: Vector::zeros(y_tilde.len()),
            inner_iters: 0,
            exact: false,
        }
    }

    #[test]
    fn extrapolation_examples() {
        let s = AdmmState::new(v(&[1.0]), v(&[2.0]));
        assert_eq!(extrapolate(&s, 0.7), (v(&[1.0]), v(&[2.0])));

        let s = AdmmState {
            z: v(&[1.0]),
            y: v(&[3.0]),
            z_prev: v(&[0.0]),
            y_prev: v(&[3.0]),
            k: 1,
            warm: None,
        };
        assert_eq!(extrapolate(&s, 0.0), (v(&[1.0]), v(&[3.0])));
        assert_eq!(extrapolate(&s, 0.5).0, v(&[1.5]));
    }

    #[test]
    fn summability_rule_examples() {
        let s = AdmmState::new(v(&[1.0]), v(&[1.0]));
        assert_eq!(alpha_summability(3, &s, 0.33, 0.99, 1, m(1.0)), 0.33);

        // D_1 = 2
        let s = AdmmState { z: v(&[1.0]), y: v(&[1.0]), z_prev: v(&[0.0]), y_prev: v(&[0.0]), k: 1, warm: None };
        assert_eq!(alpha_summability(1, &s, 0.33, 0.99, 1, m(1.0)), 0.33);
        // D_4 = 1
        let s = AdmmState { z: v(&[1.0]), y: v(&[0.0]), z_prev: v(&[0.0]), y_prev: v(&[0.0]), k: 4, warm: None };
        assert_eq!(alpha_summability(4, &s, 0.9, 0.5, 1, m(1.0)), 0.0625);
        // before k0 the cap applies
        assert_eq!(alpha_summability(2, &s, 0.9, 0.5, 3, m(1.0)), 0.9);
    }

    #[test]
    fn beta_bound_values() {
        // extended-precision reference: 0.15470053837925152902
        let (eta, beta) = beta_bound(0.0, 0.5).unwrap();
        assert_eq!(eta, 0.25);
        assert!((beta - 0.154_700_538_379_251_53).abs() < 1e-15);

        let (_, beta) = beta_bound(0.9999, 0.5).unwrap();
        assert!(beta < 1e-6);

        // extended precision: eta = 2.5025025025025025e-8, beta = 2.5025023146269596e-8
        let (eta, beta) = beta_bound(0.99, 0.999).unwrap();
        assert!((eta - 2.502_502_502_502_502_5e-8).abs() < 1e-20);
        assert!((beta - 2.502_502_314_626_959_6e-8).abs() < 1e-20);
        assert!((beta - eta).abs() <= 10.0 * eta * eta);

        assert!(beta_bound(0.5, 1.0).is_err());
        assert!(beta_bound(0.5, 0.0).is_err());
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_eval(0.0, 0.3), 0.3);
        assert!((q_eval(0.1, 0.25) - 0.0925).abs() < 1e-15);
        for (s, t) in [(0.0, 0.5), (0.5, 0.5), (0.9, 0.1), (0.99, 0.999)] {
            let (eta, beta) = beta_bound(s, t).unwrap();
            assert!(q_eval(beta, eta).abs() < 1e-12);
        }
    }

    #[test]
    fn update_examples() {
        // τ = 1 reproduces p̆
        let (zh, yh, lx) = (v(&[0.3, -1.0]), v(&[2.0, 0.5]), v(&[1.0, 1.5]));
        let a = approx(&[0.7, 0.2], &[0.1, -0.4]);
        let g = m(1.7);
        assert_eq!(update(&zh, &yh, &lx, &a, 1.0, g).0, breve_point(&zh, &lx, &a, g).0);
        let (_, y1) = update(&zh, &yh, &lx, &a, 1.0, g);
        let (_, yb) = breve_point(&zh, &lx, &a, g);
        assert!((&y1 - &yb).amax() < 1e-15);

        let a = approx(&[1.0], &[0.0]);
        let (z, _) = update(&v(&[0.0]), &v(&[1.0]), &v(&[2.0]), &a, 0.5, m(1.0));
        assert_eq!(z, v(&[0.5]));
        let a = approx(&[0.0], &[0.0]);
        let (_, y) = update(&v(&[0.0]), &v(&[1.0]), &v(&[1.0]), &a, 0.5, m(1.0));
        assert_eq!(y, v(&[1.0]));
    }

    #[test]
    fn breve_examples() {
        let (bz, _) = breve_point(&v(&[0.0]), &v(&[1.0]), &approx(&[0.0], &[0.0]), m(2.0));
        assert_eq!(bz, v(&[2.0]));
        let (_, by) = breve_point(&v(&[1.0]), &v(&[0.0]), &approx(&[0.0], &[1.0]), m(1.0));
        assert_eq!(by, v(&[0.0]));

        // exact inner solution: v = ẑ + γ(Lx - ỹ) gives y̆ = ỹ
        let (zh, lx, yt) = (v(&[0.4]), v(&[1.2]), v(&[0.9]));
        let g = 1.5;
        let vv = &zh + (&lx - &yt) * g;
        let a = ApproxSolution { y_tilde: yt.clone(), v: vv, ..approx(&[0.0], &[0.0]) };
        let (_, by) = breve_point(&zh, &lx, &a, m(g));
        assert!((by - yt).amax() < 1e-15);
    }

    #[test]
    fn z_prime_examples() {
        assert_eq!(z_prime(&v(&[3.0]), &v(&[1.0]), &v(&[1.0]), m(4.0)), v(&[3.0]));
        assert_eq!(z_prime(&v(&[0.0]), &v(&[1.0]), &v(&[2.0]), m(1.0)), v(&[1.0]));
        assert_eq!(z_prime(&v(&[1.0]), &v(&[2.0]), &v(&[0.0]), m(0.5)), v(&[0.0]));
    }

    #[test]
    fn lasso_residual_examples() {
        let a = matrix(1, 1, vec![1.0]).unwrap();
        assert_eq!(stopping_residual_lasso(&v(&[1.0]), &a, &v(&[2.0]), 1.0).unwrap(), 0.0);

        let a = matrix(2, 2, vec![1.0, 0.0, 0.5, 1.0]).unwrap();
        let b = v(&[0.3, -0.2]);
        let nu = a.tr_mul(&b).amax();
        assert_eq!(stopping_residual_lasso(&Vector::zeros(2), &a, &b, nu).unwrap(), 0.0);
        assert!(stopping_residual_lasso(&Vector::zeros(2), &a, &b, 0.5 * nu).unwrap() > 0.0);
        assert!(stopping_residual_lasso(&v(&[1.0]), &a, &b, nu).is_err());
    }
}
