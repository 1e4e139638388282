//! Executable forms of the per-iteration identities and the Lyapunov-type
//! inequalities satisfied by the iterates.
//!
//! Relative comparisons are taken against the magnitude of the operands
//! (`|p̂|²_γ + |p̆|²_γ + |p̃|²_γ`), which is where double-precision rounding lives.

use crate::error::{Error, Result};
use crate::inner::admissible;
use crate::spaces::{rel_close, GammaMetric, PrimalDualPoint};

use super::{q_eval, AdmmConfig, IterateRecord, Problem};

pub const COMBINATION_TOL: f64 = 1e-14;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const FIRST_BLOCK_TOL: f64 = 1e-10;
pub const LYAPUNOV_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Outcome of every per-record check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordChecks {
    /// Relative-error criterion on the inner triple.
    pub certificate: bool,
    /// `p_{k+1} = (1-τ) p̂_k + τ p̆_k`: distance vs tolerance.
    pub combination: Comparison,
    /// `|p̃_k - p̆_k|²_γ = (|e_k|² + |v_k - ẑ_k|²)/γ`
    pub residual_identity: Comparison,
    /// `|p̆_k - p̂_k|_γ <= 2 |p̃_k - p̂_k|_γ`
    pub contraction: Comparison,
    /// `r_k = |p̆_k - p̂_k|²_γ`
    pub pointwise_identity: Comparison,
    /// Largest violation of `-L* z'_k ∈ ∂f(x_k)`.
    pub first_block_violation: f64,
}

impl RecordChecks {
    pub fn all_ok(&self) -> bool {
        self.certificate
            && self.combination.ok
            && self.residual_identity.ok
            && self.contraction.ok
            && self.pointwise_identity.ok
            && self.first_block_violation <= FIRST_BLOCK_TOL
    }
}

fn scale(m: GammaMetric, pts: &[&PrimalDualPoint]) -> f64 {
    pts.iter().map(|p| m.norm_sq(p)).sum()
}

pub fn record_checks(rec: &IterateRecord, problem: &Problem, config: &AdmmConfig) -> Result<RecordChecks> {
    let m = GammaMetric::new(config.gamma)?;
    let g = m.gamma();
    let (p_hat, p_breve, p_tilde, p_next) = (rec.p_hat(), rec.p_breve(), rec.p_tilde(), rec.p_next());
    let s = scale(m, &[&p_hat, &p_breve, &p_tilde]);

    let certificate = admissible(&rec.approx, &rec.inner_request(m, config.sigma));

    let combo = p_hat.lerp(&p_breve, config.tau);
    let dist = m.dist_sq(&p_next, &combo).sqrt();
    let tol = COMBINATION_TOL * (m.norm(&p_hat) + m.norm(&p_breve) + m.norm(&p_next)).max(f64::MIN_POSITIVE);
    let combination = Comparison { lhs: dist, rhs: tol, ok: dist <= tol };

    let lhs = m.dist_sq(&p_tilde, &p_breve);
    let rhs = (rec.approx.e.norm_squared() + (&rec.approx.v - &rec.z_hat).norm_squared()) / g;
    let residual_identity = Comparison { lhs, rhs, ok: rel_close(lhs, rhs, IDENTITY_TOL, s) };

    let lhs = m.dist_sq(&p_breve, &p_hat).sqrt();
    let rhs = 2.0 * m.dist_sq(&p_tilde, &p_hat).sqrt();
    let contraction = Comparison { lhs, rhs, ok: lhs <= rhs + IDENTITY_TOL * s.sqrt() };

    let lhs = rec.pointwise_residual(m);
    let rhs = m.dist_sq(&p_breve, &p_hat);
    let pointwise_identity = Comparison { lhs, rhs, ok: rel_close(lhs, rhs, IDENTITY_TOL, s) };

    let neg = problem.op.adjoint(&(-&rec.z_prime))?;
    let first_block_violation = problem.first.subgradient_violation(&rec.x, &neg)?;

    Ok(RecordChecks {
        certificate,
        combination,
        residual_identity,
        contraction,
        pointwise_identity,
        first_block_violation,
    })
}

/// Fails with the first broken identity.
pub fn check_record(rec: &IterateRecord, problem: &Problem, config: &AdmmConfig) -> Result<()> {
    let c = record_checks(rec, problem, config)?;
    let fail = |what: String| Err(Error::Invariant { k: rec.k, what });
    if !c.certificate {
        return fail("relative-error criterion".into());
    }
    if !c.combination.ok {
        return fail(format!("convex combination off by {:.3e}", c.combination.lhs));
    }
    if !c.residual_identity.ok {
        return fail(format!("residual identity {:?}", c.residual_identity));
    }
    if !c.contraction.ok {
        return fail(format!("contraction inequality {:?}", c.contraction));
    }
    if !c.pointwise_identity.ok {
        return fail(format!("pointwise residual identity {:?}", c.pointwise_identity));
    }
    if c.first_block_violation > FIRST_BLOCK_TOL {
        return fail(format!("first-block subgradient violated by {:.3e}", c.first_block_violation));
    }
    Ok(())
}

/// `|p* - p̂_k|² - |p* - p_{k+1}|² >= τ(1-τ)(1-σ)² |p̃_k - p̂_k|²` up to the stated slack.
pub fn fejer_check(rec: &IterateRecord, p_star: &PrimalDualPoint, config: &AdmmConfig) -> Result<Comparison> {
    let m = GammaMetric::new(config.gamma)?;
    let before = m.dist_sq(p_star, &rec.p_hat());
    let after = m.dist_sq(p_star, &rec.p_next());
    let coef = config.tau * (1.0 - config.tau) * (1.0 - config.sigma).powi(2);
    let lhs = before - after;
    let rhs = coef * m.dist_sq(&rec.p_tilde(), &rec.p_hat());
    Ok(Comparison { lhs, rhs, ok: lhs >= rhs - LYAPUNOV_SLACK * (1.0 + before) })
}

/// `h_k = |p_k - p*|²` for `k = 0..=K`, `s_{k+1}` and `δ_k` for `k = 0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSequences {
    pub h: Vec<f64>,
    /// `s[k]` holds `s_{k+1} = τ(1-τ)(1-σ)² |p̃_k - p̂_k|²_γ`.
    pub s: Vec<f64>,
    /// `δ_k = α_k(1+α_k) |p_k - p_{k-1}|²_γ`
    pub delta: Vec<f64>,
    pub alpha: Vec<f64>,
}

pub fn lyapunov_sequences(
    records: &[IterateRecord],
    p_star: &PrimalDualPoint,
    config: &AdmmConfig,
) -> Result<LyapunovSequences> {
    let m = GammaMetric::new(config.gamma)?;
    let coef = config.tau * (1.0 - config.tau) * (1.0 - config.sigma).powi(2);
    let mut h: Vec<f64> = records.iter().map(|r| m.dist_sq(&r.p(), p_star)).collect();
    if let Some(last) = records.last() {
        h.push(m.dist_sq(&last.p_next(), p_star));
    }
    let s = records
        .iter()
        .map(|r| coef * m.dist_sq(&r.p_tilde(), &r.p_hat()))
        .collect();
    let delta = records
        .iter()
        .map(|r| r.alpha_k * (1.0 + r.alpha_k) * r.step_sq)
        .collect();
    let alpha = records.iter().map(|r| r.alpha_k).collect();
    Ok(LyapunovSequences { h, s, delta, alpha })
}

impl LyapunovSequences {
    /// Indices `k` where `h_{k+1} - h_k - α_k(h_k - h_{k-1}) + s_{k+1} <= δ_k` fails
    /// by more than `1e-8 (1 + h_k)`, with `h_{-1} = h_0`.
    pub fn recursion_violations(&self) -> Vec<usize> {
        (0..self.s.len())
            .filter(|&k| {
                let h_prev = if k == 0 { self.h[0] } else { self.h[k - 1] };
                let lhs = self.h[k + 1] - self.h[k] - self.alpha[k] * (self.h[k] - h_prev) + self.s[k];
                lhs > self.delta[k] + LYAPUNOV_SLACK * (1.0 + self.h[k])
            })
            .collect()
    }
}

/// Partial sums `Σ_{j≤k} α_j |p_j - p_{j-1}|²_γ` against `Σ_{j=k0}^{k} θ^j` (plus the
/// finitely many terms before `k0`). Returns the first index where the bound fails.
pub fn summability_violation(records: &[IterateRecord], theta: f64, k0: usize) -> Option<usize> {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for r in records {
        let term = r.alpha_k * r.step_sq;
        lhs += term;
        if r.k >= k0 {
            rhs += theta.powi(r.k as i32);
        } else {
            rhs += term;
        }
        if lhs > rhs * (1.0 + 1e-12) + 1e-300 {
            return Some(r.k);
        }
    }
    debug_assert!(rhs <= theta.powi(k0 as i32) / (1.0 - theta) + records.iter().filter(|r| r.k < k0).map(|r| r.alpha_k * r.step_sq).sum::<f64>() + 1e-12);
    None
}

/// `Σ_{j≤k} |p_j - p_{j-1}|²_γ <= 2|p_0 - p*|²_γ / ((1-α) q(α))` for every `k ≥ 1`.
/// Returns the first violating index.
pub fn assumption_b_sum_violation(
    records: &[IterateRecord],
    p_star: &PrimalDualPoint,
    config: &AdmmConfig,
) -> Result<Option<usize>> {
    let m = GammaMetric::new(config.gamma)?;
    let (eta, _) = super::beta_bound(config.sigma, config.tau)?;
    let q = q_eval(config.alpha, eta);
    if q <= 0.0 {
        return Err(Error::InvalidParameter("q(alpha) <= 0: inertia above beta".into()));
    }
    let Some(first) = records.first() else { return Ok(None) };
    let h0 = m.dist_sq(&first.p(), p_star);
    let bound = 2.0 * h0 / ((1.0 - config.alpha) * q);
    let mut sum = 0.0;
    for r in records.iter().skip(1) {
        sum += r.step_sq;
        if sum > bound + LYAPUNOV_SLACK * (1.0 + h0) {
            return Ok(Some(r.k));
        }
    }
    Ok(None)
}
