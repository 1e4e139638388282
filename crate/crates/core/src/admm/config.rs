use serde::{Deserialize, Serialize};

use super::step::beta_bound;
use crate::error::{Error, Result};

/// Policy for the inertial weight `α_k ∈ [0, α]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InertialRule {
    /// `α_k = α` for every `k ≥ 1`.
    ConstantAlpha,
    /// `α_k = min{α, θ^k / |p_k - p_{k-1}|²_γ}` for `k ≥ k0`, `α` before.
    Summability { theta: f64, k0: usize },
    /// A nondecreasing schedule capped at `α`, with `α < β(σ, τ)` enforced.
    NondecreasingBelowBeta(Schedule),
}

/// Nondecreasing sequence generator used under [`InertialRule::NondecreasingBelowBeta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    /// `min{α, start + step·k}`
    LinearRamp { start: f64, step: f64 },
}

impl Schedule {
    pub fn value(&self, k: usize, alpha: f64) -> f64 {
        match *self {
            Schedule::Constant => alpha,
            Schedule::LinearRamp { start, step } => (start + step * k as f64).min(alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub tau: f64,
    pub gamma: f64,
    pub rule: InertialRule,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Assert the per-iteration identities and certificates while running.
    pub checked: bool,
    /// Admit `τ = 1`; only meaningful for reproducing the classical iteration.
    pub reference_mode: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            alpha: 0.33,
            sigma: 0.99,
            tau: 0.999,
            gamma: 1.0,
            rule: InertialRule::Summability { theta: 0.99, k0: 1 },
            tol: 1e-6,
            max_outer: 20_000,
            max_inner: 1_000,
            checked: false,
            reference_mode: false,
        }
    }
}

impl AdmmConfig {
    /// Same settings with inertia switched off.
    pub fn non_inertial(&self) -> Self {
        Self {
            alpha: 0.0,
            rule: InertialRule::ConstantAlpha,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(0.0..1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1), got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.sigma) {
            return bad(format!("sigma must lie in [0, 1), got {}", self.sigma));
        }
        let tau_ok = if self.reference_mode {
            self.tau > 0.0 && self.tau <= 1.0
        } else {
            self.tau > 0.0 && self.tau < 1.0
        };
        if !tau_ok {
            return bad(format!(
                "tau must lie in (0, 1){}, got {}",
                if self.reference_mode { " or equal 1" } else { "" },
                self.tau
            ));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return bad("iteration limits must be positive".into());
        }
        match self.rule {
            InertialRule::ConstantAlpha => {}
            InertialRule::Summability { theta, k0 } => {
                if !(theta > 0.0 && theta < 1.0) {
                    return bad(format!("theta must lie in (0, 1), got {theta}"));
                }
                if k0 == 0 {
                    return bad("k0 must be at least 1".into());
                }
            }
            InertialRule::NondecreasingBelowBeta(schedule) => {
                if let Schedule::LinearRamp { start, step } = schedule {
                    if start < 0.0 || step < 0.0 {
                        return bad("ramp schedule must be nonnegative and nondecreasing".into());
                    }
                }
                let (_, beta) = beta_bound(self.sigma, self.tau)?;
                if self.alpha >= beta {
                    return bad(format!(
                        "alpha = {} must be below beta(sigma, tau) = {beta:.6e}",
                        self.alpha
                    ));
                }
            }
        }
        Ok(())
    }

    /// Whether the configured rule guarantees `α_k ≤ α < β(σ, τ)` with nondecreasing `α_k`.
    pub fn satisfies_assumption_b(&self) -> bool {
        let nondecreasing = match self.rule {
            InertialRule::ConstantAlpha | InertialRule::NondecreasingBelowBeta(_) => true,
            InertialRule::Summability { .. } => self.alpha == 0.0,
        };
        nondecreasing
            && self.tau < 1.0
            && beta_bound(self.sigma, self.tau).is_ok_and(|(_, beta)| self.alpha < beta)
    }

    /// Whether `α_k ≡ α` from the first extrapolating iteration on.
    pub fn constant_alpha(&self) -> bool {
        match self.rule {
            InertialRule::ConstantAlpha
            | InertialRule::NondecreasingBelowBeta(Schedule::Constant) => true,
            InertialRule::Summability { .. } => self.alpha == 0.0,
            InertialRule::NondecreasingBelowBeta(Schedule::LinearRamp { start, step }) => {
                start >= self.alpha || (step == 0.0 && start == self.alpha)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reported_settings() {
        let c = AdmmConfig::default();
        assert_eq!((c.alpha, c.sigma, c.tau, c.gamma, c.tol), (0.33, 0.99, 0.999, 1.0, 1e-6));
        assert_eq!(c.rule, InertialRule::Summability { theta: 0.99, k0: 1 });
        c.validate().unwrap();
    }

    #[test]
    fn tau_one_requires_reference_mode() {
        let mut c = AdmmConfig { tau: 1.0, ..AdmmConfig::default() };
        assert!(c.validate().is_err());
        c.reference_mode = true;
        c.validate().unwrap();
    }

    #[test]
    fn below_beta_rule_checks_alpha() {
        let mut c = AdmmConfig {
            alpha: 0.1,
            sigma: 0.0,
            tau: 0.5,
            rule: InertialRule::NondecreasingBelowBeta(Schedule::Constant),
            ..AdmmConfig::default()
        };
        c.validate().unwrap();
        assert!(c.satisfies_assumption_b());
        c.alpha = 0.2; // beta(0, 0.5) ≈ 0.1547
        assert!(c.validate().is_err());
    }

    #[test]
    fn ramp_schedule_is_nondecreasing_and_capped() {
        let s = Schedule::LinearRamp { start: 0.0, step: 0.01 };
        let vals: Vec<f64> = (0..20).map(|k| s.value(k, 0.05)).collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!(vals.iter().all(|&a| a <= 0.05));
        assert_eq!(vals[19], 0.05);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let base = AdmmConfig::default();
        for c in [
            AdmmConfig { alpha: 1.0, ..base.clone() },
            AdmmConfig { sigma: -0.1, ..base.clone() },
            AdmmConfig { gamma: 0.0, ..base.clone() },
            AdmmConfig { tol: 0.0, ..base.clone() },
            AdmmConfig { rule: InertialRule::Summability { theta: 1.0, k0: 1 }, ..base.clone() },
            AdmmConfig { rule: InertialRule::Summability { theta: 0.5, k0: 0 }, ..base.clone() },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
