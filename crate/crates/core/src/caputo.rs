//! Caputo time-fractional derivative of products t^γ·φ(x,t).
//!
//! The trial space produces exactly this product form, which makes the
//! derivative a one-dimensional weighted integral over [0,1] with Jacobi
//! weight (1−τ)^{−γ} τ^{γ−1}. A small Gauss–Jacobi rule integrates it to
//! machine precision whenever φ is smooth in t.

use crate::quadrature::cached_rule;
use crate::special::ln_gamma;
use crate::{Error, Result};

/// A scalar field of space and time with an exact time derivative.
pub trait TimeField {
    fn evaluate(&self, x: &[f64], t: f64) -> f64;

    /// Exact partial derivative of `evaluate` with respect to t.
    fn time_derivative(&self, x: &[f64], t: f64) -> f64;
}

/// Closed-form Caputo derivative of a pure power: ∂_t^γ t^β for β > γ − 1.
pub fn caputo_power(beta: f64, gamma: f64, t: f64) -> f64 {
    (ln_gamma(beta + 1.0) - ln_gamma(beta + 1.0 - gamma)).exp() * t.powf(beta - gamma)
}

fn validate(gamma: f64, t: f64, n_tau: usize) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0,1), got {gamma}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be nonnegative, got {t}")));
    }
    if n_tau == 0 {
        return Err(Error::InvalidParameter("n_tau must be positive".into()));
    }
    Ok(())
}

/// ∂_t^γ [t^γ φ(x,t)] by Gauss–Jacobi quadrature:
///
/// (1/Γ(1−γ)) Σ_k w_k^{(−γ,γ−1)} S₁(x,t,τ_k),
/// S₁(x,t,τ) = γ φ(x,tτ) + tτ ∂_tφ(x,tτ),
///
/// with nodes τ_k on [0,1]. Exact for polynomial φ of degree m in t once
/// 2·n_tau − 1 ≥ m. Returns 0 at t = 0.
pub fn caputo_tgamma<F: TimeField + ?Sized>(
    phi: &F,
    x: &[f64],
    t: f64,
    gamma: f64,
    n_tau: usize,
) -> Result<f64> {
    validate(gamma, t, n_tau)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let rule = cached_rule(n_tau, -gamma, gamma - 1.0, 0.0, 1.0)?;
    let mut acc = 0.0;
    for (&tau, &w) in rule.nodes.iter().zip(&rule.weights) {
        let s = t * tau;
        acc += w * (gamma * phi.evaluate(x, s) + s * phi.time_derivative(x, s));
    }
    Ok(acc * (-ln_gamma(1.0 - gamma)).exp())
}

/// Caputo-sum helper for batched use: the quadrature nodes τ_k scaled to
/// s_k = t·τ_k plus the weight prefactors, so callers can evaluate φ and
/// ∂_tφ in a single batch and contract afterwards. The derivative is
/// scale·Σ_k (value_coeff_k·φ(x,s_k) + deriv_coeff_k·∂_tφ(x,s_k)).
#[derive(Debug, Clone)]
pub struct CaputoStencil {
    pub times: Vec<f64>,
    pub value_coeffs: Vec<f64>,
    pub deriv_coeffs: Vec<f64>,
    pub scale: f64,
}

impl CaputoStencil {
    pub fn new(t: f64, gamma: f64, n_tau: usize) -> Result<Self> {
        validate(gamma, t, n_tau)?;
        let rule = cached_rule(n_tau, -gamma, gamma - 1.0, 0.0, 1.0)?;
        let mut times = Vec::with_capacity(n_tau);
        let mut value_coeffs = Vec::with_capacity(n_tau);
        let mut deriv_coeffs = Vec::with_capacity(n_tau);
        for (&tau, &w) in rule.nodes.iter().zip(&rule.weights) {
            times.push(t * tau);
            value_coeffs.push(w * gamma);
            deriv_coeffs.push(w * t * tau);
        }
        let mut scale = (-ln_gamma(1.0 - gamma)).exp();
        if t == 0.0 {
            scale = 0.0;
        }
        Ok(CaputoStencil { times, value_coeffs, deriv_coeffs, scale })
    }

    pub fn apply<F: TimeField + ?Sized>(&self, phi: &F, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.times.len() {
            let s = self.times[k];
            acc += self.value_coeffs[k] * phi.evaluate(x, s)
                + self.deriv_coeffs[k] * phi.time_derivative(x, s);
        }
        self.scale * acc
    }
}
