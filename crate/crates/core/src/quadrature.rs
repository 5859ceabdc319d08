//! Gauss-Jacobi and Gauss-Legendre quadrature rules.
//!
//! Rules integrate `∫_a^b (b-x)^{beta1} (x-a)^{beta2} f(x) dx` by a weighted
//! sum over nodes. Nodes and weights come from the Golub-Welsch algorithm:
//! eigenvalues and first-eigenvector components of the symmetric tridiagonal
//! Jacobi matrix built from the three-term recurrence of the Jacobi
//! polynomials. This is robust for the negative exponent pairs used here,
//! `(0, 1-α)` for the radial singularity and `(-γ, γ-1)` for the Caputo
//! derivative.

use crate::special::ln_beta;
use crate::{Error, Result};
use faer::Mat;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Largest supported node count; nothing in this crate needs more than 32.
pub const MAX_NODES: usize = 256;

/// A weighted Gaussian rule on an interval.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub n: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub interval: (f64, f64),
    /// Strictly increasing, all strictly inside the interval.
    pub nodes: Vec<f64>,
    /// All positive; they sum to the zeroth moment of the weight.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Apply the rule: `Σ_k w_k f(x_k)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Zeroth moment of the weight function over the interval,
    /// `(b-a)^{beta1+beta2+1} B(beta1+1, beta2+1)`.
    pub fn moment0(&self) -> f64 {
        let (a, b) = self.interval;
        ((self.beta1 + self.beta2 + 1.0) * (b - a).ln() + ln_beta(self.beta1 + 1.0, self.beta2 + 1.0))
            .exp()
    }
}

fn validate(n: usize, beta1: f64, beta2: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("node count must be at least 1".into()));
    }
    if n > MAX_NODES {
        return Err(Error::InvalidParameter(format!(
            "node count {n} exceeds maximum {MAX_NODES}"
        )));
    }
    if !(beta1 > -1.0) || !(beta2 > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "Jacobi exponents must be > -1, got ({beta1}, {beta2})"
        )));
    }
    Ok(())
}

/// n-point Gauss-Jacobi rule for the weight `(1-x)^{beta1} (1+x)^{beta2}`
/// on [-1, 1]. Deterministic: bit-identical across calls with the same
/// arguments.
pub fn gauss_jacobi_rule(n: usize, beta1: f64, beta2: f64) -> Result<QuadratureRule> {
    validate(n, beta1, beta2)?;
    let (a, b) = (beta1, beta2);

    // Jacobi matrix: diagonal d_k, off-diagonal sqrt(e2_k).
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    diag[0] = (b - a) / (a + b + 2.0);
    for k in 1..n {
        let s = 2.0 * k as f64 + a + b;
        diag[k] = (b * b - a * a) / (s * (s + 2.0));
    }
    for k in 1..n {
        let e2 = if k == 1 {
            4.0 * (a + 1.0) * (b + 1.0) / ((a + b + 2.0).powi(2) * (a + b + 3.0))
        } else {
            let kf = k as f64;
            let s = 2.0 * kf + a + b;
            4.0 * kf * (kf + a) * (kf + b) * (kf + a + b) / (s * s * (s + 1.0) * (s - 1.0))
        };
        off[k - 1] = e2.sqrt();
    }

    let jac = Mat::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i.abs_diff(j) == 1 {
            off[i.min(j)]
        } else {
            0.0
        }
    });
    let evd = jac
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::ConvergenceFailure { n, beta1, beta2 })?;
    let eigvals = evd.S().column_vector();
    let eigvecs = evd.U();

    // zeroth moment on [-1,1]: 2^{a+b+1} B(a+1, b+1)
    let mu0 = ((a + b + 1.0) * 2.0f64.ln() + ln_beta(a + 1.0, b + 1.0)).exp();

    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let q0 = eigvecs[(0, k)];
            (eigvals[k], mu0 * q0 * q0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let rule = QuadratureRule {
        n,
        beta1,
        beta2,
        interval: (-1.0, 1.0),
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    };
    for k in 0..n {
        if !rule.nodes[k].is_finite() || !(rule.weights[k] > 0.0) {
            return Err(Error::ConvergenceFailure { n, beta1, beta2 });
        }
        if rule.nodes[k] <= -1.0 || rule.nodes[k] >= 1.0 {
            return Err(Error::ConvergenceFailure { n, beta1, beta2 });
        }
        if k > 0 && rule.nodes[k] <= rule.nodes[k - 1] {
            return Err(Error::ConvergenceFailure { n, beta1, beta2 });
        }
    }
    Ok(rule)
}

/// n-point Gauss-Legendre rule on [-1, 1] (Jacobi with zero exponents).
pub fn gauss_legendre_rule(n: usize) -> Result<QuadratureRule> {
    gauss_jacobi_rule(n, 0.0, 0.0)
}

/// Map a rule from [-1, 1] to [a, b]:
/// `x_k = (b-a)/2 · x̂_k + (a+b)/2`, `w_k = ((b-a)/2)^{beta1+beta2+1} · ŵ_k`.
pub fn map_to_interval(rule: &QuadratureRule, a: f64, b: f64) -> Result<QuadratureRule> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    debug_assert_eq!(rule.interval, (-1.0, 1.0));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let wscale = half.powf(rule.beta1 + rule.beta2 + 1.0);
    Ok(QuadratureRule {
        n: rule.n,
        beta1: rule.beta1,
        beta2: rule.beta2,
        interval: (a, b),
        nodes: rule.nodes.iter().map(|&x| half * x + mid).collect(),
        weights: rule.weights.iter().map(|&w| wscale * w).collect(),
    })
}

#[derive(Hash, PartialEq, Eq)]
struct CacheKey {
    n: usize,
    beta1: u64,
    beta2: u64,
    a: u64,
    b: u64,
}

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached Gauss-Jacobi rule mapped to [a, b]. Rules are computed once per
/// (n, beta1, beta2, a, b) and shared.
pub fn cached_rule(n: usize, beta1: f64, beta2: f64, a: f64, b: f64) -> Result<Arc<QuadratureRule>> {
    let key = CacheKey {
        n,
        beta1: beta1.to_bits(),
        beta2: beta2.to_bits(),
        a: a.to_bits(),
        b: b.to_bits(),
    };
    if let Some(rule) = cache().lock().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let base = gauss_jacobi_rule(n, beta1, beta2)?;
    let mapped = if (a, b) == (-1.0, 1.0) { base } else { map_to_interval(&base, a, b)? };
    let arc = Arc::new(mapped);
    cache().lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}
