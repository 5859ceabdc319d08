//! Three discretizations of the fractional Laplacian (−Δ)^{α/2} on batches
//! of interior points: the quadrature-enhanced scheme (QE), the plain
//! Monte Carlo baseline (MC), and the improved Monte Carlo scheme (I-MC).
//!
//! All three are expressed through [`OperatorPlan`], a sparse linear
//! functional of the field: for each point x_i the estimate is
//! `scale · (self_coeff_i · u(x_i) + Σ_r coeff_r · u(y_r))` over a fixed,
//! ordered set of evaluation rows y_r. This shares one code path between
//! plain field evaluation and network training (where the rows double as
//! the batch the backward pass scatters cotangents onto), and it makes the
//! result bit-deterministic: accumulation follows row order regardless of
//! chunking or scheduling.

use crate::geometry::{sample_hemisphere, sample_sphere, sphere_surface_area, Domain};
use crate::quadrature::cached_rule;
use crate::special::ln_gamma;
use crate::{Error, Result};
use ndarray::{s, Array2, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A scalar field u(x, t) defined on all of R^d.
///
/// Implementations must be pure and deterministic. The QE and I-MC schemes
/// evaluate the field outside the domain and rely on it vanishing there;
/// fields built on the boundary feature b(x) satisfy this automatically.
pub trait ScalarField: Send + Sync {
    /// Evaluate u at every row of `xs` (and time `t` if the field is
    /// time-dependent) into `out`.
    fn eval(&self, xs: ArrayView2<'_, f64>, t: Option<f64>, out: &mut [f64]);
}

/// Shared configuration for the three fractional Laplacian schemes.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FracLapConfig {
    /// Fractional order α ∈ (0, 2).
    pub alpha: f64,
    /// Gauss-Jacobi node count for the singular radial integrals.
    pub n_gj: usize,
    /// Gauss-Legendre node count for the interior far field.
    pub n_gauss: usize,
    /// Hemisphere direction count M′ (QE near field); also the sample
    /// count of the MC near term and the replicate count of I-MC.
    pub m_near: usize,
    /// Sphere direction count M₁ (QE interior far field, MC far term).
    pub m_far_in: usize,
    /// Sphere direction count M₂ (QE exterior far field).
    pub m_far_out: usize,
    /// Rows per field-evaluation chunk when applying a plan.
    pub chunk_size: usize,
    /// Fixed near/far split radius of the MC baseline.
    pub mc_r0: f64,
    /// Radial clamp ε of the MC baseline.
    pub mc_eps: f64,
    /// Support radius of the I-MC radial rule.
    pub imc_r0: f64,
}

impl Default for FracLapConfig {
    fn default() -> Self {
        FracLapConfig {
            alpha: 1.5,
            n_gj: 8,
            n_gauss: 10,
            m_near: 64,
            m_far_in: 64,
            m_far_out: 256,
            chunk_size: 16384,
            mc_r0: 0.25,
            mc_eps: 1e-6,
            imc_r0: 2.0,
        }
    }
}

impl FracLapConfig {
    pub fn new(alpha: f64) -> Self {
        FracLapConfig { alpha, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 2), got {}",
                self.alpha
            )));
        }
        for (name, v) in [
            ("n_gj", self.n_gj),
            ("n_gauss", self.n_gauss),
            ("m_near", self.m_near),
            ("m_far_in", self.m_far_in),
            ("m_far_out", self.m_far_out),
            ("chunk_size", self.chunk_size),
        ] {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be at least 1")));
            }
        }
        if !(self.mc_eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mc_eps must be positive, got {}",
                self.mc_eps
            )));
        }
        if !(self.mc_r0 > 0.0) || !(self.imc_r0 > 0.0) {
            return Err(Error::InvalidParameter(
                "mc_r0 and imc_r0 must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// ln of the Riesz normalizing constant C_{d,α}.
pub fn ln_c_d_alpha(d: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 2), got {alpha}"
        )));
    }
    let df = d as f64;
    Ok((alpha - 1.0) * 2.0f64.ln() + alpha.ln() + ln_gamma(0.5 * (alpha + df))
        - 0.5 * df * std::f64::consts::PI.ln()
        - ln_gamma(1.0 - 0.5 * alpha))
}

/// Riesz normalizing constant C_{d,α} = 2^{α−1} α Γ((α+d)/2) / (π^{d/2} Γ(1−α/2)).
pub fn c_d_alpha(d: usize, alpha: f64) -> Result<f64> {
    Ok(ln_c_d_alpha(d, alpha)?.exp())
}

/// A realized discretization of (−Δ)^{α/2} at a batch of points, stored as
/// a sparse linear functional of the field.
///
/// For point i the estimate is
/// `scale · (self_coeff[i] · u(points[i]) + Σ coeffs[r] · u(eval_points[r]))`
/// with r ranging over `offsets[i]..offsets[i+1]`. Row order is fixed at
/// construction and accumulation follows it, so applying a plan is
/// bit-deterministic for any chunk size.
#[derive(Debug, Clone)]
pub struct OperatorPlan {
    pub scale: f64,
    pub points: Array2<f64>,
    pub self_coeff: Vec<f64>,
    pub eval_points: Array2<f64>,
    pub coeffs: Vec<f64>,
    pub offsets: Vec<usize>,
    pub chunk_size: usize,
}

impl OperatorPlan {
    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn n_rows(&self) -> usize {
        self.eval_points.nrows()
    }

    /// Evaluate the functional against a field.
    pub fn apply(&self, u: &dyn ScalarField, t: Option<f64>) -> Vec<f64> {
        let mut u_self = vec![0.0; self.n_points()];
        u.eval(self.points.view(), t, &mut u_self);
        let vals = self.eval_field(u, t);
        self.reduce(&u_self, &vals)
    }

    /// Field values at every evaluation row, computed in chunks.
    pub fn eval_field(&self, u: &dyn ScalarField, t: Option<f64>) -> Vec<f64> {
        let total = self.n_rows();
        let mut vals = vec![0.0; total];
        let chunk = self.chunk_size.max(1);
        let mut lo = 0;
        while lo < total {
            let hi = (lo + chunk).min(total);
            u.eval(self.eval_points.slice(s![lo..hi, ..]), t, &mut vals[lo..hi]);
            lo = hi;
        }
        vals
    }

    /// Combine per-point field values and per-row field values into the
    /// final estimates, in fixed row order.
    pub fn reduce(&self, u_self: &[f64], row_vals: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u_self.len(), self.n_points());
        debug_assert_eq!(row_vals.len(), self.n_rows());
        (0..self.n_points())
            .map(|i| {
                let mut acc = self.self_coeff[i] * u_self[i];
                for r in self.offsets[i]..self.offsets[i + 1] {
                    acc += self.coeffs[r] * row_vals[r];
                }
                self.scale * acc
            })
            .collect()
    }
}

struct PlanBuilder {
    dim: usize,
    points: Vec<f64>,
    self_coeff: Vec<f64>,
    eval: Vec<f64>,
    coeffs: Vec<f64>,
    offsets: Vec<usize>,
}

impl PlanBuilder {
    fn new(dim: usize) -> Self {
        PlanBuilder {
            dim,
            points: Vec::new(),
            self_coeff: Vec::new(),
            eval: Vec::new(),
            coeffs: Vec::new(),
            offsets: vec![0],
        }
    }

    fn begin_point(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.points.extend_from_slice(x);
        self.self_coeff.push(0.0);
    }

    fn add_self(&mut self, c: f64) {
        *self.self_coeff.last_mut().expect("begin_point first") += c;
    }

    /// Add an evaluation row at x + sign·r·ξ with the given coefficient.
    fn add_row(&mut self, x: &[f64], sign: f64, r: f64, xi: &[f64], c: f64) {
        for (a, b) in x.iter().zip(xi) {
            self.eval.push(a + sign * r * b);
        }
        self.coeffs.push(c);
    }

    fn end_point(&mut self) {
        self.offsets.push(self.coeffs.len());
    }

    fn finish(self, scale: f64, chunk_size: usize) -> OperatorPlan {
        let n = self.self_coeff.len();
        let rows = self.coeffs.len();
        OperatorPlan {
            scale,
            points: Array2::from_shape_vec((n, self.dim), self.points)
                .expect("points shape"),
            self_coeff: self.self_coeff,
            eval_points: Array2::from_shape_vec((rows, self.dim), self.eval)
                .expect("rows shape"),
            coeffs: self.coeffs,
            offsets: self.offsets,
            chunk_size,
        }
    }
}

/// Direction sets shared by every point of one QE batch call.
#[derive(Debug, Clone)]
pub struct QeDirections {
    /// Hemisphere directions for the near field (M′ rows).
    pub near: Array2<f64>,
    /// Sphere directions for the interior far field (M₁ rows).
    pub far_in: Array2<f64>,
    /// Sphere directions for the exterior far field (M₂ rows).
    pub far_out: Array2<f64>,
}

impl QeDirections {
    /// Draw fresh direction sets for one batch call.
    pub fn sample(d: usize, cfg: &FracLapConfig, rng: &mut ChaCha8Rng) -> Self {
        QeDirections {
            near: sample_hemisphere(d, cfg.m_near, rng),
            far_in: sample_sphere(d, cfg.m_far_in, rng),
            far_out: sample_sphere(d, cfg.m_far_out, rng),
        }
    }

    /// Exact angular enumeration in one dimension: S⁰ = {±1}, with the
    /// single hemisphere direction +1. Makes QE fully deterministic.
    pub fn exact_1d() -> Self {
        QeDirections {
            near: Array2::from_shape_vec((1, 1), vec![1.0]).unwrap(),
            far_in: Array2::from_shape_vec((2, 1), vec![1.0, -1.0]).unwrap(),
            far_out: Array2::from_shape_vec((2, 1), vec![1.0, -1.0]).unwrap(),
        }
    }
}

fn check_interior(domain: &dyn Domain, x: &[f64]) -> Result<f64> {
    let r0 = domain.r0(x);
    if !(r0 > 0.0) {
        return Err(Error::Geometry(format!(
            "point {x:?} is not strictly interior (r0 = {r0})"
        )));
    }
    Ok(r0)
}

/// Near field: Gauss-Jacobi (0, 1−α) in the radius over (0, r0(x)),
/// Monte Carlo over the upper hemisphere, on the symmetric difference
/// F = 2u(x) − u(x+rξ) − u(x−rξ).
fn add_near(
    b: &mut PlanBuilder,
    cfg: &FracLapConfig,
    x: &[f64],
    r0: f64,
    dirs: ArrayView2<'_, f64>,
) -> Result<()> {
    let d = x.len();
    let rule = cached_rule(cfg.n_gj, 0.0, 1.0 - cfg.alpha, 0.0, 1.0)?;
    let pref = 0.5 * sphere_surface_area(d) * r0.powf(-cfg.alpha) / dirs.nrows() as f64;
    for xi in dirs.rows() {
        let xi = xi.to_slice().expect("standard layout");
        for (&tau, &w) in rule.nodes.iter().zip(&rule.weights) {
            let c = pref * w / (tau * tau);
            b.add_self(2.0 * c);
            b.add_row(x, 1.0, r0 * tau, xi, -c);
            b.add_row(x, -1.0, r0 * tau, xi, -c);
        }
    }
    Ok(())
}

/// Interior far field: per direction ξ, Gauss-Legendre on the radius over
/// (r0(x), d_x(ξ)) of (u(x) − u(x+rξ)) r^{−1−α}, Monte Carlo over the full
/// sphere. Degenerate intervals contribute exactly 0.
fn add_far_in(
    b: &mut PlanBuilder,
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    x: &[f64],
    r0: f64,
    dirs: ArrayView2<'_, f64>,
) -> Result<()> {
    let d = x.len();
    let rule = cached_rule(cfg.n_gauss, 0.0, 0.0, 0.0, 1.0)?;
    let pref = sphere_surface_area(d) / dirs.nrows() as f64;
    for xi in dirs.rows() {
        let xi = xi.to_slice().expect("standard layout");
        let len = domain.dir_dist(x, xi) - r0;
        if len <= 1e-14 {
            continue;
        }
        for (&s_g, &w) in rule.nodes.iter().zip(&rule.weights) {
            let r = r0 + len * s_g;
            let c = pref * len * w * r.powf(-1.0 - cfg.alpha);
            b.add_self(c);
            b.add_row(x, 1.0, r, xi, -c);
        }
    }
    Ok(())
}

/// Exterior far field: analytic in the radius under the zero-exterior
/// contract, Monte Carlo over the sphere. Contributes only to the
/// coefficient on u(x) itself.
fn add_far_out(
    b: &mut PlanBuilder,
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    x: &[f64],
    dirs: ArrayView2<'_, f64>,
) {
    let d = x.len();
    let pref = sphere_surface_area(d) / (dirs.nrows() as f64 * cfg.alpha);
    for xi in dirs.rows() {
        let xi = xi.to_slice().expect("standard layout");
        b.add_self(pref * domain.dir_dist(x, xi).powf(-cfg.alpha));
    }
}

fn plan_over_points<F>(
    cfg: &FracLapConfig,
    xs: ArrayView2<'_, f64>,
    scale: f64,
    mut per_point: F,
) -> Result<OperatorPlan>
where
    F: FnMut(&mut PlanBuilder, &[f64]) -> Result<()>,
{
    cfg.validate()?;
    let mut b = PlanBuilder::new(xs.ncols());
    for x in xs.rows() {
        let x = x.to_slice().expect("standard layout");
        b.begin_point(x);
        per_point(&mut b, x)?;
        b.end_point();
    }
    Ok(b.finish(scale, cfg.chunk_size))
}

/// Near-field part of the QE scheme as a plan with unit scale.
pub fn qe_near_plan(
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    xs: ArrayView2<'_, f64>,
    dirs: ArrayView2<'_, f64>,
) -> Result<OperatorPlan> {
    plan_over_points(cfg, xs, 1.0, |b, x| {
        let r0 = check_interior(domain, x)?;
        add_near(b, cfg, x, r0, dirs)
    })
}

/// Interior far-field part of the QE scheme as a plan with unit scale.
pub fn qe_interior_far_plan(
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    xs: ArrayView2<'_, f64>,
    dirs: ArrayView2<'_, f64>,
) -> Result<OperatorPlan> {
    plan_over_points(cfg, xs, 1.0, |b, x| {
        let r0 = check_interior(domain, x)?;
        add_far_in(b, cfg, domain, x, r0, dirs)
    })
}

/// Exterior far-field part of the QE scheme as a plan with unit scale.
pub fn qe_exterior_far_plan(
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    xs: ArrayView2<'_, f64>,
    dirs: ArrayView2<'_, f64>,
) -> Result<OperatorPlan> {
    plan_over_points(cfg, xs, 1.0, |b, x| {
        check_interior(domain, x)?;
        add_far_out(b, cfg, domain, x, dirs);
        Ok(())
    })
}

/// Full QE plan (near + interior far + exterior far, scaled by C_{d,α})
/// with explicitly supplied direction sets.
pub fn qe_plan_with_dirs(
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    xs: ArrayView2<'_, f64>,
    dirs: &QeDirections,
) -> Result<OperatorPlan> {
    let scale = c_d_alpha(xs.ncols(), cfg.alpha)?;
    plan_over_points(cfg, xs, scale, |b, x| {
        let r0 = check_interior(domain, x)?;
        add_near(b, cfg, x, r0, dirs.near.view())?;
        add_far_in(b, cfg, domain, x, r0, dirs.far_in.view())?;
        add_far_out(b, cfg, domain, x, dirs.far_out.view());
        Ok(())
    })
}

/// Full QE plan with fresh directions drawn from `rng`, shared by every
/// point of the batch.
pub fn qe_plan(
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    xs: ArrayView2<'_, f64>,
    rng: &mut ChaCha8Rng,
) -> Result<OperatorPlan> {
    cfg.validate()?;
    let dirs = QeDirections::sample(xs.ncols(), cfg, rng);
    qe_plan_with_dirs(cfg, domain, xs, &dirs)
}

/// Plain Monte Carlo plan: Beta-sampled radii split at the fixed radius
/// mc_r0, antithetic ±ξ pairs, sample sets shared across the batch.
pub fn mc_plan(
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    xs: ArrayView2<'_, f64>,
    rng: &mut ChaCha8Rng,
) -> Result<OperatorPlan> {
    cfg.validate()?;
    let d = xs.ncols();
    let scale = c_d_alpha(d, cfg.alpha)?;
    let area = sphere_surface_area(d);
    let r0 = cfg.mc_r0;
    let alpha = cfg.alpha;

    // draws shared across points, in a fixed order
    let near_dirs = sample_sphere(d, cfg.m_near, rng);
    let near_r: Vec<f64> = (0..cfg.m_near)
        .map(|_| {
            // r_I / r0 ~ Beta(2−α, 1) by inverse CDF
            let b: f64 = rng.gen::<f64>().powf(1.0 / (2.0 - alpha));
            (r0 * b).max(cfg.mc_eps)
        })
        .collect();
    let far_dirs = sample_sphere(d, cfg.m_far_in, rng);
    let far_r: Vec<f64> = (0..cfg.m_far_in)
        .map(|_| {
            // r0 / r_o ~ Beta(α, 1); clamp keeps the radius finite
            let b: f64 = rng.gen::<f64>().powf(1.0 / alpha).max(1e-12);
            r0 / b
        })
        .collect();

    let near_pref = area * r0.powf(2.0 - alpha) / (2.0 * (2.0 - alpha) * cfg.m_near as f64);
    let far_pref = area * r0.powf(-alpha) / (2.0 * alpha * cfg.m_far_in as f64);

    plan_over_points(cfg, xs, scale, |b, x| {
        check_interior(domain, x)?;
        for (xi, &r) in near_dirs.rows().into_iter().zip(&near_r) {
            let xi = xi.to_slice().expect("standard layout");
            let c = near_pref / (r * r);
            b.add_self(2.0 * c);
            b.add_row(x, 1.0, r, xi, -c);
            b.add_row(x, -1.0, r, xi, -c);
        }
        for (xi, &r) in far_dirs.rows().into_iter().zip(&far_r) {
            let xi = xi.to_slice().expect("standard layout");
            b.add_self(2.0 * far_pref);
            b.add_row(x, 1.0, r, xi, -far_pref);
            b.add_row(x, -1.0, r, xi, -far_pref);
        }
        Ok(())
    })
}

/// Improved Monte Carlo plan with explicit direction rows: `dirs` must
/// have m_near·n_gj rows, one direction per (replicate, node) pair.
pub fn imc_plan_with_dirs(
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    xs: ArrayView2<'_, f64>,
    dirs: ArrayView2<'_, f64>,
) -> Result<OperatorPlan> {
    cfg.validate()?;
    let d = xs.ncols();
    if dirs.nrows() % cfg.n_gj != 0 {
        return Err(Error::ShapeMismatch(format!(
            "I-MC needs a multiple of n_gj = {} direction rows, got {}",
            cfg.n_gj,
            dirs.nrows()
        )));
    }
    let replicates = dirs.nrows() / cfg.n_gj;
    let scale = c_d_alpha(d, cfg.alpha)?;
    let area = sphere_surface_area(d);
    let rule = cached_rule(cfg.n_gj, 0.0, 1.0 - cfg.alpha, 0.0, cfg.imc_r0)?;
    let pref = 0.5 * area / replicates as f64;
    let tail = area * cfg.imc_r0.powf(-cfg.alpha) / cfg.alpha;

    plan_over_points(cfg, xs, scale, |b, x| {
        check_interior(domain, x)?;
        for j in 0..replicates {
            for (k, (&tau, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                let xi = dirs.row(j * cfg.n_gj + k);
                let xi = xi.to_slice().expect("standard layout");
                let c = pref * w / (tau * tau);
                b.add_self(2.0 * c);
                b.add_row(x, 1.0, tau, xi, -c);
                b.add_row(x, -1.0, tau, xi, -c);
            }
        }
        b.add_self(tail);
        Ok(())
    })
}

/// Improved Monte Carlo plan with fresh hemisphere directions, one per
/// quadrature node and replicate, shared across the batch.
pub fn imc_plan(
    cfg: &FracLapConfig,
    domain: &dyn Domain,
    xs: ArrayView2<'_, f64>,
    rng: &mut ChaCha8Rng,
) -> Result<OperatorPlan> {
    cfg.validate()?;
    let dirs = sample_hemisphere(xs.ncols(), cfg.m_near * cfg.n_gj, rng);
    imc_plan_with_dirs(cfg, domain, xs, dirs.view())
}

fn single_point(x: &[f64]) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((1, x.len()), x).expect("contiguous point")
}

/// QE near-field estimator at one point, without the C_{d,α} factor.
pub fn qe_near_field(
    u: &dyn ScalarField,
    x: &[f64],
    t: Option<f64>,
    domain: &dyn Domain,
    cfg: &FracLapConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    cfg.validate()?;
    let dirs = sample_hemisphere(x.len(), cfg.m_near, rng);
    let plan = qe_near_plan(cfg, domain, single_point(x), dirs.view())?;
    Ok(plan.apply(u, t)[0])
}

/// QE interior far-field estimator at one point, without C_{d,α}.
pub fn qe_interior_far_field(
    u: &dyn ScalarField,
    x: &[f64],
    t: Option<f64>,
    domain: &dyn Domain,
    cfg: &FracLapConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    cfg.validate()?;
    let dirs = sample_sphere(x.len(), cfg.m_far_in, rng);
    let plan = qe_interior_far_plan(cfg, domain, single_point(x), dirs.view())?;
    Ok(plan.apply(u, t)[0])
}

/// QE exterior far-field estimator at one point, without C_{d,α}.
pub fn qe_exterior_far_field(
    u: &dyn ScalarField,
    x: &[f64],
    t: Option<f64>,
    domain: &dyn Domain,
    cfg: &FracLapConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    cfg.validate()?;
    let dirs = sample_sphere(x.len(), cfg.m_far_out, rng);
    let plan = qe_exterior_far_plan(cfg, domain, single_point(x), dirs.view())?;
    Ok(plan.apply(u, t)[0])
}

/// QE estimate of (−Δ)^{α/2}u at every row of `xs`.
pub fn qe_frac_laplacian(
    u: &dyn ScalarField,
    xs: ArrayView2<'_, f64>,
    t: Option<f64>,
    domain: &dyn Domain,
    cfg: &FracLapConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    Ok(qe_plan(cfg, domain, xs, rng)?.apply(u, t))
}

/// MC baseline estimate of (−Δ)^{α/2}u at every row of `xs`.
pub fn mc_frac_laplacian(
    u: &dyn ScalarField,
    xs: ArrayView2<'_, f64>,
    t: Option<f64>,
    domain: &dyn Domain,
    cfg: &FracLapConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    Ok(mc_plan(cfg, domain, xs, rng)?.apply(u, t))
}

/// Improved MC estimate of (−Δ)^{α/2}u at every row of `xs`.
pub fn imc_frac_laplacian(
    u: &dyn ScalarField,
    xs: ArrayView2<'_, f64>,
    t: Option<f64>,
    domain: &dyn Domain,
    cfg: &FracLapConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    Ok(imc_plan(cfg, domain, xs, rng)?.apply(u, t))
}
