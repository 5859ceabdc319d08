//! Bounded-domain geometry contract, the unit-ball instance, and uniform
//! direction sampling on the sphere and hemisphere.

use crate::special::ln_gamma;
use crate::{Error, Result};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

/// Geometry contract for a bounded domain.
///
/// Implementations are immutable and shareable across threads. `r0` is the
/// distance from an interior point to the boundary; `dir_dist` the distance
/// to the boundary along a unit direction; `boundary_feature` a prescribed
/// function positive inside the domain and zero outside.
pub trait Domain: Send + Sync {
    fn dim(&self) -> usize;

    fn contains(&self, x: &[f64]) -> bool;

    /// Minimum distance from x to the boundary. Positive for interior x.
    fn r0(&self, x: &[f64]) -> f64;

    /// Distance from x to the boundary along the unit direction xi.
    fn dir_dist(&self, x: &[f64], xi: &[f64]) -> f64;

    /// Boundary feature b(x): positive inside, zero outside.
    fn boundary_feature(&self, x: &[f64]) -> f64;

    /// Gradient of the boundary feature at an interior point.
    fn boundary_feature_grad(&self, x: &[f64], out: &mut [f64]);
}

/// The unit ball B_1 with boundary feature b(x) = max(1 - ||x||², 0).
#[derive(Debug, Clone)]
pub struct UnitBall {
    dim: usize,
}

impl UnitBall {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        UnitBall { dim }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Directional distance from an interior point of the unit ball to its
/// boundary: `-x·ξ + sqrt((x·ξ)² + 1 - ||x||²)`.
pub fn unit_ball_dir_dist(x: &[f64], xi: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r >= 1.0 {
        return Err(Error::Geometry(format!("point with norm {r} is not interior")));
    }
    let xd = dot(x, xi);
    Ok(-xd + (xd * xd + 1.0 - r * r).sqrt())
}

impl Domain for UnitBall {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &[f64]) -> bool {
        norm(x) < 1.0
    }

    fn r0(&self, x: &[f64]) -> f64 {
        1.0 - norm(x)
    }

    fn dir_dist(&self, x: &[f64], xi: &[f64]) -> f64 {
        unit_ball_dir_dist(x, xi).expect("dir_dist requires an interior point")
    }

    fn boundary_feature(&self, x: &[f64]) -> f64 {
        (1.0 - x.iter().map(|v| v * v).sum::<f64>()).max(0.0)
    }

    fn boundary_feature_grad(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = -2.0 * v;
        }
    }
}

/// Natural log of the surface area of S^{d-1}: `ln(2 π^{d/2} / Γ(d/2))`.
/// Finite for any d, even where the area itself over- or underflows f64.
pub fn ln_sphere_surface_area(d: usize) -> f64 {
    let df = d as f64;
    2.0f64.ln() + 0.5 * df * std::f64::consts::PI.ln() - ln_gamma(0.5 * df)
}

/// Surface area of the unit sphere S^{d-1}: `2 π^{d/2} / Γ(d/2)`.
/// Underflows to zero for d beyond a few hundred; prefactors that pair the
/// area with other extreme factors should combine logs via
/// [`ln_sphere_surface_area`] instead.
pub fn sphere_surface_area(d: usize) -> f64 {
    ln_sphere_surface_area(d).exp()
}

/// Draw m unit vectors uniformly on S^{d-1} by normalizing standard
/// Gaussian draws. Rows of the result are the directions.
pub fn sample_sphere<R: Rng>(d: usize, m: usize, rng: &mut R) -> Array2<f64> {
    assert!(d >= 1 && m >= 1);
    let mut out = Array2::zeros((m, d));
    for mut row in out.rows_mut() {
        loop {
            let mut s = 0.0;
            for v in row.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *v = g;
                s += g * g;
            }
            if s > 0.0 {
                if d == 1 {
                    // g / sqrt(g²) can round away from ±1
                    row[0] = row[0].signum();
                } else {
                    let inv = 1.0 / s.sqrt();
                    row.mapv_inplace(|v| v * inv);
                }
                break;
            }
        }
    }
    out
}

/// Canonicalize a direction into the upper hemisphere: negate the whole
/// vector if its last coordinate is negative. Satisfies
/// canonicalize(ξ) = canonicalize(-ξ).
pub fn canonicalize_hemisphere(xi: &mut [f64]) {
    if *xi.last().expect("nonempty direction") < 0.0 {
        for v in xi.iter_mut() {
            *v = -*v;
        }
    }
}

/// Draw m unit vectors uniformly on the upper hemisphere S₊^{d-1}
/// (last coordinate nonnegative).
pub fn sample_hemisphere<R: Rng>(d: usize, m: usize, rng: &mut R) -> Array2<f64> {
    let mut out = sample_sphere(d, m, rng);
    for mut row in out.rows_mut() {
        canonicalize_hemisphere(row.as_slice_mut().expect("standard layout"));
    }
    out
}
