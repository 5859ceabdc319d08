//! Monte Carlo discretizations of the fractional Laplacian on bounded domains
//! and a feature-enhanced physics-informed neural network (PINN) trainer for
//! fractional Poisson and time-dependent fractional diffusion problems.
//!
//! The toolkit provides three discretizations of `(-Δ)^{α/2}`:
//!
//! * a quadrature-enhanced scheme (QE) that splits the nonlocal integral at the
//!   distance-to-boundary radius `r0(x)` into a singular near field (Gauss-Jacobi
//!   radial quadrature, hemisphere Monte Carlo angular sampling), a regular
//!   interior far field (Gauss radial quadrature, sphere sampling), and an
//!   analytic exterior far field;
//! * the MC baseline with Beta-distributed radial sampling and a fixed radius;
//! * an improved MC scheme with Gauss-Jacobi radial quadrature and an analytic
//!   tail outside a fixed support radius.
//!
//! On top of these sit a Gauss-Jacobi Caputo time-derivative quadrature, a
//! multi-head tanh MLP trial space with boundary features `b(x)^{μ_j}` and a
//! temporal factor `t^γ`, a residual-loss trainer with Adam, and closed-form
//! benchmark problems on the unit ball.

pub mod adam;
pub mod benchmarks;
pub mod caputo;
pub mod fraclap;
pub mod geometry;
pub mod linalg;
pub mod mlp;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod trainer;
pub mod trialspace;

mod error;

pub use error::{Error, Result};
