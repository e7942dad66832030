//! Pseudo-spectral simulation of the dissipative quasi-geostrophic equation
//!
//! ```text
//! ∂ₜθ + u·∇θ + κ(-Δ)^α θ = 0,   u = (-R₂θ, R₁θ),   x ∈ [0, 2π)²
//! ```
//!
//! together with a harness that checks maximum principles, Sobolev-norm
//! monotonicity, exponential decay, Gevrey-class monitoring and the
//! coefficient-level identities of the Fourier ODE system.
//!
//! The numerical core is generic over the scalar type ([`Real`]); the
//! aliases below fix it to `f64`, which all tolerances assume.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod harness;
pub mod io;
pub mod rhs;
pub mod scalar;
pub mod spectral;

pub use error::{QgError, Result};
pub use scalar::Real;

pub type SpectralField64 = spectral::SpectralField<f64>;
pub type PhysicalField64 = spectral::PhysicalField<f64>;
pub type RhsConfig64 = rhs::RhsConfig<f64>;
pub type SimConfig64 = integrator::SimConfig<f64>;
pub type Trajectory64 = integrator::Trajectory<f64>;
