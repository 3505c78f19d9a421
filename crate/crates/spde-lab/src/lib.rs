//! Numerical laboratory for stochastic reaction-diffusion equations
//! `du = (Au + f(u))dt + σ(u)dW` driven by trace-class Q-Wiener noise.
//!
//! The crate provides:
//!
//! - weighted L² spaces over ℝ^d and the half-space, with Gauss-Hermite
//!   and torus quadrature ([`weights`]);
//! - construction and sampling of truncated Q-Wiener processes on
//!   one-sided and two-sided time grids ([`noise`]);
//! - the whole-space heat semigroup realized as a Fourier multiplier on a
//!   periodic truncation, together with explicit uniform moment-bound
//!   constants ([`heat`]);
//! - the Hermite eigenbasis of the Gaussian-weight operator
//!   `Au = ρ⁻¹ div(ρ∇u)`, `ρ = e^{-|x|²}`, on the half-space with exact
//!   spectral semigroup ([`spectral`]);
//! - mild-solution time stepping (exponential Euler), Picard iteration
//!   with measured contraction factors, two-sided stochastic convolutions,
//!   the stationary-solution fixed-point iteration, and stability
//!   experiments ([`engine`]);
//! - Monte-Carlo moment series, decay-rate fits, time-averaged empirical
//!   measures, energy-distance two-sample tests and martingale maximal
//!   inequality probes ([`stats`]);
//! - named experiments with CSV/SVG artifacts and reproducible manifests
//!   ([`experiments`]).
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod heat;
pub mod hermite;
pub mod noise;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};

/// A real-valued function sampled on the nodes of a quadrature rule or grid.
pub type Field = Vec<f64>;
