//! Bogoliubov theory of the dilute Bose gas in the Gross–Pitaevskii regime.
//!
//! * [`lattice`] – truncated momentum lattice and analytic convolution.
//! * [`potential`] – radial potentials and their Fourier coefficients.
//! * [`scattering`] – the truncated zero-energy scattering equation, the box
//!   scattering length and a continuum oracle.
//! * [`bogoliubov`] – dispersion, Bogoliubov coefficients, ground-state
//!   energy and excitation spectra.
//! * [`fock`] – occupation bases, normal-ordered operator expressions,
//!   sparse assembly and operator-identity checks.
//! * [`ed`] – Lanczos eigensolver and the comparison harness.

pub mod bogoliubov;
pub mod ed;
pub mod fock;
pub mod lattice;
pub mod potential;
pub mod quadrature;
pub mod scalar;
pub mod scattering;

pub use lattice::{LatticeShape, LatticeVector, MomentumLattice};
pub use scalar::Real;

pub type PotentialSpecF64 = potential::PotentialSpec<f64>;
pub type PotentialSpecF32 = potential::PotentialSpec<f32>;
pub type ScatteringSolutionF64 = scattering::ScatteringSolution<f64>;
pub type ScatteringSolutionF32 = scattering::ScatteringSolution<f32>;
pub type BogoliubovDataF64 = bogoliubov::BogoliubovData<f64>;
pub type BogoliubovDataF32 = bogoliubov::BogoliubovData<f32>;

/// Default infrared exponent `α`.
pub const DEFAULT_ALPHA: f64 = 2.0 / 17.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { what: &'static str, iterations: usize, residual: f64 },
    #[error("ODE step failure; last stable radius {radius}")]
    Ode { radius: f64 },
    #[error("{what} exceeds budget {limit} (reached {count})")]
    Budget { what: &'static str, limit: usize, count: usize },
    #[error("missing context field `{0}`")]
    MissingContext(&'static str),
    #[error("identity not cutoff-safe on this basis: {0}")]
    CutoffUnsafe(String),
}
