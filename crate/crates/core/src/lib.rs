//! Reaction–diffusion master equation simulation for first-order reaction
//! networks with heterogeneous diffusion and reaction coefficients, together
//! with the semidiscrete macroscopic system it converges to and the
//! diagnostics used to check that convergence empirically.

pub mod analysis;
pub mod discretization;
pub mod linalg;
pub mod network;
pub mod pde;
pub mod rdme;
pub mod scalar;

pub use scalar::Real;

/// Double-precision concentration field.
pub type Field = discretization::ConcField<f64>;
/// Single-precision concentration field.
pub type Field32 = discretization::ConcField<f32>;
pub type Coefficients = discretization::VoxelCoefficients<f64>;
pub type Coefficients32 = discretization::VoxelCoefficients<f32>;
pub type Solution = pde::PdeSolution<f64>;
pub type Solution32 = pde::PdeSolution<f32>;
