//! Voxel lattice, cell-averaged coefficients and the discrete operators
//! shared by the stochastic and the deterministic scale.

mod coefficients;
mod field;
mod lattice;
mod operators;
mod quadrature;

use thiserror::Error;

pub use coefficients::{cell_average, GhostCoefficient, VoxelCoefficients};
pub use field::ConcField;
pub use lattice::Lattice;
pub use operators::{
    apply_discrete_diffusion, apply_discrete_reaction, assemble_generator, drift, inner_product, norm,
    project_field, project_fields, restrict,
};
pub(crate) use coefficients::box_average;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscretizationError {
    #[error("field has dimension {found}, lattice has dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands live on different lattices or species counts")]
    LatticeMismatch,
    #[error("cannot project a lattice with {from} voxels per axis onto one with {to}")]
    IncompatibleLattices { from: usize, to: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
}
