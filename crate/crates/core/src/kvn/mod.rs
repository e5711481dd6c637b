//! Koopman–von Neumann wave fields on a 2-D phase space, Liouville transport along
//! Hamiltonian characteristics, and the density projection of invertible
//! hypersurfaces feeding a mirror transport demo.

mod evolve;
mod fibration;
mod field;
mod hamiltonian;
mod mirror;

use thiserror::Error;

use crate::bhk::BhkError;
use crate::transport::TransportError;

pub use evolve::{
    evolve_density, liouville_evolve, projection_commutation, unitarity_check, Propagator, EvolutionMethod, Evolution, EvolveOptions,
    UnitarityReport, UnitaritySample,
};
pub use fibration::{
    evaluate, fibration_sample, line_restriction, polynomial_roots, sample_point, sample_rng, weighted_normalize,
    FiberPoint, SampleOptions,
};
pub use field::{density_projection, fiber_equivalent, phase_grid, symmetric_phase_grid, torus_act, WaveField};
pub use hamiltonian::{ClosedForm, Hamiltonian};
pub use mirror::{density_histogram, density_space_grid, mirror_transport_demo, MirrorOptions, MirrorReport, PathPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KvnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no root found on {attempts} random lines")]
    RootFindFailure { attempts: usize },
    #[error("charge q{} is not positive", index + 1)]
    NonPositiveWeight { index: usize },
    #[error(transparent)]
    Bhk(#[from] BhkError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}
