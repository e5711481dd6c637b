//! Symmetric cones `P_n(K)` for `K ∈ {R, C, H}` and the Lorentz cone, with their
//! log-det potentials, Jordan structure and curvature certificates.

mod field;
mod geometry;
mod point;
mod potential;

use thiserror::Error;

use crate::hessian::HessianError;

pub use field::{
    basis_matrix, chart_to_matrix, matrix_to_chart, realify_complex, upper_pair, CMat, GroundField,
    QuaternionMatrix,
};
pub use geometry::{
    curvature_bracket_check, flat_locus_verify, gauss_equation_check, gauss_equation_residual, geodesic,
    jordan_product, lie_triple_check, lie_triple_residual, random_cone_point, random_tangent,
    sectional_curvature, trace_form, BracketFit, FlatLocusReport, GaussReport,
};
pub use point::{ConePoint, ConePointJson, TangentVector, REL_EIGEN_FLOOR};
pub use potential::{
    cone_amplitude, cone_metric, cone_potential, lorentz_amplitude, lorentz_metric, lorentz_potential,
    ConePotential, DiagonalConePotential, LorentzPoint, LorentzPotential,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("matrix is not in the cone (min eigenvalue {min_eigenvalue:e})")]
    NotInCone { min_eigenvalue: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("tangent plane is degenerate (area² = {denominator:e})")]
    DegeneratePlane { denominator: f64 },
    #[error(transparent)]
    Hessian(#[from] HessianError),
}
