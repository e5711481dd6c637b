//! Hessian geometry of a potential: metric, amplitude tensor, Frobenius
//! product, curvature, and the residuals that detect Frobenius structure.
//!
//! Two Christoffel-like objects appear and are kept apart on purpose:
//! the Levi-Civita symbols `Γ^i_jk = ½ Σ_l A_jkl g^li` drive
//! [`curvature_direct`], while the structure constants
//! `C^c_ab = Σ_e A_abe g^ec` (no ½) drive the product, [`wdvv_residual`]
//! and [`curvature_from_a`]. With these conventions
//! `curvature_direct = HESSIAN_CURVATURE_SCALE * curvature_from_a`
//! entry by entry.

mod families;
mod fields;
mod potential;
mod residuals;
mod tensor;

use thiserror::Error;

pub use families::{builtin_potentials, PotentialSpec};
pub use fields::VectorField;
pub use potential::{
    nested_central_difference, richardson_central_difference, AnalyticPotential, DerivativeMode,
    FiniteDifferencePotential, Potential, DEFAULT_FD_STEP,
};
pub use residuals::{
    affine_field_check, christoffel, codazzi_dual_residual, codazzi_residual, curvature_direct,
    curvature_from_a, euler_conformal_residual, eval_amplitude, eval_metric, fit_euler_beta,
    frobenius_pairing_residual, structure_constants, wdvv_residual, CodazziOrder,
    HESSIAN_CURVATURE_SCALE,
};
pub(crate) use potential::permutations4;
pub(crate) use residuals::curvature_operator;
pub use tensor::{MixedTensor12, SymTensor2, SymTensor3, Tensor4, Tensor4Tag, SINGULAR_EIGENVALUE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HessianError {
    #[error("point {0:?} lies outside the potential's domain")]
    Domain(Vec<f64>),
    #[error("metric is singular (min |eigenvalue| = {min_abs_eigenvalue:e})")]
    SingularMetric { min_abs_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid potential spec: {0}")]
    InvalidSpec(String),
}
