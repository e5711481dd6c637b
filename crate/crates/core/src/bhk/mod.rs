//! Exact arithmetic for invertible quasi-homogeneous potentials: weights,
//! Calabi–Yau condition, atomic types, transpose mirror and diagonal symmetries.

mod atoms;
mod group;
mod linalg;
mod poly;
mod report;
mod weights;

use thiserror::Error;

pub use atoms::{classify_atomic, Atom, AtomKind};
pub use group::{
    aut_group, dual_group, enumerate_subgroups, in_aut, j_element, parse_generators, sl_check, DiagonalGroup,
    PhaseVector,
};
pub use linalg::{determinant, smith_diagonal, to_big, IntMatrix};
pub use poly::InvertiblePolynomial;
pub use report::{analyze, dual_report, AnalyzeReport, AtomReport, DualReport};
pub use weights::{calabi_yau_check, fermat_completion_scan, weights, weights_strict, WeightSystem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BhkError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("charge q{} = {value} is not positive", index + 1)]
    NonPositiveWeight { index: usize, value: String },
    #[error("not a sum of atomic potentials: {0}")]
    NotDecomposable(String),
    #[error("not a group element: {0}")]
    NotGroupElement(String),
    #[error("not a subgroup of the symmetry group: {0}")]
    NotSubgroup(String),
    #[error("size limit exceeded: {0}")]
    Overflow(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}
