//! Monge–Ampère Dirichlet solver and discrete quadratic-cost transport between
//! densities on planar grids.

mod banded;
mod brenier;
mod config;
mod density;
mod grid;
mod lp;
mod ma;
mod plan;
mod sinkhorn;

use thiserror::Error;

pub use brenier::{
    brenier_discrete, brenier_points, displacement_interpolate, grid_epsilon, ma_transport_residual, plan_interpolate,
    pushforward_gradient, pushforward_map, pushforward_plan, BrenierSolution, Method, PointBrenier,
    TransportResidual, DEFAULT_SINKHORN_EPS, LP_MAX_POINTS,
};
pub use config::{config_transport, matching_cost, Matching};
pub use density::{gaussian_pdf, GridDensity};
pub use grid::{Bounds, Grid2D, NodeKind};
pub use lp::{transport_lp, LpSolution};
pub use ma::{ma_residual, ma_solve, ConvexPotentialGrid, MaOptions};
pub use plan::{Coupling, FactoredCoupling, TransportPlan};
pub use sinkhorn::{dense_plan, round_to_marginals, sinkhorn_dense, sinkhorn_grid, SinkhornOptions, SinkhornSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("total masses differ: source {source_total}, target {target_total}")]
    MassMismatch { source_total: f64, target_total: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("right-hand side is not positive at node {node} (value {value})")]
    NonPositiveRhs { node: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("map is undefined at support node {node}")]
    UndefinedOnSupport { node: usize },
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("configurations have different sizes ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },
    #[error("configuration hits the diagonal: {0}")]
    DiagonalViolation(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("{points} support points exceed the exact-solver limit {limit}")]
    ProblemTooLarge { points: usize, limit: usize },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}
