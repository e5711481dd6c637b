//! Numerical certificates for Hessian and Frobenius structures, symmetric cones,
//! Monge–Ampère transport, invertible-polynomial mirror data and phase-space
//! density dynamics.

pub mod bhk;
pub mod cones;
pub mod hessian;
pub mod kvn;
pub mod transport;
