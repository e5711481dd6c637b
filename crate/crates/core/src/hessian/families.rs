//! Built-in potential families, constructible from a declarative JSON spec.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::potential::{AnalyticPotential, FiniteDifferencePotential, Potential, DEFAULT_FD_STEP};
use super::HessianError;
use crate::cones::{ConePotential, DiagonalConePotential, GroundField, LorentzPotential};

/// Declarative description of a potential, e.g.
/// `{"family": "log_det_cone", "n": 2, "field": "R"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `½ |x|²`
    Quadratic { dim: usize },
    /// `-Σ log x_i` on the positive orthant.
    NegLogSum { dim: usize },
    /// `Σ exp(x_i)`
    ExpSum { dim: usize },
    /// `½ |x|² + c x_0² x_1` on `|x| < 1/(8|c|)`; a non-flat local potential.
    CubicPerturbed { dim: usize, c: f64 },
    /// `½ |x|² + w |x|`; not differentiable at the origin.
    Kink { dim: usize, weight: f64 },
    /// `-log det / κ` on the cone of positive definite matrices over `field`.
    LogDetCone { n: usize, field: GroundField },
    /// The cone potential restricted to real diagonal matrices.
    DiagonalCone { n: usize, field: GroundField },
    /// `-log(x_0² - Σ x_i²)` on the Lorentz cone in `R^{n+1}`.
    Lorentz { n: usize },
    /// Any other spec evaluated through nested central differences only.
    FiniteDifference {
        inner: Box<PotentialSpec>,
        #[serde(default = "default_step")]
        step: f64,
    },
}

fn default_step() -> f64 {
    DEFAULT_FD_STEP
}

impl PotentialSpec {
    pub fn from_json(text: &str) -> Result<Self, HessianError> {
        serde_json::from_str(text).map_err(|e| HessianError::InvalidSpec(e.to_string()))
    }

    pub fn build(&self) -> Result<Arc<dyn Potential>, HessianError> {
        let invalid = |msg: &str| Err(HessianError::InvalidSpec(msg.to_string()));
        Ok(match *self {
            PotentialSpec::Quadratic { dim } => {
                if dim == 0 {
                    return invalid("dim must be positive");
                }
                Arc::new(quadratic(dim))
            }
            PotentialSpec::NegLogSum { dim } => {
                if dim == 0 {
                    return invalid("dim must be positive");
                }
                Arc::new(neg_log_sum(dim))
            }
            PotentialSpec::ExpSum { dim } => {
                if dim == 0 {
                    return invalid("dim must be positive");
                }
                Arc::new(exp_sum(dim))
            }
            PotentialSpec::CubicPerturbed { dim, c } => {
                if dim < 2 {
                    return invalid("cubic_perturbed needs dim >= 2");
                }
                Arc::new(cubic_perturbed(dim, c))
            }
            PotentialSpec::Kink { dim, weight } => {
                if dim == 0 {
                    return invalid("dim must be positive");
                }
                Arc::new(kink(dim, weight))
            }
            PotentialSpec::LogDetCone { n, field } => {
                if n == 0 {
                    return invalid("n must be positive");
                }
                Arc::new(ConePotential::new(n, field))
            }
            PotentialSpec::DiagonalCone { n, field } => {
                if n == 0 {
                    return invalid("n must be positive");
                }
                Arc::new(DiagonalConePotential::new(n, field))
            }
            PotentialSpec::Lorentz { n } => {
                if n == 0 {
                    return invalid("n must be positive");
                }
                Arc::new(LorentzPotential::new(n))
            }
            PotentialSpec::FiniteDifference { ref inner, step } => {
                if !(step > 0.0) {
                    return invalid("step must be positive");
                }
                Arc::new(FiniteDifferencePotential::wrap(inner.build()?, step))
            }
        })
    }
}

/// Every built-in family at a small representative size.
pub fn builtin_potentials() -> Vec<PotentialSpec> {
    use GroundField::*;
    vec![
        PotentialSpec::Quadratic { dim: 3 },
        PotentialSpec::NegLogSum { dim: 3 },
        PotentialSpec::ExpSum { dim: 2 },
        PotentialSpec::CubicPerturbed { dim: 2, c: 0.5 },
        PotentialSpec::LogDetCone { n: 2, field: R },
        PotentialSpec::LogDetCone { n: 3, field: R },
        PotentialSpec::LogDetCone { n: 2, field: C },
        PotentialSpec::LogDetCone { n: 2, field: H },
        PotentialSpec::DiagonalCone { n: 3, field: R },
        PotentialSpec::DiagonalCone { n: 2, field: C },
        PotentialSpec::Lorentz { n: 1 },
        PotentialSpec::Lorentz { n: 2 },
    ]
}

fn all_positive(x: &[f64]) -> bool {
    x.iter().all(|&v| v > 0.0 && v.is_finite())
}

fn quadratic(dim: usize) -> AnalyticPotential {
    AnalyticPotential::new(
        "quadratic",
        dim,
        |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
        |x, idx| match idx.len() {
            1 => x[idx[0]],
            2 if idx[0] == idx[1] => 1.0,
            _ => 0.0,
        },
        |x| x.iter().all(|v| v.is_finite()),
    )
}

/// Derivatives of a separable potential `Σ φ(x_i)`: nonzero only on the diagonal.
fn separable(
    name: &str,
    dim: usize,
    phi: fn(f64, usize) -> f64,
    domain: fn(&[f64]) -> bool,
) -> AnalyticPotential {
    AnalyticPotential::new(
        name,
        dim,
        move |x| x.iter().map(|&v| phi(v, 0)).sum(),
        move |x, idx| {
            let i = idx[0];
            if idx.iter().all(|&j| j == i) {
                phi(x[i], idx.len())
            } else {
                0.0
            }
        },
        domain,
    )
}

fn neg_log_sum(dim: usize) -> AnalyticPotential {
    // d^k/dx^k (-log x) = (-1)^k (k-1)! / x^k
    separable(
        "neg_log_sum",
        dim,
        |v, k| match k {
            0 => -v.ln(),
            1 => -1.0 / v,
            2 => 1.0 / (v * v),
            3 => -2.0 / v.powi(3),
            4 => 6.0 / v.powi(4),
            _ => unreachable!("order > 4"),
        },
        all_positive,
    )
}

fn exp_sum(dim: usize) -> AnalyticPotential {
    separable("exp_sum", dim, |v, _| v.exp(), |x| x.iter().all(|v| v.is_finite()))
}

fn cubic_perturbed(dim: usize, c: f64) -> AnalyticPotential {
    let radius = if c == 0.0 { f64::INFINITY } else { 1.0 / (8.0 * c.abs()) };
    AnalyticPotential::new(
        "cubic_perturbed",
        dim,
        move |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>() + c * x[0] * x[0] * x[1],
        move |x, idx| {
            // quadratic part
            let quad = match idx.len() {
                1 => x[idx[0]],
                2 if idx[0] == idx[1] => 1.0,
                _ => 0.0,
            };
            let zeros = idx.iter().filter(|&&i| i == 0).count();
            let ones = idx.iter().filter(|&&i| i == 1).count();
            if zeros + ones != idx.len() {
                return quad;
            }
            // ∂ of x0^2 x1
            let cubic = match (zeros, ones) {
                (1, 0) => 2.0 * x[0] * x[1],
                (0, 1) => x[0] * x[0],
                (2, 0) => 2.0 * x[1],
                (1, 1) => 2.0 * x[0],
                (2, 1) => 2.0,
                _ => 0.0,
            };
            quad + c * cubic
        },
        move |x| x.iter().map(|v| v * v).sum::<f64>().sqrt() < radius,
    )
}

fn kink(dim: usize, weight: f64) -> FiniteDifferencePotential {
    FiniteDifferencePotential::new(
        "kink",
        dim,
        DEFAULT_FD_STEP,
        move |x| {
            let r2 = x.iter().map(|v| v * v).sum::<f64>();
            0.5 * r2 + weight * r2.sqrt()
        },
        |x| x.iter().all(|v| v.is_finite()),
    )
}
