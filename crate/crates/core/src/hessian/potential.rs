//! Scalar potentials on an open coordinate domain.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::tensor::SymTensor3;
use super::HessianError;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// How partial derivatives are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { step: f64 },
}

/// A scalar field with partial derivatives up to order four.
///
/// `partial(x, idx)` returns `∂^{|idx|} Φ / ∂x^{idx[0]} ... ∂x^{idx[k-1]}`.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn contains(&self, x: &[f64]) -> bool;

    fn value(&self, x: &[f64]) -> f64;

    fn partial(&self, x: &[f64], index: &[usize]) -> f64;

    fn mode(&self) -> DerivativeMode;

    fn name(&self) -> String {
        "potential".to_string()
    }

    /// Hessian matrix. Implementations with shared sub-expressions override this.
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.partial(x, &[i, j]);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }

    fn third(&self, x: &[f64]) -> SymTensor3 {
        SymTensor3::from_fn(self.dim(), |i, j, k| self.partial(x, &[i, j, k]))
    }

    /// Fully symmetric fourth derivative, dense row-major `n^4`.
    fn fourth(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    for d in c..n {
                        let v = self.partial(x, &[a, b, c, d]);
                        for p in permutations4([a, b, c, d]) {
                            out[((p[0] * n + p[1]) * n + p[2]) * n + p[3]] = v;
                        }
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn permutations4(v: [usize; 4]) -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for i in 0..4 {
        for j in 0..4 {
            if j == i {
                continue;
            }
            for k in 0..4 {
                if k == i || k == j {
                    continue;
                }
                let l = 6 - i - j - k;
                out.push([v[i], v[j], v[k], v[l]]);
            }
        }
    }
    out
}

pub(crate) fn check_point(p: &dyn Potential, x: &[f64]) -> Result<(), HessianError> {
    if x.len() != p.dim() {
        return Err(HessianError::DimensionMismatch {
            expected: p.dim(),
            got: x.len(),
        });
    }
    if !p.contains(x) {
        return Err(HessianError::Domain(x.to_vec()));
    }
    Ok(())
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type PartialFn = dyn Fn(&[f64], &[usize]) -> f64 + Send + Sync;
type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// Potential given by closures for the value and every partial derivative.
#[derive(Clone)]
pub struct AnalyticPotential {
    name: String,
    dim: usize,
    value: Arc<ValueFn>,
    partial: Arc<PartialFn>,
    domain: Arc<DomainFn>,
}

impl AnalyticPotential {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        partial: impl Fn(&[f64], &[usize]) -> f64 + Send + Sync + 'static,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        AnalyticPotential {
            name: name.into(),
            dim,
            value: Arc::new(value),
            partial: Arc::new(partial),
            domain: Arc::new(domain),
        }
    }
}

impl fmt::Debug for AnalyticPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticPotential")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl Potential for AnalyticPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, x: &[f64]) -> bool {
        (self.domain)(x)
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn partial(&self, x: &[f64], index: &[usize]) -> f64 {
        if index.is_empty() {
            return (self.value)(x);
        }
        (self.partial)(x, index)
    }
    fn mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Potential known only through its values; derivatives come from nested
/// central differences with one Richardson extrapolation step.
#[derive(Clone)]
pub struct FiniteDifferencePotential {
    name: String,
    dim: usize,
    step: f64,
    value: Arc<ValueFn>,
    domain: Arc<DomainFn>,
}

impl fmt::Debug for FiniteDifferencePotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteDifferencePotential")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("step", &self.step)
            .finish()
    }
}

impl FiniteDifferencePotential {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        step: f64,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        assert!(step > 0.0, "finite-difference step must be positive");
        FiniteDifferencePotential {
            name: name.into(),
            dim,
            step,
            value: Arc::new(value),
            domain: Arc::new(domain),
        }
    }

    /// Finite-difference view of any potential's value function.
    pub fn wrap(p: Arc<dyn Potential>, step: f64) -> Self {
        let name = format!("fd({})", p.name());
        let dim = p.dim();
        let pv = p.clone();
        Self::new(name, dim, step, move |x| pv.value(x), move |x| p.contains(x))
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

/// Nested central differences `D_{i0} D_{i1} ... f(x)` at step `h`.
///
/// The index is sorted first so the stencil (and its summation order) is
/// independent of how the multi-index was written.
pub fn nested_central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], index: &[usize], h: f64) -> f64 {
    let mut idx = index.to_vec();
    idx.sort_unstable();
    let k = idx.len();
    let mut y = x.to_vec();
    let mut acc = 0.0;
    for mask in 0..(1usize << k) {
        y.copy_from_slice(x);
        let mut sign = 1.0;
        for (bit, &i) in idx.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                y[i] -= h;
                sign = -sign;
            } else {
                y[i] += h;
            }
        }
        acc += sign * f(&y);
    }
    acc / (2.0 * h).powi(k as i32)
}

/// Central difference with one Richardson step: `(4 D(h/2) - D(h)) / 3`.
pub fn richardson_central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], index: &[usize], h: f64) -> f64 {
    let coarse = nested_central_difference(f, x, index, h);
    let fine = nested_central_difference(f, x, index, 0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

impl Potential for FiniteDifferencePotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, x: &[f64]) -> bool {
        (self.domain)(x)
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn partial(&self, x: &[f64], index: &[usize]) -> f64 {
        if index.is_empty() {
            return (self.value)(x);
        }
        let f = |y: &[f64]| (self.value)(y);
        richardson_central_difference(&f, x, index, self.step)
    }
    fn mode(&self) -> DerivativeMode {
        DerivativeMode::FiniteDifference { step: self.step }
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_differences_of_a_cubic_are_exact_up_to_roundoff() {
        let f = |x: &[f64]| x[0] * x[0] * x[1] + 2.0 * x[1].powi(3);
        let x = [0.3, -0.7];
        assert!((richardson_central_difference(&f, &x, &[0, 0, 1], 1e-2) - 2.0).abs() < 1e-8);
        assert!((richardson_central_difference(&f, &x, &[1, 1, 1], 1e-2) - 12.0).abs() < 1e-8);
        assert!((richardson_central_difference(&f, &x, &[0, 1], 1e-3) - 2.0 * x[0]).abs() < 1e-8);
    }

    #[test]
    fn fd_partials_are_symmetric_in_the_index() {
        let p = FiniteDifferencePotential::new(
            "t",
            3,
            1e-3,
            |x| (x[0] * x[1]).exp() + x[2].sin() * x[0],
            |_| true,
        );
        let x = [0.1, 0.2, 0.3];
        assert_eq!(p.partial(&x, &[0, 1, 2]), p.partial(&x, &[2, 0, 1]));
    }

    #[test]
    fn permutations_cover_all_orders() {
        let mut p = permutations4([0, 1, 2, 3]);
        p.sort();
        p.dedup();
        assert_eq!(p.len(), 24);
    }
}
