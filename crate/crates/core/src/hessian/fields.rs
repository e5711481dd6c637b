use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::potential::nested_central_difference;

type ComponentsFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
type JacobianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type SecondFn = dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync;

/// Vector field `E = Σ E^m(x) ∂_m` in flat coordinates, with its first and
/// second partials (`jacobian[(m, j)] = ∂_j E^m`, `second[m][(i, j)] = ∂_i ∂_j E^m`).
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    components: Arc<ComponentsFn>,
    jacobian: Arc<JacobianFn>,
    second: Arc<SecondFn>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField").field("dim", &self.dim).finish()
    }
}

impl VectorField {
    pub fn new(
        dim: usize,
        components: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        second: impl Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        VectorField {
            dim,
            components: Arc::new(components),
            jacobian: Arc::new(jacobian),
            second: Arc::new(second),
        }
    }

    /// `E^m = a^m_j x^j + b^m`.
    pub fn affine(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        let n = b.len();
        assert_eq!(a.shape(), (n, n));
        let a2 = a.clone();
        VectorField::new(
            n,
            move |x| &a * DVector::from_column_slice(x) + &b,
            move |_| a2.clone(),
            move |_| vec![DMatrix::zeros(n, n); n],
        )
    }

    pub fn zero(n: usize) -> Self {
        Self::affine(DMatrix::zeros(n, n), DVector::zeros(n))
    }

    /// Dilation field `Σ x^a ∂_a`.
    pub fn radial(n: usize) -> Self {
        Self::affine(DMatrix::identity(n, n), DVector::zeros(n))
    }

    /// Field given only by its components; partials by central differences.
    pub fn from_fn(dim: usize, f: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static) -> Self {
        let f = Arc::new(f);
        let fj = f.clone();
        let fs = f.clone();
        VectorField::new(
            dim,
            move |x| f(x),
            move |x| {
                let mut j = DMatrix::zeros(dim, dim);
                for m in 0..dim {
                    let comp = |y: &[f64]| fj(y)[m];
                    for k in 0..dim {
                        j[(m, k)] = nested_central_difference(&comp, x, &[k], 1e-5);
                    }
                }
                j
            },
            move |x| {
                (0..dim)
                    .map(|m| {
                        let comp = |y: &[f64]| fs(y)[m];
                        let mut h = DMatrix::zeros(dim, dim);
                        for i in 0..dim {
                            for k in i..dim {
                                let v = nested_central_difference(&comp, x, &[i, k], 1e-3);
                                h[(i, k)] = v;
                                h[(k, i)] = v;
                            }
                        }
                        h
                    })
                    .collect()
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self, x: &[f64]) -> DVector<f64> {
        (self.components)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        (self.jacobian)(x)
    }

    pub fn second(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        (self.second)(x)
    }
}
