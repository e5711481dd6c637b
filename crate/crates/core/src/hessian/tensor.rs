//! Dense tensors at a point.
//!
//! Index conventions (also used by the JSON dumps):
//! - [`SymTensor2`]: `g[(i, j)]`, row-major.
//! - [`SymTensor3`]: stored canonically for `i <= j <= k`; `get` accepts any order.
//! - [`MixedTensor12`]: `C^c_ab` stored at flat offset `(c * n + a) * n + b`.
//! - [`Tensor4`]: `T_abcd` stored at flat offset `((a * n + b) * n + c) * n + d`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::HessianError;

/// Smallest admissible |eigenvalue| of a metric before it is declared singular.
pub const SINGULAR_EIGENVALUE: f64 = 1e-12;

/// Symmetric rank-2 covariant tensor with a cached inverse and spectrum.
#[derive(Debug, Clone)]
pub struct SymTensor2 {
    entries: DMatrix<f64>,
    inverse: Option<DMatrix<f64>>,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
}

impl SymTensor2 {
    /// Builds the tensor from a square matrix, symmetrizing it exactly.
    pub fn new(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "metric must be square");
        let n = m.nrows();
        let mut entries = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (entries[(i, j)] + entries[(j, i)]);
                entries[(i, j)] = avg;
                entries[(j, i)] = avg;
            }
        }
        let eigenvalues: Vec<f64> = if n == 0 {
            vec![1.0]
        } else {
            SymmetricEigen::new(entries.clone()).eigenvalues.iter().copied().collect()
        };
        let min_eigenvalue = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max_eigenvalue = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_abs = eigenvalues.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        let inverse = if min_abs >= SINGULAR_EIGENVALUE {
            entries.clone().try_inverse()
        } else {
            None
        };
        SymTensor2 {
            entries,
            inverse,
            min_eigenvalue,
            max_eigenvalue,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Inverse metric `g^ij`.
    pub fn inverse(&self) -> Result<&DMatrix<f64>, HessianError> {
        self.inverse.as_ref().ok_or(HessianError::SingularMetric {
            min_abs_eigenvalue: self.min_abs_eigenvalue(),
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eigenvalue
    }

    fn min_abs_eigenvalue(&self) -> f64 {
        if self.min_eigenvalue <= 0.0 && self.max_eigenvalue >= 0.0 {
            0.0
        } else {
            self.min_eigenvalue.abs().min(self.max_eigenvalue.abs())
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue > 0.0
    }

    pub fn is_singular(&self) -> bool {
        self.inverse.is_none()
    }

    /// `g(u, v)`.
    pub fn pair(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.entries * v))
    }
}

/// Totally symmetric rank-3 tensor stored on the canonical simplex `i <= j <= k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3 {
    n: usize,
    data: Vec<f64>,
}

fn sorted3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let mut v = [i, j, k];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

impl SymTensor3 {
    pub fn zeros(n: usize) -> Self {
        SymTensor3 {
            n,
            data: vec![0.0; n * (n + 1) * (n + 2) / 6],
        }
    }

    /// Fills every canonical entry from `f(i, j, k)` with `i <= j <= k`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let off = t.offset(i, j, k);
                    t.data[off] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        // i <= j <= k; entries with first index < i come first.
        let n = self.n;
        let tet = |m: usize| m * (m + 1) * (m + 2) / 6;
        let before_i = tet(n) - tet(n - i);
        let m = n - i;
        let jj = j - i;
        let before_j = jj * m - jj * (jj.saturating_sub(1)) / 2;
        before_i + before_j + (k - j)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let (a, b, c) = sorted3(i, j, k);
        self.data[self.offset(a, b, c)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let (a, b, c) = sorted3(i, j, k);
        let off = self.offset(a, b, c);
        self.data[off] = v;
    }

    /// Dense `n^3` expansion, row-major in `(i, j, k)`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out[(i * n + j) * n + k] = self.get(i, j, k);
                }
            }
        }
        out
    }

    /// `A(u, v, .)` as a covector.
    pub fn contract2(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += u[i] * v[j] * self.get(i, j, k);
                }
            }
            s
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restriction to a coordinate subset.
    pub fn restrict(&self, coords: &[usize]) -> SymTensor3 {
        SymTensor3::from_fn(coords.len(), |i, j, k| self.get(coords[i], coords[j], coords[k]))
    }
}

/// Structure constants `C^c_ab` (one contravariant, two covariant indices).
#[derive(Debug, Clone)]
pub struct MixedTensor12 {
    n: usize,
    data: Vec<f64>,
}

impl MixedTensor12 {
    pub fn zeros(n: usize) -> Self {
        MixedTensor12 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.data[(c * self.n + a) * self.n + b]
    }

    #[inline]
    pub fn set(&mut self, c: usize, a: usize, b: usize, v: f64) {
        let n = self.n;
        self.data[(c * n + a) * n + b] = v;
    }

    /// Product `u ∘ v` of two tangent vectors.
    pub fn product(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |c, _| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += self.get(c, a, b) * u[a] * v[b];
                }
            }
            s
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tensor4Tag {
    Curvature,
    Residual,
}

/// Dense rank-4 tensor `T_abcd`.
#[derive(Debug, Clone)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
    tag: Tensor4Tag,
}

impl Tensor4 {
    pub fn zeros(n: usize, tag: Tensor4Tag) -> Self {
        Tensor4 {
            n,
            data: vec![0.0; n * n * n * n],
            tag,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn tag(&self) -> Tensor4Tag {
        self.tag
    }

    #[inline]
    fn offset(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.offset(a, b, c, d)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let off = self.offset(a, b, c, d);
        self.data[off] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, s: f64) -> Tensor4 {
        Tensor4 {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
            tag: self.tag,
        }
    }

    /// `max |self - other|`.
    pub fn max_diff(&self, other: &Tensor4) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Full contraction `T(u, v, w, z)`.
    pub fn contract(
        &self,
        u: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
        z: &DVector<f64>,
    ) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for a in 0..n {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if v[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    for d in 0..n {
                        s += self.get(a, b, c, d) * u[a] * v[b] * w[c] * z[d];
                    }
                }
            }
        }
        s
    }

    /// Largest violation of `T_abcd = -T_bacd = -T_abdc = T_cdab`.
    pub fn curvature_symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let t = self.get(a, b, c, d);
                        worst = worst
                            .max((t + self.get(b, a, c, d)).abs())
                            .max((t + self.get(a, b, d, c)).abs())
                            .max((t - self.get(c, d, a, b)).abs());
                    }
                }
            }
        }
        worst
    }
}
