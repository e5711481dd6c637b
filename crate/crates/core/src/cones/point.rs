use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{chart_to_matrix, matrix_to_chart, realify_complex, CMat, GroundField};
use super::ConeError;

/// Relative eigenvalue floor for cone membership: `λ_min > REL_EIGEN_FLOOR * λ_max`.
pub const REL_EIGEN_FLOOR: f64 = 1e-10;

/// A positive definite Hermitian matrix over `K`, held in chart coordinates
/// together with its complex representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConePoint {
    field: GroundField,
    n: usize,
    coords: Vec<f64>,
    matrix: CMat,
}

/// A Hermitian matrix over `K` viewed as a tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    field: GroundField,
    n: usize,
    coords: Vec<f64>,
    matrix: CMat,
}

/// Eigen-decomposition of a Hermitian complex matrix.
pub(crate) fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `V diag(f(λ)) V*` for a Hermitian matrix.
pub(crate) fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let d = CMat::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| Complex64::new(f(v), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

fn check_in_cone(m: &CMat) -> Result<(), ConeError> {
    let (vals, _) = hermitian_eigen(m);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) || lo <= REL_EIGEN_FLOOR * hi || !lo.is_finite() {
        return Err(ConeError::NotInCone { min_eigenvalue: lo });
    }
    Ok(())
}

impl ConePoint {
    pub fn from_chart(field: GroundField, n: usize, coords: Vec<f64>) -> Result<Self, ConeError> {
        if coords.len() != field.chart_dim(n) {
            return Err(ConeError::ShapeMismatch(format!(
                "expected {} chart coordinates, got {}",
                field.chart_dim(n),
                coords.len()
            )));
        }
        let matrix = chart_to_matrix(field, n, &coords);
        check_in_cone(&matrix)?;
        Ok(ConePoint {
            field,
            n,
            coords,
            matrix,
        })
    }

    /// From an embedded Hermitian matrix (see [`super::field`]).
    pub fn from_matrix(field: GroundField, n: usize, m: &CMat) -> Result<Self, ConeError> {
        let size = field.embedded_size(n);
        if m.shape() != (size, size) {
            return Err(ConeError::ShapeMismatch(format!("expected {size}x{size} matrix")));
        }
        Self::from_chart(field, n, matrix_to_chart(field, n, m))
    }

    pub fn identity(field: GroundField, n: usize) -> Self {
        let mut coords = vec![0.0; field.chart_dim(n)];
        coords[..n].iter_mut().for_each(|v| *v = 1.0);
        Self::from_chart(field, n, coords).expect("identity is in the cone")
    }

    pub fn diagonal(field: GroundField, diag: &[f64]) -> Result<Self, ConeError> {
        let n = diag.len();
        let mut coords = vec![0.0; field.chart_dim(n)];
        coords[..n].copy_from_slice(diag);
        Self::from_chart(field, n, coords)
    }

    pub fn field(&self) -> GroundField {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Complex representation (the `2n × 2n` embedding for `H`).
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Real matrix whose determinant defines the potential before dividing by `κ`:
    /// the matrix itself for `R`, its real `2n × 2n` form for `C`, and the complex
    /// embedding (whose determinant is real and positive) for `H`.
    pub fn realification_det(&self) -> f64 {
        match self.field {
            GroundField::R => self.matrix.map(|z| z.re).determinant(),
            GroundField::C => realify_complex(&self.matrix).determinant(),
            GroundField::H => self.matrix.determinant().re,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }
}

impl TangentVector {
    pub fn from_chart(field: GroundField, n: usize, coords: Vec<f64>) -> Result<Self, ConeError> {
        if coords.len() != field.chart_dim(n) {
            return Err(ConeError::ShapeMismatch(format!(
                "expected {} chart coordinates, got {}",
                field.chart_dim(n),
                coords.len()
            )));
        }
        let matrix = chart_to_matrix(field, n, &coords);
        Ok(TangentVector {
            field,
            n,
            coords,
            matrix,
        })
    }

    /// From an embedded matrix; only its Hermitian part is kept.
    pub fn from_matrix(field: GroundField, n: usize, m: &CMat) -> Self {
        Self::from_chart(field, n, matrix_to_chart(field, n, m)).expect("shape checked by chart")
    }

    /// Chart basis direction `a`.
    pub fn basis(field: GroundField, n: usize, a: usize) -> Self {
        let mut coords = vec![0.0; field.chart_dim(n)];
        coords[a] = 1.0;
        Self::from_chart(field, n, coords).expect("valid basis index")
    }

    pub fn field(&self) -> GroundField {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coords)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        Self::from_chart(self.field, self.n, self.coords.iter().map(|v| v * s).collect())
            .expect("same shape")
    }

    pub(crate) fn same_shape(&self, other: &TangentVector) -> Result<(), ConeError> {
        if self.field != other.field || self.n != other.n {
            return Err(ConeError::ShapeMismatch(format!(
                "{}({}) vs {}({})",
                self.field, self.n, other.field, other.n
            )));
        }
        Ok(())
    }
}

/// JSON form of a cone point: `{"field": "C", "n": 2, "entries": [[re, im], ...]}`
/// with `n²` row-major entries; `R` accepts `[re]` or `[re, 0]`, `H` uses `[a, b, c, d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePointJson {
    pub field: GroundField,
    pub n: usize,
    pub entries: Vec<Vec<f64>>,
}

impl ConePointJson {
    pub fn from_point(p: &ConePoint) -> Self {
        let n = p.n;
        let m = p.matrix();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(match p.field {
                    GroundField::R => vec![m[(i, j)].re],
                    GroundField::C => vec![m[(i, j)].re, m[(i, j)].im],
                    GroundField::H => {
                        let x = m[(i, j)];
                        let y = m[(i + n, j)];
                        vec![x.re, x.im, y.re, -y.im]
                    }
                });
            }
        }
        ConePointJson {
            field: p.field,
            n,
            entries,
        }
    }

    pub fn to_point(&self) -> Result<ConePoint, ConeError> {
        let n = self.n;
        if self.entries.len() != n * n {
            return Err(ConeError::ShapeMismatch(format!("expected {} entries", n * n)));
        }
        let width = self.field.real_dim();
        let mut quat = Vec::with_capacity(n * n);
        for e in &self.entries {
            let mut q = [0.0; 4];
            match (self.field, e.len()) {
                (GroundField::R, 1) => q[0] = e[0],
                (GroundField::R, 2) if e[1] == 0.0 => q[0] = e[0],
                (f, l) if l == f.real_dim() => q[..width].copy_from_slice(e),
                _ => {
                    return Err(ConeError::ShapeMismatch(format!(
                        "entry of length {} for field {}",
                        e.len(),
                        self.field
                    )))
                }
            }
            quat.push(q);
        }
        // Hermitian check on the stated entries.
        for i in 0..n {
            for j in 0..n {
                let a = quat[i * n + j];
                let b = quat[j * n + i];
                let conj = [b[0], -b[1], -b[2], -b[3]];
                if a.iter().zip(&conj).any(|(x, y)| (x - y).abs() > 0.0) {
                    return Err(ConeError::NotHermitian);
                }
            }
        }
        let mut coords = Vec::with_capacity(self.field.chart_dim(n));
        for i in 0..n {
            coords.push(quat[i * n + i][0]);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                coords.extend_from_slice(&quat[i * n + j][..width]);
            }
        }
        ConePoint::from_chart(self.field, n, coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indefinite_matrix_is_rejected() {
        let err = ConePoint::from_chart(GroundField::R, 2, vec![1.0, 1.0, 2.0]).unwrap_err();
        assert!(matches!(err, ConeError::NotInCone { .. }));
    }

    #[test]
    fn json_round_trip() {
        let p = ConePoint::from_chart(GroundField::H, 2, vec![2.0, 3.0, 0.1, -0.2, 0.3, 0.4]).unwrap();
        let j = ConePointJson::from_point(&p);
        let text = serde_json::to_string(&j).unwrap();
        let back: ConePointJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_point().unwrap(), p);
    }

    #[test]
    fn non_hermitian_json_is_rejected() {
        let j = ConePointJson {
            field: GroundField::C,
            n: 2,
            entries: vec![vec![2.0, 0.0], vec![0.1, 0.2], vec![0.1, 0.2], vec![2.0, 0.0]],
        };
        assert_eq!(j.to_point().unwrap_err(), ConeError::NotHermitian);
    }
}
