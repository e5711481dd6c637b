//! Ground fields, chart conventions, and the complex embedding of quaternionic matrices.
//!
//! Every matrix over `K` is handled through a complex matrix:
//! - `R`, `C`: the `n × n` matrix itself;
//! - `H`: `M = X + jY` is stored as `[[X, -conj(Y)], [Y, conj(X)]]` (`2n × 2n`).
//!
//! Chart coordinates of a Hermitian matrix list the real diagonal first, then
//! for each `i < j` (row-major) the real components of `M_ij`:
//! one for `R`, `(re, im)` for `C`, `(a, b, c, d)` of `a + bi + cj + dk` for `H`.

use nalgebra::{DMatrix, Quaternion};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CMat = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroundField {
    R,
    C,
    H,
}

impl GroundField {
    pub const ALL: [GroundField; 3] = [GroundField::R, GroundField::C, GroundField::H];

    /// Real dimension of `K`.
    pub fn real_dim(self) -> usize {
        match self {
            GroundField::R => 1,
            GroundField::C => 2,
            GroundField::H => 4,
        }
    }

    /// Chart dimension of Hermitian `n × n` matrices over `K`.
    pub fn chart_dim(self, n: usize) -> usize {
        n + self.real_dim() * n * (n - 1) / 2
    }

    /// Size of the complex matrix that represents an `n × n` matrix over `K`.
    pub fn embedded_size(self, n: usize) -> usize {
        match self {
            GroundField::H => 2 * n,
            _ => n,
        }
    }

    /// Normalization `κ` in `Φ = -log det(realification) / κ`.
    pub fn kappa(self) -> f64 {
        match self {
            GroundField::R => 1.0,
            GroundField::C | GroundField::H => 2.0,
        }
    }

    /// Factor turning `log det` / `tr` of the complex representation into the
    /// normalized potential / trace form (each quaternionic eigenvalue appears twice).
    pub fn multiplicity(self) -> f64 {
        match self {
            GroundField::H => 0.5,
            _ => 1.0,
        }
    }

    pub fn parse(tag: &str) -> Option<GroundField> {
        match tag {
            "R" | "r" => Some(GroundField::R),
            "C" | "c" => Some(GroundField::C),
            "H" | "h" => Some(GroundField::H),
            _ => None,
        }
    }
}

impl std::fmt::Display for GroundField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GroundField::R => "R",
            GroundField::C => "C",
            GroundField::H => "H",
        };
        f.write_str(s)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Places a quaternion `a + bi + cj + dk` at `(i, j)` of the complex embedding.
///
/// `q = x + j y` with `x = a + bi`, `y = c - di`.
fn put_quaternion(m: &mut CMat, n: usize, i: usize, j: usize, q: [f64; 4]) {
    let x = c(q[0], q[1]);
    let y = c(q[2], -q[3]);
    m[(i, j)] += x;
    m[(i, j + n)] += -y.conj();
    m[(i + n, j)] += y;
    m[(i + n, j + n)] += x.conj();
}

/// Reads the quaternion at `(i, j)` of an embedded matrix.
fn get_quaternion(m: &CMat, n: usize, i: usize, j: usize) -> [f64; 4] {
    let x = m[(i, j)];
    let y = m[(i + n, j)];
    [x.re, x.im, y.re, -y.im]
}

/// Embedded matrix of the chart basis direction `a`.
pub fn basis_matrix(field: GroundField, n: usize, a: usize) -> CMat {
    let size = field.embedded_size(n);
    let mut m = CMat::zeros(size, size);
    if a < n {
        match field {
            GroundField::H => put_quaternion(&mut m, n, a, a, [1.0, 0.0, 0.0, 0.0]),
            _ => m[(a, a)] = c(1.0, 0.0),
        }
        return m;
    }
    let k = field.real_dim();
    let off = (a - n) / k;
    let comp = (a - n) % k;
    let (i, j) = upper_pair(n, off);
    match field {
        GroundField::R => {
            m[(i, j)] = c(1.0, 0.0);
            m[(j, i)] = c(1.0, 0.0);
        }
        GroundField::C => {
            if comp == 0 {
                m[(i, j)] = c(1.0, 0.0);
                m[(j, i)] = c(1.0, 0.0);
            } else {
                m[(i, j)] = c(0.0, 1.0);
                m[(j, i)] = c(0.0, -1.0);
            }
        }
        GroundField::H => {
            let mut q = [0.0; 4];
            q[comp] = 1.0;
            let mut qbar = [-q[0], -q[1], -q[2], -q[3]];
            qbar[0] = q[0];
            put_quaternion(&mut m, n, i, j, q);
            put_quaternion(&mut m, n, j, i, qbar);
        }
    }
    m
}

/// `(i, j)` with `i < j` for the `off`-th strict upper-triangular slot (row-major).
pub fn upper_pair(n: usize, off: usize) -> (usize, usize) {
    let mut k = off;
    for i in 0..n {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    panic!("upper-triangular offset {off} out of range for n = {n}");
}

/// Embedded Hermitian matrix with the given chart coordinates.
pub fn chart_to_matrix(field: GroundField, n: usize, coords: &[f64]) -> CMat {
    assert_eq!(coords.len(), field.chart_dim(n), "chart dimension");
    let size = field.embedded_size(n);
    let mut m = CMat::zeros(size, size);
    for (a, &v) in coords.iter().enumerate() {
        if v != 0.0 {
            m += basis_matrix(field, n, a) * c(v, 0.0);
        }
    }
    m
}

/// Chart coordinates of an embedded Hermitian matrix (the Hermitian part is read).
pub fn matrix_to_chart(field: GroundField, n: usize, m: &CMat) -> Vec<f64> {
    let mut out = Vec::with_capacity(field.chart_dim(n));
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            match field {
                GroundField::R => out.push(m[(i, j)].re),
                GroundField::C => {
                    out.push(m[(i, j)].re);
                    out.push(m[(i, j)].im);
                }
                GroundField::H => out.extend_from_slice(&get_quaternion(m, n, i, j)),
            }
        }
    }
    out
}

/// Quaternionic `n × n` matrix with entries stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionMatrix {
    pub n: usize,
    pub entries: Vec<Quaternion<f64>>,
}

impl QuaternionMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Quaternion<f64>) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        QuaternionMatrix { n, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> Quaternion<f64> {
        self.entries[i * self.n + j]
    }

    pub fn mul(&self, other: &QuaternionMatrix) -> QuaternionMatrix {
        let n = self.n;
        QuaternionMatrix::from_fn(n, |i, j| {
            (0..n).fold(Quaternion::new(0.0, 0.0, 0.0, 0.0), |acc, k| {
                acc + self.get(i, k) * other.get(k, j)
            })
        })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> QuaternionMatrix {
        QuaternionMatrix::from_fn(self.n, |i, j| self.get(j, i).conjugate())
    }

    /// Complex `2n × 2n` embedding `[[X, -conj(Y)], [Y, conj(X)]]`.
    pub fn embed(&self) -> CMat {
        let n = self.n;
        let mut m = CMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let q = self.get(i, j);
                put_quaternion(&mut m, n, i, j, [q.w, q.i, q.j, q.k]);
            }
        }
        m
    }
}

/// Real `2m × 2m` form `[[A, -B], [B, A]]` of a complex matrix `A + iB`.
pub fn realify_complex(m: &CMat) -> DMatrix<f64> {
    let k = m.nrows();
    DMatrix::from_fn(2 * k, 2 * k, |r, s| {
        let z = m[(r % k, s % k)];
        match (r < k, s < k) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_round_trip_is_exact() {
        for field in GroundField::ALL {
            for n in 1..=4 {
                let dim = field.chart_dim(n);
                let coords: Vec<f64> = (0..dim).map(|a| 0.25 * a as f64 - 1.5).collect();
                let m = chart_to_matrix(field, n, &coords);
                assert_eq!(matrix_to_chart(field, n, &m), coords, "{field} n={n}");
                assert_eq!(m.adjoint(), m);
            }
        }
    }

    #[test]
    fn chart_dimensions() {
        assert_eq!(GroundField::R.chart_dim(3), 6);
        assert_eq!(GroundField::C.chart_dim(3), 9);
        assert_eq!(GroundField::H.chart_dim(3), 15);
    }

    #[test]
    fn upper_pairs_enumerate_row_major() {
        let pairs: Vec<_> = (0..6).map(|k| upper_pair(4, k)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }
}
