//! Log-det potentials of the matrix cones and the Lorentz cone, with analytic
//! derivatives up to order four.
//!
//! For `Φ(X) = -μ log det X` and `Y_a = X⁻¹ B_a` (with `B_a` the chart basis),
//! `∂^k Φ [a_1..a_k] = (-1)^k μ Σ_σ Re tr(Y_{a_1} Y_{σ(a_2)} ... Y_{σ(a_k)})`,
//! the sum running over the `(k-1)!` orderings of the last `k-1` indices.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use super::field::{basis_matrix, chart_to_matrix, CMat, GroundField};
use super::point::{ConePoint, REL_EIGEN_FLOOR};
use super::ConeError;
use crate::hessian::{DerivativeMode, Potential, SymTensor2, SymTensor3};

/// `-log det / κ` on the cone of positive definite Hermitian `n × n` matrices over `K`,
/// as a function of chart coordinates.
#[derive(Debug, Clone)]
pub struct ConePotential {
    field: GroundField,
    n: usize,
    basis: Vec<CMat>,
}

fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let m = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

impl ConePotential {
    pub fn new(n: usize, field: GroundField) -> Self {
        let basis = (0..field.chart_dim(n)).map(|a| basis_matrix(field, n, a)).collect();
        ConePotential { field, n, basis }
    }

    pub fn field(&self) -> GroundField {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn inverse_at(&self, x: &[f64]) -> Option<CMat> {
        chart_to_matrix(self.field, self.n, x).try_inverse()
    }

    /// `Y_a = X⁻¹ B_a` for every chart direction.
    fn reduced_directions(&self, x: &[f64]) -> Vec<CMat> {
        let inv = self.inverse_at(x).expect("point inside the cone");
        self.basis.iter().map(|b| &inv * b).collect()
    }

    fn signed_mu(&self, k: usize) -> f64 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * self.field.multiplicity()
    }
}

impl Potential for ConePotential {
    fn dim(&self) -> usize {
        self.field.chart_dim(self.n)
    }

    fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        ConePoint::from_chart(self.field, self.n, x.to_vec()).is_ok()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let m = chart_to_matrix(self.field, self.n, x);
        match Cholesky::new(m) {
            Some(ch) => {
                let l = ch.l();
                let logdet: f64 = (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
                -self.field.multiplicity() * logdet
            }
            None => f64::NAN,
        }
    }

    fn partial(&self, x: &[f64], index: &[usize]) -> f64 {
        let k = index.len();
        if k == 0 {
            return self.value(x);
        }
        let inv = self.inverse_at(x).expect("point inside the cone");
        let ys: Vec<CMat> = index.iter().map(|&a| &inv * &self.basis[a]).collect();
        let mut total = Complex64::new(0.0, 0.0);
        let rest: Vec<usize> = (1..k).collect();
        for perm in permutations(&rest) {
            let mut prod = ys[0].clone();
            for &p in &perm {
                prod = &prod * &ys[p];
            }
            total += prod.trace();
        }
        self.signed_mu(k) * total.re
    }

    fn mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }

    fn name(&self) -> String {
        format!("log_det_cone(n={}, field={})", self.n, self.field)
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let ys = self.reduced_directions(x);
        let d = ys.len();
        let mu = self.signed_mu(2);
        let mut h = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let v = mu * trace_product(&ys[a], &ys[b]).re;
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        h
    }

    fn third(&self, x: &[f64]) -> SymTensor3 {
        let ys = self.reduced_directions(x);
        let d = ys.len();
        let mu = self.signed_mu(3);
        let mut pairs: Vec<Option<CMat>> = vec![None; d * d];
        for a in 0..d {
            for b in 0..d {
                pairs[a * d + b] = Some(&ys[a] * &ys[b]);
            }
        }
        let z = |a: usize, b: usize| pairs[a * d + b].as_ref().unwrap();
        SymTensor3::from_fn(d, |a, b, c| {
            mu * (trace_product(z(a, b), &ys[c]) + trace_product(z(a, c), &ys[b])).re
        })
    }

    fn fourth(&self, x: &[f64]) -> Vec<f64> {
        let ys = self.reduced_directions(x);
        let d = ys.len();
        let mu = self.signed_mu(4);
        let pairs: Vec<CMat> = (0..d * d).map(|ab| &ys[ab / d] * &ys[ab % d]).collect();
        let z = |a: usize, b: usize| &pairs[a * d + b];
        let mut out = vec![0.0; d * d * d * d];
        for a in 0..d {
            for b in a..d {
                for c in b..d {
                    for e in c..d {
                        let t = trace_product(z(a, b), z(c, e))
                            + trace_product(z(a, b), z(e, c))
                            + trace_product(z(a, c), z(b, e))
                            + trace_product(z(a, c), z(e, b))
                            + trace_product(z(a, e), z(b, c))
                            + trace_product(z(a, e), z(c, b));
                        let v = mu * t.re;
                        for p in crate::hessian::permutations4([a, b, c, e]) {
                            out[((p[0] * d + p[1]) * d + p[2]) * d + p[3]] = v;
                        }
                    }
                }
            }
        }
        out
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// The cone potential restricted to the real diagonal (chart coordinates `0..n`).
#[derive(Debug, Clone)]
pub struct DiagonalConePotential {
    inner: ConePotential,
}

impl DiagonalConePotential {
    pub fn new(n: usize, field: GroundField) -> Self {
        DiagonalConePotential {
            inner: ConePotential::new(n, field),
        }
    }

    fn lift(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.inner.dim()];
        full[..x.len()].copy_from_slice(x);
        full
    }
}

impl Potential for DiagonalConePotential {
    fn dim(&self) -> usize {
        self.inner.n
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && {
            let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            x.iter().all(|&v| v > REL_EIGEN_FLOOR * hi && v > 0.0)
        }
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.lift(x))
    }
    fn partial(&self, x: &[f64], index: &[usize]) -> f64 {
        self.inner.partial(&self.lift(x), index)
    }
    fn mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
    fn name(&self) -> String {
        format!("diagonal_cone(n={}, field={})", self.inner.n, self.inner.field)
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        self.inner.hessian(&self.lift(x)).view((0, 0), (n, n)).into_owned()
    }
    fn third(&self, x: &[f64]) -> SymTensor3 {
        let n = self.dim();
        let coords: Vec<usize> = (0..n).collect();
        self.inner.third(&self.lift(x)).restrict(&coords)
    }
}

/// `Φ(X) = -log det / κ`.
pub fn cone_potential(x: &ConePoint) -> f64 {
    -x.realification_det().ln() / x.field().kappa()
}

/// Hessian metric `g(U, V) = μ Re tr(X⁻¹ U X⁻¹ V)` in chart coordinates.
pub fn cone_metric(x: &ConePoint) -> SymTensor2 {
    let p = ConePotential::new(x.n(), x.field());
    SymTensor2::new(p.hessian(x.coords()))
}

/// `A(U, V, W) = -μ Re (tr(X⁻¹WX⁻¹UX⁻¹V) + tr(X⁻¹UX⁻¹WX⁻¹V))` in chart coordinates.
pub fn cone_amplitude(x: &ConePoint) -> SymTensor3 {
    let p = ConePotential::new(x.n(), x.field());
    p.third(x.coords())
}

/// A point `(x_0, x)` of the Lorentz cone `x_0 > |x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPoint {
    x0: f64,
    x: Vec<f64>,
}

impl LorentzPoint {
    pub fn new(x0: f64, x: Vec<f64>) -> Result<Self, ConeError> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(x0 > r) {
            return Err(ConeError::NotInCone {
                min_eigenvalue: x0 - r,
            });
        }
        Ok(LorentzPoint { x0, x })
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + 1);
        v.push(self.x0);
        v.extend_from_slice(&self.x);
        v
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// `Φ = -log(x_0² - Σ x_i²)` on `R^{n+1}`.
#[derive(Debug, Clone)]
pub struct LorentzPotential {
    n: usize,
}

impl LorentzPotential {
    pub fn new(n: usize) -> Self {
        LorentzPotential { n }
    }

    fn form(x: &[f64]) -> f64 {
        x[0] * x[0] - x[1..].iter().map(|v| v * v).sum::<f64>()
    }
}

impl Potential for LorentzPotential {
    fn dim(&self) -> usize {
        self.n + 1
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && x[0] > 0.0 && Self::form(x) > 0.0
    }
    fn value(&self, x: &[f64]) -> f64 {
        -Self::form(x).ln()
    }
    fn partial(&self, x: &[f64], index: &[usize]) -> f64 {
        let q = Self::form(x);
        let sign = |i: usize| if i == 0 { 1.0 } else { -1.0 };
        let d1 = |i: usize| 2.0 * sign(i) * x[i];
        let d2 = |i: usize, j: usize| if i == j { 2.0 * sign(i) } else { 0.0 };
        // derivatives of log Q, negated at the end
        let log_q = match *index {
            [] => q.ln(),
            [i] => d1(i) / q,
            [i, j] => d2(i, j) / q - d1(i) * d1(j) / (q * q),
            [i, j, k] => {
                -(d2(i, j) * d1(k) + d2(i, k) * d1(j) + d2(j, k) * d1(i)) / (q * q)
                    + 2.0 * d1(i) * d1(j) * d1(k) / q.powi(3)
            }
            [i, j, k, l] => {
                -(d2(i, j) * d2(k, l) + d2(i, k) * d2(j, l) + d2(i, l) * d2(j, k)) / (q * q)
                    + 2.0
                        * (d2(i, j) * d1(k) * d1(l)
                            + d2(i, k) * d1(j) * d1(l)
                            + d2(i, l) * d1(j) * d1(k)
                            + d2(j, k) * d1(i) * d1(l)
                            + d2(j, l) * d1(i) * d1(k)
                            + d2(k, l) * d1(i) * d1(j))
                        / q.powi(3)
                    - 6.0 * d1(i) * d1(j) * d1(k) * d1(l) / q.powi(4)
            }
            _ => panic!("derivatives above order 4 are not available"),
        };
        -log_q
    }
    fn mode(&self) -> DerivativeMode {
        DerivativeMode::Analytic
    }
    fn name(&self) -> String {
        format!("lorentz(n={})", self.n)
    }
}

/// `Φ = -log(x_0² - Σ x_i²)`.
pub fn lorentz_potential(p: &LorentzPoint) -> f64 {
    LorentzPotential::new(p.n()).value(&p.coords())
}

pub fn lorentz_metric(p: &LorentzPoint) -> SymTensor2 {
    SymTensor2::new(LorentzPotential::new(p.n()).hessian(&p.coords()))
}

pub fn lorentz_amplitude(p: &LorentzPoint) -> SymTensor3 {
    LorentzPotential::new(p.n()).third(&p.coords())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hessian::richardson_central_difference;

    #[test]
    fn lorentz_partials_match_differences() {
        let p = LorentzPotential::new(2);
        let x = [2.0, 0.3, -0.5];
        let f = |y: &[f64]| p.value(y);
        for idx in [&[0usize][..], &[1, 2], &[0, 0, 1], &[0, 1, 2], &[2, 2, 2]] {
            let fd = richardson_central_difference(&f, &x, idx, 1e-3);
            let an = p.partial(&x, idx);
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{idx:?}: {fd} vs {an}");
        }
        // fourth order by differencing the analytic third order
        for idx in [[0usize, 0, 1, 2], [1, 1, 2, 2], [0, 0, 0, 0]] {
            let g = |y: &[f64]| p.partial(y, &idx[1..]);
            let fd = richardson_central_difference(&g, &x, &idx[..1], 1e-3);
            let an = p.partial(&x, &idx);
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{idx:?}: {fd} vs {an}");
        }
    }

    #[test]
    fn batch_derivatives_match_single_partials() {
        for field in GroundField::ALL {
            let p = ConePotential::new(2, field);
            let mut x = vec![0.0; p.dim()];
            x[0] = 2.0;
            x[1] = 1.5;
            for (a, v) in x.iter_mut().enumerate().skip(2) {
                *v = 0.1 * a as f64 - 0.25;
            }
            let h = p.hessian(&x);
            let t = p.third(&x);
            let f = p.fourth(&x);
            let d = p.dim();
            for a in 0..d {
                for b in 0..d {
                    assert!((h[(a, b)] - p.partial(&x, &[a, b])).abs() < 1e-12);
                    for c in 0..d {
                        assert!((t.get(a, b, c) - p.partial(&x, &[a, b, c])).abs() < 1e-12);
                        let e = (a + b + c) % d;
                        let four = f[((a * d + b) * d + c) * d + e];
                        assert!((four - p.partial(&x, &[a, b, c, e])).abs() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_counts() {
        assert_eq!(permutations(&[1, 2, 3]).len(), 6);
        assert_eq!(permutations(&[]).len(), 1);
    }
}
