//! Geodesics, curvature and Jordan-algebra checks on the matrix cones.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::field::{chart_to_matrix, matrix_to_chart, CMat, GroundField};
use super::point::{hermitian_function, ConePoint, TangentVector};
use super::potential::{ConePotential, DiagonalConePotential};
use super::ConeError;
use crate::hessian::{
    curvature_from_a, curvature_operator, eval_amplitude, eval_metric, wdvv_residual, HessianError, Potential,
    SymTensor2, SymTensor3,
};

fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Random point `H² + ½ I` with `H` a random Hermitian matrix (chart entries in `[-1, 1]`).
pub fn random_cone_point<R: Rng>(field: GroundField, n: usize, rng: &mut R) -> ConePoint {
    let coords: Vec<f64> = (0..field.chart_dim(n)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = chart_to_matrix(field, n, &coords);
    let size = field.embedded_size(n);
    let m = hermitian_part(&(&h * &h + CMat::identity(size, size) * Complex64::new(0.5, 0.0)));
    ConePoint::from_matrix(field, n, &m).expect("H² + I/2 is positive definite")
}

/// Random tangent vector with chart entries in `[-1, 1]`.
pub fn random_tangent<R: Rng>(field: GroundField, n: usize, rng: &mut R) -> TangentVector {
    let coords = (0..field.chart_dim(n)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    TangentVector::from_chart(field, n, coords).expect("chart dimension")
}

fn same_cone(x: &ConePoint, u: &TangentVector) -> Result<(), ConeError> {
    if x.field() != u.field() || x.n() != u.n() {
        return Err(ConeError::ShapeMismatch(format!(
            "point {}({}) vs tangent {}({})",
            x.field(),
            x.n(),
            u.field(),
            u.n()
        )));
    }
    Ok(())
}

/// `X^{1/2} exp(t X^{-1/2} U X^{-1/2}) X^{1/2}`.
pub fn geodesic(x: &ConePoint, u: &TangentVector, t: f64) -> Result<ConePoint, ConeError> {
    same_cone(x, u)?;
    let m = x.matrix();
    let s = hermitian_function(m, f64::sqrt);
    let si = hermitian_function(m, |v| 1.0 / v.sqrt());
    let inner = hermitian_part(&(&si * u.matrix() * &si));
    let e = hermitian_function(&inner, |v| (t * v).exp());
    let out = hermitian_part(&(&s * e * &s));
    ConePoint::from_matrix(x.field(), x.n(), &out)
}

/// Outcome of [`flat_locus_verify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatLocusReport {
    pub n: usize,
    pub field: GroundField,
    pub samples: usize,
    pub seed: u64,
    pub max_wdvv: f64,
    pub max_curvature: f64,
    /// Largest off-diagonal chart entry along geodesics launched tangent to the locus.
    pub max_geodesic_offdiag: f64,
    pub passed: bool,
}

pub const FLAT_LOCUS_TOL: f64 = 1e-8;
pub const GEODESIC_CLOSURE_TOL: f64 = 1e-10;

/// Checks WDVV, flatness and total geodesy of the real-diagonal locus at
/// `samples` random diagonal points.
pub fn flat_locus_verify(n: usize, field: GroundField, samples: usize, seed: u64) -> FlatLocusReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = DiagonalConePotential::new(n, field);
    let (mut max_wdvv, mut max_curvature, mut max_offdiag) = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    for _ in 0..samples {
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
        match eval_metric(&p, &diag).and_then(|g| {
            let a = eval_amplitude(&p, &diag)?;
            Ok((wdvv_residual(&g, &a)?.max_abs(), curvature_from_a(&g, &a)?.max_abs()))
        }) {
            Ok((w, r)) => {
                max_wdvv = max_wdvv.max(w);
                max_curvature = max_curvature.max(r);
            }
            Err(_) => ok = false,
        }
        let x = ConePoint::diagonal(field, &diag).expect("positive diagonal");
        let mut dir = vec![0.0; field.chart_dim(n)];
        dir[..n].iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let u = TangentVector::from_chart(field, n, dir).expect("chart dimension");
        let t = rng.gen_range(-1.0..1.0);
        match geodesic(&x, &u, t) {
            Ok(y) => {
                let off = y.coords()[n..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                max_offdiag = max_offdiag.max(off);
            }
            Err(_) => ok = false,
        }
    }
    FlatLocusReport {
        n,
        field,
        samples,
        seed,
        max_wdvv,
        max_curvature,
        max_geodesic_offdiag: max_offdiag,
        passed: ok
            && max_wdvv < FLAT_LOCUS_TOL
            && max_curvature < FLAT_LOCUS_TOL
            && max_offdiag < GEODESIC_CLOSURE_TOL,
    }
}

fn cone_tensors(x: &ConePoint) -> (SymTensor2, SymTensor3) {
    let p = ConePotential::new(x.n(), x.field());
    (SymTensor2::new(p.hessian(x.coords())), p.third(x.coords()))
}

/// Sectional curvature `g(R(U,V)V, U) / (g(U,U) g(V,V) - g(U,V)²)` of the log-det metric.
pub fn sectional_curvature(x: &ConePoint, u: &TangentVector, v: &TangentVector) -> Result<f64, ConeError> {
    same_cone(x, u)?;
    same_cone(x, v)?;
    let (g, a) = cone_tensors(x);
    let (uv, vv) = (u.vector(), v.vector());
    let denom = g.pair(&uv, &uv) * g.pair(&vv, &vv) - g.pair(&uv, &vv).powi(2);
    if denom < 1e-12 {
        return Err(ConeError::DegeneratePlane { denominator: denom });
    }
    let r = curvature_operator(&g, &a, &uv, &vv, &vv)?;
    Ok(g.pair(&r, &uv) / denom)
}

/// Best fit of `R(U,V)W ≈ c · (-[[U,V],W])` at the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketFit {
    pub c: f64,
    /// Euclidean chart norm of `R(U,V)W - c·(-[[U,V],W])`.
    pub residual: f64,
    /// Chart norm of `[[U,V],W]`.
    pub bracket_norm: f64,
}

fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Compares the metric curvature operator at `I` with the double bracket.
pub fn curvature_bracket_check(
    u: &TangentVector,
    v: &TangentVector,
    w: &TangentVector,
) -> Result<BracketFit, ConeError> {
    u.same_shape(v)?;
    u.same_shape(w)?;
    let (field, n) = (u.field(), u.n());
    let (g, a) = cone_tensors(&ConePoint::identity(field, n));
    let r = curvature_operator(&g, &a, &u.vector(), &v.vector(), &w.vector())?;
    let bracket = commutator(&commutator(u.matrix(), v.matrix()), w.matrix());
    let target = -DVector::from_vec(matrix_to_chart(field, n, &hermitian_part(&bracket)));
    let tt = target.norm_squared();
    let c = if tt > 0.0 { r.dot(&target) / tt } else { 0.0 };
    Ok(BracketFit {
        c,
        residual: (&r - &target * c).norm(),
        bracket_norm: tt.sqrt(),
    })
}

/// Largest relative distance from a double bracket `[[B_i, B_j], B_k]` to the span of the basis.
pub fn lie_triple_residual(basis: &[TangentVector]) -> Result<f64, ConeError> {
    let Some(first) = basis.first() else {
        return Ok(0.0);
    };
    for b in basis {
        first.same_shape(b)?;
    }
    let (field, n) = (first.field(), first.n());
    let cols: Vec<DVector<f64>> = basis.iter().map(|b| b.vector()).collect();
    let m = DMatrix::from_columns(&cols);
    let svd = m.svd(true, false);
    let smax = svd.singular_values.max();
    let u = svd.u.expect("left singular vectors");
    let rank_cols: Vec<DVector<f64>> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-12 * smax.max(1e-300))
        .map(|i| u.column(i).into_owned())
        .collect();
    let mut worst = 0.0f64;
    for bi in basis {
        for bj in basis {
            let inner = commutator(bi.matrix(), bj.matrix());
            for bk in basis {
                let dbl = hermitian_part(&commutator(&inner, bk.matrix()));
                let v = DVector::from_vec(matrix_to_chart(field, n, &dbl));
                let mut rest = v.clone();
                for q in &rank_cols {
                    rest -= q * q.dot(&v);
                }
                worst = worst.max(rest.norm() / v.norm().max(1.0));
            }
        }
    }
    Ok(worst)
}

/// Whether the span of `basis` is closed under double brackets (within 1e-10).
pub fn lie_triple_check(basis: &[TangentVector]) -> bool {
    matches!(lie_triple_residual(basis), Ok(r) if r <= 1e-10)
}

/// `(UV + VU) / 2`.
pub fn jordan_product(u: &TangentVector, v: &TangentVector) -> Result<TangentVector, ConeError> {
    u.same_shape(v)?;
    let m = (u.matrix() * v.matrix() + v.matrix() * u.matrix()) * Complex64::new(0.5, 0.0);
    Ok(TangentVector::from_matrix(u.field(), u.n(), &m))
}

/// `Re tr(UV)` over `K` (the quaternionic embedding counts each entry twice).
pub fn trace_form(u: &TangentVector, v: &TangentVector) -> Result<f64, ConeError> {
    u.same_shape(v)?;
    Ok(u.field().multiplicity() * (u.matrix() * v.matrix()).trace().re)
}

/// Ambient Levi-Civita symbols `Γ^s_ij` from central differences of the metric,
/// for `i, j` in `dirs`. Returned as one full-length vector per pair `(i, j)`.
fn fd_christoffel(p: &dyn Potential, x: &[f64], g: &SymTensor2, h: f64) -> Result<Vec<DMatrix<f64>>, HessianError> {
    let d = x.len();
    let dg: Vec<DMatrix<f64>> = (0..d)
        .map(|k| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            (p.hessian(&xp) - p.hessian(&xm)) / (2.0 * h)
        })
        .collect();
    let ginv = g.inverse()?;
    // gamma[s][(i, j)]
    Ok((0..d)
        .map(|s| {
            DMatrix::from_fn(d, d, |i, j| {
                (0..d)
                    .map(|q| 0.5 * ginv[(s, q)] * (dg[i][(j, q)] + dg[j][(i, q)] - dg[q][(i, j)]))
                    .sum()
            })
        })
        .collect())
}

/// Gauss-equation discrepancy on the affine coordinate slice through `x` spanned by
/// the chart directions `tangent`, evaluated on `tuples` random unit 4-tuples.
///
/// The intrinsic side uses the Hessian data of the restricted potential; the
/// extrinsic side uses the ambient curvature plus the second fundamental form
/// `α`, obtained as the `g`-normal part of finite-difference Christoffel symbols.
/// Returns `(max discrepancy, max |α_ij|)`.
pub fn gauss_equation_residual<R: Rng>(
    p: &dyn Potential,
    x: &[f64],
    tangent: &[usize],
    tuples: usize,
    rng: &mut R,
) -> Result<(f64, f64), HessianError> {
    let g = eval_metric(p, x)?;
    let a = eval_amplitude(p, x)?;
    let d = x.len();
    let k = tangent.len();
    let gsub = SymTensor2::new(DMatrix::from_fn(k, k, |i, j| g.get(tangent[i], tangent[j])));
    let asub = a.restrict(tangent);
    let gamma = fd_christoffel(p, x, &g, 1e-4)?;

    // g-orthogonal projection onto the slice: P = E (Eᵀ g E)⁻¹ Eᵀ g
    let e = DMatrix::from_fn(d, k, |r, c| if tangent[c] == r { 1.0 } else { 0.0 });
    let gm = g.matrix();
    let proj = &e * gsub.inverse()? * e.transpose() * gm;
    let alpha: Vec<Vec<DVector<f64>>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let v = DVector::from_fn(d, |s, _| gamma[s][(tangent[i], tangent[j])]);
                    &v - &proj * &v
                })
                .collect()
        })
        .collect();
    let max_alpha = alpha.iter().flatten().fold(0.0f64, |m, v| m.max(v.amax()));
    let alpha_of = |u: &DVector<f64>, w: &DVector<f64>| {
        let mut out = DVector::zeros(d);
        for i in 0..k {
            for j in 0..k {
                out += &alpha[i][j] * (u[i] * w[j]);
            }
        }
        out
    };

    let mut worst = 0.0f64;
    for _ in 0..tuples {
        let vs: Vec<DVector<f64>> = (0..4)
            .map(|_| {
                let v: DVector<f64> = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
                let nv = v.norm().max(1e-12);
                v / nv
            })
            .collect();
        let (xv, yv, zv, wv) = (&vs[0], &vs[1], &vs[2], &vs[3]);
        let lhs = gsub.pair(&curvature_operator(&gsub, &asub, xv, yv, zv)?, wv);
        let lift = |v: &DVector<f64>| &e * v;
        let (xl, yl, zl, wl) = (lift(xv), lift(yv), lift(zv), lift(wv));
        let ambient = g.pair(&curvature_operator(&g, &a, &xl, &yl, &zl)?, &wl);
        let rhs = ambient + g.pair(&alpha_of(xv, wv), &alpha_of(yv, zv))
            - g.pair(&alpha_of(xv, zv), &alpha_of(yv, wv));
        worst = worst.max((lhs - rhs).abs());
    }
    Ok((worst, max_alpha))
}

/// Outcome of [`gauss_equation_check`] on the real-diagonal locus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussReport {
    pub n: usize,
    pub field: GroundField,
    pub points: usize,
    pub tuples_per_point: usize,
    pub seed: u64,
    pub max_discrepancy: f64,
    pub max_second_fundamental_form: f64,
    pub passed: bool,
}

pub const GAUSS_TOL: f64 = 1e-5;

/// Gauss equation for the diagonal locus inside the full cone chart.
pub fn gauss_equation_check(n: usize, field: GroundField, points: usize, tuples: usize, seed: u64) -> GaussReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = ConePotential::new(n, field);
    let tangent: Vec<usize> = (0..n).collect();
    let (mut worst, mut alpha) = (0.0f64, 0.0f64);
    let mut ok = true;
    for _ in 0..points {
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
        let x = ConePoint::diagonal(field, &diag).expect("positive diagonal");
        match gauss_equation_residual(&p, x.coords(), &tangent, tuples, &mut rng) {
            Ok((r, al)) => {
                worst = worst.max(r);
                alpha = alpha.max(al);
            }
            Err(_) => ok = false,
        }
    }
    GaussReport {
        n,
        field,
        points,
        tuples_per_point: tuples,
        seed,
        max_discrepancy: worst,
        max_second_fundamental_form: alpha,
        passed: ok && worst < GAUSS_TOL,
    }
}
