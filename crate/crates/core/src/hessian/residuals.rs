use nalgebra::{DMatrix, DVector};

use super::fields::VectorField;
use super::potential::{check_point, DerivativeMode, Potential};
use super::tensor::{MixedTensor12, SymTensor2, SymTensor3, Tensor4, Tensor4Tag};
use super::HessianError;

/// `curvature_direct / curvature_from_a`, entry by entry.
pub const HESSIAN_CURVATURE_SCALE: f64 = 0.25;

/// Hessian metric `g_ij = ∂_i ∂_j Φ`.
pub fn eval_metric(p: &dyn Potential, x: &[f64]) -> Result<SymTensor2, HessianError> {
    check_point(p, x)?;
    let g = SymTensor2::new(p.hessian(x));
    if g.is_singular() {
        g.inverse()?;
    }
    Ok(g)
}

/// Amplitude `A_ijk = ∂_i ∂_j ∂_k Φ`.
pub fn eval_amplitude(p: &dyn Potential, x: &[f64]) -> Result<SymTensor3, HessianError> {
    check_point(p, x)?;
    Ok(p.third(x))
}

fn check_dims(g: &SymTensor2, a: &SymTensor3) -> Result<(), HessianError> {
    if g.dim() != a.dim() {
        return Err(HessianError::DimensionMismatch {
            expected: g.dim(),
            got: a.dim(),
        });
    }
    Ok(())
}

/// `C^c_ab = Σ_e A_abe g^ec`.
pub fn structure_constants(g: &SymTensor2, a: &SymTensor3) -> Result<MixedTensor12, HessianError> {
    check_dims(g, a)?;
    let ginv = g.inverse()?;
    let n = g.dim();
    let mut c = MixedTensor12::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let mut s = 0.0;
                for e in 0..n {
                    s += a.get(i, j, e) * ginv[(e, k)];
                }
                c.set(k, i, j, s);
                c.set(k, j, i, s);
            }
        }
    }
    Ok(c)
}

/// Max of `|g(e_a∘e_b, e_c) - A_abc|` and `|g(e_a, e_b∘e_c) - A_abc|`.
pub fn frobenius_pairing_residual(g: &SymTensor2, a: &SymTensor3) -> Result<f64, HessianError> {
    let c = structure_constants(g, a)?;
    let n = g.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut left = 0.0;
                let mut right = 0.0;
                for d in 0..n {
                    left += c.get(d, i, j) * g.get(d, k);
                    right += g.get(i, d) * c.get(d, j, k);
                }
                let target = a.get(i, j, k);
                worst = worst.max((left - target).abs()).max((right - target).abs());
            }
        }
    }
    Ok(worst)
}

/// `P[(a,b),(c,d)] = Σ_{e,f} A_abe g^ef A_fcd`, symmetric under pair swaps.
fn pair_contraction(g: &SymTensor2, a: &SymTensor3) -> Result<(usize, Vec<f64>), HessianError> {
    let c = structure_constants(g, a)?;
    let n = g.dim();
    let nn = n * n;
    let mut p = vec![0.0; nn * nn];
    // Dense A for the inner loop.
    let dense = a.to_dense();
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                for l in k..n {
                    let mut s = 0.0;
                    for f in 0..n {
                        s += c.get(f, i, j) * dense[(f * n + k) * n + l];
                    }
                    for (x, y) in [(i, j), (j, i)] {
                        for (z, w) in [(k, l), (l, k)] {
                            p[(x * n + y) * nn + z * n + w] = s;
                        }
                    }
                }
            }
        }
    }
    Ok((n, p))
}

/// WDVV residual `W_abcd = Σ A_abe g^ef A_fcd - Σ A_bce g^ef A_fad`.
pub fn wdvv_residual(g: &SymTensor2, a: &SymTensor3) -> Result<Tensor4, HessianError> {
    let (n, p) = pair_contraction(g, a)?;
    let nn = n * n;
    let mut w = Tensor4::zeros(n, Tensor4Tag::Residual);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = p[(i * n + j) * nn + k * n + l] - p[(j * n + k) * nn + i * n + l];
                    w.set(i, j, k, l, v);
                }
            }
        }
    }
    Ok(w)
}

/// Curvature from the amplitude: entry `(a, c, d, b)` holds
/// `Σ g^ef (A_eab A_fcd - A_ead A_fcb)`.
pub fn curvature_from_a(g: &SymTensor2, a: &SymTensor3) -> Result<Tensor4, HessianError> {
    let (n, p) = pair_contraction(g, a)?;
    let nn = n * n;
    let mut r = Tensor4::zeros(n, Tensor4Tag::Curvature);
    for ia in 0..n {
        for ic in 0..n {
            for id in 0..n {
                for ib in 0..n {
                    let v = p[(ia * n + ib) * nn + ic * n + id] - p[(ia * n + id) * nn + ic * n + ib];
                    r.set(ia, ic, id, ib, v);
                }
            }
        }
    }
    Ok(r)
}

/// Levi-Civita symbols of the Hessian metric, `gamma[s][(j, k)] = Γ^s_jk = ½ Σ_p g^sp A_jkp`.
pub fn christoffel(g: &SymTensor2, a: &SymTensor3) -> Result<Vec<DMatrix<f64>>, HessianError> {
    let c = structure_constants(g, a)?;
    let n = g.dim();
    Ok((0..n)
        .map(|s| DMatrix::from_fn(n, n, |j, k| 0.5 * c.get(s, j, k)))
        .collect())
}

/// Riemannian curvature of the Hessian metric from its Christoffel symbols.
///
/// Entry `(l, k, i, j)` is `g(R(∂_i, ∂_j) ∂_k, ∂_l)` with
/// `R(X, Y) = ∇_X ∇_Y - ∇_Y ∇_X - ∇_[X,Y]`.
pub fn curvature_direct(p: &dyn Potential, x: &[f64]) -> Result<Tensor4, HessianError> {
    let g = eval_metric(p, x)?;
    let a = p.third(x);
    let phi4 = p.fourth(x);
    let n = g.dim();
    let ginv = g.inverse()?.clone();
    let gamma = christoffel(&g, &a)?;

    // ∂_i g^{sp} = -Σ g^{sa} A_iab g^{bp}
    let dginv: Vec<DMatrix<f64>> = (0..n)
        .map(|i| {
            let ai = DMatrix::from_fn(n, n, |r, c| a.get(i, r, c));
            -(&ginv * ai * &ginv)
        })
        .collect();
    // dgamma[i][s][(j,k)] = ∂_i Γ^s_jk
    let mut dgamma = vec![vec![DMatrix::zeros(n, n); n]; n];
    for i in 0..n {
        for s in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut v = 0.0;
                    for q in 0..n {
                        v += dginv[i][(s, q)] * a.get(j, k, q)
                            + ginv[(s, q)] * phi4[((i * n + j) * n + k) * n + q];
                    }
                    dgamma[i][s][(j, k)] = 0.5 * v;
                    dgamma[i][s][(k, j)] = 0.5 * v;
                }
            }
        }
    }
    // R^s_kij = ∂_i Γ^s_jk - ∂_j Γ^s_ik + Γ^s_im Γ^m_jk - Γ^s_jm Γ^m_ik
    let mut up = vec![0.0; n * n * n * n];
    for s in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = dgamma[i][s][(j, k)] - dgamma[j][s][(i, k)];
                    for m in 0..n {
                        v += gamma[s][(i, m)] * gamma[m][(j, k)] - gamma[s][(j, m)] * gamma[m][(i, k)];
                    }
                    up[((s * n + k) * n + i) * n + j] = v;
                }
            }
        }
    }
    let mut r = Tensor4::zeros(n, Tensor4Tag::Curvature);
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    for s in 0..n {
                        v += g.get(l, s) * up[((s * n + k) * n + i) * n + j];
                    }
                    r.set(l, k, i, j, v);
                }
            }
        }
    }
    Ok(r)
}

/// Order of the symmetric tensor whose flat derivative is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodazziOrder {
    /// `∂_{i0} A(i1, i2, i3)`
    Three,
    /// `∂_{i0} Φ_{i1 i2 i3 i4}`
    Four,
}

/// Max asymmetry of `∂_{i0} T(i1, ...)` under `i0 <-> i1`, divided by
/// `max(1, max |∂T|)`. `T` is the order-`k` derivative tensor of `p` and `∂_{i0}`
/// a Richardson-extrapolated central difference with step `step` (defaults: 1e-3
/// for analytic potentials, `max(20 h, 2e-2)` for finite-difference ones, whose
/// third derivatives carry roundoff of order `eps |Φ| / h³`).
pub fn codazzi_residual(
    p: &dyn Potential,
    x: &[f64],
    order: CodazziOrder,
    step: Option<f64>,
) -> Result<f64, HessianError> {
    check_point(p, x)?;
    let n = p.dim();
    let h = step.unwrap_or(match p.mode() {
        DerivativeMode::Analytic => 1e-3,
        DerivativeMode::FiniteDifference { step } => (20.0 * step).max(2e-2),
    });
    let k = match order {
        CodazziOrder::Three => 3,
        CodazziOrder::Four => 4,
    };
    let tensor_at = |y: &[f64]| -> Result<Vec<f64>, HessianError> {
        if !p.contains(y) {
            return Err(HessianError::Domain(y.to_vec()));
        }
        Ok(match order {
            CodazziOrder::Three => p.third(y).to_dense(),
            CodazziOrder::Four => p.fourth(y),
        })
    };
    let len = n.pow(k as u32);
    // deriv[i0 * len + flat(i1..ik)]
    let mut deriv = vec![0.0; n * len];
    let mut y = x.to_vec();
    for i0 in 0..n {
        let mut shifted = |delta: f64| -> Result<Vec<f64>, HessianError> {
            y.copy_from_slice(x);
            y[i0] += delta;
            tensor_at(&y)
        };
        let (p1, m1, p2, m2) = (shifted(h)?, shifted(-h)?, shifted(0.5 * h)?, shifted(-0.5 * h)?);
        for t in 0..len {
            let coarse = (p1[t] - m1[t]) / (2.0 * h);
            let fine = (p2[t] - m2[t]) / h;
            deriv[i0 * len + t] = (4.0 * fine - coarse) / 3.0;
        }
    }
    let stride = n.pow(k as u32 - 1);
    let scale = deriv.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i0 in 0..n {
        for t in 0..len {
            let i1 = t / stride;
            let rest = t % stride;
            let swapped = deriv[i1 * len + i0 * stride + rest];
            worst = worst.max((deriv[i0 * len + t] - swapped).abs());
        }
    }
    Ok(worst / scale)
}

/// `max |Σ_f C^f_ab A_fcd - Σ_f C^f_bc A_fad|` with `∂_f g_cd = A_fcd`.
pub fn codazzi_dual_residual(g: &SymTensor2, a: &SymTensor3) -> Result<f64, HessianError> {
    let c = structure_constants(g, a)?;
    let n = g.dim();
    let dense = a.to_dense();
    let term = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        (0..n).map(|f| c.get(f, i, j) * dense[(f * n + k) * n + l]).sum()
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    worst = worst.max((term(i, j, k, l) - term(j, k, i, l)).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// True iff every second partial of every component vanishes (within 1e-8) at every sample.
pub fn affine_field_check(e: &VectorField, samples: &[Vec<f64>]) -> bool {
    samples.iter().all(|x| {
        e.second(x)
            .iter()
            .all(|h| h.iter().all(|v| v.abs() <= 1e-8))
    })
}

/// Defect `[E, ∂_a∘∂_b] - [E, ∂_a]∘∂_b - ∂_a∘[E, ∂_b]` together with `∂_a∘∂_b`,
/// both flattened as `(c, a, b)`.
fn euler_defect(
    e: &VectorField,
    p: &dyn Potential,
    x: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), HessianError> {
    let g = eval_metric(p, x)?;
    let a = p.third(x);
    let phi4 = p.fourth(x);
    let n = g.dim();
    if e.dim() != n {
        return Err(HessianError::DimensionMismatch {
            expected: n,
            got: e.dim(),
        });
    }
    let ginv = g.inverse()?.clone();
    let c = structure_constants(&g, &a)?;
    let ev = e.components(x);
    let jac = e.jacobian(x);

    // ∂_m C^c_ab = Σ_e Φ_abem g^ec - Σ A_abe g^ep A_mpq g^qc
    let dc = |m: usize, cc: usize, ia: usize, ib: usize| -> f64 {
        let mut v = 0.0;
        for q in 0..n {
            v += phi4[((ia * n + ib) * n + q) * n + m] * ginv[(q, cc)];
        }
        for pp in 0..n {
            let cab = c.get(pp, ia, ib);
            if cab == 0.0 {
                continue;
            }
            for q in 0..n {
                v -= cab * a.get(m, pp, q) * ginv[(q, cc)];
            }
        }
        v
    };

    let mut defect = vec![0.0; n * n * n];
    let mut prod = vec![0.0; n * n * n];
    for cc in 0..n {
        for ia in 0..n {
            for ib in 0..n {
                let mut v = 0.0;
                for m in 0..n {
                    if ev[m] != 0.0 {
                        v += ev[m] * dc(m, cc, ia, ib);
                    }
                    v -= c.get(m, ia, ib) * jac[(cc, m)];
                    v += jac[(m, ia)] * c.get(cc, m, ib);
                    v += jac[(m, ib)] * c.get(cc, ia, m);
                }
                let off = (cc * n + ia) * n + ib;
                defect[off] = v;
                prod[off] = c.get(cc, ia, ib);
            }
        }
    }
    Ok((defect, prod))
}

/// `max_{a,b,c} |([E, ∂_a∘∂_b] - [E,∂_a]∘∂_b - ∂_a∘[E,∂_b] - β ∂_a∘∂_b)^c|`.
pub fn euler_conformal_residual(
    e: &VectorField,
    p: &dyn Potential,
    beta: f64,
    x: &[f64],
) -> Result<f64, HessianError> {
    let (defect, prod) = euler_defect(e, p, x)?;
    Ok(defect
        .iter()
        .zip(&prod)
        .fold(0.0, |m, (d, c)| m.max((d - beta * c).abs())))
}

/// Least-squares `β` for the conformal Euler relation at `x`, with the residual it leaves.
pub fn fit_euler_beta(e: &VectorField, p: &dyn Potential, x: &[f64]) -> Result<(f64, f64), HessianError> {
    let (defect, prod) = euler_defect(e, p, x)?;
    let cc: f64 = prod.iter().map(|v| v * v).sum();
    let beta = if cc > 0.0 {
        defect.iter().zip(&prod).map(|(d, c)| d * c).sum::<f64>() / cc
    } else {
        0.0
    };
    let res = defect
        .iter()
        .zip(&prod)
        .fold(0.0f64, |m, (d, c)| m.max((d - beta * c).abs()));
    Ok((beta, res))
}

/// `R(u, v) w` as a tangent vector, using the Levi-Civita normalization
/// `HESSIAN_CURVATURE_SCALE * curvature_from_a`.
pub(crate) fn curvature_operator(
    g: &SymTensor2,
    a: &SymTensor3,
    u: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<DVector<f64>, HessianError> {
    // g(R(u,v)w, z) = ¼ ([v z | u w] - [u z | v w]) with [xy|zt] = A(x,y,.) g^-1 A(z,t,.)
    let ginv = g.inverse()?;
    let n = g.dim();
    let auw = ginv * a.contract2(u, w);
    let avw = ginv * a.contract2(v, w);
    // covector z -> ¼ (A(v,z,.)·auw - A(u,z,.)·avw)
    let cov = DVector::from_fn(n, |z, _| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let azij = a.get(z, i, j);
                s += azij * (v[i] * auw[j] - u[i] * avw[j]);
            }
        }
        HESSIAN_CURVATURE_SCALE * s
    });
    Ok(ginv * cov)
}
