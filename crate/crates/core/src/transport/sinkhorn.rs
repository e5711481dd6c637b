//! Log-domain Sinkhorn iterations with ε-scaling, dense and grid-separable.

use nalgebra::DMatrix;

use super::density::GridDensity;
use super::TransportError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    /// Stop when the L1 row-marginal error drops below this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Iterations spent at each intermediate ε of the annealing schedule.
    pub stage_iterations: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions {
            tol: 1e-9,
            max_iterations: 200_000,
            stage_iterations: 50,
        }
    }
}

/// Dual potentials for the entropic problem at `eps`; the plan is
/// `π_ij = a_i b_j exp((f_i + g_j − c_ij) / ε)`.
#[derive(Debug, Clone)]
pub struct SinkhornSolution {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub eps: f64,
    pub iterations: usize,
    /// L1 row-marginal error of the unrounded plan (columns are exact).
    pub marginal_error: f64,
}

fn log_masses(m: &[f64]) -> Vec<f64> {
    m.iter().map(|x| if *x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect()
}

#[inline]
fn lse(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + it.map(|t| (t - mx).exp()).sum::<f64>().ln()
}

fn annealing(start: f64, eps: f64) -> Vec<f64> {
    let mut s = Vec::new();
    let mut e = start.max(eps);
    while e > eps {
        s.push(e);
        e *= 0.5;
    }
    s.push(eps);
    s
}

/// Generic driver: `ctrans_f(g, ε)` returns the row update, `ctrans_g(f, ε)` the column update.
fn drive(
    la: &[f64],
    start: f64,
    eps: f64,
    opts: &SinkhornOptions,
    mut f: Vec<f64>,
    mut g: Vec<f64>,
    ctrans_f: impl Fn(&[f64], f64) -> Vec<f64>,
    ctrans_g: impl Fn(&[f64], f64) -> Vec<f64>,
) -> Result<SinkhornSolution, TransportError> {
    if !(eps > 0.0) {
        return Err(TransportError::ParamOutOfRange(format!("epsilon must be positive, got {eps}")));
    }
    let schedule = annealing(start, eps);
    let mut iterations = 0;
    for (s, &e) in schedule.iter().enumerate() {
        let last = s + 1 == schedule.len();
        let mut k = 0;
        loop {
            let fnew = ctrans_f(&g, e);
            if last {
                let err: f64 = la
                    .iter()
                    .zip(f.iter().zip(&fnew))
                    .filter(|(l, _)| l.is_finite())
                    .map(|(l, (fo, fn_))| l.exp() * ((fo - fn_) / e).exp_m1().abs())
                    .sum();
                if err < opts.tol && iterations > 0 {
                    return Ok(SinkhornSolution {
                        f,
                        g,
                        eps,
                        iterations,
                        marginal_error: err,
                    });
                }
                if iterations >= opts.max_iterations {
                    return Err(TransportError::NonConvergence {
                        iterations,
                        residual: err,
                    });
                }
            } else if k == opts.stage_iterations {
                break;
            }
            f = fnew;
            g = ctrans_g(&f, e);
            iterations += 1;
            k += 1;
        }
    }
    unreachable!("the last stage only exits by returning")
}

/// Entropic transport between weighted point sets with cost matrix `cost`.
pub fn sinkhorn_dense(
    a: &[f64],
    b: &[f64],
    cost: &DMatrix<f64>,
    eps: f64,
    opts: &SinkhornOptions,
) -> Result<SinkhornSolution, TransportError> {
    let (m, n) = (a.len(), b.len());
    if cost.nrows() != m || cost.ncols() != n {
        return Err(TransportError::ShapeMismatch(format!(
            "cost is {}x{}, marginals have {m} and {n} entries",
            cost.nrows(),
            cost.ncols()
        )));
    }
    check_masses(a.iter().sum(), b.iter().sum())?;
    let (la, lb) = (log_masses(a), log_masses(b));
    let start = cost.iter().fold(0.0f64, |s, c| s.max(c.abs()));
    drive(
        &la,
        start,
        eps,
        opts,
        vec![0.0; m],
        vec![0.0; n],
        |g, e| {
            (0..m)
                .map(|i| -e * lse((0..n).map(|j| lb[j] + (g[j] - cost[(i, j)]) / e)))
                .collect()
        },
        |f, e| {
            (0..n)
                .map(|j| -e * lse((0..m).map(|i| la[i] + (f[i] - cost[(i, j)]) / e)))
                .collect()
        },
    )
}

/// Dense entropic plan for a converged solution.
pub fn dense_plan(a: &[f64], b: &[f64], cost: &DMatrix<f64>, sol: &SinkhornSolution) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        if a[i] == 0.0 || b[j] == 0.0 {
            0.0
        } else {
            a[i] * b[j] * ((sol.f[i] + sol.g[j] - cost[(i, j)]) / sol.eps).exp()
        }
    })
}

/// Projects a nearly feasible nonnegative plan onto the exact marginals
/// (row/column down-scaling followed by a rank-one correction).
pub fn round_to_marginals(plan: &mut DMatrix<f64>, a: &[f64], b: &[f64]) {
    for (i, ai) in a.iter().enumerate() {
        let r = plan.row(i).sum();
        if r > *ai {
            let s = ai / r;
            plan.row_mut(i).iter_mut().for_each(|p| *p *= s);
        }
    }
    for (j, bj) in b.iter().enumerate() {
        let c = plan.column(j).sum();
        if c > *bj {
            let s = bj / c;
            plan.column_mut(j).iter_mut().for_each(|p| *p *= s);
        }
    }
    let er: Vec<f64> = a.iter().enumerate().map(|(i, ai)| (ai - plan.row(i).sum()).max(0.0)).collect();
    let ec: Vec<f64> = b.iter().enumerate().map(|(j, bj)| (bj - plan.column(j).sum()).max(0.0)).collect();
    let s: f64 = er.iter().sum();
    if s > 0.0 {
        for i in 0..a.len() {
            for j in 0..b.len() {
                plan[(i, j)] += er[i] * ec[j] / s;
            }
        }
    }
}

fn check_masses(sa: f64, sb: f64) -> Result<(), TransportError> {
    if (sa - sb).abs() > 1e-9 * sa.max(sb).max(1.0) {
        return Err(TransportError::MassMismatch { source_total: sa, target_total: sb });
    }
    Ok(())
}

/// Separable log-kernel between a source and a target grid for the cost
/// `|x − y|²`: one `(n_src × n_tgt)` table per axis.
#[derive(Debug, Clone)]
pub(crate) struct GridKernel {
    pub(crate) nxs: usize,
    pub(crate) nys: usize,
    pub(crate) nxt: usize,
    pub(crate) nyt: usize,
    pub(crate) dx: Vec<f64>,
    pub(crate) dy: Vec<f64>,
}

impl GridKernel {
    pub(crate) fn new(mu: &GridDensity, nu: &GridDensity) -> Self {
        let (gs, gt) = (mu.grid(), nu.grid());
        let sq = |a: f64, b: f64| (a - b) * (a - b);
        let dx = (0..gs.nx())
            .flat_map(|i| (0..gt.nx()).map(move |j| sq(gs.x(i), gt.x(j))))
            .collect();
        let dy = (0..gs.ny())
            .flat_map(|i| (0..gt.ny()).map(move |j| sq(gs.y(i), gt.y(j))))
            .collect();
        GridKernel {
            nxs: gs.nx(),
            nys: gs.ny(),
            nxt: gt.nx(),
            nyt: gt.ny(),
            dx,
            dy,
        }
    }

    /// Transposed view (target becomes source).
    pub(crate) fn transposed(&self) -> Self {
        let tr = |d: &[f64], r: usize, c: usize| -> Vec<f64> {
            (0..c).flat_map(|j| (0..r).map(move |i| d[i * c + j])).collect()
        };
        GridKernel {
            nxs: self.nxt,
            nys: self.nyt,
            nxt: self.nxs,
            nyt: self.nys,
            dx: tr(&self.dx, self.nxs, self.nxt),
            dy: tr(&self.dy, self.nys, self.nyt),
        }
    }

    /// `out[i] = LSE_j (w[j] + kx(i1, j1) + ky(i2, j2))` with `kx = −dx/ε + ln wx(dx)`.
    pub(crate) fn lse_apply(
        &self,
        w: &[f64],
        eps: f64,
        x_weight: Option<fn(f64) -> f64>,
        y_weight: Option<fn(f64) -> f64>,
    ) -> Vec<f64> {
        let (nxs, nys, nxt, nyt) = (self.nxs, self.nys, self.nxt, self.nyt);
        let lk = |d: f64, wf: Option<fn(f64) -> f64>| -d / eps + wf.map_or(0.0, |h| h(d).ln());
        let kx: Vec<f64> = self.dx.iter().map(|&d| lk(d, x_weight)).collect();
        let ky: Vec<f64> = self.dy.iter().map(|&d| lk(d, y_weight)).collect();
        // pass over the y-axis: t[j1][i2] = LSE_j2 (w[j1, j2] + ky[i2, j2])
        let mut t = vec![0.0; nxt * nys];
        let mut col = vec![0.0; nyt];
        for j1 in 0..nxt {
            for (j2, c) in col.iter_mut().enumerate() {
                *c = w[j1 + j2 * nxt];
            }
            for i2 in 0..nys {
                let row = &ky[i2 * nyt..(i2 + 1) * nyt];
                t[j1 * nys + i2] = lse(col.iter().zip(row).map(|(a, b)| a + b));
            }
        }
        let mut out = vec![0.0; nxs * nys];
        for i2 in 0..nys {
            let tcol: Vec<f64> = (0..nxt).map(|j1| t[j1 * nys + i2]).collect();
            for i1 in 0..nxs {
                let row = &kx[i1 * nxt..(i1 + 1) * nxt];
                out[i1 + i2 * nxs] = lse(tcol.iter().zip(row).map(|(a, b)| a + b));
            }
        }
        out
    }
}

/// Entropic transport between two grid densities with cost `|x − y|²`, using the
/// tensor structure of the Gibbs kernel (two 1-D log-sum-exp passes per update).
pub fn sinkhorn_grid(
    mu: &GridDensity,
    nu: &GridDensity,
    eps: f64,
    opts: &SinkhornOptions,
) -> Result<SinkhornSolution, TransportError> {
    check_masses(mu.total(), nu.total())?;
    let (la, lb) = (log_masses(&mu.weights()), log_masses(&nu.weights()));
    let k = GridKernel::new(mu, nu);
    let kt = k.transposed();
    let start = k.dx.iter().fold(0.0f64, |s, d| s.max(*d)) + k.dy.iter().fold(0.0f64, |s, d| s.max(*d));
    drive(
        &la,
        start,
        eps,
        opts,
        vec![0.0; la.len()],
        vec![0.0; lb.len()],
        |g, e| {
            let w: Vec<f64> = lb.iter().zip(g).map(|(l, gj)| l + gj / e).collect();
            k.lse_apply(&w, e, None, None).into_iter().map(|s| -e * s).collect()
        },
        |f, e| {
            let w: Vec<f64> = la.iter().zip(f).map(|(l, fi)| l + fi / e).collect();
            kt.lse_apply(&w, e, None, None).into_iter().map(|s| -e * s).collect()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_restores_marginals() {
        let mut p = DMatrix::from_row_slice(2, 3, &[0.2, 0.1, 0.05, 0.1, 0.3, 0.2]);
        let a = [0.3, 0.65];
        let b = [0.35, 0.4, 0.2];
        round_to_marginals(&mut p, &a, &b);
        for i in 0..2 {
            assert!((p.row(i).sum() - a[i]).abs() < 1e-15);
        }
        for j in 0..3 {
            assert!((p.column(j).sum() - b[j]).abs() < 1e-15);
        }
        assert!(p.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn dense_sinkhorn_marginals_converge() {
        let a = [0.5, 0.25, 0.25];
        let b = [0.2, 0.8];
        let c = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 0.5, 0.2, 1.0, 0.0]);
        let s = sinkhorn_dense(&a, &b, &c, 0.05, &SinkhornOptions::default()).unwrap();
        let p = dense_plan(&a, &b, &c, &s);
        for j in 0..2 {
            assert!((p.column(j).sum() - b[j]).abs() < 1e-12);
        }
        assert!(s.marginal_error < 1e-9);
    }
}
