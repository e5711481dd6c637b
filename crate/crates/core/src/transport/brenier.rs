use nalgebra::DMatrix;

use super::density::{deposit, GridDensity};
use super::grid::Grid2D;
use super::lp::transport_lp;
use super::ma::{inside_nodes, ConvexPotentialGrid};
use super::plan::{Coupling, FactoredCoupling, TransportPlan};
use super::sinkhorn::{dense_plan, round_to_marginals, sinkhorn_dense, sinkhorn_grid, GridKernel, SinkhornOptions};
use super::TransportError;

/// Largest support (per side) handed to the exact solver.
pub const LP_MAX_POINTS: usize = 1000;

/// Default entropic regularization for point clouds.
pub const DEFAULT_SINKHORN_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    ExactLp,
    Sinkhorn { eps: f64 },
}

/// Grid ε matched to the resolution: the entropic blur then stays at the scale of
/// one cell, which is what the node-wise Monge–Ampère check can resolve.
pub fn grid_epsilon(grid: &Grid2D) -> f64 {
    grid.cell_measure()
}

#[derive(Debug, Clone)]
pub struct BrenierSolution {
    pub plan: TransportPlan,
    /// `U = |x|²/2 − φ` on the source grid, where `φ` is the dual potential for the
    /// cost `½|x − y|²`.
    pub potential: ConvexPotentialGrid,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct PointBrenier {
    pub plan: TransportPlan,
    /// `U(x_i)` at each source point.
    pub potential: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn half_norm2(x: [f64; 2]) -> f64 {
    0.5 * (x[0] * x[0] + x[1] * x[1])
}

fn cost_matrix(src: &[[f64; 2]], tgt: &[[f64; 2]]) -> DMatrix<f64> {
    DMatrix::from_fn(src.len(), tgt.len(), |i, j| sq_dist(src[i], tgt[j]))
}

fn check_totals(sa: f64, sb: f64) -> Result<(), TransportError> {
    if (sa - sb).abs() > 1e-9 * sa.max(sb).max(1.0) {
        return Err(TransportError::MassMismatch { source_total: sa, target_total: sb });
    }
    Ok(())
}

/// Optimal coupling for `|x − y|²` between weighted point sets.
pub fn brenier_points(
    source: &[[f64; 2]],
    a: &[f64],
    target: &[[f64; 2]],
    b: &[f64],
    method: Method,
) -> Result<PointBrenier, TransportError> {
    if source.len() != a.len() || target.len() != b.len() {
        return Err(TransportError::ShapeMismatch("points and masses differ in length".into()));
    }
    check_totals(a.iter().sum(), b.iter().sum())?;
    let cost = cost_matrix(source, target);
    let (coupling, total, phi, iterations) = match method {
        Method::ExactLp => {
            if source.len() > LP_MAX_POINTS || target.len() > LP_MAX_POINTS {
                return Err(TransportError::ProblemTooLarge {
                    points: source.len().max(target.len()),
                    limit: LP_MAX_POINTS,
                });
            }
            let s = transport_lp(a, b, &cost)?;
            let trip = sparse_of(&s.plan);
            (Coupling::Sparse(trip), s.cost, s.u, s.pivots)
        }
        Method::Sinkhorn { eps } => {
            let s = sinkhorn_dense(a, b, &cost, eps, &SinkhornOptions::default())?;
            let mut p = dense_plan(a, b, &cost, &s);
            round_to_marginals(&mut p, a, b);
            let total = p.iter().zip(cost.iter()).map(|(x, c)| x * c).sum();
            (Coupling::Dense(p), total, s.f, s.iterations)
        }
    };
    let potential = source.iter().zip(&phi).map(|(x, u)| half_norm2(*x) - 0.5 * u).collect();
    Ok(PointBrenier {
        plan: TransportPlan {
            source: source.to_vec(),
            source_mass: a.to_vec(),
            target: target.to_vec(),
            target_mass: b.to_vec(),
            coupling,
            cost: total,
        },
        potential,
        iterations,
    })
}

fn sparse_of(p: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::new();
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            if p[(i, j)] > 0.0 {
                t.push((i, j, p[(i, j)]));
            }
        }
    }
    t
}

/// Brenier transport between grid densities.
///
/// The exact solver works on the supports and extends the dual potential to every
/// source node by the c-transform; Sinkhorn runs on the full grids with the
/// separable kernel and keeps the plan factored.
pub fn brenier_discrete(mu: &GridDensity, nu: &GridDensity, method: Method) -> Result<BrenierSolution, TransportError> {
    check_totals(mu.total(), nu.total())?;
    let grid = mu.grid().clone();
    match method {
        Method::ExactLp => {
            let (sa, sb) = (mu.support(), nu.support());
            let xs: Vec<[f64; 2]> = sa.iter().map(|s| s.1).collect();
            let ys: Vec<[f64; 2]> = sb.iter().map(|s| s.1).collect();
            let wa: Vec<f64> = sa.iter().map(|s| s.2).collect();
            let wb: Vec<f64> = sb.iter().map(|s| s.2).collect();
            if xs.len() > LP_MAX_POINTS || ys.len() > LP_MAX_POINTS {
                return Err(TransportError::ProblemTooLarge {
                    points: xs.len().max(ys.len()),
                    limit: LP_MAX_POINTS,
                });
            }
            let cost = cost_matrix(&xs, &ys);
            let s = transport_lp(&wa, &wb, &cost)?;
            let u: Vec<f64> = (0..grid.len())
                .map(|k| {
                    let x = grid.point(k);
                    let phi = ys.iter().zip(&s.v).map(|(y, v)| sq_dist(x, *y) - v).fold(f64::INFINITY, f64::min);
                    half_norm2(x) - 0.5 * phi
                })
                .collect();
            Ok(BrenierSolution {
                plan: TransportPlan {
                    source: xs,
                    source_mass: wa,
                    target: ys,
                    target_mass: wb,
                    coupling: Coupling::Sparse(sparse_of(&s.plan)),
                    cost: s.cost,
                },
                potential: ConvexPotentialGrid::from_values(grid, u)?,
                iterations: s.pivots,
            })
        }
        Method::Sinkhorn { eps } => {
            let s = sinkhorn_grid(mu, nu, eps, &SinkhornOptions::default())?;
            let u: Vec<f64> = (0..grid.len()).map(|k| half_norm2(grid.point(k)) - 0.5 * s.f[k]).collect();
            let log = |w: Vec<f64>| -> Vec<f64> { w.into_iter().map(|x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect() };
            let fc = FactoredCoupling {
                kernel: GridKernel::new(mu, nu),
                la: log(mu.weights()),
                lb: log(nu.weights()),
                f: s.f,
                g: s.g,
                eps: s.eps,
            };
            let cost = fc.transport_cost();
            let plan = TransportPlan {
                source: (0..grid.len()).map(|k| grid.point(k)).collect(),
                source_mass: mu.weights(),
                target: (0..nu.grid().len()).map(|k| nu.grid().point(k)).collect(),
                target_mass: nu.weights(),
                coupling: Coupling::Factored(fc),
                cost,
            };
            Ok(BrenierSolution {
                plan,
                potential: ConvexPotentialGrid::from_values(grid, u)?,
                iterations: s.iterations,
            })
        }
    }
}

/// `T◇μ` for a point map, deposited on `target` by cloud-in-cell weights.
pub fn pushforward_map(
    mu: &GridDensity,
    target: &Grid2D,
    map: impl Fn([f64; 2]) -> Option<[f64; 2]>,
) -> Result<GridDensity, TransportError> {
    let mut acc = vec![0.0; target.len()];
    for (k, x, w) in mu.support() {
        match map(x) {
            Some(y) if y[0].is_finite() && y[1].is_finite() => deposit(target, &mut acc, y, w),
            _ => return Err(TransportError::UndefinedOnSupport { node: k }),
        }
    }
    let cell = target.cell_measure();
    acc.iter_mut().for_each(|m| *m /= cell);
    GridDensity::new(target.clone(), acc)
}

/// Column marginal of a plan, deposited on `target`.
pub fn pushforward_plan(plan: &TransportPlan, target: &Grid2D) -> Result<GridDensity, TransportError> {
    let col = plan.column_marginal();
    let mut acc = vec![0.0; target.len()];
    for (y, w) in plan.target.iter().zip(col) {
        deposit(target, &mut acc, *y, w);
    }
    let cell = target.cell_measure();
    acc.iter_mut().for_each(|m| *m /= cell);
    GridDensity::new(target.clone(), acc)
}

fn check_same_grid(mu: &GridDensity, u: &ConvexPotentialGrid) -> Result<(), TransportError> {
    if !mu.grid().same_shape(u.grid()) {
        return Err(TransportError::ShapeMismatch("potential and density live on different grids".into()));
    }
    Ok(())
}

/// `∇U◇μ` with the discrete gradient of `U` at the nodes of `μ`.
pub fn pushforward_gradient(mu: &GridDensity, u: &ConvexPotentialGrid) -> Result<GridDensity, TransportError> {
    displacement_interpolate(mu, u, 1.0)
}

/// `μ_t = ((1 − t) id + t ∇U)◇μ`.
pub fn displacement_interpolate(mu: &GridDensity, u: &ConvexPotentialGrid, t: f64) -> Result<GridDensity, TransportError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(TransportError::ParamOutOfRange(format!("t = {t} is outside [0, 1]")));
    }
    check_same_grid(mu, u)?;
    let grid = mu.grid();
    let mut acc = vec![0.0; grid.len()];
    for (k, x, w) in mu.support() {
        let d = u.gradient_at(k);
        let y = [(1.0 - t) * x[0] + t * d[0], (1.0 - t) * x[1] + t * d[1]];
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(TransportError::UndefinedOnSupport { node: k });
        }
        deposit(grid, &mut acc, y, w);
    }
    let cell = grid.cell_measure();
    acc.iter_mut().for_each(|m| *m /= cell);
    GridDensity::new(grid.clone(), acc)
}

/// Summary of `|det D²U · g(∇U) − f| / f` over inside nodes where `f ≥ 1e-2 max f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportResidual {
    pub median_relative: f64,
    pub max_relative: f64,
    pub nodes: usize,
}

pub fn ma_transport_residual(
    u: &ConvexPotentialGrid,
    f: impl Fn(f64, f64) -> f64,
    g: impl Fn(f64, f64) -> f64,
) -> TransportResidual {
    let grid = u.grid();
    let fv = grid.sample(&f);
    let fmax = inside_nodes(grid).map(|k| fv[k]).fold(0.0, f64::max);
    let mut rel: Vec<f64> = inside_nodes(grid)
        .filter(|&k| fv[k] > 0.0 && fv[k] >= 1e-2 * fmax)
        .filter_map(|k| {
            let [uxx, uyy, uxy] = u.hessian_at(k)?;
            let d = u.gradient_at(k);
            Some(((uxx * uyy - uxy * uxy) * g(d[0], d[1]) - fv[k]).abs() / fv[k])
        })
        .collect();
    if rel.is_empty() {
        return TransportResidual {
            median_relative: 0.0,
            max_relative: 0.0,
            nodes: 0,
        };
    }
    rel.sort_by(f64::total_cmp);
    let n = rel.len();
    let median = if n % 2 == 1 { rel[n / 2] } else { 0.5 * (rel[n / 2 - 1] + rel[n / 2]) };
    TransportResidual {
        median_relative: median,
        max_relative: rel[n - 1],
        nodes: n,
    }
}

/// McCann interpolant through a plan: each entry `π_ij` moves to `(1 − t) x_i + t y_j`,
/// deposited on `target`.
pub fn plan_interpolate(plan: &TransportPlan, target: &Grid2D, t: f64) -> Result<GridDensity, TransportError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(TransportError::ParamOutOfRange(format!("t = {t} is outside [0, 1]")));
    }
    let mut acc = vec![0.0; target.len()];
    for (i, j, m) in plan.triplets(0.0) {
        let (x, y) = (plan.source[i], plan.target[j]);
        deposit(target, &mut acc, [(1.0 - t) * x[0] + t * y[0], (1.0 - t) * x[1] + t * y[1]], m);
    }
    let cell = target.cell_measure();
    acc.iter_mut().for_each(|m| *m /= cell);
    GridDensity::new(target.clone(), acc)
}
