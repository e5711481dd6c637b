use super::banded::BandMatrix;
use super::grid::{Grid2D, NodeKind};
use super::TransportError;

/// Potential sampled at grid nodes, with the Dirichlet data it was solved against.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPotentialGrid {
    grid: Grid2D,
    u: Vec<f64>,
    boundary: Vec<f64>,
    iterations: usize,
}

impl ConvexPotentialGrid {
    /// Wraps node values; the non-inside entries double as boundary data.
    pub fn from_values(grid: Grid2D, u: Vec<f64>) -> Result<Self, TransportError> {
        if u.len() != grid.len() {
            return Err(TransportError::ShapeMismatch(format!(
                "{} values for a grid of {} nodes",
                u.len(),
                grid.len()
            )));
        }
        Ok(ConvexPotentialGrid {
            boundary: u.clone(),
            grid,
            u,
            iterations: 0,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// Dirichlet data `g̃` (meaningful at non-inside nodes).
    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    /// Newton iterations spent by [`ma_solve`] (0 for wrapped values).
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Centred second differences `(u_xx, u_yy, u_xy)` at a node away from the grid edge.
    pub fn hessian_at(&self, k: usize) -> Option<[f64; 3]> {
        let (i, j) = self.grid.coords(k);
        if i == 0 || j == 0 || i + 1 >= self.grid.nx() || j + 1 >= self.grid.ny() {
            return None;
        }
        Some(stencil_hessian(&self.grid, &self.u, k))
    }

    /// Centred gradient, one-sided on the grid edge.
    pub fn gradient_at(&self, k: usize) -> [f64; 2] {
        let g = &self.grid;
        let (i, j) = g.coords(k);
        let nx = g.nx();
        let dx = if i == 0 {
            (self.u[k + 1] - self.u[k]) / g.hx()
        } else if i + 1 == nx {
            (self.u[k] - self.u[k - 1]) / g.hx()
        } else {
            (self.u[k + 1] - self.u[k - 1]) / (2.0 * g.hx())
        };
        let dy = if j == 0 {
            (self.u[k + nx] - self.u[k]) / g.hy()
        } else if j + 1 == g.ny() {
            (self.u[k] - self.u[k - nx]) / g.hy()
        } else {
            (self.u[k + nx] - self.u[k - nx]) / (2.0 * g.hy())
        };
        [dx, dy]
    }

    pub fn gradient_field(&self) -> Vec<[f64; 2]> {
        (0..self.grid.len()).map(|k| self.gradient_at(k)).collect()
    }

    /// Smallest eigenvalue of the discrete Hessian over inside nodes.
    pub fn min_hessian_eigenvalue(&self) -> f64 {
        inside_nodes(&self.grid)
            .map(|k| {
                let [a, c, b] = stencil_hessian(&self.grid, &self.u, k);
                sym2_eigen(a, b, c).0
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Discrete convexity up to `slack`.
    pub fn is_discretely_convex(&self, slack: f64) -> bool {
        self.min_hessian_eigenvalue() >= -slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaOptions {
    /// Stop when `max |det D²u − f| < tol · max f`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for MaOptions {
    fn default() -> Self {
        MaOptions {
            tol: 1e-6,
            max_iterations: 200,
        }
    }
}

pub(crate) fn inside_nodes(grid: &Grid2D) -> impl Iterator<Item = usize> + '_ {
    (0..grid.len()).filter(|&k| grid.kind(k) == NodeKind::Inside)
}

fn stencil_hessian(grid: &Grid2D, u: &[f64], k: usize) -> [f64; 3] {
    let nx = grid.nx();
    let (hx, hy) = (grid.hx(), grid.hy());
    let uxx = (u[k + 1] - 2.0 * u[k] + u[k - 1]) / (hx * hx);
    let uyy = (u[k + nx] - 2.0 * u[k] + u[k - nx]) / (hy * hy);
    let uxy = (u[k + nx + 1] - u[k + nx - 1] - u[k - nx + 1] + u[k - nx - 1]) / (4.0 * hx * hy);
    [uxx, uyy, uxy]
}

/// Eigenvalues and unit eigenvector of the first eigenvalue for `[[a, b], [b, c]]`.
fn sym2_eigen(a: f64, b: f64, c: f64) -> (f64, f64, [f64; 2]) {
    let m = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (lo, hi) = (m - r, m + r);
    let v = if b.abs() > 1e-300 {
        let (x, y) = (b, lo - a);
        let n = x.hypot(y);
        [x / n, y / n]
    } else if a <= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    (lo, hi, v)
}

fn residual_vector(grid: &Grid2D, u: &[f64], f: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; grid.len()];
    for k in inside_nodes(grid) {
        let [uxx, uyy, uxy] = stencil_hessian(grid, u, k);
        r[k] = uxx * uyy - uxy * uxy - f[k];
    }
    r
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Pointwise `det D²u − f` at inside nodes (0 elsewhere).
pub fn ma_residual(u: &ConvexPotentialGrid, f: &[f64]) -> Result<Vec<f64>, TransportError> {
    if f.len() != u.grid.len() {
        return Err(TransportError::ShapeMismatch(format!(
            "rhs has {} values, grid has {} nodes",
            f.len(),
            u.grid.len()
        )));
    }
    Ok(residual_vector(&u.grid, &u.u, f))
}

/// Damped Newton for `u_xx u_yy − u_xy² = f` with `u = g` off the inside nodes.
///
/// The linearization uses the cofactor matrix of the discrete Hessian projected onto
/// the positive cone, so every Newton system is a discrete elliptic operator. The
/// first iterate solves `Δu = 2√f`.
pub fn ma_solve(
    grid: &Grid2D,
    f: &[f64],
    g: &[f64],
    opts: &MaOptions,
) -> Result<ConvexPotentialGrid, TransportError> {
    let n = grid.len();
    if f.len() != n || g.len() != n {
        return Err(TransportError::ShapeMismatch(format!(
            "grid has {n} nodes, rhs {} and boundary data {}",
            f.len(),
            g.len()
        )));
    }
    if let Some(k) = inside_nodes(grid).find(|&k| !(f[k].is_finite() && f[k] > 0.0)) {
        return Err(TransportError::NonPositiveRhs { node: k, value: f[k] });
    }
    let fmax = inside_nodes(grid).map(|k| f[k]).fold(0.0, f64::max);
    let target = opts.tol * fmax;
    let nx = grid.nx();
    let (hx, hy) = (grid.hx(), grid.hy());
    let band = nx + 1;

    // Poisson start.
    let mut lap = BandMatrix::zeros(n, band, band);
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        if grid.kind(k) != NodeKind::Inside {
            lap.add(k, k, 1.0);
            rhs[k] = g[k];
            continue;
        }
        let (cx, cy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
        lap.add(k, k, -2.0 * (cx + cy));
        lap.add(k, k - 1, cx);
        lap.add(k, k + 1, cx);
        lap.add(k, k - nx, cy);
        lap.add(k, k + nx, cy);
        rhs[k] = 2.0 * f[k].sqrt();
    }
    let mut u = lap.solve(rhs).ok_or_else(|| TransportError::NonConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })?;

    let mut r = residual_vector(grid, &u, f);
    let mut rnorm = max_abs(&r);
    let mut it = 0;
    while rnorm >= target {
        if it == opts.max_iterations {
            return Err(TransportError::NonConvergence {
                iterations: it,
                residual: rnorm,
            });
        }
        it += 1;
        let mut jac = BandMatrix::zeros(n, band, band);
        let mut b = vec![0.0; n];
        for k in 0..n {
            if grid.kind(k) != NodeKind::Inside {
                jac.add(k, k, 1.0);
                continue;
            }
            let [uxx, uyy, uxy] = stencil_hessian(grid, &u, k);
            // cofactor [[uyy, -uxy], [-uxy, uxx]] clipped to eigenvalues ≥ floor
            let floor = 1e-3 * f[k].sqrt();
            let (l1, l2, v) = sym2_eigen(uyy, -uxy, uxx);
            let (l1, l2) = (l1.max(floor), l2.max(floor));
            let w = [-v[1], v[0]];
            let mxx = l1 * v[0] * v[0] + l2 * w[0] * w[0];
            let myy = l1 * v[1] * v[1] + l2 * w[1] * w[1];
            let mxy = l1 * v[0] * v[1] + l2 * w[0] * w[1];
            let (cx, cy, cxy) = (mxx / (hx * hx), myy / (hy * hy), 2.0 * mxy / (4.0 * hx * hy));
            jac.add(k, k, -2.0 * (cx + cy));
            jac.add(k, k - 1, cx);
            jac.add(k, k + 1, cx);
            jac.add(k, k - nx, cy);
            jac.add(k, k + nx, cy);
            jac.add(k, k + nx + 1, cxy);
            jac.add(k, k - nx - 1, cxy);
            jac.add(k, k + nx - 1, -cxy);
            jac.add(k, k - nx + 1, -cxy);
            b[k] = -r[k];
        }
        let du = jac.solve(b).ok_or(TransportError::NonConvergence {
            iterations: it,
            residual: rnorm,
        })?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + t * d).collect();
            let rt = residual_vector(grid, &trial, f);
            let nt = max_abs(&rt);
            if nt < (1.0 - 1e-4 * t) * rnorm || t < 1.0 / 64.0 {
                u = trial;
                r = rt;
                rnorm = nt;
                break;
            }
            t *= 0.5;
        }
    }
    Ok(ConvexPotentialGrid {
        grid: grid.clone(),
        boundary: g.to_vec(),
        u,
        iterations: it,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::Bounds;

    #[test]
    fn quadratic_is_a_fixed_point() {
        let grid = Grid2D::square_intervals(16, Bounds::unit()).unwrap();
        let exact = grid.sample(|x, y| 0.5 * (x * x + y * y));
        let f = vec![1.0; grid.len()];
        let sol = ma_solve(&grid, &f, &exact, &MaOptions::default()).unwrap();
        let err = sol.values().iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(max_abs(&ma_residual(&sol, &f).unwrap()) < 1e-10);
    }

    #[test]
    fn sym2_eigen_reconstructs() {
        let (a, b, c) = (2.0, -0.7, 0.3);
        let (lo, hi, v) = sym2_eigen(a, b, c);
        assert!((lo + hi - a - c).abs() < 1e-14 && (lo * hi - (a * c - b * b)).abs() < 1e-14);
        assert!((a * v[0] + b * v[1] - lo * v[0]).abs() < 1e-14);
    }

    #[test]
    fn negative_rhs_is_rejected() {
        let grid = Grid2D::square_intervals(8, Bounds::unit()).unwrap();
        let mut f = vec![1.0; grid.len()];
        f[grid.index(4, 4)] = -0.5;
        let g = vec![0.0; grid.len()];
        assert!(matches!(
            ma_solve(&grid, &f, &g, &MaOptions::default()),
            Err(TransportError::NonPositiveRhs { .. })
        ));
    }
}
