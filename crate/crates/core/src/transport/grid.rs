use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::TransportError;

/// Role of a node in a (possibly masked) grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Inside,
    Boundary,
    Outside,
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Bounds {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Bounds { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Bounds::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn square(half_width: f64) -> Self {
        Bounds::new(-half_width, half_width, -half_width, half_width)
    }
}

/// Node-centred uniform grid with `nx × ny` nodes; node `(i, j)` sits at
/// `(x0 + i hx, y0 + j hy)` and carries the cell measure `hx hy`.
/// Storage is row-major in `i`: index `i + j * nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    bounds: Bounds,
    hx: f64,
    hy: f64,
    mask: Vec<NodeKind>,
}

impl Grid2D {
    /// Full rectangle: edge nodes are boundary, the rest inside.
    pub fn new(nx: usize, ny: usize, bounds: Bounds) -> Result<Self, TransportError> {
        Self::with_domain(nx, ny, bounds, |_, _| true)
    }

    /// `n` intervals per axis (`n + 1` nodes).
    pub fn square_intervals(n: usize, bounds: Bounds) -> Result<Self, TransportError> {
        Self::new(n + 1, n + 1, bounds)
    }

    /// Masked grid for the subdomain `{inside(x, y)}`: a node is inside when it and its
    /// four neighbours satisfy the predicate, boundary when it is not inside but
    /// touches an inside node (8-neighbourhood), and outside otherwise.
    pub fn with_domain(
        nx: usize,
        ny: usize,
        bounds: Bounds,
        inside: impl Fn(f64, f64) -> bool,
    ) -> Result<Self, TransportError> {
        if nx < 3 || ny < 3 {
            return Err(TransportError::InvalidGrid(format!("need at least 3x3 nodes, got {nx}x{ny}")));
        }
        if !(bounds.x1 > bounds.x0 && bounds.y1 > bounds.y0) {
            return Err(TransportError::InvalidGrid("empty bounds".into()));
        }
        let hx = (bounds.x1 - bounds.x0) / (nx - 1) as f64;
        let hy = (bounds.y1 - bounds.y0) / (ny - 1) as f64;
        let pos = |i: usize, j: usize| (bounds.x0 + i as f64 * hx, bounds.y0 + j as f64 * hy);
        let pred: Vec<bool> = (0..nx * ny)
            .map(|k| {
                let (x, y) = pos(k % nx, k / nx);
                inside(x, y)
            })
            .collect();
        let mut mask = vec![NodeKind::Outside; nx * ny];
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = i + j * nx;
                if pred[k] && pred[k - 1] && pred[k + 1] && pred[k - nx] && pred[k + nx] {
                    mask[k] = NodeKind::Inside;
                }
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                let k = i + j * nx;
                if mask[k] == NodeKind::Inside {
                    continue;
                }
                let touches = (-1i64..=1).any(|dj| {
                    (-1i64..=1).any(|di| {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        a >= 0
                            && b >= 0
                            && (a as usize) < nx
                            && (b as usize) < ny
                            && mask[a as usize + b as usize * nx] == NodeKind::Inside
                    })
                });
                if touches {
                    mask[k] = NodeKind::Boundary;
                }
            }
        }
        let grid = Grid2D {
            nx,
            ny,
            bounds,
            hx,
            hy,
            mask,
        };
        if !grid.inside_connected() {
            return Err(TransportError::InvalidGrid("inside nodes are not connected".into()));
        }
        Ok(grid)
    }

    fn inside_connected(&self) -> bool {
        let inside: Vec<usize> = (0..self.len()).filter(|&k| self.mask[k] == NodeKind::Inside).collect();
        let Some(&start) = inside.first() else {
            return false;
        };
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 0;
        while let Some(k) = queue.pop_front() {
            count += 1;
            let (i, j) = (k % self.nx, k / self.nx);
            let mut nbrs = Vec::with_capacity(4);
            if i > 0 {
                nbrs.push(k - 1);
            }
            if i + 1 < self.nx {
                nbrs.push(k + 1);
            }
            if j > 0 {
                nbrs.push(k - self.nx);
            }
            if j + 1 < self.ny {
                nbrs.push(k + self.nx);
            }
            for m in nbrs {
                if !seen[m] && self.mask[m] == NodeKind::Inside {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        count == inside.len()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn cell_measure(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.nx
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.bounds.x0 + i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.bounds.y0 + j as f64 * self.hy
    }

    pub fn point(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.coords(k);
        [self.x(i), self.y(j)]
    }

    pub fn kind(&self, k: usize) -> NodeKind {
        self.mask[k]
    }

    pub fn mask(&self) -> &[NodeKind] {
        &self.mask
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.bounds == other.bounds
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let [x, y] = self.point(k);
                f(x, y)
            })
            .collect()
    }

    /// Bilinear interpolation of node values at `(x, y)`, clamped to the bounds.
    pub fn interpolate(&self, values: &[f64], x: f64, y: f64) -> f64 {
        let (i, tx) = self.locate(x, self.bounds.x0, self.hx, self.nx);
        let (j, ty) = self.locate(y, self.bounds.y0, self.hy, self.ny);
        let v = |a: usize, b: usize| values[a + b * self.nx];
        (1.0 - tx) * (1.0 - ty) * v(i, j)
            + tx * (1.0 - ty) * v(i + 1, j)
            + (1.0 - tx) * ty * v(i, j + 1)
            + tx * ty * v(i + 1, j + 1)
    }

    /// Cell index and fractional offset along one axis, clamped to the grid.
    pub(crate) fn locate(&self, s: f64, origin: f64, h: f64, n: usize) -> (usize, f64) {
        let u = ((s - origin) / h).clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).min(n - 2);
        (i, u - i as f64)
    }
}
