use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::{Bounds, Grid2D};
use super::TransportError;

/// Nonnegative density sampled at grid nodes. Node `k` carries the atom
/// `mass[k] · hx · hy`, and `total` is the sum of those atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: Grid2D,
    mass: Vec<f64>,
    total: f64,
}

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    nx: usize,
    ny: usize,
    bounds: Bounds,
}

impl GridDensity {
    pub fn new(grid: Grid2D, mass: Vec<f64>) -> Result<Self, TransportError> {
        if mass.len() != grid.len() {
            return Err(TransportError::ShapeMismatch(format!(
                "{} values for a grid of {} nodes",
                mass.len(),
                grid.len()
            )));
        }
        if let Some(k) = mass.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(TransportError::InvalidDensity(format!("node {k} has mass {}", mass[k])));
        }
        let total = mass.iter().sum::<f64>() * grid.cell_measure();
        Ok(GridDensity { grid, mass, total })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self, TransportError> {
        let mass = grid.sample(f);
        Self::new(grid, mass)
    }

    /// Axis-aligned Gaussian `N(mean, diag(sigma²))`, normalized on the grid.
    pub fn gaussian(grid: Grid2D, mean: [f64; 2], sigma: [f64; 2]) -> Result<Self, TransportError> {
        Self::from_fn(grid, |x, y| gaussian_pdf(mean, sigma, x, y))?.normalized()
    }

    /// Builds a density from atoms (point, weight) by cloud-in-cell deposit.
    pub fn from_atoms(grid: Grid2D, atoms: &[([f64; 2], f64)]) -> Result<Self, TransportError> {
        let mut mass = vec![0.0; grid.len()];
        for &(p, w) in atoms {
            deposit(&grid, &mut mass, p, w);
        }
        let cell = grid.cell_measure();
        mass.iter_mut().for_each(|m| *m /= cell);
        Self::new(grid, mass)
    }

    pub fn normalized(&self) -> Result<Self, TransportError> {
        if !(self.total > 0.0) {
            return Err(TransportError::InvalidDensity("cannot normalize zero total mass".into()));
        }
        let mass = self.mass.iter().map(|m| m / self.total).collect();
        Self::new(self.grid.clone(), mass)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Atom weights `mass · hx · hy`.
    pub fn weights(&self) -> Vec<f64> {
        let cell = self.grid.cell_measure();
        self.mass.iter().map(|m| m * cell).collect()
    }

    /// Nodes with positive mass, as (node index, point, weight).
    pub fn support(&self) -> Vec<(usize, [f64; 2], f64)> {
        let cell = self.grid.cell_measure();
        (0..self.grid.len())
            .filter(|&k| self.mass[k] > 0.0)
            .map(|k| (k, self.grid.point(k), self.mass[k] * cell))
            .collect()
    }

    pub fn mean(&self) -> [f64; 2] {
        let w = self.weights();
        let mut m = [0.0; 2];
        for (k, wk) in w.iter().enumerate() {
            let p = self.grid.point(k);
            m[0] += wk * p[0];
            m[1] += wk * p[1];
        }
        [m[0] / self.total, m[1] / self.total]
    }

    /// `Σ |ρ_a − ρ_b| hx hy` on a common grid.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64, TransportError> {
        if !self.grid.same_shape(&other.grid) {
            return Err(TransportError::ShapeMismatch("densities live on different grids".into()));
        }
        let s: f64 = self.mass.iter().zip(&other.mass).map(|(a, b)| (a - b).abs()).sum();
        Ok(s * self.grid.cell_measure())
    }

    /// Writes `x,y,mass` rows with a header line.
    pub fn write_csv(&self, path: &Path) -> Result<(), TransportError> {
        let mut w = csv::Writer::from_path(path).map_err(io_err)?;
        w.write_record(["x", "y", "mass"]).map_err(io_err)?;
        for k in 0..self.grid.len() {
            let [x, y] = self.grid.point(k);
            w.write_record([format!("{x:.17e}"), format!("{y:.17e}"), format!("{:.17e}", self.mass[k])])
                .map_err(io_err)?;
        }
        w.flush().map_err(|e| TransportError::Io(e.to_string()))
    }

    /// Reads `x,y,mass` rows; the grid is recovered from the distinct coordinates,
    /// which must form a complete uniform lattice.
    pub fn read_csv(path: &Path) -> Result<Self, TransportError> {
        let mut r = csv::Reader::from_path(path).map_err(io_err)?;
        let mut rows = Vec::new();
        for rec in r.deserialize::<(f64, f64, f64)>() {
            rows.push(rec.map_err(|e| TransportError::Parse(e.to_string()))?);
        }
        let axis = |sel: fn(&(f64, f64, f64)) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(sel).collect();
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
            v
        };
        let xs = axis(|r| r.0);
        let ys = axis(|r| r.1);
        if xs.len() < 3 || ys.len() < 3 || xs.len() * ys.len() != rows.len() {
            return Err(TransportError::Parse(format!(
                "{} rows do not form a {}x{} lattice",
                rows.len(),
                xs.len(),
                ys.len()
            )));
        }
        let bounds = Bounds::new(xs[0], xs[xs.len() - 1], ys[0], ys[ys.len() - 1]);
        let grid = Grid2D::new(xs.len(), ys.len(), bounds)?;
        let mut mass = vec![f64::NAN; grid.len()];
        for (x, y, m) in rows {
            let i = ((x - bounds.x0) / grid.hx()).round() as usize;
            let j = ((y - bounds.y0) / grid.hy()).round() as usize;
            if i >= grid.nx() || j >= grid.ny() || (grid.x(i) - x).abs() > 1e-6 * grid.hx() {
                return Err(TransportError::Parse(format!("point ({x}, {y}) is off the lattice")));
            }
            mass[grid.index(i, j)] = m;
        }
        if mass.iter().any(|m| m.is_nan()) {
            return Err(TransportError::Parse("lattice has missing or duplicate nodes".into()));
        }
        Self::new(grid, mass)
    }

    /// One JSON header line `{nx, ny, bounds}` followed by row-major little-endian `f64`s.
    pub fn write_binary(&self, path: &Path) -> Result<(), TransportError> {
        let header = BinaryHeader {
            nx: self.grid.nx(),
            ny: self.grid.ny(),
            bounds: self.grid.bounds(),
        };
        let mut f = File::create(path).map_err(io_err)?;
        let line = serde_json::to_string(&header).map_err(|e| TransportError::Parse(e.to_string()))?;
        writeln!(f, "{line}").map_err(io_err)?;
        let bytes: Vec<u8> = self.mass.iter().flat_map(|m| m.to_le_bytes()).collect();
        f.write_all(&bytes).map_err(io_err)
    }

    pub fn read_binary(path: &Path) -> Result<Self, TransportError> {
        let mut r = BufReader::new(File::open(path).map_err(io_err)?);
        let mut line = String::new();
        r.read_line(&mut line).map_err(io_err)?;
        let header: BinaryHeader =
            serde_json::from_str(line.trim()).map_err(|e| TransportError::Parse(e.to_string()))?;
        let grid = Grid2D::new(header.nx, header.ny, header.bounds)?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(io_err)?;
        if bytes.len() != 8 * grid.len() {
            return Err(TransportError::Parse(format!(
                "expected {} bytes of data, found {}",
                8 * grid.len(),
                bytes.len()
            )));
        }
        let mass = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(grid, mass)
    }
}

pub fn gaussian_pdf(mean: [f64; 2], sigma: [f64; 2], x: f64, y: f64) -> f64 {
    let zx = (x - mean[0]) / sigma[0];
    let zy = (y - mean[1]) / sigma[1];
    (-0.5 * (zx * zx + zy * zy)).exp() / (2.0 * std::f64::consts::PI * sigma[0] * sigma[1])
}

/// Bilinear (cloud-in-cell) deposit of weight `w` at `p`, clamped to the grid.
pub(crate) fn deposit(grid: &Grid2D, acc: &mut [f64], p: [f64; 2], w: f64) {
    let b = grid.bounds();
    let (i, tx) = grid.locate(p[0], b.x0, grid.hx(), grid.nx());
    let (j, ty) = grid.locate(p[1], b.y0, grid.hy(), grid.ny());
    let k = grid.index(i, j);
    let nx = grid.nx();
    acc[k] += w * (1.0 - tx) * (1.0 - ty);
    acc[k + 1] += w * tx * (1.0 - ty);
    acc[k + nx] += w * (1.0 - tx) * ty;
    acc[k + nx + 1] += w * tx * ty;
}

fn io_err(e: impl std::fmt::Display) -> TransportError {
    TransportError::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid2D {
        Grid2D::new(9, 7, Bounds::new(-1.0, 1.0, 0.0, 1.5)).unwrap()
    }

    #[test]
    fn total_is_weighted_sum() {
        let d = GridDensity::from_fn(grid(), |x, y| 1.0 + x * x + y).unwrap();
        let direct: f64 = d.weights().iter().sum();
        assert!((d.total() - direct).abs() < 1e-12);
        assert!((d.normalized().unwrap().total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_mass_is_rejected() {
        let g = grid();
        let mut m = vec![1.0; g.len()];
        m[5] = -1e-3;
        assert!(matches!(GridDensity::new(g, m), Err(TransportError::InvalidDensity(_))));
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let d = GridDensity::gaussian(grid(), [0.1, 0.7], [0.4, 0.3]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let c = dir.path().join("d.csv");
        d.write_csv(&c).unwrap();
        let back = GridDensity::read_csv(&c).unwrap();
        assert_eq!(back.grid().nx(), 9);
        assert!(back.l1_distance(&d).unwrap() < 1e-14);
        let b = dir.path().join("d.bin");
        d.write_binary(&b).unwrap();
        assert_eq!(GridDensity::read_binary(&b).unwrap(), d);
    }

    #[test]
    fn atoms_deposit_preserves_mass() {
        let d = GridDensity::from_atoms(grid(), &[([0.13, 0.71], 0.25), ([0.9, 1.2], 0.75), ([5.0, -3.0], 1.0)])
            .unwrap();
        assert!((d.total() - 2.0).abs() < 1e-12);
    }
}
