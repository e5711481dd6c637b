use std::path::Path;

use nalgebra::DMatrix;

use super::sinkhorn::GridKernel;
use super::TransportError;

/// Storage for a coupling `π`.
#[derive(Debug, Clone)]
pub enum Coupling {
    Dense(DMatrix<f64>),
    /// `(source index, target index, mass)` with positive mass.
    Sparse(Vec<(usize, usize, f64)>),
    /// Entropic plan between grids, kept as dual potentials and a separable kernel.
    Factored(FactoredCoupling),
}

#[derive(Debug, Clone)]
pub struct FactoredCoupling {
    pub(crate) kernel: GridKernel,
    pub(crate) la: Vec<f64>,
    pub(crate) lb: Vec<f64>,
    pub(crate) f: Vec<f64>,
    pub(crate) g: Vec<f64>,
    pub(crate) eps: f64,
}

impl FactoredCoupling {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn log_entry(&self, i: usize, j: usize) -> f64 {
        let k = &self.kernel;
        let (i1, i2) = (i % k.nxs, i / k.nxs);
        let (j1, j2) = (j % k.nxt, j / k.nxt);
        let c = k.dx[i1 * k.nxt + j1] + k.dy[i2 * k.nyt + j2];
        self.la[i] + self.lb[j] + (self.f[i] + self.g[j] - c) / self.eps
    }

    fn rows(&self, xw: Option<fn(f64) -> f64>, yw: Option<fn(f64) -> f64>) -> Vec<f64> {
        let w: Vec<f64> = self.lb.iter().zip(&self.g).map(|(l, g)| l + g / self.eps).collect();
        let s = self.kernel.lse_apply(&w, self.eps, xw, yw);
        (0..s.len()).map(|i| (self.la[i] + self.f[i] / self.eps + s[i]).exp()).collect()
    }

    fn columns(&self) -> Vec<f64> {
        let w: Vec<f64> = self.la.iter().zip(&self.f).map(|(l, f)| l + f / self.eps).collect();
        let s = self.kernel.transposed().lse_apply(&w, self.eps, None, None);
        (0..s.len()).map(|j| (self.lb[j] + self.g[j] / self.eps + s[j]).exp()).collect()
    }

    /// `Σ π_ij |x_i − y_j|²`, split along the two axes.
    pub(crate) fn transport_cost(&self) -> f64 {
        let id: fn(f64) -> f64 = |d| d;
        self.rows(Some(id), None).iter().sum::<f64>() + self.rows(None, Some(id)).iter().sum::<f64>()
    }
}

/// Coupling between two weighted point sets together with its transport cost.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub source: Vec<[f64; 2]>,
    pub source_mass: Vec<f64>,
    pub target: Vec<[f64; 2]>,
    pub target_mass: Vec<f64>,
    pub coupling: Coupling,
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_marginal(&self) -> Vec<f64> {
        match &self.coupling {
            Coupling::Dense(p) => (0..p.nrows()).map(|i| p.row(i).sum()).collect(),
            Coupling::Sparse(t) => {
                let mut r = vec![0.0; self.source.len()];
                t.iter().for_each(|&(i, _, m)| r[i] += m);
                r
            }
            Coupling::Factored(fc) => fc.rows(None, None),
        }
    }

    pub fn column_marginal(&self) -> Vec<f64> {
        match &self.coupling {
            Coupling::Dense(p) => (0..p.ncols()).map(|j| p.column(j).sum()).collect(),
            Coupling::Sparse(t) => {
                let mut c = vec![0.0; self.target.len()];
                t.iter().for_each(|&(_, j, m)| c[j] += m);
                c
            }
            Coupling::Factored(fc) => fc.columns(),
        }
    }

    /// Largest absolute deviation of the row and column sums from the prescribed masses.
    pub fn marginal_errors(&self) -> (f64, f64) {
        let dev = |got: Vec<f64>, want: &[f64]| got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (dev(self.row_marginal(), &self.source_mass), dev(self.column_marginal(), &self.target_mass))
    }

    pub fn marginal_error(&self) -> f64 {
        let (r, c) = self.marginal_errors();
        r.max(c)
    }

    /// Entries above `threshold` as `(i, j, π_ij)`.
    pub fn triplets(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        match &self.coupling {
            Coupling::Dense(p) => {
                let mut out = Vec::new();
                for i in 0..p.nrows() {
                    for j in 0..p.ncols() {
                        if p[(i, j)] > threshold {
                            out.push((i, j, p[(i, j)]));
                        }
                    }
                }
                out
            }
            Coupling::Sparse(t) => t.iter().copied().filter(|e| e.2 > threshold).collect(),
            Coupling::Factored(fc) => {
                let mut out = Vec::new();
                for i in 0..self.source.len() {
                    for j in 0..self.target.len() {
                        let v = fc.log_entry(i, j).exp();
                        if v > threshold {
                            out.push((i, j, v));
                        }
                    }
                }
                out
            }
        }
    }

    /// Writes `i,j,mass` rows for entries above `threshold`.
    pub fn write_triplets_csv(&self, path: &Path, threshold: f64) -> Result<(), TransportError> {
        let io = |e: csv::Error| TransportError::Io(e.to_string());
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["i", "j", "mass"]).map_err(io)?;
        for (i, j, m) in self.triplets(threshold) {
            w.write_record([i.to_string(), j.to_string(), format!("{m:.17e}")]).map_err(io)?;
        }
        w.flush().map_err(|e| TransportError::Io(e.to_string()))
    }

    /// Barycentric projection `x_i ↦ Σ_j π_ij y_j / Σ_j π_ij`; `None` for rows
    /// without mass.
    pub fn barycentric_map(&self) -> Vec<Option<[f64; 2]>> {
        let mut acc = vec![[0.0; 3]; self.source.len()];
        for (i, j, m) in self.triplets(0.0) {
            let y = self.target[j];
            acc[i][0] += m * y[0];
            acc[i][1] += m * y[1];
            acc[i][2] += m;
        }
        acc.into_iter()
            .map(|[x, y, m]| if m > 0.0 { Some([x / m, y / m]) } else { None })
            .collect()
    }
}
