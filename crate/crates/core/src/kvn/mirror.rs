use std::path::Path;

use serde::Serialize;

use crate::bhk::InvertiblePolynomial;
use crate::transport::{brenier_discrete, plan_interpolate, Bounds, Grid2D, GridDensity, Method, TransportError};

use super::fibration::{fibration_sample, weighted_normalize, FiberPoint, SampleOptions};
use super::KvnError;

#[derive(Debug, Clone, PartialEq)]
pub struct MirrorOptions {
    pub samples: usize,
    /// Histogram bins per axis on `[0, 1]²`.
    pub bins: usize,
    pub path_times: Vec<f64>,
    pub sampling: SampleOptions,
}

impl Default for MirrorOptions {
    fn default() -> Self {
        MirrorOptions {
            samples: 200,
            bins: 32,
            path_times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            sampling: SampleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathPoint {
    pub t: f64,
    pub mean: [f64; 2],
    /// Exact `W₂²(μ₀, μ_t)` between the source histogram and the interpolant.
    #[serde(rename = "w2SqFromSource")]
    pub w2_sq_from_source: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirrorReport {
    pub polynomial: String,
    pub transpose: String,
    pub seed: u64,
    pub samples: usize,
    pub bins: usize,
    pub cost: f64,
    #[serde(rename = "marginalErrorSource")]
    pub marginal_error_source: f64,
    #[serde(rename = "marginalErrorTarget")]
    pub marginal_error_target: f64,
    #[serde(rename = "sourceMean")]
    pub source_mean: [f64; 2],
    #[serde(rename = "targetMean")]
    pub target_mean: [f64; 2],
    pub path: Vec<PathPoint>,
    #[serde(rename = "pathMonotone")]
    pub path_monotone: bool,
}

impl MirrorReport {
    /// `t,mean_x,mean_y,w2_sq_from_source` rows.
    pub fn write_path_csv(&self, path: &Path) -> Result<(), KvnError> {
        let io = |e: csv::Error| KvnError::Transport(TransportError::Io(e.to_string()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["t", "mean_x", "mean_y", "w2_sq_from_source"]).map_err(io)?;
        for p in &self.path {
            w.write_record([p.t, p.mean[0], p.mean[1], p.w2_sq_from_source].map(|v| format!("{v:.12e}")))
                .map_err(io)?;
        }
        w.flush().map_err(|e| KvnError::Transport(TransportError::Io(e.to_string())))
    }
}

/// Grid of bin centres on `[0, 1]²`.
pub fn density_space_grid(bins: usize) -> Result<Grid2D, KvnError> {
    let h = 0.5 / bins as f64;
    Ok(Grid2D::new(bins, bins, Bounds::new(h, 1.0 - h, h, 1.0 - h))?)
}

/// Normalized histogram of `(ρ₁, ρ₂)` after the weighted rescaling to `Σ ρ = 1`.
pub fn density_histogram(p: &InvertiblePolynomial, points: &[FiberPoint], bins: usize) -> Result<GridDensity, KvnError> {
    let grid = density_space_grid(bins)?;
    let mut mass = vec![0.0; grid.len()];
    let w = 1.0 / (points.len() as f64 * grid.cell_measure());
    for pt in points {
        let r = weighted_normalize(p, pt)?.rho;
        let bin = |x: f64| ((x * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        mass[grid.index(bin(r[0]), bin(r[1]))] += w;
    }
    Ok(GridDensity::new(grid, mass)?)
}

/// Samples `{W = 0}` and `{Wᵀ = 0}` with the same seed, histograms both in density
/// coordinates and transports one onto the other with the exact solver.
pub fn mirror_transport_demo(p: &InvertiblePolynomial, seed: u64, opts: &MirrorOptions) -> Result<MirrorReport, KvnError> {
    if p.n() < 2 {
        return Err(KvnError::InvalidParameter("the density space needs at least two variables".into()));
    }
    if opts.samples == 0 || opts.bins < 2 {
        return Err(KvnError::InvalidParameter(format!("{} samples, {} bins", opts.samples, opts.bins)));
    }
    let t = p.transpose_mirror();
    let mu = density_histogram(p, &fibration_sample(p, opts.samples, seed, &opts.sampling)?, opts.bins)?;
    let nu = density_histogram(&t, &fibration_sample(&t, opts.samples, seed, &opts.sampling)?, opts.bins)?;
    let sol = brenier_discrete(&mu, &nu, Method::ExactLp)?;
    let (marginal_error_source, marginal_error_target) = sol.plan.marginal_errors();
    let mut path = Vec::with_capacity(opts.path_times.len());
    for &s in &opts.path_times {
        let mt = plan_interpolate(&sol.plan, mu.grid(), s)?;
        let w2 = brenier_discrete(&mu, &mt, Method::ExactLp)?.plan.cost;
        path.push(PathPoint { t: s, mean: mt.mean(), w2_sq_from_source: w2 });
    }
    let path_monotone = path.windows(2).all(|w| w[0].t <= w[1].t && w[1].w2_sq_from_source >= w[0].w2_sq_from_source - 1e-12);
    Ok(MirrorReport {
        polynomial: p.to_string(),
        transpose: t.to_string(),
        seed,
        samples: opts.samples,
        bins: opts.bins,
        cost: sol.plan.cost,
        marginal_error_source,
        marginal_error_target,
        source_mean: mu.mean(),
        target_mean: nu.mean(),
        path,
        path_monotone,
    })
}
