use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::transport::{Grid2D, GridDensity};

use super::field::{density_projection, WaveField};
use super::hamiltonian::{ClosedForm, Hamiltonian};
use super::KvnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Upper bound on the RK4 step along characteristics.
    pub max_step: f64,
    /// Per-step displacement limit in cells; exceeding it subdivides the step.
    pub max_cells_per_step: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { max_step: 0.02, max_cells_per_step: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionMethod {
    Identity,
    /// Exact rotation by a quarter-turn permutation and three Fourier shears.
    SpectralRotation,
    /// Backward RK4 characteristics and Hermite bicubic pullback.
    SemiLagrangian,
}

#[derive(Debug, Clone)]
pub struct Evolution<T> {
    pub field: T,
    pub method: EvolutionMethod,
    pub rk_steps: usize,
    /// CFL subdivisions and fallbacks.
    pub warnings: Vec<String>,
}

/// `ψ_t(z) = ψ(Φ_{−t}(z))` with `Φ` the Hamiltonian flow `q̇ = H_p, ṗ = −H_q`.
pub fn liouville_evolve(
    psi: &WaveField,
    h: &Hamiltonian,
    t: f64,
    opts: &EvolveOptions,
) -> Result<Evolution<WaveField>, KvnError> {
    Propagator::new(psi.grid(), h, t, opts)?.apply(psi)
}

/// The same pullback applied to a density.
pub fn evolve_density(
    rho: &GridDensity,
    h: &Hamiltonian,
    t: f64,
    opts: &EvolveOptions,
) -> Result<Evolution<GridDensity>, KvnError> {
    Propagator::new(rho.grid(), h, t, opts)?.apply_density(rho)
}

/// Pullback operator `ψ ↦ ψ ∘ Φ_{−t}` on a fixed grid. Characteristics are traced once
/// and reused for every field.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid2D,
    kind: Kind,
    method: EvolutionMethod,
    rk_steps: usize,
    warnings: Vec<String>,
}

#[derive(Debug, Clone)]
enum Kind {
    Identity,
    Rotation(f64),
    /// Backward foot of each node in index coordinates.
    Pullback { feet: Vec<(f64, f64)>, periodic: bool },
}

impl Propagator {
    pub fn new(grid: &Grid2D, h: &Hamiltonian, t: f64, opts: &EvolveOptions) -> Result<Self, KvnError> {
        if !t.is_finite() {
            return Err(KvnError::InvalidParameter(format!("t = {t}")));
        }
        let mut warnings = Vec::new();
        let done = |kind, method, warnings| Ok(Propagator { grid: grid.clone(), kind, method, rk_steps: 0, warnings });
        match h.closed_form() {
            Some(ClosedForm::Zero) => return done(Kind::Identity, EvolutionMethod::Identity, warnings),
            Some(ClosedForm::Harmonic) => {
                if symmetric_square(grid) {
                    return done(Kind::Rotation(t), EvolutionMethod::SpectralRotation, warnings);
                }
                warnings.push("grid is not a centred square; harmonic flow falls back to characteristics".into());
            }
            None => {}
        }
        let periodic = match h.q_period() {
            Some(period) => {
                let span = grid.nx() as f64 * grid.hx();
                if (span - period).abs() > 1e-9 * period {
                    return Err(KvnError::InvalidGrid(format!("q axis spans {span}, the Hamiltonian has period {period}")));
                }
                true
            }
            None => false,
        };
        if t == 0.0 {
            return done(Kind::Identity, EvolutionMethod::Identity, warnings);
        }
        let (hx, hy) = (grid.hx(), grid.hy());
        let cells_per_time = (0..grid.len())
            .map(|k| {
                let x = grid.point(k);
                let (vq, vp) = h.velocity(x[0], x[1]);
                (vq.abs() / hx).max(vp.abs() / hy)
            })
            .fold(0.0, f64::max);
        let base = (t.abs() / opts.max_step).ceil().max(1.0) as usize;
        let cfl = (t.abs() * cells_per_time / opts.max_cells_per_step).ceil() as usize;
        let steps = if cfl > base {
            warnings.push(format!(
                "CFL: {base} steps would move {:.2} cells per step; using {cfl}",
                t.abs() * cells_per_time / base as f64
            ));
            cfl
        } else {
            base
        };
        let b = grid.bounds();
        let feet = (0..grid.len())
            .map(|k| {
                let x = grid.point(k);
                let (q, p) = h.flow(x[0], x[1], -t, steps);
                ((q - b.x0) / hx, (p - b.y0) / hy)
            })
            .collect();
        Ok(Propagator {
            grid: grid.clone(),
            kind: Kind::Pullback { feet, periodic },
            method: EvolutionMethod::SemiLagrangian,
            rk_steps: steps,
            warnings,
        })
    }

    pub fn method(&self) -> EvolutionMethod {
        self.method
    }

    fn apply_values(&self, v: &[Complex64]) -> Vec<Complex64> {
        match &self.kind {
            Kind::Identity => v.to_vec(),
            Kind::Rotation(t) => spectral_rotation(&self.grid, v, *t),
            Kind::Pullback { feet, periodic } => {
                let interp = Hermite::new(&self.grid, v, *periodic);
                feet.iter().map(|&(x, y)| interp.eval(x, y)).collect()
            }
        }
    }

    fn check(&self, grid: &Grid2D) -> Result<(), KvnError> {
        if !self.grid.same_shape(grid) {
            return Err(KvnError::ShapeMismatch("field and propagator use different grids".into()));
        }
        Ok(())
    }

    pub fn apply(&self, psi: &WaveField) -> Result<Evolution<WaveField>, KvnError> {
        self.check(psi.grid())?;
        let field = WaveField::new(psi.grid().clone(), self.apply_values(psi.values()))?;
        Ok(Evolution { field, method: self.method, rk_steps: self.rk_steps, warnings: self.warnings.clone() })
    }

    /// Density pullback without clipping.
    pub fn apply_real(&self, rho: &GridDensity) -> Result<Vec<f64>, KvnError> {
        self.check(rho.grid())?;
        let c: Vec<Complex64> = rho.mass().iter().map(|&m| Complex64::new(m, 0.0)).collect();
        Ok(self.apply_values(&c).iter().map(|z| z.re).collect())
    }

    /// Density pullback; interpolation undershoots are clipped to zero and reported
    /// when they exceed `1e-12` in mass.
    pub fn apply_density(&self, rho: &GridDensity) -> Result<Evolution<GridDensity>, KvnError> {
        let raw = self.apply_real(rho)?;
        let mut warnings = self.warnings.clone();
        let clipped: f64 = raw.iter().filter(|x| **x < 0.0).map(|x| -x).sum::<f64>() * rho.grid().cell_measure();
        if clipped > 1e-12 {
            warnings.push(format!("clipped {clipped:.3e} of negative interpolated mass"));
        }
        let mass = raw.into_iter().map(|x| x.max(0.0)).collect();
        Ok(Evolution { field: GridDensity::new(rho.grid().clone(), mass)?, method: self.method, rk_steps: self.rk_steps, warnings })
    }
}

fn symmetric_square(grid: &Grid2D) -> bool {
    let b = grid.bounds();
    let tol = 1e-12 * (b.x1 - b.x0).abs().max(1.0);
    grid.nx() == grid.ny()
        && (b.x0 + b.x1).abs() < tol
        && (b.y0 + b.y1).abs() < tol
        && (b.x0 - b.y0).abs() < tol
}

/// Bicubic Hermite interpolation in index coordinates with fourth-order central
/// differences for the nodal derivatives. The `q` axis wraps when `periodic`;
/// otherwise values beyond the grid are zero.
struct Hermite {
    nx: usize,
    ny: usize,
    periodic: bool,
    f: Vec<Complex64>,
    fx: Vec<Complex64>,
    fy: Vec<Complex64>,
    fxy: Vec<Complex64>,
}

impl Hermite {
    fn new(grid: &Grid2D, v: &[Complex64], periodic: bool) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut s = Hermite { nx, ny, periodic, f: v.to_vec(), fx: vec![], fy: vec![], fxy: vec![] };
        s.fx = s.diff(&s.f, true);
        s.fy = s.diff(&s.f, false);
        s.fxy = s.diff(&s.fx, false);
        s
    }

    fn at(&self, g: &[Complex64], i: i64, j: i64) -> Complex64 {
        let i = if self.periodic {
            i.rem_euclid(self.nx as i64)
        } else if i < 0 || i >= self.nx as i64 {
            return Complex64::new(0.0, 0.0);
        } else {
            i
        };
        if j < 0 || j >= self.ny as i64 {
            return Complex64::new(0.0, 0.0);
        }
        g[i as usize + j as usize * self.nx]
    }

    fn diff(&self, g: &[Complex64], along_x: bool) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for j in 0..self.ny as i64 {
            for i in 0..self.nx as i64 {
                let s = |d: i64| if along_x { self.at(g, i + d, j) } else { self.at(g, i, j + d) };
                out[i as usize + j as usize * self.nx] = (8.0 * (s(1) - s(-1)) - (s(2) - s(-2))) / 12.0;
            }
        }
        out
    }

    fn eval(&self, x: f64, y: f64) -> Complex64 {
        let (ix, iy) = (x.floor(), y.floor());
        let basis = |t: f64| {
            let (t2, t3) = (t * t, t * t * t);
            [2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t, -2.0 * t3 + 3.0 * t2, t3 - t2]
        };
        let (hx, hy) = (basis(x - ix), basis(y - iy));
        let (ix, iy) = (ix as i64, iy as i64);
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                let (i, j) = (ix + a as i64, iy + b as i64);
                let (vx, dx, vy, dy) = (hx[2 * a], hx[2 * a + 1], hy[2 * b], hy[2 * b + 1]);
                acc += vx * vy * self.at(&self.f, i, j)
                    + dx * vy * self.at(&self.fx, i, j)
                    + vx * dy * self.at(&self.fy, i, j)
                    + dx * dy * self.at(&self.fxy, i, j);
            }
        }
        acc
    }
}

/// `f ∘ R(t)` with `R(t) = [[cos t, −sin t], [sin t, cos t]]`, the backward harmonic
/// flow. Quarter turns permute nodes; the remainder `|r| ≤ π/4` is three shears,
/// each an exact Fourier phase shift along one axis.
fn spectral_rotation(grid: &Grid2D, v: &[Complex64], t: f64) -> Vec<Complex64> {
    let n = grid.nx();
    let theta = t.rem_euclid(TAU);
    let quarters = (theta / FRAC_PI_2).round();
    let r = theta - quarters * FRAC_PI_2;
    let mut f = v.to_vec();
    for _ in 0..(quarters as usize % 4) {
        // (f ∘ R(π/2))(q, p) = f(−p, q)
        let mut g = vec![Complex64::new(0.0, 0.0); f.len()];
        for j in 0..n {
            for i in 0..n {
                g[i + j * n] = f[(n - 1 - j) + i * n];
            }
        }
        f = g;
    }
    if r != 0.0 {
        let (a, b) = (-(0.5 * r).tan(), r.sin());
        let h = grid.hx();
        let coord: Vec<f64> = (0..n).map(|i| grid.x(i)).collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let wave: Vec<f64> = (0..n)
            .map(|m| {
                let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                TAU * m / (n as f64 * h)
            })
            .collect();
        let shear = |f: &mut Vec<Complex64>, along_q: bool, coef: f64| {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for l in 0..n {
                let idx = |m: usize| if along_q { m + l * n } else { l + m * n };
                for m in 0..n {
                    line[m] = f[idx(m)];
                }
                fwd.process(&mut line);
                let s = coef * coord[l];
                for m in 0..n {
                    line[m] *= Complex64::from_polar(1.0 / n as f64, wave[m] * s);
                }
                inv.process(&mut line);
                for m in 0..n {
                    f[idx(m)] = line[m];
                }
            }
        };
        // f(q + a p, p), then f(q, p + b q), then f(q + a p, p)
        shear(&mut f, true, a);
        shear(&mut f, false, b);
        shear(&mut f, true, a);
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitaritySample {
    pub t: f64,
    /// `|‖U_tψ‖² − ‖ψ‖²|`.
    pub mass_drift: f64,
    /// `|⟨U_tψ, U_tφ⟩ − ⟨ψ, φ⟩|` when a partner field is given.
    pub inner_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitarityReport {
    pub samples: Vec<UnitaritySample>,
    pub max_mass_drift: f64,
    pub max_inner_drift: f64,
}

pub fn unitarity_check(
    psi: &WaveField,
    partner: Option<&WaveField>,
    h: &Hamiltonian,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<UnitarityReport, KvnError> {
    let m0 = psi.norm_sqr();
    let ip0 = partner.map(|phi| psi.inner(phi)).transpose()?;
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let u = Propagator::new(psi.grid(), h, t, opts)?;
        let a = u.apply(psi)?.field;
        let inner_drift = match (partner, ip0) {
            (Some(phi), Some(ip0)) => Some((a.inner(&u.apply(phi)?.field)? - ip0).norm()),
            _ => None,
        };
        samples.push(UnitaritySample { t, mass_drift: (a.norm_sqr() - m0).abs(), inner_drift });
    }
    let max_mass_drift = samples.iter().map(|s| s.mass_drift).fold(0.0, f64::max);
    let max_inner_drift = samples.iter().filter_map(|s| s.inner_drift).fold(0.0, f64::max);
    Ok(UnitarityReport { samples, max_mass_drift, max_inner_drift })
}

/// `Σ | |U_tψ|² − U_t|ψ|² | h_q h_p`, with the density evolved unclipped.
pub fn projection_commutation(psi: &WaveField, h: &Hamiltonian, t: f64, opts: &EvolveOptions) -> Result<f64, KvnError> {
    let u = Propagator::new(psi.grid(), h, t, opts)?;
    let a = u.apply(psi)?.field;
    let b = u.apply_real(&density_projection(psi))?;
    Ok(a.values().iter().zip(&b).map(|(z, r)| (z.norm_sqr() - r).abs()).sum::<f64>() * psi.grid().cell_measure())
}
