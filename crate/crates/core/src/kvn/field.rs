use num_complex::Complex64;

use crate::transport::{Bounds, Grid2D, GridDensity};

use super::KvnError;

/// Cell-centred `n_q × n_p` phase-space grid on `[q0, q1) × [p0, p1)`: node `i`
/// sits at `q0 + (i + ½) h_q`, so a periodic `q` axis has period `q1 − q0`.
pub fn phase_grid(n_q: usize, n_p: usize, q: (f64, f64), p: (f64, f64)) -> Result<Grid2D, KvnError> {
    if n_q < 4 || n_p < 4 || !(q.1 > q.0) || !(p.1 > p.0) {
        return Err(KvnError::InvalidGrid(format!("{n_q}x{n_p} cells on [{}, {}) x [{}, {})", q.0, q.1, p.0, p.1)));
    }
    let (hq, hp) = ((q.1 - q.0) / n_q as f64, (p.1 - p.0) / n_p as f64);
    let b = Bounds::new(q.0 + 0.5 * hq, q.1 - 0.5 * hq, p.0 + 0.5 * hp, p.1 - 0.5 * hp);
    Ok(Grid2D::new(n_q, n_p, b)?)
}

/// Square grid `[−a, a)²` with `n` cells per axis.
pub fn symmetric_phase_grid(n: usize, half_width: f64) -> Result<Grid2D, KvnError> {
    phase_grid(n, n, (-half_width, half_width), (-half_width, half_width))
}

/// Complex wave function sampled at the nodes of a phase-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: Grid2D,
    psi: Vec<Complex64>,
}

impl WaveField {
    pub fn new(grid: Grid2D, psi: Vec<Complex64>) -> Result<Self, KvnError> {
        if psi.len() != grid.len() {
            return Err(KvnError::ShapeMismatch(format!("{} values for {} nodes", psi.len(), grid.len())));
        }
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(KvnError::InvalidField("non-finite amplitude".into()));
        }
        Ok(WaveField { grid, psi })
    }

    pub fn zero(grid: Grid2D) -> Self {
        let n = grid.len();
        WaveField { grid, psi: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Result<Self, KvnError> {
        let psi = (0..grid.len()).map(|k| {
            let x = grid.point(k);
            f(x[0], x[1])
        });
        let psi = psi.collect();
        Self::new(grid, psi)
    }

    /// `exp(−|z − z₀|²/(4σ²)) · e^{ı k q}`, normalized. `|ψ|²` is then a Gaussian of
    /// standard deviation `σ`.
    pub fn gaussian_packet(grid: Grid2D, center: [f64; 2], sigma: f64, k: f64) -> Result<Self, KvnError> {
        Self::from_fn(grid, |q, p| {
            let r2 = (q - center[0]).powi(2) + (p - center[1]).powi(2);
            Complex64::from_polar((-r2 / (4.0 * sigma * sigma)).exp(), k * q)
        })?
        .normalized()
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.psi
    }

    /// `Σ |ψ|² h_q h_p`.
    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_measure()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self, KvnError> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(KvnError::InvalidField("cannot normalize a zero field".into()));
        }
        Ok(WaveField { grid: self.grid.clone(), psi: self.psi.iter().map(|z| z / n).collect() })
    }

    fn check_grid(&self, other: &WaveField) -> Result<(), KvnError> {
        if !self.grid.same_shape(&other.grid) {
            return Err(KvnError::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `⟨ψ, φ⟩ = Σ conj(ψ) φ h_q h_p`.
    pub fn inner(&self, other: &WaveField) -> Result<Complex64, KvnError> {
        self.check_grid(other)?;
        let s: Complex64 = self.psi.iter().zip(&other.psi).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_measure())
    }

    /// Largest nodewise `|ψ − φ|`.
    pub fn max_abs_diff(&self, other: &WaveField) -> Result<f64, KvnError> {
        self.check_grid(other)?;
        Ok(self.psi.iter().zip(&other.psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// `ρ = |ψ|²` nodewise; the total mass is `‖ψ‖²`.
pub fn density_projection(psi: &WaveField) -> GridDensity {
    let mass = psi.psi.iter().map(|z| z.norm_sqr()).collect();
    GridDensity::new(psi.grid.clone(), mass).expect("squared moduli of finite amplitudes")
}

/// Global phase rotation `ψ ↦ e^{ıθ} ψ`.
pub fn torus_act(psi: &WaveField, theta: f64) -> WaveField {
    let u = Complex64::from_polar(1.0, theta);
    WaveField { grid: psi.grid.clone(), psi: psi.psi.iter().map(|z| u * z).collect() }
}

/// Same fibre of `ψ ↦ |ψ|²`: densities agree nodewise within `1e-12`.
pub fn fiber_equivalent(a: &WaveField, b: &WaveField) -> Result<bool, KvnError> {
    a.check_grid(b)?;
    Ok(a.psi.iter().zip(&b.psi).all(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs() <= 1e-12))
}
