use std::fmt;
use std::sync::Arc;

type Scalar2 = dyn Fn(f64, f64) -> f64 + Send + Sync;
type Gradient2 = dyn Fn(f64, f64) -> (f64, f64) + Send + Sync;

/// Closed-form flows recognized by the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    Zero,
    /// `H = (q² + p²)/2`: characteristics are rigid rotations.
    Harmonic,
}

/// `H(q, p)` with analytic partials `(H_q, H_p)`.
#[derive(Clone)]
pub struct Hamiltonian {
    name: String,
    h: Arc<Scalar2>,
    grad: Arc<Gradient2>,
    q_period: Option<f64>,
    closed_form: Option<ClosedForm>,
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("name", &self.name)
            .field("q_period", &self.q_period)
            .field("closed_form", &self.closed_form)
            .finish()
    }
}

impl Hamiltonian {
    pub fn new(
        name: impl Into<String>,
        h: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Hamiltonian { name: name.into(), h: Arc::new(h), grad: Arc::new(grad), q_period: None, closed_form: None }
    }

    /// Declares `H` periodic in `q`; the evolution then wraps the `q` axis.
    pub fn with_q_period(mut self, period: f64) -> Self {
        self.q_period = Some(period);
        self
    }

    pub fn zero() -> Self {
        let mut h = Self::new("zero", |_, _| 0.0, |_, _| (0.0, 0.0));
        h.closed_form = Some(ClosedForm::Zero);
        h
    }

    pub fn harmonic() -> Self {
        let mut h = Self::new("harmonic", |q, p| 0.5 * (q * q + p * p), |q, p| (q, p));
        h.closed_form = Some(ClosedForm::Harmonic);
        h
    }

    /// `H = p²/2 − cos q`, periodic in `q` with period `2π`.
    pub fn pendulum() -> Self {
        Self::new("pendulum", |q, p| 0.5 * p * p - q.cos(), |q, p| (q.sin(), p)).with_q_period(std::f64::consts::TAU)
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "zero" => Some(Self::zero()),
            "harmonic" => Some(Self::harmonic()),
            "pendulum" => Some(Self::pendulum()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, q: f64, p: f64) -> f64 {
        (self.h)(q, p)
    }

    /// `(∂H/∂q, ∂H/∂p)`.
    pub fn gradient(&self, q: f64, p: f64) -> (f64, f64) {
        (self.grad)(q, p)
    }

    /// Hamilton's vector field `(q̇, ṗ) = (H_p, −H_q)`.
    pub fn velocity(&self, q: f64, p: f64) -> (f64, f64) {
        let (hq, hp) = self.gradient(q, p);
        (hp, -hq)
    }

    pub fn q_period(&self) -> Option<f64> {
        self.q_period
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    /// Largest deviation of the analytic partials from central differences at `points`.
    pub fn partials_fd_error(&self, points: &[[f64; 2]]) -> f64 {
        let h = 1e-5;
        points
            .iter()
            .map(|&[q, p]| {
                let fq = (self.value(q + h, p) - self.value(q - h, p)) / (2.0 * h);
                let fp = (self.value(q, p + h) - self.value(q, p - h)) / (2.0 * h);
                let (aq, ap) = self.gradient(q, p);
                (fq - aq).abs().max((fp - ap).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Image of `(q, p)` under the flow for time `t` (negative `t` runs backward), `steps` RK4 steps.
    pub(crate) fn flow(&self, q: f64, p: f64, t: f64, steps: usize) -> (f64, f64) {
        let dt = t / steps as f64;
        let (mut q, mut p) = (q, p);
        for _ in 0..steps {
            let k1 = self.velocity(q, p);
            let k2 = self.velocity(q + 0.5 * dt * k1.0, p + 0.5 * dt * k1.1);
            let k3 = self.velocity(q + 0.5 * dt * k2.0, p + 0.5 * dt * k2.1);
            let k4 = self.velocity(q + dt * k3.0, p + dt * k3.1);
            q += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            p += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        (q, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partials_match_differences() {
        let pts: Vec<[f64; 2]> = (0..25).map(|k| [-3.0 + 0.25 * k as f64, 2.0 - 0.17 * k as f64]).collect();
        for h in [Hamiltonian::zero(), Hamiltonian::harmonic(), Hamiltonian::pendulum()] {
            assert!(h.partials_fd_error(&pts) < 1e-6, "{}", h.name());
        }
    }

    #[test]
    fn harmonic_flow_is_rotation() {
        let h = Hamiltonian::harmonic();
        let (q, p) = h.flow(1.0, 0.5, std::f64::consts::FRAC_PI_2, 200);
        assert!((q - 0.5).abs() < 1e-10 && (p + 1.0).abs() < 1e-10);
    }
}
