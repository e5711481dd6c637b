use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bhk::{weights, InvertiblePolynomial};

use super::KvnError;

/// A point `ψ` on `{W = 0}` with its density coordinates `ρ_i = |ψ_i|²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberPoint {
    #[serde(serialize_with = "serialize_complex")]
    pub psi: Vec<Complex64>,
    pub rho: Vec<f64>,
}

fn serialize_complex<S: serde::Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

impl FiberPoint {
    pub fn new(psi: Vec<Complex64>) -> Self {
        let rho = psi.iter().map(|z| z.norm_sqr()).collect();
        FiberPoint { psi, rho }
    }

    /// Per-coordinate unit phases `ψ_i ↦ e^{ıθ_i} ψ_i`; `ρ` is carried over unchanged.
    pub fn torus_act(&self, theta: &[f64]) -> Result<FiberPoint, KvnError> {
        if theta.len() != self.psi.len() {
            return Err(KvnError::ShapeMismatch(format!("{} phases for {} coordinates", theta.len(), self.psi.len())));
        }
        let psi = self.psi.iter().zip(theta).map(|(z, &t)| Complex64::from_polar(1.0, t) * z).collect();
        Ok(FiberPoint { psi, rho: self.rho.clone() })
    }
}

/// `W(ψ) = Σ_i Π_j ψ_j^{E_ij}` (unit coefficients).
pub fn evaluate(p: &InvertiblePolynomial, psi: &[Complex64]) -> Complex64 {
    p.exponents()
        .iter()
        .map(|row| row.iter().zip(psi).map(|(&e, z)| z.powu(e)).product::<Complex64>())
        .sum()
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients (ascending powers of `t`) of `W(a + t b)`.
pub fn line_restriction(p: &InvertiblePolynomial, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut total: Vec<Complex64> = vec![Complex64::new(0.0, 0.0)];
    for row in p.exponents() {
        let mut m = vec![Complex64::new(1.0, 0.0)];
        for (j, &e) in row.iter().enumerate() {
            for _ in 0..e {
                m = poly_mul(&m, &[a[j], b[j]]);
            }
        }
        if m.len() > total.len() {
            total.resize(m.len(), Complex64::new(0.0, 0.0));
        }
        for (k, c) in m.into_iter().enumerate() {
            total[k] += c;
        }
    }
    total
}

fn horner(c: &[Complex64], t: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        d = d * t + v;
        v = v * t + ck;
    }
    (v, d)
}

/// All roots of `Σ c_k t^k` (leading coefficients below `1e-14` of the largest
/// are dropped) by Weierstrass–Durand–Kerner iteration followed by Newton polishing.
pub fn polynomial_roots(c: &[Complex64]) -> Vec<Complex64> {
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut deg = c.len().saturating_sub(1);
    while deg > 0 && c[deg].norm() <= 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let monic: Vec<Complex64> = c[..=deg].iter().map(|z| z / c[deg]).collect();
    let radius = 1.0 + monic[..deg].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32) * (0.5 * radius)).collect();
    for _ in 0..500 {
        let mut delta = 0.0_f64;
        for i in 0..deg {
            let (v, _) = horner(&monic, z[i]);
            let denom: Complex64 = (0..deg).filter(|&j| j != i).map(|j| z[i] - z[j]).product();
            if denom.norm() == 0.0 {
                continue;
            }
            let step = v / denom;
            z[i] -= step;
            delta = delta.max(step.norm() / z[i].norm().max(1.0));
        }
        if delta < 1e-15 {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..5 {
            let (v, d) = horner(&monic, *r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= v / d;
        }
    }
    z
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    /// Acceptance threshold on `|W(ψ)|`.
    pub tolerance: f64,
    /// Roots with `|t|` beyond this are skipped (they give badly scaled points).
    pub max_parameter: f64,
    /// Lines tried per sample before giving up.
    pub attempts: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { tolerance: 1e-10, max_parameter: 4.0, attempts: 64 }
    }
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    // Box–Muller
    let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(f64::MIN_POSITIVE), rng.gen());
    let r = (-u1.ln()).sqrt();
    Complex64::from_polar(r, std::f64::consts::TAU * u2)
}

/// Stream `k` of the sampler: sample `k` depends only on `(seed, k)`.
pub fn sample_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// One point of `{W = 0}` from the affine complex line `a + t b` of stream `k`.
pub fn sample_point(p: &InvertiblePolynomial, seed: u64, k: u64, opts: &SampleOptions) -> Result<FiberPoint, KvnError> {
    let n = p.n();
    let mut rng = sample_rng(seed, k);
    for _ in 0..opts.attempts {
        let a: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng)).collect();
        let b: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng)).collect();
        let roots = polynomial_roots(&line_restriction(p, &a, &b));
        let pick = rng.gen_range(0..roots.len().max(1));
        // try roots starting at a random index so every branch is visited
        for r in (0..roots.len()).map(|i| roots[(pick + i) % roots.len()]) {
            if !(r.norm() <= opts.max_parameter) {
                continue;
            }
            let psi: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + r * y).collect();
            if evaluate(p, &psi).norm() < opts.tolerance {
                return Ok(FiberPoint::new(psi));
            }
        }
    }
    Err(KvnError::RootFindFailure { attempts: opts.attempts })
}

/// `m` points on `{W = 0}`; point `k` uses its own random stream.
pub fn fibration_sample(p: &InvertiblePolynomial, m: usize, seed: u64, opts: &SampleOptions) -> Result<Vec<FiberPoint>, KvnError> {
    (0..m as u64).map(|k| sample_point(p, seed, k, opts)).collect()
}

/// Rescales `ψ` along the weighted action `ψ_i ↦ λ^{q_i} ψ_i` (`λ > 0`) so that
/// `Σ ρ_i = 1`. The action preserves `{W = 0}`.
pub fn weighted_normalize(p: &InvertiblePolynomial, point: &FiberPoint) -> Result<FiberPoint, KvnError> {
    let ws = weights(p)?;
    if let Some(&i) = ws.nonpositive().first() {
        return Err(KvnError::NonPositiveWeight { index: i });
    }
    let q: Vec<f64> = ws.q.iter().map(|x| x.to_f64().expect("small rational")).collect();
    let mass = |ln_l: f64| point.rho.iter().zip(&q).map(|(r, qi)| r * (2.0 * qi * ln_l).exp()).sum::<f64>();
    if !(mass(0.0) > 0.0) {
        return Err(KvnError::InvalidField("the origin cannot be normalized".into()));
    }
    // mass is increasing in ln λ; bracket and bisect
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mass(lo) > 1.0 {
        lo *= 2.0;
    }
    while mass(hi) < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ln_l = 0.5 * (lo + hi);
    let psi = point.psi.iter().zip(&q).map(|(z, qi)| z * (qi * ln_l).exp()).collect();
    Ok(FiberPoint::new(psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fermat_conic_on_a_line() {
        let p = InvertiblePolynomial::parse("x1^2+x2^2").unwrap();
        let coeffs = line_restriction(&p, &[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(coeffs, vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let mut roots = polynomial_roots(&coeffs);
        roots.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((roots[0] - c(0.0, -1.0)).norm() < 1e-14 && (roots[1] - c(0.0, 1.0)).norm() < 1e-14);
        let pt = FiberPoint::new(vec![c(1.0, 0.0), roots[1]]);
        assert!((pt.rho[0] - 1.0).abs() < 1e-14 && (pt.rho[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn roots_of_known_cubic() {
        // (t − 1)(t + 2)(t − 3ı)
        let r = [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 3.0)];
        let coeffs = poly_mul(&poly_mul(&[-r[0], c(1.0, 0.0)], &[-r[1], c(1.0, 0.0)]), &[-r[2], c(1.0, 0.0)]);
        let got = polynomial_roots(&coeffs);
        for want in r {
            assert!(got.iter().any(|z| (z - want).norm() < 1e-12));
        }
    }

    #[test]
    fn streams_are_independent_of_order() {
        let p = InvertiblePolynomial::parse("x1^3+x2^3+x3^3").unwrap();
        let opts = SampleOptions::default();
        let all = fibration_sample(&p, 5, 11, &opts).unwrap();
        assert_eq!(sample_point(&p, 11, 3, &opts).unwrap(), all[3]);
    }

    #[test]
    fn normalization_stays_on_the_zero_set() {
        let p = InvertiblePolynomial::parse("x1^2*x2+x2^3").unwrap();
        let pt = sample_point(&p, 5, 0, &SampleOptions::default()).unwrap();
        let nrm = weighted_normalize(&p, &pt).unwrap();
        assert!((nrm.rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(evaluate(&p, &nrm.psi).norm() < 1e-10);
    }
}
