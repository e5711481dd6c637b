use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::linalg::{solve, to_big};
use super::poly::InvertiblePolynomial;
use super::BhkError;

/// Charges `q = E⁻¹·1` with the integer presentation `q_i = w_i / d`,
/// `d` the least common denominator (so `gcd(w, d) = 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightSystem {
    pub q: Vec<BigRational>,
    pub w: Vec<BigInt>,
    pub d: BigInt,
}

impl WeightSystem {
    /// Indices with `q_i ≤ 0`; such systems are reported rather than rejected.
    pub fn nonpositive(&self) -> Vec<usize> {
        (0..self.q.len()).filter(|&i| !self.q[i].is_positive()).collect()
    }

    pub fn sum(&self) -> BigRational {
        self.q.iter().fold(BigRational::zero(), |s, x| s + x)
    }
}

pub fn weights(p: &InvertiblePolynomial) -> Result<WeightSystem, BhkError> {
    let ones = vec![BigRational::one(); p.n()];
    let q = solve(&to_big(p.exponents()), &ones)
        .ok_or_else(|| BhkError::NotInvertible("exponent matrix is singular".into()))?;
    let d = q.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let w = q.iter().map(|x| (x * BigRational::from_integer(d.clone())).to_integer()).collect();
    Ok(WeightSystem { q, w, d })
}

/// Like [`weights`] but turns nonpositive charges into an error.
pub fn weights_strict(p: &InvertiblePolynomial) -> Result<WeightSystem, BhkError> {
    let ws = weights(p)?;
    match ws.nonpositive().first() {
        Some(&i) => Err(BhkError::NonPositiveWeight { index: i, value: ws.q[i].to_string() }),
        None => Ok(ws),
    }
}

/// `Σ q_i = 1`, decided exactly.
pub fn calabi_yau_check(ws: &WeightSystem) -> bool {
    ws.sum().is_one()
}

/// Fermat exponents `a ≤ max_a` for which `W + x_{n+1}^a` satisfies the
/// Calabi–Yau condition (empty when the gap is not a unit fraction in range).
pub fn fermat_completion_scan(p: &InvertiblePolynomial, max_a: u32) -> Result<Vec<u32>, BhkError> {
    let ws = weights(p)?;
    let gap = BigRational::one() - ws.sum();
    Ok((1..=max_a)
        .filter(|&a| BigRational::new(BigInt::one(), BigInt::from(a)) == gap)
        .collect())
}
