use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::linalg::{inverse_columns, smith_diagonal, to_big};
use super::poly::InvertiblePolynomial;
use super::weights::WeightSystem;
use super::BhkError;

/// `diag(e^{2πiφ_1}, …, e^{2πiφ_n})`, stored with every `φ_i ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhaseVector(Vec<BigRational>);

fn frac_part(x: &BigRational) -> BigRational {
    x - BigRational::from_integer(x.floor().to_integer())
}

impl PhaseVector {
    pub fn new(phases: Vec<BigRational>) -> Self {
        PhaseVector(phases.iter().map(frac_part).collect())
    }

    pub fn zero(n: usize) -> Self {
        PhaseVector(vec![BigRational::zero(); n])
    }

    pub fn phases(&self) -> &[BigRational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &PhaseVector) -> PhaseVector {
        PhaseVector::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Order in `(Q/Z)^n`: the lcm of the denominators.
    pub fn order(&self) -> BigInt {
        self.0.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()))
    }

    pub fn sum(&self) -> BigRational {
        self.0.iter().fold(BigRational::zero(), |s, x| s + x)
    }

    /// Coordinates as reduced fractions `"a/b"` (`"0"` for zero).
    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(ToString::to_string).collect()
    }

    /// Parses `"1/3,0,2/5"`.
    pub fn parse(s: &str) -> Result<Self, BhkError> {
        let phases = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<BigRational>()
                    .map_err(|_| BhkError::Parse(format!("cannot read phase '{}'", t.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PhaseVector::new(phases))
    }
}

impl fmt::Display for PhaseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

/// Parses generators separated by `;`, each a comma-separated phase vector.
pub fn parse_generators(s: &str, n: usize) -> Result<Vec<PhaseVector>, BhkError> {
    let gens = s
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(PhaseVector::parse)
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(g) = gens.iter().find(|g| g.len() != n) {
        return Err(BhkError::Parse(format!("generator {g} has {} coordinates, expected {n}", g.len())));
    }
    Ok(gens)
}

/// `E·φ ∈ Zⁿ`, i.e. `φ` leaves `W` invariant.
pub fn in_aut(p: &InvertiblePolynomial, phi: &PhaseVector) -> bool {
    phi.len() == p.n()
        && p.exponents().iter().all(|row| {
            row.iter()
                .zip(phi.phases())
                .fold(BigRational::zero(), |s, (e, x)| s + x * BigRational::from_integer(BigInt::from(*e)))
                .is_integer()
        })
}

/// Finite group of diagonal symmetries, given by generators. `modulus` is
/// `|det E|` of the ambient potential: every element is a multiple of `1/modulus`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalGroup {
    pub generators: Vec<PhaseVector>,
    pub order: BigInt,
    /// Smith elementary divisors of the ambient exponent matrix.
    pub smith: Vec<BigInt>,
    modulus: u64,
    n: usize,
}

type Scaled = Vec<u64>;

fn scale(phi: &PhaseVector, m: u64) -> Scaled {
    phi.phases()
        .iter()
        .map(|x| {
            let v = x * BigRational::from_integer(BigInt::from(m));
            debug_assert!(v.is_integer(), "phase {x} is not a multiple of 1/{m}");
            v.to_integer().to_u64().expect("reduced phase fits")
        })
        .collect()
}

fn unscale(v: &[u64], m: u64) -> PhaseVector {
    PhaseVector::new(v.iter().map(|&k| BigRational::new(BigInt::from(k), BigInt::from(m))).collect())
}

fn closure(gens: &[Scaled], n: usize, m: u64) -> HashSet<Scaled> {
    let zero = vec![0u64; n];
    let mut seen = HashSet::from([zero.clone()]);
    let mut queue = VecDeque::from([zero]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y: Scaled = x.iter().zip(g).map(|(a, b)| (a + b) % m).collect();
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    seen
}

fn ambient_modulus(p: &InvertiblePolynomial) -> Result<u64, BhkError> {
    p.determinant()
        .abs()
        .to_u64()
        .ok_or_else(|| BhkError::Overflow("|det E| does not fit in 64 bits".into()))
}

impl DiagonalGroup {
    fn from_scaled(gens: Vec<Scaled>, n: usize, m: u64, smith: Vec<BigInt>) -> Self {
        let order = BigInt::from(closure(&gens, n, m).len());
        DiagonalGroup {
            generators: gens.iter().map(|g| unscale(g, m)).collect(),
            order,
            smith,
            modulus: m,
            n,
        }
    }

    /// Subgroup of `Aut(W)` generated by `generators`.
    pub fn generated(p: &InvertiblePolynomial, generators: Vec<PhaseVector>) -> Result<Self, BhkError> {
        if let Some(g) = generators.iter().find(|g| !in_aut(p, g)) {
            return Err(BhkError::NotSubgroup(format!("{g} does not preserve the potential")));
        }
        let m = ambient_modulus(p)?;
        let gens = generators.iter().map(|g| scale(g, m)).collect();
        Ok(Self::from_scaled(gens, p.n(), m, smith_diagonal(&to_big(p.exponents()))))
    }

    fn scaled_elements(&self) -> HashSet<Scaled> {
        let gens: Vec<Scaled> = self.generators.iter().map(|g| scale(g, self.modulus)).collect();
        closure(&gens, self.n, self.modulus)
    }

    /// All elements, sorted.
    pub fn elements(&self) -> Vec<PhaseVector> {
        let set: BTreeSet<Scaled> = self.scaled_elements().into_iter().collect();
        set.iter().map(|v| unscale(v, self.modulus)).collect()
    }

    pub fn contains(&self, phi: &PhaseVector) -> bool {
        phi.len() == self.n
            && phi.phases().iter().all(|x| {
                (x * BigRational::from_integer(BigInt::from(self.modulus))).is_integer()
            })
            && self.scaled_elements().contains(&scale(phi, self.modulus))
    }

    /// Same element set.
    pub fn same_elements(&self, other: &DiagonalGroup) -> bool {
        self.modulus == other.modulus && self.scaled_elements() == other.scaled_elements()
    }
}

/// `Aut(W) = E⁻¹Zⁿ / Zⁿ`, generated by the columns of `E⁻¹` mod 1. Its order
/// `|det E|` is cross-checked against the Smith form.
pub fn aut_group(p: &InvertiblePolynomial) -> Result<DiagonalGroup, BhkError> {
    let e = to_big(p.exponents());
    let cols = inverse_columns(&e).ok_or_else(|| BhkError::NotInvertible("exponent matrix is singular".into()))?;
    let smith = smith_diagonal(&e);
    let det = p.determinant().abs();
    let product = smith.iter().fold(BigInt::one(), |a, b| a * b);
    if product != det {
        return Err(BhkError::Inconsistent(format!("Smith product {product} differs from |det| {det}")));
    }
    let m = ambient_modulus(p)?;
    let gens: Vec<Scaled> = cols.into_iter().map(|c| scale(&PhaseVector::new(c), m)).collect();
    let g = DiagonalGroup::from_scaled(gens, p.n(), m, smith);
    if g.order != det {
        return Err(BhkError::Inconsistent(format!("closure has {} elements, |det| is {det}", g.order)));
    }
    Ok(g)
}

/// The exponential grading element `J = q mod 1`.
pub fn j_element(ws: &WeightSystem) -> PhaseVector {
    PhaseVector::new(ws.q.clone())
}

/// `det = 1` for a group element: `Σ φ_i ∈ Z`.
pub fn sl_check(p: &InvertiblePolynomial, phi: &PhaseVector) -> Result<bool, BhkError> {
    if !in_aut(p, phi) {
        return Err(BhkError::NotGroupElement(format!("{phi} does not preserve the potential")));
    }
    Ok(phi.sum().is_integer())
}

/// `φ_bᵀ E φ_g` for phases scaled by `m`, tested for integrality.
fn pairing_integral(e: &[Vec<u32>], b: &[u64], g: &[u64], m: u64) -> bool {
    let mut s: i128 = 0;
    for (i, row) in e.iter().enumerate() {
        for (j, &eij) in row.iter().enumerate() {
            s += b[i] as i128 * eij as i128 * g[j] as i128;
        }
    }
    s % (m as i128 * m as i128) == 0
}

/// Greedy generating set for an element set.
fn reduce_generators(elements: &HashSet<Scaled>, n: usize, m: u64) -> Vec<Scaled> {
    let mut sorted: Vec<&Scaled> = elements.iter().collect();
    sorted.sort();
    let mut gens: Vec<Scaled> = Vec::new();
    let mut span = closure(&gens, n, m);
    for x in sorted {
        if !span.contains(x) {
            gens.push(x.clone());
            span = closure(&gens, n, m);
            if span.len() == elements.len() {
                break;
            }
        }
    }
    gens
}

/// `Gᵀ = {b ∈ Aut(Wᵀ) : φ_bᵀ E φ_g ∈ Z for all g ∈ G}`.
pub fn dual_group(g: &DiagonalGroup, p: &InvertiblePolynomial) -> Result<DiagonalGroup, BhkError> {
    if let Some(x) = g.generators.iter().find(|x| !in_aut(p, x)) {
        return Err(BhkError::NotSubgroup(format!("{x} does not preserve the potential")));
    }
    let t = p.transpose_mirror();
    let aut_t = aut_group(&t)?;
    let m = aut_t.modulus;
    let e = p.exponents();
    let gens: Vec<Scaled> = g.generators.iter().map(|x| scale(x, m)).collect();
    let dual: HashSet<Scaled> = aut_t
        .scaled_elements()
        .into_iter()
        .filter(|b| gens.iter().all(|x| pairing_integral(e, b, x, m)))
        .collect();
    let red = reduce_generators(&dual, p.n(), m);
    Ok(DiagonalGroup::from_scaled(red, p.n(), m, aut_t.smith))
}

/// Subgroups generated by at most `max_generators` elements of `g`, deduplicated.
/// Complete once `max_generators` reaches the rank of `g`.
pub fn enumerate_subgroups(g: &DiagonalGroup, max_generators: usize) -> Result<Vec<DiagonalGroup>, BhkError> {
    let elems: Vec<Scaled> = {
        let mut v: Vec<Scaled> = g.scaled_elements().into_iter().collect();
        v.sort();
        v
    };
    let budget = (elems.len() as f64).powi(max_generators as i32);
    if budget > 1e6 {
        return Err(BhkError::Overflow(format!("{budget:.0} generator tuples")));
    }
    let mut found: BTreeSet<Vec<Scaled>> = BTreeSet::new();
    let mut out = Vec::new();
    let mut tuple: Vec<usize> = Vec::new();
    fn rec(
        k: usize,
        start: usize,
        tuple: &mut Vec<usize>,
        elems: &[Scaled],
        g: &DiagonalGroup,
        found: &mut BTreeSet<Vec<Scaled>>,
        out: &mut Vec<DiagonalGroup>,
    ) {
        let gens: Vec<Scaled> = tuple.iter().map(|&i| elems[i].clone()).collect();
        let set = closure(&gens, g.n, g.modulus);
        let mut key: Vec<Scaled> = set.iter().cloned().collect();
        key.sort();
        if found.insert(key) {
            let red = reduce_generators(&set, g.n, g.modulus);
            out.push(DiagonalGroup::from_scaled(red, g.n, g.modulus, g.smith.clone()));
        }
        if k == 0 {
            return;
        }
        for i in start..elems.len() {
            tuple.push(i);
            rec(k - 1, i, tuple, elems, g, found, out);
            tuple.pop();
        }
    }
    rec(max_generators, 0, &mut tuple, &elems, g, &mut found, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bhk::weights;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn fermat_cubic_group() {
        let p = InvertiblePolynomial::parse("x1^3").unwrap();
        let g = aut_group(&p).unwrap();
        assert_eq!(g.order, BigInt::from(3));
        assert_eq!(g.generators, vec![PhaseVector::new(vec![r(1, 3)])]);
    }

    #[test]
    fn quintic_group_and_j() {
        let p = InvertiblePolynomial::parse("x1^5+x2^5+x3^5+x4^5+x5^5").unwrap();
        let g = aut_group(&p).unwrap();
        assert_eq!(g.order, BigInt::from(3125));
        assert_eq!(g.smith, vec![BigInt::from(5); 5]);
        let j = j_element(&weights(&p).unwrap());
        assert_eq!(j.order(), BigInt::from(5));
        assert!(in_aut(&p, &j) && sl_check(&p, &j).unwrap());
    }

    #[test]
    fn sl_membership() {
        let p = InvertiblePolynomial::parse("x1^3*x2+x2^3").unwrap();
        let phi = PhaseVector::new(vec![r(1, 3), r(0, 1)]);
        assert!(in_aut(&p, &phi));
        assert!(!sl_check(&p, &phi).unwrap());
        assert!(sl_check(&p, &PhaseVector::zero(2)).unwrap());
        let bad = PhaseVector::new(vec![r(1, 2), r(0, 1)]);
        assert!(matches!(sl_check(&p, &bad), Err(BhkError::NotGroupElement(_))));
    }

    #[test]
    fn phases_reduce_mod_one() {
        let v = PhaseVector::new(vec![r(7, 4), r(-1, 3)]);
        assert_eq!(v.phases(), &[r(3, 4), r(2, 3)]);
        assert_eq!(v.to_strings(), vec!["3/4", "2/3"]);
        assert_eq!(PhaseVector::parse("3/4, 2/3").unwrap(), v);
    }
}
