use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use super::linalg::{determinant, to_big, transpose};
use super::BhkError;

/// Sum of `n` unit-coefficient monomials in `x1..xn`; row `i` of the exponent
/// matrix holds the exponents of monomial `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InvertiblePolynomial {
    exponents: Vec<Vec<u32>>,
}

impl InvertiblePolynomial {
    pub fn from_matrix(exponents: Vec<Vec<u32>>) -> Result<Self, BhkError> {
        let n = exponents.len();
        if n == 0 {
            return Err(BhkError::NotInvertible("no monomials".into()));
        }
        if exponents.iter().any(|r| r.len() != n) {
            return Err(BhkError::NotInvertible(format!("exponent matrix is not {n}x{n}")));
        }
        if let Some(v) = (0..n).find(|&j| exponents.iter().all(|r| r[j] == 0)) {
            return Err(BhkError::NotInvertible(format!("variable x{} does not occur", v + 1)));
        }
        let det = determinant(&to_big(&exponents));
        if det.is_zero() {
            return Err(BhkError::NotInvertible("exponent matrix is singular".into()));
        }
        Ok(InvertiblePolynomial { exponents })
    }

    /// Parses e.g. `"x1^3*x2+x2^3*x1"`. Whitespace is ignored and a factor `1` is
    /// allowed; any other coefficient is rejected.
    pub fn parse(s: &str) -> Result<Self, BhkError> {
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(BhkError::Parse("empty polynomial".into()));
        }
        let mut monomials: Vec<Vec<(usize, u32)>> = Vec::new();
        for term in cleaned.split('+') {
            if term.is_empty() {
                return Err(BhkError::Parse("empty monomial".into()));
            }
            let mut factors = Vec::new();
            for factor in term.split('*') {
                if let Some(rest) = factor.strip_prefix('x') {
                    let (var, exp) = match rest.split_once('^') {
                        Some((v, e)) => (v, e),
                        None => (rest, "1"),
                    };
                    let var: usize = var.parse().map_err(|_| BhkError::Parse(format!("bad variable in '{factor}'")))?;
                    let exp: u32 = exp.parse().map_err(|_| BhkError::Parse(format!("bad exponent in '{factor}'")))?;
                    if var == 0 {
                        return Err(BhkError::Parse("variables are numbered from x1".into()));
                    }
                    if exp > 0 {
                        factors.push((var - 1, exp));
                    }
                } else if factor == "1" {
                    continue;
                } else if factor.parse::<f64>().is_ok() {
                    return Err(BhkError::Parse(format!("coefficient {factor} is not 1")));
                } else {
                    return Err(BhkError::Parse(format!("cannot read factor '{factor}'")));
                }
            }
            if factors.is_empty() {
                return Err(BhkError::Parse(format!("constant monomial '{term}'")));
            }
            monomials.push(factors);
        }
        let n = monomials.iter().flatten().map(|f| f.0 + 1).max().unwrap_or(0);
        if monomials.len() != n {
            return Err(BhkError::NotInvertible(format!("{} monomials in {n} variables", monomials.len())));
        }
        let mut e = vec![vec![0u32; n]; n];
        for (i, m) in monomials.iter().enumerate() {
            for &(v, p) in m {
                e[i][v] += p;
            }
        }
        Self::from_matrix(e)
    }

    pub fn n(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn determinant(&self) -> BigInt {
        determinant(&to_big(&self.exponents))
    }

    /// The mirror potential with exponent matrix `Eᵀ`.
    pub fn transpose_mirror(&self) -> InvertiblePolynomial {
        InvertiblePolynomial {
            exponents: transpose(&self.exponents),
        }
    }
}

impl fmt::Display for InvertiblePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .exponents
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0)
                    .map(|(v, &p)| if p == 1 { format!("x{}", v + 1) } else { format!("x{}^{p}", v + 1) })
                    .collect::<Vec<_>>()
                    .join("*")
            })
            .collect();
        write!(f, "{}", terms.join("+"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let q = InvertiblePolynomial::parse("x1^5+x2^5+x3^5+x4^5+x5^5").unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(q.exponents()[i][j], if i == j { 5 } else { 0 });
            }
        }
        let l = InvertiblePolynomial::parse("x1^3*x2 + x2^3*x1").unwrap();
        assert_eq!(l.exponents(), &[vec![3, 1], vec![1, 3]]);
        assert!(matches!(InvertiblePolynomial::parse("x1^2+x1^2"), Err(BhkError::NotInvertible(_))));
        assert!(matches!(InvertiblePolynomial::parse("2*x1^2"), Err(BhkError::Parse(_))));
        assert!(matches!(InvertiblePolynomial::parse("x1^2*x2+x1*x2^2+"), Err(BhkError::Parse(_))));
        assert!(matches!(InvertiblePolynomial::parse("x1*x2+x1*x2"), Err(BhkError::NotInvertible(_))));
    }

    #[test]
    fn display_round_trips() {
        let p = InvertiblePolynomial::parse("x1^2*x2+x2^2").unwrap();
        assert_eq!(p.to_string(), "x1^2*x2+x2^2");
        assert_eq!(InvertiblePolynomial::parse(&p.to_string()).unwrap(), p);
        assert_eq!(p.transpose_mirror().to_string(), "x1^2+x1*x2^2");
    }
}
