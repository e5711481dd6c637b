use serde::Serialize;

use super::poly::InvertiblePolynomial;
use super::BhkError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomKind {
    Fermat,
    Loop,
    Chain,
}

/// One atomic summand. `variables` (0-based) are listed in the canonical order
/// `x_{v0}^{m0} x_{v1} + x_{v1}^{m1} x_{v2} + …`: a loop starts at its smallest
/// variable, a chain at its free end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Atom {
    pub kind: AtomKind,
    pub variables: Vec<usize>,
    pub exponents: Vec<u32>,
}

/// Splits the variables into connected components of the variable–monomial graph
/// and certifies each as Fermat, loop or chain.
pub fn classify_atomic(p: &InvertiblePolynomial) -> Result<Vec<Atom>, BhkError> {
    let e = p.exponents();
    let n = p.n();
    // each monomial: head variable with exponent m, optional pointer with exponent 1
    let mut head_of = vec![None; n];
    let mut pointer = vec![None; n];
    let mut exponent = vec![0u32; n];
    for (i, row) in e.iter().enumerate() {
        let support: Vec<usize> = (0..n).filter(|&v| row[v] > 0).collect();
        let (h, ptr) = match support.as_slice() {
            [v] => (*v, None),
            [a, b] => match (row[*a], row[*b]) {
                (1, 1) => {
                    return Err(BhkError::NotDecomposable(format!(
                        "monomial {} has two linear factors",
                        i + 1
                    )))
                }
                (_, 1) => (*a, Some(*b)),
                (1, _) => (*b, Some(*a)),
                _ => return Err(BhkError::NotDecomposable(format!("monomial {} is not atomic", i + 1))),
            },
            _ => return Err(BhkError::NotDecomposable(format!("monomial {} has {} variables", i + 1, support.len()))),
        };
        if head_of[h].is_some() {
            return Err(BhkError::NotDecomposable(format!("x{} leads two monomials", h + 1)));
        }
        head_of[h] = Some(i);
        pointer[h] = ptr;
        exponent[h] = row[h];
    }
    let mut indeg = vec![0usize; n];
    for t in pointer.iter().flatten() {
        indeg[*t] += 1;
    }
    if let Some(v) = (0..n).find(|&v| indeg[v] > 1) {
        return Err(BhkError::NotDecomposable(format!("x{} is the linear factor of several monomials", v + 1)));
    }
    let mut seen = vec![false; n];
    let mut atoms = Vec::new();
    // paths start at variables nobody points to
    for start in 0..n {
        if indeg[start] != 0 || seen[start] {
            continue;
        }
        let mut vars = vec![start];
        seen[start] = true;
        let mut cur = start;
        while let Some(nx) = pointer[cur] {
            seen[nx] = true;
            vars.push(nx);
            cur = nx;
        }
        let kind = if vars.len() == 1 { AtomKind::Fermat } else { AtomKind::Chain };
        atoms.push(Atom {
            kind,
            exponents: vars.iter().map(|&v| exponent[v]).collect(),
            variables: vars,
        });
    }
    // what remains are cycles
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut vars = vec![start];
        seen[start] = true;
        let mut cur = pointer[start].expect("cycle member has a successor");
        while cur != start {
            seen[cur] = true;
            vars.push(cur);
            cur = pointer[cur].expect("cycle member has a successor");
        }
        atoms.push(Atom {
            kind: AtomKind::Loop,
            exponents: vars.iter().map(|&v| exponent[v]).collect(),
            variables: vars,
        });
    }
    atoms.sort_by_key(|a| *a.variables.iter().min().expect("atoms are nonempty"));
    Ok(atoms)
}
