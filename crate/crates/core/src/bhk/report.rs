use num_traits::ToPrimitive;
use serde::Serialize;

use super::atoms::{classify_atomic, AtomKind};
use super::group::{aut_group, dual_group, sl_check, j_element, DiagonalGroup, PhaseVector};
use super::poly::InvertiblePolynomial;
use super::weights::{calabi_yau_check, weights};
use super::BhkError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomReport {
    pub kind: AtomKind,
    /// 1-based variable labels in canonical order.
    pub variables: Vec<usize>,
    pub exponents: Vec<u32>,
}

/// Summary of one potential. Charges and phases are reduced fractions `"a/b"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalyzeReport {
    pub polynomial: String,
    pub weights: Vec<String>,
    #[serde(rename = "integerWeights")]
    pub integer_weights: Vec<String>,
    pub d: String,
    pub cy: bool,
    pub atoms: Vec<AtomReport>,
    pub transpose: String,
    #[serde(rename = "autOrder")]
    pub aut_order: u64,
    #[serde(rename = "autSmith")]
    pub aut_smith: Vec<String>,
    #[serde(rename = "J")]
    pub j: Vec<String>,
    #[serde(rename = "slJ")]
    pub sl_j: bool,
    /// Indices (1-based) of nonpositive charges.
    #[serde(rename = "nonpositiveWeights")]
    pub nonpositive_weights: Vec<usize>,
}

pub fn analyze(p: &InvertiblePolynomial) -> Result<AnalyzeReport, BhkError> {
    let ws = weights(p)?;
    let atoms = classify_atomic(p)?
        .into_iter()
        .map(|a| AtomReport {
            kind: a.kind,
            variables: a.variables.iter().map(|v| v + 1).collect(),
            exponents: a.exponents,
        })
        .collect();
    let aut = aut_group(p)?;
    let j = j_element(&ws);
    Ok(AnalyzeReport {
        polynomial: p.to_string(),
        weights: ws.q.iter().map(ToString::to_string).collect(),
        integer_weights: ws.w.iter().map(ToString::to_string).collect(),
        d: ws.d.to_string(),
        cy: calabi_yau_check(&ws),
        atoms,
        transpose: p.transpose_mirror().to_string(),
        aut_order: aut.order.to_u64().unwrap_or(u64::MAX),
        aut_smith: aut.smith.iter().map(ToString::to_string).collect(),
        sl_j: sl_check(p, &j)?,
        j: j.to_strings(),
        nonpositive_weights: ws.nonpositive().iter().map(|i| i + 1).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DualReport {
    pub polynomial: String,
    pub transpose: String,
    #[serde(rename = "groupOrder")]
    pub group_order: u64,
    #[serde(rename = "dualOrder")]
    pub dual_order: u64,
    #[serde(rename = "dualGenerators")]
    pub dual_generators: Vec<Vec<String>>,
}

/// Dual of the subgroup of `Aut(W)` generated by `generators`, as a subgroup of `Aut(Wᵀ)`.
pub fn dual_report(p: &InvertiblePolynomial, generators: Vec<PhaseVector>) -> Result<DualReport, BhkError> {
    let g = DiagonalGroup::generated(p, generators)?;
    let gt = dual_group(&g, p)?;
    Ok(DualReport {
        polynomial: p.to_string(),
        transpose: p.transpose_mirror().to_string(),
        group_order: g.order.to_u64().unwrap_or(u64::MAX),
        dual_order: gt.order.to_u64().unwrap_or(u64::MAX),
        dual_generators: gt.generators.iter().map(PhaseVector::to_strings).collect(),
    })
}
