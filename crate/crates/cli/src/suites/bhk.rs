use frobforge_core::bhk::{
    analyze, aut_group, calabi_yau_check, dual_report, parse_generators, weights, BhkError, InvertiblePolynomial,
};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{Report, Table};

pub const CHECKS: &[&str] = &[
    "bhk.weights",
    "bhk.transpose_involution",
    "bhk.aut_order",
    "bhk.dual_order",
    "bhk.examples",
    "bhk.random_aut",
];

const RANDOM_MATRICES: usize = 100;

pub fn parse_polynomial(s: &str) -> Result<InvertiblePolynomial, CliError> {
    InvertiblePolynomial::parse(s).map_err(|e| CliError::Usage(format!("polynomial {s:?}: {e}")))
}

/// `E·w = d·1` in exact integers.
fn weights_solve(p: &InvertiblePolynomial) -> Result<bool, CliError> {
    let ws = weights(p).map_err(CliError::compute)?;
    Ok(p.exponents().iter().all(|row| {
        let lhs: BigInt = row.iter().zip(&ws.w).map(|(&e, w)| BigInt::from(e) * w).sum();
        lhs == ws.d
    }))
}

/// `|Aut| = |det E| = Π Smith invariants`.
fn aut_consistent(p: &InvertiblePolynomial) -> Result<bool, CliError> {
    match aut_group(p) {
        Ok(g) => {
            let det = p.determinant().abs();
            let smith = g.smith.iter().fold(BigInt::one(), |acc, s| acc * s);
            Ok(g.order == det && smith == det)
        }
        Err(BhkError::Inconsistent(_)) => Ok(false),
        Err(e) => Err(CliError::compute(e)),
    }
}

pub fn analyze_suite(cfg: &RunConfig, poly: &str) -> Result<Report, CliError> {
    let p = parse_polynomial(poly)?;
    let mut report = Report::new("bhk-analyze");
    report.check_bool(cfg, "bhk.weights", weights_solve(&p)?, 1);
    report.check_bool(cfg, "bhk.transpose_involution", p.transpose_mirror().transpose_mirror() == p, 1);
    report.check_bool(cfg, "bhk.aut_order", aut_consistent(&p)?, 1);
    let a = analyze(&p).map_err(CliError::compute)?;
    report.data = serde_json::to_value(&a).map_err(CliError::compute)?;
    Ok(report)
}

pub fn dual_suite(cfg: &RunConfig, poly: &str, group: &str) -> Result<Report, CliError> {
    let p = parse_polynomial(poly)?;
    let gens = parse_generators(group, p.n()).map_err(|e| CliError::Usage(format!("group {group:?}: {e}")))?;
    let d = dual_report(&p, gens).map_err(|e| match e {
        BhkError::NotSubgroup(_) | BhkError::Parse(_) => CliError::Usage(e.to_string()),
        other => CliError::compute(other),
    })?;
    let aut = aut_group(&p).map_err(CliError::compute)?;
    let product = BigInt::from(d.group_order) * BigInt::from(d.dual_order);
    let mut report = Report::new("bhk-dual");
    report.check_bool(cfg, "bhk.dual_order", product == aut.order, 1);
    report.data = serde_json::to_value(&d).map_err(CliError::compute)?;
    report.set("autOrder", json!(aut.order.to_string()));
    Ok(report)
}

fn random_invertible(rng: &mut ChaCha8Rng) -> InvertiblePolynomial {
    loop {
        let n = rng.gen_range(1..=4);
        let e: Vec<Vec<u32>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..=6)).collect()).collect();
        if let Ok(p) = InvertiblePolynomial::from_matrix(e) {
            return p;
        }
    }
}

pub fn check_suite(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut report = Report::new("bhk-check");
    let chain = InvertiblePolynomial::from_matrix(vec![vec![2, 1], vec![0, 2]]).map_err(CliError::compute)?;
    let examples = [
        (parse_polynomial("x1^5+x2^5+x3^5+x4^5+x5^5")?, vec!["1/5"; 5], true),
        (parse_polynomial("x1^3*x2+x2^3*x1")?, vec!["1/4", "1/4"], false),
        (chain, vec!["1/4", "1/2"], false),
    ];
    let mut mismatches = 0usize;
    let mut rows = Vec::new();
    for (p, q, cy) in &examples {
        let ws = weights(p).map_err(CliError::compute)?;
        let got: Vec<String> = ws.q.iter().map(|r| r.to_string()).collect();
        let got_cy = calabi_yau_check(&ws);
        mismatches += usize::from(got != *q || got_cy != *cy);
        rows.push(json!({"polynomial": p.to_string(), "weights": got, "cy": got_cy}));
    }
    report.check(cfg, "bhk.examples", mismatches as f64, 0.5, examples.len());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = Table::new("random", &["polynomial", "det", "aut_order", "smith", "consistent", "involution"]);
    let mut failures = 0usize;
    for _ in 0..RANDOM_MATRICES {
        let p = random_invertible(&mut rng);
        let ok = aut_consistent(&p)?;
        let involution = p.transpose_mirror().transpose_mirror() == p;
        failures += usize::from(!(ok && involution));
        let (order, smith) = match aut_group(&p) {
            Ok(g) => (g.order.to_string(), g.smith.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")),
            Err(_) => (String::new(), String::new()),
        };
        table.push(vec![
            json!(p.to_string()),
            json!(p.determinant().to_string()),
            json!(order),
            json!(smith),
            json!(ok),
            json!(involution),
        ]);
    }
    report.check(cfg, "bhk.random_aut", failures as f64, 0.5, RANDOM_MATRICES);
    report.set("examples", json!(rows));
    report.tables.push(table);
    Ok(report)
}
