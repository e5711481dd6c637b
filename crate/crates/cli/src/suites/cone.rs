use std::str::FromStr;

use frobforge_core::cones::{
    curvature_bracket_check, flat_locus_verify, gauss_equation_check, jordan_product, random_cone_point,
    random_tangent, sectional_curvature, trace_form, ConePoint, GroundField, TangentVector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{float, Report, Table};

pub const CHECKS: &[&str] = &[
    "cone.flat_locus.wdvv",
    "cone.flat_locus.curvature",
    "cone.sectional.nonpositive",
    "cone.sectional.negative_plane",
    "cone.jordan",
    "cone.bracket",
    "cone.gauss",
];

const PLANES: usize = 100;
const TRIPLES: usize = 200;
const BRACKET_TRIPLES: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct FieldArg(pub GroundField);

impl FromStr for FieldArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "R" | "r" => Ok(FieldArg(GroundField::R)),
            "C" | "c" => Ok(FieldArg(GroundField::C)),
            "H" | "h" => Ok(FieldArg(GroundField::H)),
            _ => Err(format!("unknown field {s:?} (expected R, C or H)")),
        }
    }
}

pub fn run(cfg: &RunConfig, field: GroundField, n: usize, samples: usize) -> Result<Report, CliError> {
    if !(2..=6).contains(&n) {
        return Err(CliError::usage("--n must lie in 2..=6"));
    }
    if samples == 0 {
        return Err(CliError::usage("--samples must be positive"));
    }
    let mut report = Report::new("cone");
    let flat = flat_locus_verify(n, field, samples, cfg.seed);
    report.check(cfg, "cone.flat_locus.wdvv", flat.max_wdvv, 1e-8, samples);
    report.check(cfg, "cone.flat_locus.curvature", flat.max_curvature, 1e-8, samples);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = Table::new("sectional", &["plane", "curvature"]);
    let mut max_k = f64::NEG_INFINITY;
    for i in 0..PLANES {
        let x = random_cone_point(field, n, &mut rng);
        let u = random_tangent(field, n, &mut rng);
        let v = random_tangent(field, n, &mut rng);
        let k = sectional_curvature(&x, &u, &v).map_err(CliError::compute)?;
        max_k = max_k.max(k);
        table.push(vec![json!(i), float(k)]);
    }
    report.check(cfg, "cone.sectional.nonpositive", max_k.max(0.0), 1e-9, PLANES);
    // a diagonal and an off-diagonal direction do not commute
    let id = ConePoint::identity(field, n);
    let k_neg = sectional_curvature(&id, &TangentVector::basis(field, n, 0), &TangentVector::basis(field, n, n))
        .map_err(CliError::compute)?;
    report.check(cfg, "cone.sectional.negative_plane", (k_neg + 1e-6).max(0.0), 1e-12, 1);

    let mut jordan = 0.0f64;
    for _ in 0..TRIPLES {
        let u = random_tangent(field, n, &mut rng);
        let v = random_tangent(field, n, &mut rng);
        let w = random_tangent(field, n, &mut rng);
        let lhs = trace_form(&jordan_product(&u, &v).map_err(CliError::compute)?, &w).map_err(CliError::compute)?;
        let rhs = trace_form(&u, &jordan_product(&v, &w).map_err(CliError::compute)?).map_err(CliError::compute)?;
        jordan = jordan.max((lhs - rhs).abs());
    }
    report.check(cfg, "cone.jordan", jordan, 1e-12, TRIPLES);

    let mut bracket = 0.0f64;
    for _ in 0..BRACKET_TRIPLES {
        let u = random_tangent(field, n, &mut rng);
        let v = random_tangent(field, n, &mut rng);
        let w = random_tangent(field, n, &mut rng);
        let fit = curvature_bracket_check(&u, &v, &w).map_err(CliError::compute)?;
        bracket = bracket.max((fit.c - 0.25).abs());
    }
    report.check(cfg, "cone.bracket", bracket, 1e-9, BRACKET_TRIPLES);

    let gauss = gauss_equation_check(n, field, 3, 5, cfg.seed);
    report.check(cfg, "cone.gauss", gauss.max_discrepancy, 1e-5, gauss.points * gauss.tuples_per_point);

    report.set("field", json!(field.to_string()));
    report.set("n", json!(n));
    report.set("flatLocus", serde_json::to_value(&flat).map_err(CliError::compute)?);
    report.set("gauss", serde_json::to_value(&gauss).map_err(CliError::compute)?);
    report.set("maxSectionalCurvature", float(max_k));
    report.set("negativePlaneCurvature", float(k_neg));
    report.tables.push(table);
    Ok(report)
}
