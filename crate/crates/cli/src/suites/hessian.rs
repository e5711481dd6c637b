use frobforge_core::cones::{random_cone_point, ConePotential, GroundField};
use frobforge_core::hessian::{
    builtin_potentials, curvature_direct, curvature_from_a, eval_amplitude, eval_metric, frobenius_pairing_residual,
    wdvv_residual, PotentialSpec, HESSIAN_CURVATURE_SCALE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{float, Report, Table};

pub const CHECKS: &[&str] = &["hessian.pairing", "hessian.wdvv_flat_equivalence", "hessian.levi_civita"];

const FLAT_TOL: f64 = 1e-8;
const ASSOC_TOL: f64 = 1e-7;

/// A point inside the domain of a built-in family.
fn sample_point(spec: &PotentialSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match *spec {
        PotentialSpec::Quadratic { dim } | PotentialSpec::ExpSum { dim } => {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
        PotentialSpec::NegLogSum { dim } => (0..dim).map(|_| rng.gen_range(0.3..3.0)).collect(),
        PotentialSpec::CubicPerturbed { dim, c } => {
            let r = 0.9 / (8.0 * c.abs()) / (dim as f64).sqrt();
            (0..dim).map(|_| rng.gen_range(-r..r)).collect()
        }
        PotentialSpec::Kink { dim, .. } => (0..dim).map(|_| rng.gen_range(0.2..1.0)).collect(),
        PotentialSpec::LogDetCone { n, field } => random_cone_point(field, n, rng).coords().to_vec(),
        PotentialSpec::DiagonalCone { n, .. } => (0..n).map(|_| rng.gen_range(0.5..3.0)).collect(),
        PotentialSpec::Lorentz { n } => {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut out = vec![r + rng.gen_range(0.1..2.0)];
            out.extend(x);
            out
        }
        PotentialSpec::FiniteDifference { ref inner, .. } => sample_point(inner, rng),
    }
}

pub fn run(cfg: &RunConfig, samples: usize) -> Result<Report, CliError> {
    if samples == 0 {
        return Err(CliError::usage("--samples must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new("hessian");
    let mut table =
        Table::new("potentials", &["potential", "points", "pairing", "wdvv", "curvature", "flat", "associative"]);
    let (mut worst_pairing, mut mismatches, mut points) = (0.0f64, 0usize, 0usize);
    let specs = builtin_potentials();
    for spec in &specs {
        let p = spec.build().map_err(CliError::compute)?;
        let (mut pairing, mut wdvv, mut curv) = (0.0f64, 0.0f64, 0.0f64);
        let (mut all_flat, mut all_assoc) = (true, true);
        for _ in 0..samples {
            let x = sample_point(spec, &mut rng);
            let g = eval_metric(p.as_ref(), &x).map_err(CliError::compute)?;
            let a = eval_amplitude(p.as_ref(), &x).map_err(CliError::compute)?;
            let rel = frobenius_pairing_residual(&g, &a).map_err(CliError::compute)? / a.max_abs().max(1.0);
            let w = wdvv_residual(&g, &a).map_err(CliError::compute)?.max_abs();
            let c = curvature_from_a(&g, &a).map_err(CliError::compute)?.max_abs();
            let (flat, assoc) = (c < FLAT_TOL, w < ASSOC_TOL);
            mismatches += usize::from(flat != assoc);
            all_flat &= flat;
            all_assoc &= assoc;
            pairing = pairing.max(rel);
            wdvv = wdvv.max(w);
            curv = curv.max(c);
            points += 1;
        }
        worst_pairing = worst_pairing.max(pairing);
        table.push(vec![
            json!(p.name()),
            json!(samples),
            float(pairing),
            float(wdvv),
            float(curv),
            json!(all_flat),
            json!(all_assoc),
        ]);
    }
    report.check(cfg, "hessian.pairing", worst_pairing, 1e-10, points);
    report.check(cfg, "hessian.wdvv_flat_equivalence", mismatches as f64, 0.5, points);

    let p = ConePotential::new(2, GroundField::R);
    let mut lc = 0.0f64;
    for _ in 0..samples {
        let x = random_cone_point(GroundField::R, 2, &mut rng);
        let g = eval_metric(&p, x.coords()).map_err(CliError::compute)?;
        let a = eval_amplitude(&p, x.coords()).map_err(CliError::compute)?;
        let from_a = curvature_from_a(&g, &a).map_err(CliError::compute)?.scaled(HESSIAN_CURVATURE_SCALE);
        let direct = curvature_direct(&p, x.coords()).map_err(CliError::compute)?;
        lc = lc.max(direct.max_diff(&from_a));
    }
    report.check(cfg, "hessian.levi_civita", lc, 1e-5, samples);
    report.set("potentials", json!(specs.len()));
    report.set("samplesPerPotential", json!(samples));
    report.set("flatThreshold", float(FLAT_TOL));
    report.set("associativityThreshold", float(ASSOC_TOL));
    report.tables.push(table);
    Ok(report)
}
