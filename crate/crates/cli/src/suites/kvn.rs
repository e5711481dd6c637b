use std::f64::consts::{PI, TAU};
use std::fs;

use frobforge_core::kvn::{
    density_projection, mirror_transport_demo, phase_grid, projection_commutation, symmetric_phase_grid, torus_act,
    unitarity_check, EvolutionMethod, EvolveOptions, Hamiltonian, MirrorOptions, Propagator, WaveField,
};
use frobforge_core::transport::Grid2D;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{float, Report, Table};
use crate::suites::bhk::parse_polynomial;

pub const CHECKS: &[&str] = &[
    "kvn.mass_drift",
    "kvn.mirror.marginals",
    "kvn.mirror.path_monotone",
    "kvn.torus_invariance",
    "kvn.harmonic.mass_drift",
    "kvn.harmonic.return",
    "kvn.pendulum.mass_drift",
    "kvn.pendulum.inner_drift",
    "kvn.pendulum.commutation",
];

/// Exact pullbacks conserve mass to round-off; interpolated ones to the scheme error.
const EXACT_MASS_TOL: f64 = 1e-12;
const INTERPOLATED_MASS_TOL: f64 = 1e-6;

/// Harmonic runs use a symmetric square so the closed-form rotation applies; the
/// pendulum grid spans one period in `q`.
fn phase_space(h: &Hamiltonian, n: usize) -> Result<Grid2D, CliError> {
    let g = match h.name() {
        "pendulum" => phase_grid(n, n, (-PI, PI), (-4.0, 4.0)),
        _ => symmetric_phase_grid(n, 6.0),
    };
    g.map_err(CliError::usage)
}

fn random_packet(grid: &Grid2D, rng: &mut ChaCha8Rng) -> Result<WaveField, CliError> {
    let c = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let s = rng.gen_range(0.25..0.45);
    let k = rng.gen_range(-3.0..3.0);
    WaveField::gaussian_packet(grid.clone(), c, s, k).map_err(CliError::compute)
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveParams<'a> {
    pub hamiltonian: &'a str,
    pub t: f64,
    pub grid: usize,
    pub snapshots: usize,
}

pub fn evolve_suite(cfg: &RunConfig, params: EvolveParams) -> Result<Report, CliError> {
    let h = Hamiltonian::by_name(params.hamiltonian)
        .ok_or_else(|| CliError::Usage(format!("unknown Hamiltonian {:?}", params.hamiltonian)))?;
    if !params.t.is_finite() {
        return Err(CliError::usage("--t must be finite"));
    }
    if params.snapshots == 0 {
        return Err(CliError::usage("--snapshots must be positive"));
    }
    let grid = phase_space(&h, params.grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let psi = random_packet(&grid, &mut rng)?;
    let opts = EvolveOptions::default();
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut report = Report::new("kvn-evolve");
    let mut table = Table::new("snapshots", &["index", "t", "mass", "mass_drift"]);
    let mut snapshots = Vec::new();
    let (mut worst, mut exact, mut warnings, mut methods) = (0.0f64, true, Vec::new(), Vec::new());
    for k in 0..=params.snapshots {
        let t = params.t * k as f64 / params.snapshots as f64;
        let u = Propagator::new(&grid, &h, t, &opts).map_err(CliError::compute)?;
        let e = u.apply(&psi).map_err(CliError::compute)?;
        exact &= e.method != EvolutionMethod::SemiLagrangian;
        methods.push(serde_json::to_value(e.method).map_err(CliError::compute)?);
        warnings.extend(e.warnings);
        let rho = density_projection(&e.field);
        let mass = rho.total();
        worst = worst.max((mass - 1.0).abs());
        let file = match &cfg.out {
            Some(dir) => {
                let name = format!("kvn-evolve_snapshot_{k:03}.bin");
                rho.write_binary(&dir.join(&name)).map_err(CliError::compute)?;
                json!(name)
            }
            None => json!(null),
        };
        table.push(vec![json!(k), float(t), float(mass), float((mass - 1.0).abs())]);
        snapshots.push(json!({"index": k, "t": float(t), "mass": float(mass), "file": file}));
    }
    let tol = if exact { EXACT_MASS_TOL } else { INTERPOLATED_MASS_TOL };
    report.check(cfg, "kvn.mass_drift", worst, tol, params.snapshots + 1);
    report.set("hamiltonian", json!(h.name()));
    report.set("grid", json!(params.grid));
    report.set("methods", json!(methods));
    report.set("snapshots", json!(snapshots));
    report.set("warnings", json!(warnings));
    report.tables.push(table);
    Ok(report)
}

pub fn mirror_suite(cfg: &RunConfig, poly: &str, samples: usize, bins: usize) -> Result<Report, CliError> {
    let p = parse_polynomial(poly)?;
    if p.n() < 2 {
        return Err(CliError::usage("the mirror demo needs at least two variables"));
    }
    if samples == 0 || bins < 2 {
        return Err(CliError::usage("--samples must be positive and --bins at least 2"));
    }
    let opts = MirrorOptions { samples, bins, ..MirrorOptions::default() };
    let demo = mirror_transport_demo(&p, cfg.seed, &opts).map_err(CliError::compute)?;
    let mut report = Report::new("kvn-mirror-demo");
    report.check(
        cfg,
        "kvn.mirror.marginals",
        demo.marginal_error_source.max(demo.marginal_error_target),
        1e-7,
        2 * samples,
    );
    report.check_bool(cfg, "kvn.mirror.path_monotone", demo.path_monotone, demo.path.len());
    let mut path = Table::new("path", &["t", "mean_x", "mean_y", "w2_sq_from_source"]);
    for pt in &demo.path {
        path.push(vec![float(pt.t), float(pt.mean[0]), float(pt.mean[1]), float(pt.w2_sq_from_source)]);
    }
    report.artifacts.push(path);
    report.data = serde_json::to_value(&demo).map_err(CliError::compute)?;
    Ok(report)
}

/// Torus invariance, harmonic closed form and pendulum conservation.
pub fn check_suite(cfg: &RunConfig, pendulum_grid: usize) -> Result<Report, CliError> {
    let opts = EvolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new("kvn-check");

    let harmonic = Hamiltonian::harmonic();
    let grid = phase_space(&harmonic, 128)?;
    let psi = random_packet(&grid, &mut rng)?;
    let rho = density_projection(&psi);
    let mut torus = 0.0f64;
    let thetas: Vec<f64> = (0..8).map(|_| rng.gen_range(-PI..PI)).collect();
    for &theta in &thetas {
        let moved = density_projection(&torus_act(&psi, theta));
        torus = rho.mass().iter().zip(moved.mass()).map(|(a, b)| (a - b).abs()).fold(torus, f64::max);
    }
    report.check(cfg, "kvn.torus_invariance", torus, 1e-15, thetas.len());

    let turn = Propagator::new(&grid, &harmonic, TAU, &opts).map_err(CliError::compute)?;
    let back = turn.apply(&psi).map_err(CliError::compute)?.field;
    report.check(cfg, "kvn.harmonic.mass_drift", (back.norm_sqr() - psi.norm_sqr()).abs(), EXACT_MASS_TOL, 1);
    report.check(cfg, "kvn.harmonic.return", back.max_abs_diff(&psi).map_err(CliError::compute)?, 1e-9, 1);

    let pendulum = Hamiltonian::pendulum();
    let grid = phase_space(&pendulum, pendulum_grid)?;
    let psi = random_packet(&grid, &mut rng)?;
    let phi = random_packet(&grid, &mut rng)?;
    let unit = unitarity_check(&psi, Some(&phi), &pendulum, &[0.5, 1.0], &opts).map_err(CliError::compute)?;
    report.check(cfg, "kvn.pendulum.mass_drift", unit.max_mass_drift, INTERPOLATED_MASS_TOL, unit.samples.len());
    report.check(cfg, "kvn.pendulum.inner_drift", unit.max_inner_drift, 1e-5, unit.samples.len());
    let comm = projection_commutation(&psi, &pendulum, 0.5, &opts).map_err(CliError::compute)?;
    report.check(cfg, "kvn.pendulum.commutation", comm, 1e-5, 1);
    report.set("pendulumGrid", json!(pendulum_grid));
    report.set("unitarity", serde_json::to_value(&unit).map_err(CliError::compute)?);
    Ok(report)
}
