use frobforge_core::transport::{ma_residual, ma_solve, Bounds, Grid2D, MaOptions};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{float, Report, Table};

pub const CHECKS: &[&str] = &["ma.convergence_ratio", "ma.residual"];

fn exact(x: f64, y: f64) -> f64 {
    (0.5 * (x * x + y * y)).exp()
}

fn rhs(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    (1.0 + r2) * r2.exp()
}

struct Solve {
    h: f64,
    error: f64,
    residual: f64,
    iterations: usize,
}

fn solve(n: usize) -> Result<Solve, CliError> {
    let grid = Grid2D::square_intervals(n, Bounds::unit()).map_err(CliError::usage)?;
    let u = grid.sample(exact);
    let f = grid.sample(rhs);
    let sol = ma_solve(&grid, &f, &u, &MaOptions::default()).map_err(CliError::compute)?;
    let fmax = f.iter().cloned().fold(0.0, f64::max);
    let residual =
        ma_residual(&sol, &f).map_err(CliError::compute)?.iter().map(|r| r.abs()).fold(0.0, f64::max) / fmax;
    let error = sol.values().iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Solve { h: grid.hx(), error, residual, iterations: sol.iterations() })
}

/// Manufactured solution `u = exp(|x|²/2)` on the unit square at `n` and `2n`.
pub fn run(cfg: &RunConfig, n: usize) -> Result<Report, CliError> {
    if n < 4 {
        return Err(CliError::usage("--grid must be at least 4"));
    }
    let mut report = Report::new("ma");
    let mut table = Table::new("errors", &["intervals", "h", "linf_error", "relative_residual", "iterations"]);
    let coarse = solve(n)?;
    let fine = solve(2 * n)?;
    for (k, s) in [(n, &coarse), (2 * n, &fine)] {
        table.push(vec![json!(k), float(s.h), float(s.error), float(s.residual), json!(s.iterations)]);
    }
    let ratio = coarse.error / fine.error;
    report.check(cfg, "ma.convergence_ratio", (ratio - 4.0).abs(), 0.5, 2);
    report.check(cfg, "ma.residual", coarse.residual.max(fine.residual), 1e-6, 2);
    report.set("ratio", float(ratio));
    report.set("coarseError", float(coarse.error));
    report.set("fineError", float(fine.error));
    report.tables.push(table);
    Ok(report)
}
