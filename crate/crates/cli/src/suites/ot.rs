use frobforge_core::transport::{
    brenier_discrete, brenier_points, config_transport, gaussian_pdf, grid_epsilon, ma_transport_residual,
    matching_cost, Bounds, Grid2D, GridDensity, Method, DEFAULT_SINKHORN_EPS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{float, Report, Table};

pub const CHECKS: &[&str] = &["ot.lp_sinkhorn_gap", "ot.marginals", "ot.config_brute_force", "ot.caffarelli"];

const CONFIG_MAX: usize = 7;
const CONFIG_REPEATS: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct OtParams {
    pub instances: usize,
    pub points: usize,
    pub grid: usize,
}

fn random_cloud(rng: &mut ChaCha8Rng, k: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let x: Vec<[f64; 2]> = (0..k).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    (x, w.into_iter().map(|v| v / s).collect())
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

pub fn run(cfg: &RunConfig, params: OtParams) -> Result<Report, CliError> {
    if !(2..=64).contains(&params.points) {
        return Err(CliError::usage("--points must lie in 2..=64"));
    }
    if params.instances == 0 || params.grid < 8 {
        return Err(CliError::usage("--instances must be positive and --grid at least 8"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new("ot");
    let mut table = Table::new("instances", &["instance", "sources", "targets", "lp_cost", "sinkhorn_cost", "gap"]);
    let (mut gap, mut marg) = (0.0f64, 0.0f64);
    for case in 0..params.instances {
        let m = rng.gen_range(2..=params.points);
        let n = rng.gen_range(2..=params.points);
        let (x, a) = random_cloud(&mut rng, m);
        let (y, b) = random_cloud(&mut rng, n);
        let lp = brenier_points(&x, &a, &y, &b, Method::ExactLp).map_err(CliError::compute)?;
        let sk = brenier_points(&x, &a, &y, &b, Method::Sinkhorn { eps: DEFAULT_SINKHORN_EPS })
            .map_err(CliError::compute)?;
        for plan in [&lp.plan, &sk.plan] {
            let (r, c) = plan.marginal_errors();
            marg = marg.max(r).max(c);
        }
        let g = (lp.plan.cost - sk.plan.cost).abs();
        gap = gap.max(g);
        table.push(vec![json!(case), json!(m), json!(n), float(lp.plan.cost), float(sk.plan.cost), float(g)]);
    }
    report.check(cfg, "ot.lp_sinkhorn_gap", gap, 1e-4, params.instances);
    report.check(cfg, "ot.marginals", marg, 1e-7, 2 * params.instances);

    let mut config_err = 0.0f64;
    for m in 1..=CONFIG_MAX {
        let perms = permutations(m);
        for _ in 0..CONFIG_REPEATS {
            let pts = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
                (0..m).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect()
            };
            let (a, b) = (pts(&mut rng), pts(&mut rng));
            let best = perms.iter().map(|p| matching_cost(&a, &b, p)).fold(f64::INFINITY, f64::min);
            let got = config_transport(&a, &b).map_err(CliError::compute)?;
            config_err = config_err.max((got.cost - best).abs());
        }
    }
    report.check(cfg, "ot.config_brute_force", config_err, 1e-12, CONFIG_MAX * CONFIG_REPEATS);

    let grid = Grid2D::new(params.grid, params.grid, Bounds::square(4.0)).map_err(CliError::usage)?;
    let (m1, m2, s) = ([-0.5, 0.0], [0.5, 0.3], [0.7, 0.7]);
    let mu = GridDensity::gaussian(grid.clone(), m1, s).map_err(CliError::compute)?;
    let nu = GridDensity::gaussian(grid.clone(), m2, s).map_err(CliError::compute)?;
    let sol = brenier_discrete(&mu, &nu, Method::Sinkhorn { eps: grid_epsilon(&grid) }).map_err(CliError::compute)?;
    let res = ma_transport_residual(&sol.potential, |x, y| gaussian_pdf(m1, s, x, y), |x, y| {
        gaussian_pdf(m2, s, x, y)
    });
    report.check(cfg, "ot.caffarelli", res.median_relative, 0.05, res.nodes);
    report.set("caffarelliMaxRelative", float(res.max_relative));
    report.set("caffarelliCost", float(sol.plan.cost));
    report.set("grid", json!(params.grid));
    report.tables.push(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::permutations;

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        let mut p = permutations(3);
        p.sort();
        p.dedup();
        assert_eq!(p.len(), 6);
    }
}
