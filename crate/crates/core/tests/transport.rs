use std::time::Instant;

use frobforge_core::transport::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn manufactured_u(x: f64, y: f64) -> f64 {
    (0.5 * (x * x + y * y)).exp()
}

fn manufactured_f(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    (1.0 + r2) * r2.exp()
}

fn manufactured_error(n: usize) -> f64 {
    let grid = Grid2D::square_intervals(n, Bounds::unit()).unwrap();
    let exact = grid.sample(manufactured_u);
    let f = grid.sample(manufactured_f);
    let sol = ma_solve(&grid, &f, &exact, &MaOptions::default()).unwrap();
    let res = ma_residual(&sol, &f).unwrap();
    let fmax = f.iter().cloned().fold(0.0, f64::max);
    assert!(res.iter().all(|r| r.abs() < 1e-6 * fmax));
    assert!(sol.is_discretely_convex(1e-8));
    max_abs_diff(sol.values(), &exact)
}

#[test]
fn manufactured_rhs_matches_finite_difference_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-3;
    for _ in 0..20 {
        let (x, y) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let u = manufactured_u;
        let uxx = (u(x + h, y) - 2.0 * u(x, y) + u(x - h, y)) / (h * h);
        let uyy = (u(x, y + h) - 2.0 * u(x, y) + u(x, y - h)) / (h * h);
        let uxy = (u(x + h, y + h) - u(x + h, y - h) - u(x - h, y + h) + u(x - h, y - h)) / (4.0 * h * h);
        let det = uxx * uyy - uxy * uxy;
        assert!((det - manufactured_f(x, y)).abs() < 1e-5 * manufactured_f(x, y));
    }
}

#[test]
fn ma_solver_converges_at_second_order() {
    let t = Instant::now();
    let e32 = manufactured_error(32);
    let e64 = manufactured_error(64);
    let ratio = e32 / e64;
    assert!((3.5..=4.5).contains(&ratio), "errors {e32:e} {e64:e} ratio {ratio}");
    assert!(t.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn ma_residual_grows_with_perturbation() {
    let grid = Grid2D::square_intervals(24, Bounds::unit()).unwrap();
    let f = vec![1.0; grid.len()];
    let mut last = 0.0;
    for amp in [1e-4, 1e-3, 1e-2] {
        let u = grid.sample(|x, y| {
            0.5 * (x * x + y * y) + amp * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()
        });
        let pot = ConvexPotentialGrid::from_values(grid.clone(), u).unwrap();
        let r = ma_residual(&pot, &f).unwrap();
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm > last, "{norm} after {last}");
        last = norm;
    }
    let pot = ConvexPotentialGrid::from_values(grid.clone(), vec![0.0; 4]);
    assert!(pot.is_err());
    let exact = ConvexPotentialGrid::from_values(grid.clone(), grid.sample(|x, y| 0.5 * (x * x + y * y))).unwrap();
    assert!(matches!(ma_residual(&exact, &[1.0]), Err(TransportError::ShapeMismatch(_))));
    assert!(ma_residual(&exact, &f).unwrap().iter().all(|r| r.abs() < 1e-10));
}

#[test]
fn ma_solve_on_a_disk() {
    // u = |x|²/2 + |x|⁴/4 has det D²u = (1 + |x|²)(1 + 3|x|²)
    let grid = Grid2D::with_domain(41, 41, Bounds::square(1.0), |x, y| x * x + y * y < 0.9).unwrap();
    let exact = grid.sample(|x, y| {
        let r2 = x * x + y * y;
        0.5 * r2 + 0.25 * r2 * r2
    });
    let f = grid.sample(|x, y| {
        let r2 = x * x + y * y;
        (1.0 + r2) * (1.0 + 3.0 * r2)
    });
    let sol = ma_solve(&grid, &f, &exact, &MaOptions::default()).unwrap();
    assert!(max_abs_diff(sol.values(), &exact) < 5e-3);
}

fn random_instance(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (Vec<[f64; 2]>, Vec<f64>, Vec<[f64; 2]>, Vec<f64>) {
    let pts = |rng: &mut ChaCha8Rng, k: usize| -> Vec<[f64; 2]> {
        (0..k).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect()
    };
    let masses = |rng: &mut ChaCha8Rng, k: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    };
    let (x, y) = (pts(rng, m), pts(rng, n));
    let (a, b) = (masses(rng, m), masses(rng, n));
    (x, a, y, b)
}

/// Vertex enumeration of the transportation polytope: every vertex is carried by a
/// spanning tree of `m + n − 1` cells in the bipartite row/column graph, and the
/// tree determines the flows by peeling leaves.
fn brute_force_small(a: &[f64], b: &[f64], c: &DMatrix<f64>) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut choose: Vec<usize> = (0..k).collect();
    loop {
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let mut live: Vec<(usize, usize)> = choose.iter().map(|&e| cells[e]).collect();
        let mut cost = 0.0;
        let mut feasible = true;
        while !live.is_empty() {
            let deg_r = |i: usize, l: &[(usize, usize)]| l.iter().filter(|e| e.0 == i).count();
            let deg_c = |j: usize, l: &[(usize, usize)]| l.iter().filter(|e| e.1 == j).count();
            let leaf = live.iter().position(|&(i, j)| deg_r(i, &live) == 1 || deg_c(j, &live) == 1);
            let Some(p) = leaf else {
                feasible = false;
                break;
            };
            let (i, j) = live.swap_remove(p);
            let q = if deg_r(i, &live) == 0 { ra[i] } else { rb[j] };
            if q < -1e-14 {
                feasible = false;
                break;
            }
            ra[i] -= q;
            rb[j] -= q;
            cost += q * c[(i, j)];
        }
        if feasible && ra.iter().chain(&rb).all(|r| r.abs() < 1e-12) {
            best = best.min(cost);
        }
        // next k-subset in lexicographic order
        let mut t = k;
        while t > 0 && choose[t - 1] == cells.len() - k + t - 1 {
            t -= 1;
        }
        if t == 0 {
            return best;
        }
        choose[t - 1] += 1;
        for s in t..k {
            choose[s] = choose[s - 1] + 1;
        }
    }
}

#[test]
fn lp_matches_vertex_enumeration_on_tiny_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let (x, a, y, b) = random_instance(&mut rng, 4, 4);
        let c = DMatrix::from_fn(4, 4, |i, j| (x[i][0] - y[j][0]).powi(2) + (x[i][1] - y[j][1]).powi(2));
        let lp = transport_lp(&a, &b, &c).unwrap();
        let bf = brute_force_small(&a, &b, &c);
        assert!((lp.cost - bf).abs() < 1e-12, "{} vs {}", lp.cost, bf);
    }
}

#[test]
fn lp_and_sinkhorn_agree_on_small_instances() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let m = rng.gen_range(2..=6);
        let n = rng.gen_range(2..=6);
        let (x, a, y, b) = random_instance(&mut rng, m, n);
        let lp = brenier_points(&x, &a, &y, &b, Method::ExactLp).unwrap();
        let sk = brenier_points(&x, &a, &y, &b, Method::Sinkhorn { eps: 1e-3 }).unwrap();
        let (r, c) = lp.plan.marginal_errors();
        assert!(r < 1e-12 && c < 1e-12, "case {case}: LP marginals {r:e} {c:e}");
        let (r, c) = sk.plan.marginal_errors();
        assert!(r < 1e-7 && c < 1e-7, "case {case}: Sinkhorn marginals {r:e} {c:e}");
        let gap = (lp.plan.cost - sk.plan.cost).abs();
        worst = worst.max(gap);
        assert!(gap < 1e-4, "case {case}: LP {} Sinkhorn {}", lp.plan.cost, sk.plan.cost);
        assert!(sk.plan.cost >= lp.plan.cost - 1e-12);
    }
    assert!(t.elapsed().as_secs_f64() < 60.0, "worst gap {worst:e}");
}

#[test]
fn identical_measures_couple_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (x, a, _, _) = random_instance(&mut rng, 5, 5);
    let s = brenier_points(&x, &a, &x, &a, Method::ExactLp).unwrap();
    assert!(s.plan.cost.abs() < 1e-15);
    for (i, j, m) in s.plan.triplets(0.0) {
        assert_eq!(i, j);
        assert!((m - a[i]).abs() < 1e-15);
    }
    // the duals are not unique here, but every x_i must be a subgradient of U at x_i
    let u = &s.potential;
    for i in 0..5 {
        for k in 0..5 {
            let lin = x[i][0] * (x[k][0] - x[i][0]) + x[i][1] * (x[k][1] - x[i][1]);
            assert!(u[k] - u[i] >= lin - 1e-12);
        }
    }
}

#[test]
fn single_atom_is_a_translation() {
    let (p, q, w) = ([0.2, -0.4], [1.5, 0.3], 0.7);
    for method in [Method::ExactLp, Method::Sinkhorn { eps: 1e-3 }] {
        let s = brenier_points(&[p], &[w], &[q], &[w], method).unwrap();
        let expect = w * ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2));
        assert!((s.plan.cost - expect).abs() < 1e-12);
        let t = s.plan.barycentric_map()[0].unwrap();
        assert!((t[0] - q[0]).abs() < 1e-15 && (t[1] - q[1]).abs() < 1e-15);
    }
    let r = brenier_points(&[p], &[1.0], &[q], &[2.0], Method::ExactLp);
    assert!(matches!(r, Err(TransportError::MassMismatch { .. })));
}

#[test]
fn one_dimensional_maps_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let mut xs: Vec<f64> = (0..30).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut ys: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..3.0)).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let a: Vec<f64> = (0..30).map(|_| rng.gen_range(0.1..1.0)).collect();
        let b0: Vec<f64> = (0..25).map(|_| rng.gen_range(0.1..1.0)).collect();
        let scale = a.iter().sum::<f64>() / b0.iter().sum::<f64>();
        let b: Vec<f64> = b0.iter().map(|v| v * scale).collect();
        let src: Vec<[f64; 2]> = xs.iter().map(|&x| [x, 0.0]).collect();
        let tgt: Vec<[f64; 2]> = ys.iter().map(|&y| [y, 0.0]).collect();
        let s = brenier_points(&src, &a, &tgt, &b, Method::ExactLp).unwrap();
        // support of the plan is monotone: no crossing pairs
        let trip = s.plan.triplets(1e-14);
        for &(i, j, _) in &trip {
            for &(k, l, _) in &trip {
                assert!(!(i < k && j > l), "crossing ({i},{j}) ({k},{l})");
            }
        }
        let t = s.plan.barycentric_map();
        for w in t.windows(2) {
            assert!(w[0].unwrap()[0] <= w[1].unwrap()[0] + 1e-12);
        }
    }
}

#[test]
fn config_transport_equals_permutation_brute_force() {
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
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for m in 1..=7 {
        let perms = permutations(m);
        for _ in 0..4 {
            let a: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let b: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let best = perms.iter().map(|p| matching_cost(&a, &b, p)).fold(f64::INFINITY, f64::min);
            let got = config_transport(&a, &b).unwrap();
            assert_eq!(got.cost, best, "m = {m}");
        }
    }
}

fn gaussian_grid() -> Grid2D {
    Grid2D::new(64, 64, Bounds::square(4.0)).unwrap()
}

#[test]
fn pushforward_identity_and_translation() {
    let grid = Grid2D::new(21, 21, Bounds::square(1.0)).unwrap();
    let mu = GridDensity::gaussian(grid.clone(), [0.0, 0.1], [0.3, 0.25]).unwrap();
    let id = pushforward_map(&mu, &grid, Some).unwrap();
    assert!(id.l1_distance(&mu).unwrap() < 1e-14);
    let h = grid.hx();
    let shifted = pushforward_map(&mu, &grid, |p| Some([p[0] + 2.0 * h, p[1]])).unwrap();
    assert!((shifted.total() - mu.total()).abs() < 1e-12);
    for j in 0..21 {
        for i in 0..18 {
            let (a, b) = (mu.mass()[grid.index(i, j)], shifted.mass()[grid.index(i + 2, j)]);
            assert!((a - b).abs() < 1e-9 * (1.0 + a));
        }
    }
    let err = pushforward_map(&mu, &grid, |p| if p[0] > 0.5 { None } else { Some(p) });
    assert!(matches!(err, Err(TransportError::UndefinedOnSupport { .. })));
}

#[test]
fn gaussian_translation_satisfies_the_transport_equation() {
    let t = Instant::now();
    let grid = gaussian_grid();
    let (m1, m2, s) = ([-0.5, 0.0], [0.5, 0.3], [0.7, 0.7]);
    let mu = GridDensity::gaussian(grid.clone(), m1, s).unwrap();
    let nu = GridDensity::gaussian(grid.clone(), m2, s).unwrap();
    let sol = brenier_discrete(&mu, &nu, Method::Sinkhorn { eps: grid_epsilon(&grid) }).unwrap();
    let (r, c) = sol.plan.marginal_errors();
    assert!(r < 1e-7 && c < 1e-7, "{r:e} {c:e}");
    let res = ma_transport_residual(&sol.potential, |x, y| gaussian_pdf(m1, s, x, y), |x, y| gaussian_pdf(m2, s, x, y));
    assert!(res.median_relative < 0.05, "{res:?}");
    // pushforward of the plan is ν
    let pf = pushforward_plan(&sol.plan, &grid).unwrap();
    assert!(max_abs_diff(&pf.weights(), &nu.weights()) < 1e-7);
    // exact cost of a translation is |m2 − m1|²
    let expect = (m2[0] - m1[0]).powi(2) + (m2[1] - m1[1]).powi(2);
    assert!((sol.plan.cost - expect).abs() < 0.1, "cost {}", sol.plan.cost);
    // interpolation midpoint
    let half = displacement_interpolate(&mu, &sol.potential, 0.5).unwrap();
    let mean = half.mean();
    assert!((mean[0] - 0.0).abs() < grid.hx() && (mean[1] - 0.15).abs() < grid.hy(), "{mean:?}");
    assert!((half.total() - mu.total()).abs() < 1e-9);
    assert!(t.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn anisotropic_gaussians_follow_the_linear_map() {
    let grid = gaussian_grid();
    let (s1, s2) = ([1.0, 0.5], [0.5, 1.0]);
    let mu = GridDensity::gaussian(grid.clone(), [0.0, 0.0], s1).unwrap();
    let nu = GridDensity::gaussian(grid.clone(), [0.0, 0.0], s2).unwrap();
    let sol = brenier_discrete(&mu, &nu, Method::Sinkhorn { eps: grid_epsilon(&grid) }).unwrap();
    // closed form between centred Gaussians with commuting covariances: x ↦ diag(s2/s1) x
    let w = mu.weights();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..grid.len() {
        if sol.potential.hessian_at(k).is_none() {
            continue;
        }
        let [x, y] = grid.point(k);
        let t = [s2[0] / s1[0] * x, s2[1] / s1[1] * y];
        let d = sol.potential.gradient_at(k);
        num += w[k] * ((d[0] - t[0]).powi(2) + (d[1] - t[1]).powi(2));
        den += w[k] * (t[0] * t[0] + t[1] * t[1]);
    }
    let rms = (num / den).sqrt();
    assert!(rms < 0.03, "relative RMS {rms}");
    let res = ma_transport_residual(
        &sol.potential,
        |x, y| gaussian_pdf([0.0, 0.0], s1, x, y),
        |x, y| gaussian_pdf([0.0, 0.0], s2, x, y),
    );
    assert!(res.median_relative < 0.1, "{res:?}");
}

#[test]
fn interpolation_endpoints_and_range() {
    let grid = Grid2D::new(32, 32, Bounds::square(3.0)).unwrap();
    let mu = GridDensity::gaussian(grid.clone(), [-0.3, 0.0], [0.6, 0.6]).unwrap();
    let nu = GridDensity::gaussian(grid.clone(), [0.4, 0.2], [0.6, 0.5]).unwrap();
    let sol = brenier_discrete(&mu, &nu, Method::Sinkhorn { eps: grid_epsilon(&grid) }).unwrap();
    let t0 = displacement_interpolate(&mu, &sol.potential, 0.0).unwrap();
    assert!(t0.l1_distance(&mu).unwrap() < 1e-14);
    let t1 = displacement_interpolate(&mu, &sol.potential, 1.0).unwrap();
    let pg = pushforward_gradient(&mu, &sol.potential).unwrap();
    assert_eq!(t1, pg);
    for t in [0.25, 0.5, 0.75] {
        let mt = displacement_interpolate(&mu, &sol.potential, t).unwrap();
        assert!((mt.total() - mu.total()).abs() < 1e-9);
    }
    assert!(matches!(
        displacement_interpolate(&mu, &sol.potential, 1.5),
        Err(TransportError::ParamOutOfRange(_))
    ));
}

#[test]
fn double_interpolation_restricts_the_map() {
    let grid = Grid2D::new(48, 48, Bounds::square(4.0)).unwrap();
    let mu = GridDensity::gaussian(grid.clone(), [-0.6, 0.1], [0.8, 0.6]).unwrap();
    let nu = GridDensity::gaussian(grid.clone(), [0.5, -0.2], [0.6, 0.8]).unwrap();
    let eps = grid_epsilon(&grid);
    let full = brenier_discrete(&mu, &nu, Method::Sinkhorn { eps }).unwrap();
    let t = 0.5;
    let mid = displacement_interpolate(&mu, &full.potential, t).unwrap();
    let rest = brenier_discrete(&mid, &nu, Method::Sinkhorn { eps }).unwrap();
    let grad_rest = rest.potential.gradient_field();
    let gx: Vec<f64> = grad_rest.iter().map(|g| g[0]).collect();
    let gy: Vec<f64> = grad_rest.iter().map(|g| g[1]).collect();
    let w = mu.weights();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..grid.len() {
        if full.potential.hessian_at(k).is_none() {
            continue;
        }
        let x = grid.point(k);
        let d = full.potential.gradient_at(k);
        let xt = [(1.0 - t) * x[0] + t * d[0], (1.0 - t) * x[1] + t * d[1]];
        let r = [grid.interpolate(&gx, xt[0], xt[1]), grid.interpolate(&gy, xt[0], xt[1])];
        num += w[k] * ((r[0] - d[0]).powi(2) + (r[1] - d[1]).powi(2));
        den += w[k] * ((d[0] - x[0]).powi(2) + (d[1] - x[1]).powi(2));
    }
    let rms = (num / den).sqrt();
    assert!(rms < 0.05, "relative RMS {rms}");
}

#[test]
fn exact_lp_on_small_grids_recovers_translation() {
    let grid = Grid2D::new(9, 9, Bounds::square(1.0)).unwrap();
    let h = grid.hx();
    let mu = GridDensity::gaussian(grid.clone(), [-h, 0.0], [0.25, 0.25]).unwrap();
    let shifted = pushforward_map(&mu, &grid, |p| Some([p[0] + h, p[1]])).unwrap();
    let sol = brenier_discrete(&mu, &shifted, Method::ExactLp).unwrap();
    let (r, c) = sol.plan.marginal_errors();
    assert!(r < 1e-12 && c < 1e-12);
    // the shift itself is admissible, and the mean displacement bounds any plan below
    let moved: f64 = mu
        .support()
        .iter()
        .filter(|(k, _, _)| grid.coords(*k).0 + 1 < grid.nx())
        .map(|s| s.2)
        .sum();
    let (ma, mb) = (mu.mean(), shifted.mean());
    let lower = mu.total() * ((ma[0] - mb[0]).powi(2) + (ma[1] - mb[1]).powi(2));
    assert!(sol.plan.cost <= h * h * moved + 1e-12);
    assert!(sol.plan.cost >= lower - 1e-12);
    // U is a maximum of affine functions: second differences along the axes and
    // diagonals are nonnegative
    let u = sol.potential.values();
    let n = grid.nx();
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = grid.index(i, j);
            for step in [1, n, n + 1, n - 1] {
                assert!(u[k + step] - 2.0 * u[k] + u[k - step] >= -1e-12);
            }
        }
    }
}

#[test]
fn brenier_rejects_unequal_totals() {
    let grid = Grid2D::new(8, 8, Bounds::unit()).unwrap();
    let mu = GridDensity::from_fn(grid.clone(), |_, _| 1.0).unwrap();
    let nu = GridDensity::from_fn(grid, |_, _| 2.0).unwrap();
    assert!(matches!(
        brenier_discrete(&mu, &nu, Method::ExactLp),
        Err(TransportError::MassMismatch { .. })
    ));
}

#[test]
fn plan_triplets_export() {
    let x = vec![[0.0, 0.0], [1.0, 0.0]];
    let y = vec![[0.0, 1.0], [1.0, 1.0]];
    let s = brenier_points(&x, &[0.5, 0.5], &y, &[0.5, 0.5], Method::ExactLp).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("plan.csv");
    s.plan.write_triplets_csv(&p, 0.0).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("i,j,mass"));
}
