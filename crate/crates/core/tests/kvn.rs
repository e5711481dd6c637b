use std::f64::consts::{FRAC_PI_2, PI, TAU};

use frobforge_core::bhk::InvertiblePolynomial;
use frobforge_core::kvn::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> EvolveOptions {
    EvolveOptions::default()
}

fn pendulum_grid(n: usize) -> frobforge_core::transport::Grid2D {
    phase_grid(n, n, (-PI, PI), (-4.0, 4.0)).unwrap()
}

fn random_packet(grid: &frobforge_core::transport::Grid2D, rng: &mut ChaCha8Rng) -> WaveField {
    let c = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let s = rng.gen_range(0.25..0.45);
    let k = rng.gen_range(-3.0..3.0);
    WaveField::gaussian_packet(grid.clone(), c, s, k).unwrap()
}

#[test]
fn harmonic_full_turn_returns() {
    let g = symmetric_phase_grid(128, 6.0).unwrap();
    let f = WaveField::gaussian_packet(g, [1.0, -0.5], 0.5, 2.0).unwrap();
    let e = liouville_evolve(&f, &Hamiltonian::harmonic(), TAU, &opts()).unwrap();
    assert_eq!(e.method, EvolutionMethod::SpectralRotation);
    assert!(e.field.max_abs_diff(&f).unwrap() < 1e-9);
    assert!((e.field.norm_sqr() - f.norm_sqr()).abs() < 1e-12);
}

#[test]
fn harmonic_norm_drift_at_sample_times() {
    let g = symmetric_phase_grid(96, 6.0).unwrap();
    let f = WaveField::gaussian_packet(g.clone(), [0.8, 0.4], 0.5, 1.5).unwrap();
    let phi = WaveField::gaussian_packet(g, [-0.5, 0.2], 0.6, -1.0).unwrap();
    let rep = unitarity_check(&f, Some(&phi), &Hamiltonian::harmonic(), &[0.0, 0.1, 1.0, 5.0], &opts()).unwrap();
    assert_eq!(rep.samples[0].mass_drift, 0.0);
    assert!(rep.max_mass_drift < 1e-12, "{rep:?}");
    assert!(rep.max_inner_drift < 1e-12, "{rep:?}");
}

#[test]
fn harmonic_quarter_turn_maps_centre() {
    // Hamilton's equations: (q0, p0) -> (p0, -q0) after t = π/2
    let g = symmetric_phase_grid(96, 6.0).unwrap();
    for (q0, p0) in [(1.5, 0.5), (-1.0, 2.0), (0.3, -1.2)] {
        let f = WaveField::gaussian_packet(g.clone(), [q0, p0], 0.5, 0.0).unwrap();
        let e = liouville_evolve(&f, &Hamiltonian::harmonic(), FRAC_PI_2, &opts()).unwrap();
        let m = density_projection(&e.field).mean();
        assert!((m[0] - p0).abs() < g.hx() && (m[1] + q0).abs() < g.hx(), "{m:?}");
    }
}

#[test]
fn harmonic_rotation_matches_characteristics() {
    // quarter turn + shears against the generic pullback on a grid where the
    // closed form is unavailable (shifted window)
    let g = symmetric_phase_grid(160, 6.0).unwrap();
    let shifted = phase_grid(160, 160, (-6.0, 6.0), (-6.0 + 1e-3, 6.0 + 1e-3)).unwrap();
    let t = 0.7;
    let a = liouville_evolve(&WaveField::gaussian_packet(g, [1.0, 0.5], 0.6, 0.0).unwrap(), &Hamiltonian::harmonic(), t, &opts()).unwrap();
    let bf = WaveField::gaussian_packet(shifted, [1.0, 0.5], 0.6, 0.0).unwrap();
    let b = liouville_evolve(&bf, &Hamiltonian::harmonic(), t, &opts()).unwrap();
    assert_eq!(b.method, EvolutionMethod::SemiLagrangian);
    assert!(!b.warnings.is_empty());
    let (ma, mb) = (density_projection(&a.field).mean(), density_projection(&b.field).mean());
    let exact = [1.0 * t.cos() + 0.5 * t.sin(), -1.0 * t.sin() + 0.5 * t.cos()];
    for m in [ma, mb] {
        assert!((m[0] - exact[0]).abs() < 1e-6 && (m[1] - exact[1]).abs() < 1e-6, "{m:?} vs {exact:?}");
    }
    assert!((b.field.norm_sqr() - 1.0).abs() < 1e-6, "{:e}", b.field.norm_sqr() - 1.0);
}

#[test]
fn harmonic_projection_commutes() {
    let g = symmetric_phase_grid(128, 6.0).unwrap();
    let f = WaveField::gaussian_packet(g, [0.7, -0.4], 0.5, 1.0).unwrap();
    for t in [0.3, 1.0, 2.5] {
        let r = projection_commutation(&f, &Hamiltonian::harmonic(), t, &opts()).unwrap();
        assert!(r < 1e-12, "t = {t}: {r:e}");
    }
    assert_eq!(projection_commutation(&f, &Hamiltonian::zero(), 1.0, &opts()).unwrap(), 0.0);
}

#[test]
fn pendulum_conservation_at_256() {
    let g = pendulum_grid(256);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = Hamiltonian::pendulum();
    let u = Propagator::new(&g, &h, 1.0, &opts()).unwrap();
    let mut worst_mass: f64 = 0.0;
    let mut worst_inner: f64 = 0.0;
    for _ in 0..20 {
        let (a, b) = (random_packet(&g, &mut rng), random_packet(&g, &mut rng));
        let (ea, eb) = (u.apply(&a).unwrap().field, u.apply(&b).unwrap().field);
        worst_mass = worst_mass.max((ea.norm_sqr() - 1.0).abs()).max((eb.norm_sqr() - 1.0).abs());
        worst_inner = worst_inner.max((ea.inner(&eb).unwrap() - a.inner(&b).unwrap()).norm());
    }
    assert!(worst_mass < 1e-6, "{worst_mass:e}");
    assert!(worst_inner < 1e-5, "{worst_inner:e}");
    // ‖ψ‖ drift at t = 1
    let f = random_packet(&g, &mut rng);
    assert!((u.apply(&f).unwrap().field.norm() - 1.0).abs() < 1e-5);
}

#[test]
fn pendulum_projection_commutes() {
    let g = pendulum_grid(256);
    let f = WaveField::gaussian_packet(g, [0.5, 0.3], 0.3, 3.0).unwrap();
    let r = projection_commutation(&f, &Hamiltonian::pendulum(), 0.5, &opts()).unwrap();
    assert!(r < 1e-5, "{r:e}");
}

#[test]
fn pendulum_mass_converges_under_refinement() {
    let drift = |n: usize| {
        let g = pendulum_grid(n);
        let f = WaveField::gaussian_packet(g, [0.5, 0.3], 0.35, 1.0).unwrap();
        (liouville_evolve(&f, &Hamiltonian::pendulum(), 1.0, &opts()).unwrap().field.norm_sqr() - 1.0).abs()
    };
    let (coarse, fine) = (drift(64), drift(128));
    assert!(fine < coarse, "{coarse:e} -> {fine:e}");
}

#[test]
fn density_evolution_matches_field_evolution() {
    let g = pendulum_grid(128);
    let f = WaveField::gaussian_packet(g, [0.0, 0.5], 0.4, 0.0).unwrap();
    let h = Hamiltonian::pendulum();
    let rho = evolve_density(&density_projection(&f), &h, 0.5, &opts()).unwrap();
    let psi = density_projection(&liouville_evolve(&f, &h, 0.5, &opts()).unwrap().field);
    assert!(rho.field.l1_distance(&psi).unwrap() < 1e-4);
    assert!((rho.field.total() - 1.0).abs() < 1e-5);
}

#[test]
fn quintic_samples_lie_on_the_hypersurface() {
    let p = InvertiblePolynomial::parse("x1^5+x2^5+x3^5+x4^5+x5^5").unwrap();
    let pts = fibration_sample(&p, 100, 7, &SampleOptions::default()).unwrap();
    assert_eq!(pts.len(), 100);
    for pt in &pts {
        assert!(evaluate(&p, &pt.psi).norm() < 1e-10);
        assert!(pt.rho.iter().all(|&r| r >= 0.0));
        for (z, r) in pt.psi.iter().zip(&pt.rho) {
            assert_eq!(z.norm_sqr(), *r);
        }
    }
}

#[test]
fn fiber_phases_preserve_density_coordinates() {
    let p = InvertiblePolynomial::parse("x1^3*x2+x2^3*x1").unwrap();
    let pts = fibration_sample(&p, 10, 3, &SampleOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for pt in pts {
        let theta: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..TAU)).collect();
        let moved = pt.torus_act(&theta).unwrap();
        for (z, r) in moved.psi.iter().zip(&pt.rho) {
            assert!((z.norm_sqr() - r).abs() <= 1e-15 * r.max(1.0));
        }
    }
}

fn brute_force_assignment(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    fn rec(k: usize, used: &mut Vec<bool>, a: &[[f64; 2]], b: &[[f64; 2]], acc: f64, best: &mut f64) {
        if k == a.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let d = (a[k][0] - b[j][0]).powi(2) + (a[k][1] - b[j][1]).powi(2);
                rec(k + 1, used, a, b, acc + d, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, &mut vec![false; b.len()], a, b, 0.0, &mut best);
    best / a.len() as f64
}

fn bin_centres(p: &InvertiblePolynomial, m: usize, seed: u64, bins: usize) -> Vec<[f64; 2]> {
    fibration_sample(p, m, seed, &SampleOptions::default())
        .unwrap()
        .iter()
        .map(|pt| {
            let r = weighted_normalize(p, pt).unwrap().rho;
            let c = |x: f64| ((x * bins as f64).floor().clamp(0.0, bins as f64 - 1.0) + 0.5) / bins as f64;
            [c(r[0]), c(r[1])]
        })
        .collect()
}

#[test]
fn chain_demo_cost_matches_assignment_oracle() {
    let p = InvertiblePolynomial::parse("x1^2*x2+x2^2").unwrap();
    let o = MirrorOptions { samples: 7, ..MirrorOptions::default() };
    let rep = mirror_transport_demo(&p, 13, &o).unwrap();
    let oracle = brute_force_assignment(&bin_centres(&p, 7, 13, 32), &bin_centres(&p.transpose_mirror(), 7, 13, 32));
    assert!((rep.cost - oracle).abs() < 1e-12, "{} vs {oracle}", rep.cost);
}

#[test]
fn chain_demo_report() {
    let p = InvertiblePolynomial::parse("x1^2*x2+x2^2").unwrap();
    let rep = mirror_transport_demo(&p, 42, &MirrorOptions::default()).unwrap();
    assert_eq!(rep.transpose, "x1^2+x1*x2^2");
    assert!(rep.marginal_error_source < 1e-7 && rep.marginal_error_target < 1e-7);
    assert!(rep.cost > 0.0);
    assert!(rep.path_monotone);
    assert_eq!(rep.path.len(), 5);
    assert!(rep.path[0].w2_sq_from_source < 1e-12);
    // the endpoint interpolant is the target histogram
    assert!((rep.path[4].mean[0] - rep.target_mean[0]).abs() < 1e-9);
    assert!((rep.path[4].w2_sq_from_source - rep.cost).abs() < 1e-9);
    let again = mirror_transport_demo(&p, 42, &MirrorOptions::default()).unwrap();
    assert_eq!(rep, again);
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("path.csv");
    rep.write_path_csv(&csv).unwrap();
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 6);
}

#[test]
fn self_transpose_demos_are_trivial() {
    for s in ["x1^3+x2^3+x3^3", "x1^3*x2+x2^3*x1"] {
        let p = InvertiblePolynomial::parse(s).unwrap();
        let rep = mirror_transport_demo(&p, 5, &MirrorOptions::default()).unwrap();
        assert!(rep.cost < 1e-6, "{s}: {}", rep.cost);
        assert!(rep.marginal_error_source < 1e-7 && rep.marginal_error_target < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn torus_phase_keeps_density(theta in -10.0f64..10.0, seed in any::<u64>()) {
        let g = symmetric_phase_grid(16, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<Complex64> = (0..g.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f = WaveField::new(g, vals).unwrap();
        let rotated = torus_act(&f, theta);
        let (a, b) = (density_projection(&f), density_projection(&rotated));
        for (x, y) in a.mass().iter().zip(b.mass()) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
        prop_assert!(fiber_equivalent(&f, &rotated).unwrap());
    }

    #[test]
    fn harmonic_evolution_is_unitary(t in -8.0f64..8.0) {
        let g = symmetric_phase_grid(48, 6.0).unwrap();
        let f = WaveField::gaussian_packet(g, [0.5, 0.5], 0.7, 1.0).unwrap();
        let e = liouville_evolve(&f, &Hamiltonian::harmonic(), t, &opts()).unwrap();
        prop_assert!((e.field.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
