mod common;

use alfven_core::field::scalar_from_fn;
use alfven_core::initial::initial_state;
use alfven_core::solver::{
    free_space_pressure_derivatives, pressure_newtonian_oracle, pressure_newtonian_oracle_with, Cutoff,
};
use alfven_core::solver::{elsasser_rhs, pressure_poisson, step_rk4, vorticity_residual};
use alfven_core::spectral::{curl, divergence, translate};
use alfven_core::{run, run_from, ElsasserState, Error, Family, Grid3, InitialRecipe, SimConfig, VectorField};
use common::*;
use proptest::prelude::*;

/// Divergence-free random data of sup-norm `amp` on the 2π torus.
fn small_field(grid: &Grid3, seed: u64, k_band: f64, amp: f64) -> VectorField {
    let v = curl(&random_field(grid, seed, k_band)).unwrap();
    let m = v.max_abs();
    v.scaled(amp / m)
}

fn small_state(n: usize, seed: u64, amp: f64) -> ElsasserState {
    let g = torus(n);
    ElsasserState::new(0.0, small_field(&g, seed, 2.0, amp), small_field(&g, seed + 1, 2.0, amp)).unwrap()
}

#[test]
fn pressure_vanishes_without_second_family() {
    let g = torus(16);
    let zp = small_field(&g, 1, 3.0, 0.1);
    let p = pressure_poisson(&zp, &VectorField::zeros(&g)).unwrap();
    assert_eq!(scalar_max(&p), 0.0);
}

#[test]
fn pressure_of_crossed_shear_modes() {
    let g = torus(16);
    let zp = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
    let zm = VectorField::from_fn(&g, |x| [0.0, x[0].sin(), 0.0]);
    let p = pressure_poisson(&zp, &zm).unwrap();
    let expected = scalar_from_fn(&g, |x| 0.5 * x[0].cos() * x[1].cos());
    assert!(scalar_max(&(&p - &expected)) < 1e-12);
}

#[test]
fn pressure_rejects_compressible_input() {
    let g = torus(16);
    let zp = VectorField::from_fn(&g, |x| [x[0].sin(), 0.0, 0.0]);
    let zm = small_field(&g, 2, 3.0, 0.1);
    assert!(matches!(pressure_poisson(&zp, &zm), Err(Error::NotDivergenceFree(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pressure_is_symmetric_in_the_families(seed in 0u64..500) {
        let g = torus(16);
        let a = small_field(&g, seed, 3.0, 0.2);
        let b = small_field(&g, seed + 1000, 3.0, 0.2);
        let p1 = pressure_poisson(&a, &b).unwrap();
        let p2 = pressure_poisson(&b, &a).unwrap();
        prop_assert!(scalar_max(&(&p1 - &p2)) <= 1e-12 * scalar_max(&p1));
    }

    #[test]
    fn tendencies_are_divergence_free(seed in 0u64..500) {
        let s = small_state(16, seed, 0.05);
        let t = elsasser_rhs(&s).unwrap();
        for d in [&t.dz_plus, &t.dz_minus] {
            let div = scalar_max(&divergence(d).unwrap());
            prop_assert!(div <= 1e-9 * d.max_abs() * 16.0);
        }
    }
}

#[test]
fn one_family_tendency_is_pure_transport() {
    let g = torus(16);
    let zp = small_field(&g, 5, 3.0, 0.1);
    let s = ElsasserState::new(0.0, zp.clone(), VectorField::zeros(&g)).unwrap();
    let t = elsasser_rhs(&s).unwrap();
    let sp = alfven_core::spectral::Spectral::new(&g, false);
    let d3 = sp.inverse_vector(&sp.forward_vector(&zp).each_ref().map(|c| sp.deriv(c, 2)));
    assert!(max_diff(&t.dz_plus, &d3) < 1e-12);
    assert!(t.dz_minus.max_abs() < 1e-15);
    assert!(scalar_max(&t.pressure) < 1e-15);
}

#[test]
fn zero_state_is_stationary() {
    let g = torus(16);
    let s = ElsasserState::zero(&g);
    let t = elsasser_rhs(&s).unwrap();
    assert_eq!(t.dz_plus.max_abs() + t.dz_minus.max_abs() + scalar_max(&t.pressure), 0.0);
    let next = step_rk4(&s, 0.05).unwrap();
    assert!(next.is_zero());
    assert!((next.t - 0.05).abs() < 1e-15);
}

#[test]
fn large_amplitude_is_refused() {
    let g = torus(16);
    let s = ElsasserState::new(0.0, small_field(&g, 1, 2.0, 0.6), VectorField::zeros(&g)).unwrap();
    assert!(matches!(elsasser_rhs(&s), Err(Error::BootstrapAmplitude(_))));
}

#[test]
fn one_step_of_a_one_family_wave_is_a_translation() {
    let cfg = SimConfig::desk(32, 0.05, 0.1, InitialRecipe::one_family(Family::Plus, 3));
    let s0 = initial_state(&cfg.initial, &cfg.grid, cfg.epsilon, &cfg.weight, cfg.k_max).unwrap();
    let s1 = step_rk4(&s0, 0.1).unwrap();
    let exact = translate(&s0.z_plus, [0.0, 0.0, -0.1]).unwrap();
    assert!(max_diff(&s1.z_plus, &exact) <= 1e-8);
    assert!(s1.z_minus.max_abs() < 1e-15);
}

#[test]
fn step_refuses_cfl_violation() {
    let s = small_state(16, 3, 0.05);
    // min spacing 2π/16 ≈ 0.39, limit ≈ 0.19
    assert!(matches!(step_rk4(&s, 0.3), Err(Error::Cfl { .. })));
}

fn integrate(s: &ElsasserState, dt: f64, steps: usize) -> ElsasserState {
    (0..steps).fold(s.clone(), |acc, _| step_rk4(&acc, dt).unwrap())
}

#[test]
fn rk4_error_drops_sixteenfold_when_dt_halves() {
    let s = small_state(16, 9, 0.3);
    let horizon = 0.32;
    let reference = integrate(&s, horizon / 128.0, 128);
    let err = |steps: usize| {
        let r = integrate(&s, horizon / steps as f64, steps);
        max_diff(&r.z_plus, &reference.z_plus).max(max_diff(&r.z_minus, &reference.z_minus))
    };
    let ratio = err(4) / err(8);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn zero_amplitude_run_stays_zero() {
    let cfg = SimConfig::desk(16, 0.0, 2.0, InitialRecipe::two_family(1));
    let traj = run(&cfg).unwrap();
    assert_eq!(traj.len(), 21);
    assert!(traj.snapshots.iter().all(|s| s.state.is_zero() && scalar_max(&s.pressure) == 0.0));
}

#[test]
fn traveling_wave_over_five_time_units() {
    let cfg = SimConfig::desk(32, 0.05, 5.0, InitialRecipe::one_family(Family::Plus, 7));
    let traj = run(&cfg).unwrap();
    let exact = translate(&traj.initial().z_plus, [0.0, 0.0, -5.0]).unwrap();
    assert!(max_diff(&traj.last().state.z_plus, &exact) <= 1e-8);
    assert!(traj.snapshots.iter().all(|s| scalar_max(&s.pressure) < 1e-14));
}

#[test]
fn short_run_conserves_both_energies() {
    let cfg = SimConfig::desk(32, 0.05, 2.0, InitialRecipe::two_family(7));
    let traj = run(&cfg).unwrap();
    let d0 = traj.diagnostics[0];
    for d in &traj.diagnostics {
        assert!(((d.l2_zplus - d0.l2_zplus) / d0.l2_zplus).abs() <= 1e-6);
        assert!(((d.l2_zminus - d0.l2_zminus) / d0.l2_zminus).abs() <= 1e-6);
    }
    assert!(traj.diagnostics.iter().all(|d| d.cfl <= 0.5));
}

#[test]
fn forward_then_backward_returns_home() {
    let cfg = SimConfig::desk(32, 0.05, 2.0, InitialRecipe::two_family(4));
    let fwd = run(&cfg).unwrap();
    let mut end = fwd.last().state.clone();
    end.t = 0.0;
    let back = run_from(&cfg.with_horizon(-2.0), &end).unwrap();
    let s0 = fwd.initial();
    let s1 = &back.last().state;
    let rel = (s1.z_plus.sub(&s0.z_plus).unwrap().l2_sq() + s1.z_minus.sub(&s0.z_minus).unwrap().l2_sq()).sqrt()
        / (s0.z_plus.l2_sq() + s0.z_minus.l2_sq()).sqrt();
    assert!(rel <= 1e-6, "rel {rel}");
    assert!(back.times().windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn config_validation() {
    let mut cfg = SimConfig::desk(16, 0.05, 13.0, InitialRecipe::two_family(1));
    assert!(matches!(cfg.validate(), Err(Error::ValidityWindow { .. })));
    cfg.horizon = 1.05;
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    cfg.horizon = -1.0;
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    let text = SimConfig::desk(16, 0.05, 2.0, InitialRecipe::two_family(1)).to_toml_string();
    let back = SimConfig::from_toml_str(&text).unwrap();
    assert_eq!(back.grid, Grid3::cube(16, 48.0).unwrap());
    assert_eq!(back.initial, InitialRecipe::two_family(1));
}

#[test]
fn vorticity_residual_vanishes_on_zero_data() {
    let cfg = SimConfig::desk(16, 0.0, 0.5, InitialRecipe::two_family(1));
    let r = vorticity_residual(&run(&cfg).unwrap()).unwrap();
    assert_eq!(r.len(), 4);
    assert!(r.iter().all(|v| v.r_plus == 0.0 && v.r_minus == 0.0));
}

#[test]
fn vorticity_residual_needs_three_snapshots() {
    let cfg = SimConfig::desk(16, 0.05, 0.1, InitialRecipe::two_family(1));
    assert!(matches!(vorticity_residual(&run(&cfg).unwrap()), Err(Error::TooFewSnapshots { need: 3, have: 2 })));
}

fn max_residual(traj: &alfven_core::Trajectory, t: f64) -> f64 {
    let r = vorticity_residual(traj).unwrap();
    r.iter().filter(|v| (v.t - t).abs() < 1e-9).map(|v| v.r_plus.max(v.r_minus)).next().unwrap()
}

#[test]
fn one_family_vorticity_residual_is_second_order_in_stride() {
    let cfg = SimConfig::desk(32, 0.05, 2.4, InitialRecipe::one_family(Family::Plus, 2));
    let traj = run(&cfg).unwrap();
    let coarse = max_residual(&traj.subsampled(4), 1.2);
    let fine = max_residual(&traj.subsampled(2), 1.2);
    let ratio = coarse / fine;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn two_family_vorticity_residual_shrinks_with_stride() {
    let cfg = SimConfig::desk(32, 0.05, 2.4, InitialRecipe::two_family(2));
    let traj = run(&cfg).unwrap();
    let coarse = max_residual(&traj.subsampled(4), 1.2);
    let fine = max_residual(&traj.subsampled(2), 1.2);
    assert!(coarse / fine >= 3.0, "ratio {}", coarse / fine);
}

fn oracle_data(seed: u64) -> (VectorField, VectorField) {
    let g = Grid3::cube(16, 4.0).unwrap();
    (bump_field(&g, seed, 1.36, 0.2, 0.05), bump_field(&g, seed + 1, 1.36, 0.2, 0.05))
}

// grid indices are in FFT order, so these sit next to the origin
const PROBES: [[usize; 3]; 6] = [[0, 0, 0], [1, 0, 15], [15, 1, 0], [0, 15, 2], [2, 2, 1], [14, 0, 1]];

fn rel_max(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let scale = b.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().flatten().zip(b.iter().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

#[test]
fn oracle_vanishes_without_second_family() {
    let (zp, _) = oracle_data(1);
    let z = VectorField::zeros(&zp.grid);
    for l in 1..=3 {
        let d = pressure_newtonian_oracle(&zp, &z, l, &PROBES).unwrap();
        assert!(d.iter().flatten().all(|&x| x == 0.0));
    }
}

#[test]
fn oracle_matches_free_space_poisson_gradient() {
    for seed in [1, 3, 5] {
        let (zp, zm) = oracle_data(seed);
        let oracle = pressure_newtonian_oracle(&zp, &zm, 1, &PROBES).unwrap();
        let spectral = free_space_pressure_derivatives(&zp, &zm, 1, &PROBES).unwrap();
        let rel = rel_max(&oracle, &spectral);
        assert!(rel <= 0.02, "seed {seed} rel {rel}");
    }
}

#[test]
fn oracle_sum_is_independent_of_the_bridge() {
    let (zp, zm) = oracle_data(1);
    let a = pressure_newtonian_oracle_with(&zp, &zm, 1, &PROBES, Cutoff::Exponential).unwrap();
    let b = pressure_newtonian_oracle_with(&zp, &zm, 1, &PROBES, Cutoff::Quintic).unwrap();
    let rel = rel_max(&b, &a);
    assert!(rel <= 0.01, "rel {rel}");
}

#[test]
fn oracle_refuses_periodic_data() {
    let g = torus(16);
    let a = small_field(&g, 1, 2.0, 0.05);
    let b = small_field(&g, 2, 2.0, 0.05);
    assert!(matches!(pressure_newtonian_oracle(&a, &b, 1, &PROBES), Err(Error::FreeSpaceViolated(_))));
}

#[test]
fn cutoff_bridges_are_monotone() {
    for c in [Cutoff::Exponential, Cutoff::Quintic] {
        assert_eq!(c.eval(0.5).0, 1.0);
        assert_eq!(c.eval(2.5).0, 0.0);
        let mut prev = 1.0;
        for i in 1..100 {
            let r = 1.0 + i as f64 / 100.0;
            let (th, d1, _) = c.eval(r);
            assert!(th <= prev + 1e-15 && d1 <= 1e-15);
            // derivative consistent with a centered difference
            let h = 1e-6;
            let fd = (c.eval(r + h).0 - c.eval(r - h).0) / (2.0 * h);
            assert!((fd - d1).abs() < 1e-5 * (1.0 + d1.abs()));
            prev = th;
        }
    }
}
