use alfven_core::initial::initial_state;
use alfven_core::scattering::{
    deviation_norm, forward_map, infinity_sobolev_norm, linear_map, linearization_from_pairs, linearization_slope,
    reconstruct, scattering_field, tail_bound, tail_from_envelope, transport_identity_check, Case, Direction,
    ReconstructOptions, SlopeFit,
};
use alfven_core::{run, ElsasserState, Error, Family, Grid3, InitialRecipe, SimConfig, Trajectory, VectorField};

fn config(n: usize, eps: f64, horizon: f64, recipe: InitialRecipe) -> SimConfig {
    SimConfig::desk(n, eps, horizon, recipe)
}

fn start(cfg: &SimConfig) -> ElsasserState {
    initial_state(&cfg.initial, &cfg.grid, cfg.epsilon, &cfg.weight, cfg.k_max).unwrap()
}

fn max_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).unwrap().max_norm()
}

/// `(M v)(M x)` with `M = diag(1, 1, -1)`.
fn mirror(v: &VectorField) -> VectorField {
    let g = v.grid;
    let mut out = v.clone();
    for ((i, j, k), o) in out.c[0].indexed_iter_mut() {
        *o = v.c[0][[i, j, (g.n[2] - k) % g.n[2]]];
    }
    for ((i, j, k), o) in out.c[1].indexed_iter_mut() {
        *o = v.c[1][[i, j, (g.n[2] - k) % g.n[2]]];
    }
    for ((i, j, k), o) in out.c[2].indexed_iter_mut() {
        *o = -v.c[2][[i, j, (g.n[2] - k) % g.n[2]]];
    }
    out
}

#[test]
fn one_family_data_scatter_to_themselves() {
    let cfg = config(16, 0.05, 4.0, InitialRecipe::one_family(Family::Plus, 3));
    let traj = run(&cfg).unwrap();
    let plus = scattering_field(&traj, Family::Plus, Direction::Future).unwrap();
    let minus = scattering_field(&traj, Family::Minus, Direction::Future).unwrap();
    assert!(max_diff(&plus.values, &traj.initial().z_plus) < 1e-14);
    assert!(plus.factor_difference() < 1e-14);
    assert!(minus.values.max_abs() < 1e-14);
    assert!(tail_bound(&traj, 4.0).unwrap() < 1e-20);
}

#[test]
fn zero_data_scatter_to_zero() {
    let cfg = config(16, 0.0, 2.0, InitialRecipe::two_family(1));
    for pair in alfven_core::scattering::forward_map_all(&start(&cfg), &cfg).unwrap() {
        assert!(pair.plus.values.max_abs() == 0.0 && pair.minus.values.max_abs() == 0.0);
        assert_eq!(pair.plus.tail_bound, 0.0);
    }
}

#[test]
fn time_quadrature_converges_at_second_order() {
    let cfg = config(16, 0.08, 4.8, InitialRecipe::two_family(7));
    let traj = run(&cfg).unwrap();
    let f = |t: &Trajectory| scattering_field(t, Family::Minus, Direction::Future).unwrap().transport_values;
    let (f1, f2, f4) = (f(&traj.subsampled(2)), f(&traj.subsampled(4)), f(&traj.subsampled(8)));
    let ratio = max_diff(&f4, &f2) / max_diff(&f2, &f1);
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn mirror_symmetric_data_give_mirrored_cases() {
    let cfg = config(16, 0.05, 3.0, InitialRecipe::symmetric(11));
    let x = start(&cfg);
    let a = forward_map(Case::A, &x, &cfg).unwrap();
    let c = forward_map(Case::C, &x, &cfg).unwrap();
    let scale = a.plus.values.max_norm();
    for fam in [Family::Plus, Family::Minus] {
        let expected = mirror(&a.field(fam).values).scaled(-1.0);
        assert!(max_diff(&c.field(fam).values, &expected) <= 1e-10 * scale);
    }
    // within case a the families are mirror images of each other
    assert!(max_diff(&a.minus.values, &mirror(&a.plus.values)) <= 1e-10 * scale);
}

#[test]
fn scattering_commutes_with_lattice_shifts() {
    let cfg = config(16, 0.05, 3.0, InitialRecipe::two_family(2));
    let x = start(&cfg);
    let shift = [3, -5, 2];
    let moved = ElsasserState::new(0.0, x.z_plus.shifted(shift), x.z_minus.shifted(shift)).unwrap();
    let a = forward_map(Case::B, &x, &cfg).unwrap();
    let b = forward_map(Case::B, &moved, &cfg).unwrap();
    let scale = a.plus.values.max_norm();
    assert!(max_diff(&b.plus.values, &a.plus.values.shifted(shift)) <= 1e-10 * scale);
    assert!(max_diff(&b.minus.values, &a.minus.values.shifted(shift)) <= 1e-10 * scale);
}

#[test]
fn tail_estimate_decays_like_a_power_of_the_horizon() {
    let p = alfven_core::WeightParams { r: 1.0, delta: 0.1 };
    let a = tail_from_envelope(2.0, 3.0, &p);
    let b = tail_from_envelope(2.0, 15.0, &p);
    assert!((a / b - (16.0f64 / 4.0).powf(0.1)).abs() < 1e-12);
    assert!((tail_from_envelope(2.0, -3.0, &p) - a).abs() < 1e-15);
    assert!((a - 2.0 * 4f64.powf(-0.1) / 0.1).abs() < 1e-12);
}

#[test]
fn norms_are_homogeneous_and_orders_are_capped() {
    let cfg = config(16, 0.05, 2.0, InitialRecipe::two_family(4));
    let traj = run(&cfg).unwrap();
    let f = scattering_field(&traj, Family::Plus, Direction::Future).unwrap();
    for n in 0..=3 {
        let a = infinity_sobolev_norm(&f, n, 3).unwrap();
        let b = infinity_sobolev_norm(&f.scaled(2.0), n, 3).unwrap();
        assert!(((b - 4.0 * a) / a).abs() < 1e-12);
    }
    assert_eq!(deviation_norm(&f, &f.values, 2, 3).unwrap(), 0.0);
    assert!(matches!(infinity_sobolev_norm(&f, 4, 3), Err(Error::OrderTooHigh { .. })));
    assert!(matches!(deviation_norm(&f, &f.values, 5, 3), Err(Error::OrderTooHigh { .. })));
    let other = VectorField::zeros(&Grid3::cube(8, 48.0).unwrap());
    assert!(matches!(deviation_norm(&f, &other, 1, 3), Err(Error::GridMismatch(_))));
}

#[test]
fn trajectories_must_match_the_direction_and_window() {
    let past = run(&config(16, 0.05, -1.0, InitialRecipe::two_family(4))).unwrap();
    assert!(matches!(scattering_field(&past, Family::Plus, Direction::Future), Err(Error::Config(_))));
    assert!(scattering_field(&past, Family::Plus, Direction::Past).is_ok());
    // stretch the time axis past a quarter of the box
    let mut long = run(&config(16, 0.05, 2.0, InitialRecipe::two_family(4))).unwrap();
    for snap in &mut long.snapshots {
        snap.state.t *= 10.0;
    }
    assert!(matches!(scattering_field(&long, Family::Plus, Direction::Future), Err(Error::ValidityWindow { .. })));
}

#[test]
fn identity_map_is_reported_as_exactly_linear() {
    let cfg = config(16, 1.0, 2.0, InitialRecipe::two_family(4));
    let x = start(&cfg);
    let pairs: Vec<_> = [0.02, 0.04, 0.08].iter().map(|&e| (e, linear_map(Case::D, &x.scaled(e), &cfg.weight))).collect();
    let rep = linearization_from_pairs(&x, Case::D, &pairs, &cfg.weight, 1).unwrap();
    assert_eq!(rep.slope, SlopeFit::ExactLinear);
    assert!(rep.deviations.iter().all(|&d| d == 0.0));
    assert!(matches!(linearization_from_pairs(&x, Case::D, &pairs[..2], &cfg.weight, 1), Err(Error::Config(_))));
    let narrow: Vec<_> = [0.02, 0.03, 0.04].iter().map(|&e| (e, linear_map(Case::D, &x.scaled(e), &cfg.weight))).collect();
    assert!(matches!(linearization_from_pairs(&x, Case::D, &narrow, &cfg.weight, 1), Err(Error::Config(_))));
}

#[test]
fn nonlinear_deviation_is_quadratic() {
    let cfg = config(16, 1.0, 3.0, InitialRecipe::two_family(7));
    let x = start(&cfg);
    let rep = linearization_slope(&x, Case::A, &[0.02, 0.04, 0.08], &cfg, 1).unwrap();
    let slope = rep.slope.value().unwrap();
    assert!((1.8..=2.2).contains(&slope), "slope {slope}");
    assert!(rep.c_fit.iter().all(|c| c.is_finite() && *c > 0.0));
}

#[test]
fn one_family_reconstruction_needs_one_step() {
    let cfg = config(16, 0.05, 3.0, InitialRecipe::one_family(Family::Minus, 5));
    let truth = start(&cfg);
    let target = forward_map(Case::C, &truth, &cfg).unwrap();
    let opts = ReconstructOptions { tol: 1e-10, max_iterations: 5, order: 1 };
    let rec = reconstruct(&target, Case::C, &cfg, opts).unwrap();
    assert!(rec.log.len() <= 2, "{:?}", rec.log);
    let err = rec.state.z_minus.sub(&truth.z_minus).unwrap().max_norm();
    assert!(err <= 1e-12 * truth.z_minus.max_norm());
    assert_eq!(rec.iterates.len(), rec.log.len() + 1);
}

#[test]
fn two_family_reconstruction_recovers_the_data() {
    let cfg = config(16, 0.05, 3.0, InitialRecipe::two_family(8));
    let truth = start(&cfg);
    let target = forward_map(Case::A, &truth, &cfg).unwrap();
    let rec = reconstruct(&target, Case::A, &cfg, ReconstructOptions { tol: 1e-8, max_iterations: 5, order: 1 }).unwrap();
    let num = rec.state.z_plus.sub(&truth.z_plus).unwrap().l2_sq() + rec.state.z_minus.sub(&truth.z_minus).unwrap().l2_sq();
    let den = truth.z_plus.l2_sq() + truth.z_minus.l2_sq();
    assert!((num / den).sqrt() <= 1e-3);
}

#[test]
fn transport_identity_holds_on_a_coarse_grid() {
    let cfg = config(16, 0.05, 3.0, InitialRecipe::two_family(7));
    let traj = run(&cfg).unwrap();
    let check = transport_identity_check(&traj, Family::Plus, 3.0).unwrap();
    assert!(check.max_discrepancy <= 1e-4 * 0.05, "{}", check.max_discrepancy);
    assert!(matches!(transport_identity_check(&traj, Family::Plus, 2.95), Err(_)));
}
