mod common;

use alfven_core::field::scalar_from_fn;
use alfven_core::spectral::{curl, divergence, gradient, leray_project, multi_indices, translate, Spectral};
use alfven_core::{weight_of, Error, Grid3, VectorField, WeightParams};
use common::*;
use proptest::prelude::*;

#[test]
fn grid_rejects_odd_or_small_sizes() {
    assert!(matches!(Grid3::cube(15, 1.0), Err(Error::InvalidGrid(_))));
    assert!(matches!(Grid3::cube(6, 1.0), Err(Error::InvalidGrid(_))));
    assert!(matches!(Grid3::new([8, 8, 8], [1.0, 0.0, 1.0]), Err(Error::InvalidGrid(_))));
    let g = Grid3::new([8, 10, 12], [1.0, 2.0, 3.0]).unwrap();
    assert_eq!(g.len(), 960);
    assert_eq!(g.unflat(g.flat(3, 7, 11)), (3, 7, 11));
    assert!((g.coord(2, 6) - 1.5).abs() < 1e-15);
    assert!((g.centered(2, 6) + 1.5).abs() < 1e-15);
}

#[test]
fn curl_of_single_mode() {
    let g = torus(16);
    let v = VectorField::from_fn(&g, |x| [0.0, 0.0, x[0].sin()]);
    let c = curl(&v).unwrap();
    let expected = VectorField::from_fn(&g, |x| [0.0, -x[0].cos(), 0.0]);
    assert!(max_diff(&c, &expected) < 1e-12);
}

#[test]
fn curl_of_constant_vanishes() {
    let g = torus(16);
    let v = VectorField::from_fn(&g, |_| [1.5, -2.0, 0.25]);
    assert!(curl(&v).unwrap().max_abs() < 1e-13);
}

#[test]
fn curl_of_gradient_vanishes() {
    let g = torus(16);
    let phi = scalar_from_fn(&g, |x| x[0].sin() * x[1].sin() * x[2].sin());
    let v = gradient(&phi, &g).unwrap();
    assert!(curl(&v).unwrap().max_abs() <= 1e-12);
}

#[test]
fn divergence_examples() {
    let g = torus(16);
    let v = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
    assert!(scalar_max(&divergence(&v).unwrap()) < 1e-13);
    let v = VectorField::from_fn(&g, |x| [x[0].sin(), 0.0, 0.0]);
    let d = divergence(&v).unwrap();
    let expected = scalar_from_fn(&g, |x| x[0].cos());
    assert!(scalar_max(&(&d - &expected)) < 1e-12);
}

#[test]
fn non_finite_input_is_rejected() {
    let g = torus(8);
    let mut v = VectorField::zeros(&g);
    v.c[1][[1, 2, 3]] = f64::NAN;
    assert!(matches!(curl(&v), Err(Error::InvalidField(_))));
    assert!(matches!(divergence(&v), Err(Error::InvalidField(_))));
    assert!(matches!(leray_project(&v), Err(Error::InvalidField(_))));
}

#[test]
fn resolved_mode_derivatives_are_exact() {
    let g = torus(16);
    let sp = Spectral::new(&g, false);
    let f = scalar_from_fn(&g, |x| (3.0 * x[0] + 2.0 * x[1] - 5.0 * x[2]).cos());
    let s = sp.forward(&f);
    let d = sp.inverse(&sp.deriv_multi(&s, [1, 0, 1]));
    // ∂1∂3 cos(a·x) = -a1 a3 cos(a·x) = 15 cos(a·x)
    let expected = f.mapv(|c| 15.0 * c);
    assert!(scalar_max(&(&d - &expected)) <= 1e-12 * 15.0);
}

#[test]
fn leray_examples() {
    let g = torus(16);
    let w = random_field(&g, 3, 4.0);
    let v = curl(&w).unwrap();
    let pv = leray_project(&v).unwrap();
    assert!(max_diff(&pv, &v) <= 1e-12 * v.max_abs());
    let grad = VectorField::from_fn(&g, |x| [x[0].cos(), 0.0, 0.0]);
    assert!(leray_project(&grad).unwrap().max_abs() < 1e-13);
}

#[test]
fn multi_index_counts() {
    for k in 0..5 {
        assert_eq!(multi_indices(k).len(), (k + 1) * (k + 2) / 2);
        assert!(multi_indices(k).iter().all(|a| a.iter().sum::<usize>() == k));
    }
}

#[test]
fn lattice_translation_matches_spectral_translation() {
    let g = torus(16);
    let v = random_field(&g, 11, 4.0);
    let h = g.spacing();
    let spectral = translate(&v, [2.0 * h[0], -3.0 * h[1], 5.0 * h[2]]).unwrap();
    assert!(max_diff(&spectral, &v.shifted([2, -3, 5])) < 1e-12 * v.max_abs());
}

#[test]
fn weight_examples() {
    let p = WeightParams::default();
    assert_eq!(p.r, 100.0);
    assert!((weight_of(0.0, &p) - 100.0).abs() < 1e-12);
    assert!((weight_of(100.0, &p) - 141.421_356_237_309_5).abs() < 1e-9);
    assert!(WeightParams::new(1.0, 0.7).is_err());
    assert!(WeightParams::new(-1.0, 0.1).is_err());
    assert!((WeightParams::desk().omega() - 1.1).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn div_curl_vanishes(seed in 0u64..1000) {
        let g = torus(16);
        let w = random_field(&g, seed, 5.0);
        let d = divergence(&curl(&w).unwrap()).unwrap();
        prop_assert!(scalar_max(&d) <= 1e-12);
    }

    #[test]
    fn curl_grad_vanishes(seed in 0u64..1000) {
        let g = torus(16);
        let phi = random_scalar(&g, seed, 5.0);
        let v = gradient(&phi, &g).unwrap();
        prop_assert!(curl(&v).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn leray_is_idempotent_and_self_adjoint(seed in 0u64..1000) {
        let g = torus(16);
        let a = random_field(&g, seed, 5.0);
        let b = random_field(&g, seed + 5000, 5.0);
        let pa = leray_project(&a).unwrap();
        let ppa = leray_project(&pa).unwrap();
        prop_assert!(max_diff(&ppa, &pa) <= 1e-12 * pa.max_abs());
        let pb = leray_project(&b).unwrap();
        let lhs = inner(&pa, &b);
        let rhs = inner(&a, &pb);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()));
        let div = divergence(&pa).unwrap();
        let gmax = gradient(&pa.c[0], &g).unwrap().max_abs();
        prop_assert!(scalar_max(&div) <= 1e-10 * gmax);
    }

    #[test]
    fn weight_is_monotone_bounded_and_lipschitz(r in 0.5f64..200.0, u1 in -500.0f64..500.0, u2 in -500.0f64..500.0) {
        let p = WeightParams::new(r, 0.1).unwrap();
        let (lo, hi) = if u1.abs() <= u2.abs() { (u1, u2) } else { (u2, u1) };
        prop_assert!(weight_of(lo.abs(), &p) <= weight_of(hi.abs(), &p));
        prop_assert!(weight_of(u1, &p) >= r);
        prop_assert!((weight_of(u1, &p) - weight_of(u2, &p)).abs() <= (u1 - u2).abs() * (1.0 + 1e-12));
    }
}
