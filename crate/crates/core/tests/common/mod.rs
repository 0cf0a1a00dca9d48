#![allow(dead_code)]

use std::f64::consts::PI;

use alfven_core::initial::band_limited_field;
use alfven_core::spectral::Spectral;
use alfven_core::{Grid3, ScalarField, VectorField};

pub fn torus(n: usize) -> Grid3 {
    Grid3::cube(n, 2.0 * PI).unwrap()
}

/// Random real field with every component band-limited to `|k| <= k_band`.
pub fn random_field(grid: &Grid3, seed: u64, k_band: f64) -> VectorField {
    let sp = Spectral::new(grid, false);
    let c = [0, 1, 2].map(|a| sp.inverse(&band_limited_field(grid, seed, 100 + a, k_band).unwrap()));
    VectorField::from_components(grid, c).unwrap()
}

pub fn random_scalar(grid: &Grid3, seed: u64, k_band: f64) -> ScalarField {
    let sp = Spectral::new(grid, false);
    sp.inverse(&band_limited_field(grid, seed, 7, k_band).unwrap())
}

pub fn max_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).unwrap().max_abs()
}

pub fn scalar_max(f: &ScalarField) -> f64 {
    f.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn inner(a: &VectorField, b: &VectorField) -> f64 {
    (0..3).map(|i| a.c[i].iter().zip(b.c[i].iter()).map(|(x, y)| x * y).sum::<f64>()).sum()
}

/// Sum of four divergence-free bumps `∇φ × a`, `φ = (1 - |x-c|²/ρ²)^4`,
/// with seeded centres `|c_i| ≤ spread` and vectors `a`. Exactly zero beyond
/// `ρ + spread` from the origin.
pub fn bump_field(grid: &Grid3, seed: u64, radius: f64, spread: f64, amp: f64) -> VectorField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pieces: Vec<([f64; 3], [f64; 3])> = (0..4)
        .map(|_| {
            let c = [0; 3].map(|_| rng.gen_range(-spread..spread));
            let a = [0; 3].map(|_| rng.gen_range(-1.0..1.0));
            (c, a)
        })
        .collect();
    let r2 = radius * radius;
    VectorField::from_fn(grid, |x| {
        let mut v = [0.0; 3];
        for (c, a) in &pieces {
            let r = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
            let q = 1.0 - (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]) / r2;
            if q <= 0.0 {
                continue;
            }
            let g = r.map(|ri| -8.0 * ri / r2 * q.powi(3));
            v[0] += amp * (g[1] * a[2] - g[2] * a[1]);
            v[1] += amp * (g[2] * a[0] - g[0] * a[2]);
            v[2] += amp * (g[0] * a[1] - g[1] * a[0]);
        }
        v
    })
}
