//! Seeded divergence-free initial data localized in x3.
//!
//! A random band-limited vector potential `A` is multiplied by the envelope
//! `exp(-x3^2 / 2σ^2)` and its curl is taken spectrally, so the result is
//! exactly divergence-free. The Fourier coefficients of `A` depend only on the
//! seed and the physical band, not on the grid, so one recipe gives the same
//! continuum field on every resolution that contains the band.

use ndarray::Zip;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ElsasserState, VectorField};
use crate::grid::{Family, Grid3};
use crate::spectral::{curl_spectral, multi_indices, Spectral, Spectrum};
use crate::weight::{weight_of, WeightParams};

/// Named initial-data generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialRecipe {
    Zero,
    /// Independent random packets for both families.
    TwoFamily {
        seed: u64,
        k_band: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
    /// A single family; the other vanishes, giving an exact traveling wave.
    OneFamily {
        family: Family,
        seed: u64,
        k_band: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
    /// `z- = -z+` with `z+(x) = -M z+(Mx)`, `M = diag(1,1,-1)`: invariant under
    /// the x3 mirror that swaps the families and under time reversal combined
    /// with that mirror.
    Symmetric {
        seed: u64,
        k_band: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
}

impl InitialRecipe {
    pub fn two_family(seed: u64) -> Self {
        InitialRecipe::TwoFamily { seed, k_band: 0.4, sigma: None }
    }

    pub fn one_family(family: Family, seed: u64) -> Self {
        InitialRecipe::OneFamily { family, seed, k_band: 0.4, sigma: None }
    }

    pub fn symmetric(seed: u64) -> Self {
        InitialRecipe::Symmetric { seed, k_band: 0.4, sigma: None }
    }

    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut r = self.clone();
        match &mut r {
            InitialRecipe::Zero => {}
            InitialRecipe::TwoFamily { seed, .. }
            | InitialRecipe::OneFamily { seed, .. }
            | InitialRecipe::Symmetric { seed, .. } => *seed = new_seed,
        }
        r
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            InitialRecipe::Zero => None,
            InitialRecipe::TwoFamily { seed, .. }
            | InitialRecipe::OneFamily { seed, .. }
            | InitialRecipe::Symmetric { seed, .. } => Some(*seed),
        }
    }
}

/// Band-limited random real field `Σ_m c_m e^{ik_m·x}` over `|k_m| <= k_band`.
///
/// The same `(seed, stream, box, k_band)` gives the same continuum field on any grid.
pub fn band_limited_field(grid: &Grid3, seed: u64, stream: u64, k_band: f64) -> Result<Spectrum> {
    let tau = 2.0 * std::f64::consts::PI;
    let mmax = [0, 1, 2].map(|a| (k_band * grid.length[a] / tau).floor() as i64);
    for a in 0..3 {
        if 3 * mmax[a] >= grid.n[a] as i64 {
            return Err(Error::Config(format!(
                "k_band = {} not resolved on axis {} with n = {}",
                k_band,
                a + 1,
                grid.n[a]
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut s = Spectrum::zeros(grid.shape());
    let scale = grid.len() as f64;
    let wrap = |m: i64, n: usize| m.rem_euclid(n as i64) as usize;
    for m0 in -mmax[0]..=mmax[0] {
        for m1 in -mmax[1]..=mmax[1] {
            for m2 in -mmax[2]..=mmax[2] {
                let k = [
                    tau * m0 as f64 / grid.length[0],
                    tau * m1 as f64 / grid.length[1],
                    tau * m2 as f64 / grid.length[2],
                ];
                let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
                if kn > k_band {
                    continue;
                }
                // Canonical half space: the conjugate mode is filled in below.
                if (m0, m1, m2) <= (0, 0, 0) {
                    continue;
                }
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let c = Complex64::new(re, im) * (0.5 * scale);
                s[[wrap(m0, grid.n[0]), wrap(m1, grid.n[1]), wrap(m2, grid.n[2])]] = c;
                s[[wrap(-m0, grid.n[0]), wrap(-m1, grid.n[1]), wrap(-m2, grid.n[2])]] = c.conj();
            }
        }
    }
    Ok(s)
}

/// Divergence-free packet `curl(g A)` with Gaussian envelope `g` in x3.
pub fn random_packet(grid: &Grid3, seed: u64, family_stream: u64, k_band: f64, sigma: f64) -> Result<VectorField> {
    envelope_packet(grid, seed, family_stream, k_band, |x| (-x[2] * x[2] / (2.0 * sigma * sigma)).exp())
}

/// Packet localized in all three directions (for free-space checks).
pub fn localized_packet(grid: &Grid3, seed: u64, family_stream: u64, k_band: f64, sigma: f64) -> Result<VectorField> {
    envelope_packet(grid, seed, family_stream, k_band, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        (-r2 / (2.0 * sigma * sigma)).exp()
    })
}

fn envelope_packet(
    grid: &Grid3,
    seed: u64,
    family_stream: u64,
    k_band: f64,
    envelope: impl Fn([f64; 3]) -> f64,
) -> Result<VectorField> {
    let sp = Spectral::new(grid, true);
    let g = crate::field::scalar_from_fn(grid, &envelope);
    let mut potential = Vec::with_capacity(3);
    for comp in 0..3u64 {
        let s = band_limited_field(grid, seed, 4 * family_stream + comp, k_band)?;
        let mut a = sp.inverse(&s);
        Zip::from(&mut a).and(&g).for_each(|x, &e| *x *= e);
        potential.push(a);
    }
    let a = VectorField { grid: *grid, c: [potential.remove(0), potential.remove(0), potential.remove(0)] };
    let s = sp.forward_vector(&a);
    let mut z = curl_spectral(&sp, &s);
    for c in &mut z {
        sp.truncate_always(c);
    }
    Ok(sp.inverse_vector(&z))
}

/// `Σ_{k<=K} Σ_{|α|=k} ∫ <x3>^{2ω} |∂^α z|^2 dx`.
pub fn initial_energy_norm_sq(z: &VectorField, weight: &WeightParams, k_max: usize) -> f64 {
    let grid = z.grid;
    let sp = Spectral::new(&grid, false);
    let s = sp.forward_vector(z);
    let omega = weight.omega();
    let w: Vec<f64> = (0..grid.n[2])
        .map(|k| weight_of(grid.centered(2, k), weight).powf(2.0 * omega))
        .collect();
    let mut total = 0.0;
    for order in 0..=k_max {
        for alpha in multi_indices(order) {
            for c in &s {
                let f = sp.inverse(&sp.deriv_multi(c, alpha));
                total += weighted_sum_x3(&f, &w);
            }
        }
    }
    total * grid.cell_volume()
}

fn weighted_sum_x3(f: &crate::field::ScalarField, w: &[f64]) -> f64 {
    let n2 = w.len();
    f.as_slice()
        .unwrap()
        .chunks_exact(n2)
        .map(|row| row.iter().zip(w).map(|(x, wk)| wk * x * x).sum::<f64>())
        .sum()
}

fn normalize(z: &mut VectorField, target_sq: f64, weight: &WeightParams, k_max: usize) {
    let norm_sq = initial_energy_norm_sq(z, weight, k_max);
    if norm_sq > 0.0 {
        z.scale((target_sq / norm_sq).sqrt());
    } else {
        z.scale(0.0);
    }
}

/// Initial state for a recipe, scaled so that the weighted initial norm
/// (summed over both families) equals `epsilon^2`.
pub fn initial_state(
    recipe: &InitialRecipe,
    grid: &Grid3,
    epsilon: f64,
    weight: &WeightParams,
    k_max: usize,
) -> Result<ElsasserState> {
    let default_sigma = grid.length[2] / 16.0;
    let e2 = epsilon * epsilon;
    let mut state = ElsasserState::zero(grid);
    if epsilon == 0.0 {
        return Ok(state);
    }
    match recipe {
        InitialRecipe::Zero => {}
        InitialRecipe::TwoFamily { seed, k_band, sigma } => {
            let sigma = sigma.unwrap_or(default_sigma);
            let mut zp = random_packet(grid, *seed, 0, *k_band, sigma)?;
            let mut zm = random_packet(grid, *seed, 1, *k_band, sigma)?;
            normalize(&mut zp, e2 / 2.0, weight, k_max);
            normalize(&mut zm, e2 / 2.0, weight, k_max);
            state.z_plus = zp;
            state.z_minus = zm;
        }
        InitialRecipe::OneFamily { family, seed, k_band, sigma } => {
            let sigma = sigma.unwrap_or(default_sigma);
            let stream = match family {
                Family::Plus => 0,
                Family::Minus => 1,
            };
            let mut z = random_packet(grid, *seed, stream, *k_band, sigma)?;
            normalize(&mut z, e2, weight, k_max);
            *state.field_mut(*family) = z;
        }
        InitialRecipe::Symmetric { seed, k_band, sigma } => {
            let sigma = sigma.unwrap_or(default_sigma);
            let w = random_packet(grid, *seed, 0, *k_band, sigma)?;
            let mut zp = w.clone();
            zp.axpy(-1.0, &w.reflected_x3());
            zp.scale(0.5);
            normalize(&mut zp, e2 / 2.0, weight, k_max);
            state.z_minus = zp.scaled(-1.0);
            state.z_plus = zp;
        }
    }
    Ok(state)
}
