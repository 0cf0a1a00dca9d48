//! Weighted energies, characteristic fluxes and numerical checks of the
//! weighted estimates (div-curl, separation, pressure decay, linear energy).
//!
//! Derivative orders count derivatives: order `k` means `Σ_{|α|=k} |∂^α z|^2`.
//! Flux densities use `|z|^2` at order 0 and `|∇^{k-1} j|^2`, `j = curl z`,
//! above it.

use std::fmt::Write as _;

use ndarray::Zip;

use crate::characteristics::CharacteristicChart;
use crate::error::{Error, Result};
use crate::field::{ElsasserState, ScalarField, VectorField};
use crate::grid::{Family, Grid3};
use crate::initial::band_limited_field;
use crate::interp::cr_weights;
use crate::solver::Trajectory;
use crate::spectral::{curl_spectral, multi_indices, Spectral, Spectrum};
use crate::stats::{loglog_slope, FittedConstant};
use crate::weight::{weight_of, WeightParams};

/// Number of level values used for the supremum over `u`.
pub const FLUX_LEVELS: usize = 33;

/// `max|∇λ|/λ` accepted by [`divcurl_constant`].
pub const WEIGHT_LOG_GRADIENT_MAX: f64 = 2.0;

fn check_order(order: usize, max: usize) -> Result<()> {
    if order > max {
        return Err(Error::OrderTooHigh { order, max });
    }
    Ok(())
}

fn check_chart(state: &ElsasserState, chart: &CharacteristicChart) -> Result<()> {
    state.grid().check_same(&chart.grid)?;
    if (state.t - chart.t).abs() > 1e-9 * (1.0 + state.t.abs()) {
        return Err(Error::InvalidField(format!("chart at t={} used for state at t={}", chart.t, state.t)));
    }
    Ok(())
}

fn check_charts(traj: &Trajectory, charts: &[CharacteristicChart]) -> Result<()> {
    if charts.len() != traj.len() {
        return Err(Error::InvalidField(format!("{} charts for {} snapshots", charts.len(), traj.len())));
    }
    for (s, c) in traj.snapshots.iter().zip(charts) {
        check_chart(&s.state, c)?;
    }
    Ok(())
}

/// `Σ_{|α|=k} Σ_c |∂^α z_c|^2` pointwise.
pub fn derivative_density(sp: &Spectral, z: &[Spectrum; 3], order: usize) -> ScalarField {
    let mut out = ScalarField::zeros(sp.grid().shape());
    for alpha in multi_indices(order) {
        for c in z {
            let f = if order == 0 { sp.inverse(c) } else { sp.inverse(&sp.deriv_multi(c, alpha)) };
            Zip::from(&mut out).and(&f).for_each(|o, &x| *o += x * x);
        }
    }
    out
}

/// `|z|^2` at order 0, `Σ_{|α|=k-1} |∂^α curl z|^2` above.
pub fn vorticity_density(sp: &Spectral, z: &[Spectrum; 3], order: usize) -> ScalarField {
    if order == 0 {
        derivative_density(sp, z, 0)
    } else {
        derivative_density(sp, &curl_spectral(sp, z), order - 1)
    }
}

fn weighted_integral(density: &ScalarField, weight: &ScalarField, power: f64, grid: &Grid3) -> f64 {
    Zip::from(density).and(weight).fold(0.0, |acc, &d, &w| acc + w.powf(power) * d) * grid.cell_volume()
}

/// `(E+^k, E-^k)` with `E±^k = ∫ <u∓>^{2ω} Σ_{|α|=k} |∂^α z±|^2 dx`.
pub fn weighted_energy(
    state: &ElsasserState,
    chart: &CharacteristicChart,
    order: usize,
    k_max: usize,
) -> Result<(f64, f64)> {
    check_order(order, k_max)?;
    check_chart(state, chart)?;
    let grid = *state.grid();
    let sp = Spectral::new(&grid, false);
    let two_omega = 2.0 * chart.weight.omega();
    let mut out = [0.0; 2];
    for (slot, fam) in [Family::Plus, Family::Minus].into_iter().enumerate() {
        let z = state.field(fam);
        if z.max_abs() == 0.0 {
            continue;
        }
        let d = derivative_density(&sp, &sp.forward_vector(z), order);
        out[slot] = weighted_integral(&d, chart.weights(fam.opposite()), two_omega, &grid);
    }
    Ok((out[0], out[1]))
}

/// Periodic 1D Catmull-Rom sample of a column at unwrapped coordinate `x`.
fn column_sample(col: &[f64], h: f64, x: f64) -> (f64, f64) {
    let n = col.len() as i64;
    let s = x / h;
    let base = s.floor();
    let t = s - base;
    let b = base as i64;
    let w = cr_weights(t);
    // derivative weights of the Catmull-Rom basis
    let t2 = t * t;
    let dw = [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ];
    let mut v = 0.0;
    let mut dv = 0.0;
    for m in 0..4 {
        let f = col[(b - 1 + m as i64).rem_euclid(n) as usize];
        v += w[m] * f;
        dv += dw[m] * f;
    }
    (v, dv / h)
}

/// Pointwise ingredients of the flux through level sets of `u_family` at one
/// snapshot: the `η3` column data and the density times the surface factor.
struct FluxSlice {
    eta3: ScalarField,
    density: ScalarField,
    shift: f64,
}

fn flux_slice(
    state: &ElsasserState,
    chart: &CharacteristicChart,
    family: Family,
    order: usize,
) -> FluxSlice {
    let grid = *state.grid();
    let sp = Spectral::new(&grid, false);
    let s = family.sign();
    let eta = chart.eta(family);
    let eta3_hat = sp.forward(&eta.c[2]);
    let grad_u: Vec<ScalarField> = (0..3).map(|a| sp.inverse(&sp.deriv(&eta3_hat, a))).collect();
    let z = state.field(family);
    let b0 = state.background;
    let two_omega = 2.0 * chart.weight.omega();
    let mut density = if z.max_abs() == 0.0 {
        ScalarField::zeros(grid.shape())
    } else {
        vorticity_density(&sp, &sp.forward_vector(z), order)
    };
    let w_other = chart.weights(family.opposite());
    ndarray::Zip::indexed(&mut density).for_each(|(i, j, k), d| {
        let gu = [grad_u[0][[i, j, k]], grad_u[1][[i, j, k]], 1.0 + grad_u[2][[i, j, k]]];
        let zdotgu: f64 = (0..3).map(|a| (z.c[a][[i, j, k]] + s * b0[a]) * gu[a]).sum();
        let dsigma = (1.0 + zdotgu * zdotgu + gu[0] * gu[0] + gu[1] * gu[1]).sqrt();
        *d *= w_other[[i, j, k]].powf(two_omega) * dsigma;
    });
    FluxSlice { eta3: eta.c[2].clone(), density, shift: -s * chart.t * b0[2] }
}

impl FluxSlice {
    /// `∫ density dx_h` over the level set `u = level` at this time.
    fn level_integral(&self, grid: &Grid3, level: f64) -> Result<f64> {
        let h = grid.spacing();
        let half = 0.5 * grid.length[2];
        let margin = 2.0 * h[2];
        let n2 = grid.n[2];
        let eta = self.eta3.as_slice().unwrap();
        let dens = self.density.as_slice().unwrap();
        let mut total = 0.0;
        for col in 0..grid.n[0] * grid.n[1] {
            let e = &eta[col * n2..(col + 1) * n2];
            let d = &dens[col * n2..(col + 1) * n2];
            // u = x3 + shift + η3(x3)
            let mut x = level - self.shift;
            for _ in 0..50 {
                let (v, dv) = column_sample(e, h[2], x);
                let step = (x + self.shift + v - level) / (1.0 + dv);
                x -= step;
                if step.abs() < 1e-13 * (1.0 + x.abs()) {
                    break;
                }
            }
            if !(x.abs() <= half - margin) {
                return Err(Error::LevelSetWindow(format!("u = {level:.4} reaches x3 = {x:.4}")));
            }
            total += column_sample(d, h[2], x).0;
        }
        Ok(total * h[0] * h[1])
    }
}

/// Cumulative flux `F(t_n; u)` through `C_u ∩ [0, t_n]` for each level, at every snapshot.
pub fn flux_series(
    traj: &Trajectory,
    charts: &[CharacteristicChart],
    family: Family,
    levels: &[f64],
    order: usize,
) -> Result<Vec<Vec<f64>>> {
    check_charts(traj, charts)?;
    let grid = *traj.grid();
    let mut per_time: Vec<Vec<f64>> = Vec::with_capacity(traj.len());
    for (snap, chart) in traj.snapshots.iter().zip(charts) {
        let slice = flux_slice(&snap.state, chart, family, order);
        per_time.push(levels.iter().map(|&u| slice.level_integral(&grid, u)).collect::<Result<_>>()?);
    }
    let times = traj.times();
    let mut out = vec![vec![0.0; traj.len()]; levels.len()];
    for (m, row) in out.iter_mut().enumerate() {
        for n in 1..times.len() {
            let dt = (times[n] - times[n - 1]).abs();
            row[n] = row[n - 1] + 0.5 * dt * (per_time[n - 1][m] + per_time[n][m]);
        }
    }
    Ok(out)
}

/// Flux through the level set `u_family = level` over the whole trajectory.
pub fn flux_surface_integral(
    traj: &Trajectory,
    charts: &[CharacteristicChart],
    family: Family,
    level: f64,
    order: usize,
) -> Result<f64> {
    let series = flux_series(traj, charts, family, &[level], order)?;
    Ok(*series[0].last().unwrap_or(&0.0))
}

/// Level values spanning the `u_family` range of the packet carried by
/// `z_family`, clipped so every level set stays inside the trusted window.
pub fn flux_levels(traj: &Trajectory, charts: &[CharacteristicChart], family: Family, count: usize) -> Vec<f64> {
    let grid = *traj.grid();
    let half = 0.5 * grid.length[2];
    let margin = 3.0 * grid.spacing()[2];
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    let mut shift_lo = 0.0f64;
    let mut shift_hi = 0.0f64;
    for (snap, chart) in traj.snapshots.iter().zip(charts) {
        let z = snap.state.field(family);
        let amp = |i, j, k| (0..3).map(|a| z.c[a][[i, j, k]].powi(2)).sum::<f64>();
        let peak = z.c[0].indexed_iter().map(|((i, j, k), _)| amp(i, j, k)).fold(0.0, f64::max);
        let shift = -family.sign() * chart.t * snap.state.background[2];
        shift_lo = shift_lo.min(shift);
        shift_hi = shift_hi.max(shift);
        if peak == 0.0 {
            continue;
        }
        let u = chart.u(family);
        for ((i, j, k), &uv) in u.indexed_iter() {
            if amp(i, j, k) >= 1e-6 * peak {
                lo = lo.min(uv);
                hi = hi.max(uv);
            }
        }
    }
    let win_lo = -half + margin + shift_hi;
    let win_hi = half - margin + shift_lo;
    if lo > hi {
        lo = -0.5 * half;
        hi = 0.5 * half;
    }
    let lo = lo.max(win_lo);
    let hi = hi.min(win_hi);
    if count == 1 || hi <= lo {
        return vec![0.5 * (lo + hi)];
    }
    (0..count).map(|m| lo + (hi - lo) * m as f64 / (count - 1) as f64).collect()
}

/// `sup_u F(t_n; u)` at every snapshot over [`FLUX_LEVELS`] sampled levels.
pub fn flux_sup_series(
    traj: &Trajectory,
    charts: &[CharacteristicChart],
    family: Family,
    order: usize,
) -> Result<Vec<f64>> {
    let levels = flux_levels(traj, charts, family, FLUX_LEVELS);
    let series = flux_series(traj, charts, family, &levels, order)?;
    Ok((0..traj.len()).map(|n| series.iter().map(|row| row[n]).fold(0.0, f64::max)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeFlux {
    /// `∫∫ <u->^{2ω} <u+>^{-ω} |∇^k z+|^2`
    pub plus: f64,
    pub minus: f64,
    /// `(plus + minus) / ε^2`, 0 when `ε = 0`
    pub ratio: f64,
}

/// Space-time integral of `<u∓>^{2ω} <u±>^{-ω} |∇^k z±|^2` and its ratio to `ε^2`.
pub fn spacetime_flux_check(
    traj: &Trajectory,
    charts: &[CharacteristicChart],
    order: usize,
) -> Result<SpacetimeFlux> {
    check_charts(traj, charts)?;
    let grid = *traj.grid();
    let sp = Spectral::new(&grid, false);
    let omega = traj.config.weight.omega();
    let mut per_time = Vec::with_capacity(traj.len());
    for (snap, chart) in traj.snapshots.iter().zip(charts) {
        let mut v = [0.0; 2];
        for (slot, fam) in [Family::Plus, Family::Minus].into_iter().enumerate() {
            let z = snap.state.field(fam);
            if z.max_abs() == 0.0 {
                continue;
            }
            let d = derivative_density(&sp, &sp.forward_vector(z), order);
            let wo = chart.weights(fam.opposite());
            let ws = chart.weights(fam);
            v[slot] = Zip::from(&d)
                .and(wo)
                .and(ws)
                .fold(0.0, |acc, &d, &a, &b| acc + a.powf(2.0 * omega) * b.powf(-omega) * d)
                * grid.cell_volume();
        }
        per_time.push(v);
    }
    let times = traj.times();
    let mut total = [0.0; 2];
    for n in 1..times.len() {
        let dt = (times[n] - times[n - 1]).abs();
        for f in 0..2 {
            total[f] += 0.5 * dt * (per_time[n - 1][f] + per_time[n][f]);
        }
    }
    let e2 = traj.config.epsilon.powi(2);
    let ratio = if e2 > 0.0 { (total[0] + total[1]) / e2 } else { 0.0 };
    Ok(SpacetimeFlux { plus: total[0], minus: total[1], ratio })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    /// `min <u+><u-> / (R + |t|)` over the packet support
    pub min_weight_ratio: f64,
    /// `max |∂^α z+| |∂^β z-| <u+>^ω <u->^ω / ε^2`, `|α|,|β| <= 1`
    pub max_cross_ratio: f64,
    pub times: Vec<f64>,
    /// `max_x |z+| |z-|` per snapshot
    pub cross_amplitude: Vec<f64>,
    /// log-log slope of `cross_amplitude` against `R + |t|`
    pub decay_slope: f64,
}

fn pointwise_max_derivative(sp: &Spectral, z: &VectorField) -> (ScalarField, ScalarField) {
    let s = sp.forward_vector(z);
    let mut value = ScalarField::zeros(sp.grid().shape());
    for c in &z.c {
        Zip::from(&mut value).and(c).for_each(|o, &x| *o += x * x);
    }
    let mut best = value.clone();
    for a in 0..3 {
        let mut d = ScalarField::zeros(sp.grid().shape());
        for c in &s {
            let f = sp.inverse(&sp.deriv(c, a));
            Zip::from(&mut d).and(&f).for_each(|o, &x| *o += x * x);
        }
        Zip::from(&mut best).and(&d).for_each(|b, &x| *b = b.max(x));
    }
    (value.mapv(f64::sqrt), best.mapv(f64::sqrt))
}

pub fn separation_report(traj: &Trajectory, charts: &[CharacteristicChart]) -> Result<SeparationReport> {
    check_charts(traj, charts)?;
    let grid = *traj.grid();
    let sp = Spectral::new(&grid, false);
    let params = traj.config.weight;
    let omega = params.omega();
    let e2 = traj.config.epsilon.powi(2);
    let mut min_weight = f64::MAX;
    let mut max_cross = 0.0f64;
    let mut times = Vec::new();
    let mut cross = Vec::new();
    for (snap, chart) in traj.snapshots.iter().zip(charts) {
        let t = snap.t();
        let (ap, dp) = pointwise_max_derivative(&sp, &snap.state.z_plus);
        let (am, dm) = pointwise_max_derivative(&sp, &snap.state.z_minus);
        let peak = ap.iter().chain(am.iter()).fold(0.0f64, |m, &x| m.max(x));
        let mut amp_max = 0.0f64;
        Zip::indexed(&ap).for_each(|ix, &a| {
            let b = am[ix];
            let wp = chart.weights_plus[ix];
            let wm = chart.weights_minus[ix];
            if a.max(b) >= 1e-3 * peak {
                min_weight = min_weight.min(wp * wm / (params.r + t.abs()));
            }
            amp_max = amp_max.max(a * b);
            if e2 > 0.0 {
                max_cross = max_cross.max(dp[ix] * dm[ix] * (wp * wm).powf(omega) / e2);
            }
        });
        times.push(t);
        cross.push(amp_max);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&cross)
        .filter(|(_, &c)| c > 0.0)
        .map(|(&t, &c)| (params.r + t.abs(), c))
        .unzip();
    let decay_slope = if x.len() >= 2 { loglog_slope(&x, &y) } else { f64::NEG_INFINITY };
    Ok(SeparationReport { min_weight_ratio: min_weight, max_cross_ratio: max_cross, times, cross_amplitude: cross, decay_slope })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureDecay {
    pub times: Vec<f64>,
    /// `(R + |τ|)^ω max_x |∇^l p| / ε^2` for `l = 1, 2, 3`
    pub series: [Vec<f64>; 3],
    /// supremum of each series: the fitted constant
    pub sup: [f64; 3],
}

impl PressureDecay {
    /// `series[l-1]` at the last time over its value at the first.
    pub fn final_over_initial(&self, l: usize) -> f64 {
        let s = &self.series[l - 1];
        match (s.first(), s.last()) {
            (Some(&a), Some(&b)) if a > 0.0 => b / a,
            _ => 0.0,
        }
    }
}

/// Pointwise decay of `∇^l p`, measured as the largest multi-index derivative.
pub fn pressure_decay_report(traj: &Trajectory) -> PressureDecay {
    let grid = *traj.grid();
    let sp = Spectral::new(&grid, false);
    let params = traj.config.weight;
    let e2 = traj.config.epsilon.powi(2);
    let mut series: [Vec<f64>; 3] = Default::default();
    for snap in &traj.snapshots {
        let weight = (params.r + snap.t().abs()).powf(params.omega());
        let ph = sp.forward(&snap.pressure);
        for l in 1..=3 {
            let m = if e2 == 0.0 || snap.pressure.iter().all(|&p| p == 0.0) {
                0.0
            } else {
                multi_indices(l)
                    .into_iter()
                    .map(|alpha| sp.inverse(&sp.deriv_multi(&ph, alpha)).iter().fold(0.0f64, |m, x| m.max(x.abs())))
                    .fold(0.0, f64::max)
            };
            series[l - 1].push(if e2 > 0.0 { weight * m / e2 } else { 0.0 });
        }
    }
    let sup = [0, 1, 2].map(|l| series[l].iter().cloned().fold(0.0, f64::max));
    PressureDecay { times: traj.times(), series, sup }
}

/// Centered periodic difference of a scalar along `axis`.
fn centered_difference(f: &ScalarField, grid: &Grid3, axis: usize) -> ScalarField {
    let n = grid.n[axis];
    let h = grid.spacing()[axis];
    let mut out = ScalarField::zeros(grid.shape());
    Zip::indexed(&mut out).for_each(|(i, j, k), o| {
        let mut p = [i, j, k];
        let mut m = [i, j, k];
        p[axis] = (p[axis] + 1) % n;
        m[axis] = (m[axis] + n - 1) % n;
        *o = (f[p] - f[m]) / (2.0 * h);
    });
    out
}

/// Checks `λ >= 1` and `|∇λ| <= WEIGHT_LOG_GRADIENT_MAX λ`.
pub fn check_weight_admissible(lambda: &ScalarField, grid: &Grid3) -> Result<()> {
    if let Some(l) = lambda.iter().find(|&&l| !(l >= 1.0 - 1e-12)) {
        return Err(Error::WeightAdmissibility(format!("lambda = {l:.3e} < 1")));
    }
    let mut worst = 0.0f64;
    let grads: Vec<ScalarField> = (0..3).map(|a| centered_difference(lambda, grid, a)).collect();
    Zip::indexed(lambda).for_each(|ix, &l| {
        let g = (grads[0][ix].powi(2) + grads[1][ix].powi(2) + grads[2][ix].powi(2)).sqrt();
        worst = worst.max(g / l);
    });
    if worst > WEIGHT_LOG_GRADIENT_MAX {
        return Err(Error::WeightAdmissibility(format!("max |grad lambda|/lambda = {worst:.3e}")));
    }
    Ok(())
}

/// `‖√λ ∇v‖^2 / (‖√λ div v‖^2 + ‖√λ curl v‖^2 + ‖√λ v‖^2)`.
pub fn divcurl_constant(v: &VectorField, lambda: &ScalarField) -> Result<f64> {
    v.ensure_finite()?;
    let grid = v.grid;
    if lambda.dim() != grid.shape() {
        return Err(Error::GridMismatch("weight field shape".into()));
    }
    check_weight_admissible(lambda, &grid)?;
    let sp = Spectral::new(&grid, false);
    let s = sp.forward_vector(v);
    let grad = derivative_density(&sp, &s, 1);
    let div_hat = {
        let mut d = sp.deriv(&s[0], 0);
        d += &sp.deriv(&s[1], 1);
        d += &sp.deriv(&s[2], 2);
        d
    };
    let div = sp.inverse(&div_hat).mapv(|x| x * x);
    let curl = derivative_density(&sp, &curl_spectral(&sp, &s), 0);
    let val = derivative_density(&sp, &s, 0);
    let num = weighted_integral(&grad, lambda, 1.0, &grid);
    let den = weighted_integral(&div, lambda, 1.0, &grid)
        + weighted_integral(&curl, lambda, 1.0, &grid)
        + weighted_integral(&val, lambda, 1.0, &grid);
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// `<x3>^{2ω}` on the grid.
pub fn x3_weight(grid: &Grid3, params: &WeightParams) -> ScalarField {
    let two_omega = 2.0 * params.omega();
    crate::field::scalar_from_fn(grid, |x| weight_of(x[2], params).powf(two_omega))
}

/// Corpus member: band-limited random components under a Gaussian x3 envelope
/// (neither divergence- nor curl-free).
pub fn divcurl_corpus_field(grid: &Grid3, seed: u64, k_band: f64, sigma: f64) -> Result<VectorField> {
    let sp = Spectral::new(grid, false);
    let mut c = Vec::with_capacity(3);
    for comp in 0..3 {
        let mut f = sp.inverse(&band_limited_field(grid, seed, comp, k_band)?);
        Zip::indexed(&mut f).for_each(|(_, _, k), x| {
            let z = grid.centered(2, k);
            *x *= (-z * z / (2.0 * sigma * sigma)).exp();
        });
        c.push(f);
    }
    VectorField::from_components(grid, [c.remove(0), c.remove(0), c.remove(0)])
}

/// Largest div-curl ratio over `count` corpus fields with `λ = <x3>^{2ω}`.
pub fn divcurl_corpus(grid: &Grid3, count: u64, params: &WeightParams, k_band: f64, sigma: f64) -> Result<f64> {
    let lambda = x3_weight(grid, params);
    let mut worst = 0.0f64;
    for seed in 0..count {
        let v = divcurl_corpus_field(grid, 1000 + seed, k_band, sigma)?;
        worst = worst.max(divcurl_constant(&v, &lambda)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEnergyCheck {
    pub times: Vec<f64>,
    /// `Σ± ∫ λ± |f±|^2` at each snapshot
    pub energy: Vec<f64>,
    /// `2 Σ± ∫_0^t ∫ λ± |f±| |ρ±|` at each snapshot
    pub source: Vec<f64>,
    /// `min_t (E(0) + source(t) - E(t))`
    pub slack: f64,
    /// `Σ± sup_u ∫_{C±_u} λ± |f±|^2 dσ±` at the final time
    pub flux: f64,
}

/// Both sides of the linear energy inequality with `f± = z±`, `ρ± = -∇p`,
/// `λ± = <u∓>^{2ω}`. The flux term is reported separately and not folded into
/// the slack.
pub fn linear_energy_identity_check(
    traj: &Trajectory,
    charts: &[CharacteristicChart],
) -> Result<LinearEnergyCheck> {
    check_charts(traj, charts)?;
    let grid = *traj.grid();
    let sp = Spectral::new(&grid, false);
    let two_omega = 2.0 * traj.config.weight.omega();
    let dv = grid.cell_volume();
    let mut energy = Vec::with_capacity(traj.len());
    let mut rate = Vec::with_capacity(traj.len());
    for (snap, chart) in traj.snapshots.iter().zip(charts) {
        let ph = sp.forward(&snap.pressure);
        let gp = sp.inverse_vector(&[sp.deriv(&ph, 0), sp.deriv(&ph, 1), sp.deriv(&ph, 2)]);
        let mut e = 0.0;
        let mut r = 0.0;
        for fam in [Family::Plus, Family::Minus] {
            let z = snap.state.field(fam);
            let lam = chart.weights(fam.opposite());
            Zip::indexed(lam).for_each(|ix, &w| {
                let l = w.powf(two_omega);
                let f2: f64 = (0..3).map(|a| z.c[a][ix].powi(2)).sum();
                let g2: f64 = (0..3).map(|a| gp.c[a][ix].powi(2)).sum();
                e += l * f2;
                r += l * (f2 * g2).sqrt();
            });
        }
        energy.push(e * dv);
        rate.push(2.0 * r * dv);
    }
    let times = traj.times();
    let mut source = vec![0.0; times.len()];
    for n in 1..times.len() {
        source[n] = source[n - 1] + 0.5 * (times[n] - times[n - 1]).abs() * (rate[n - 1] + rate[n]);
    }
    let e0 = energy.first().copied().unwrap_or(0.0);
    let slack = (0..times.len()).map(|n| e0 + source[n] - energy[n]).fold(f64::MAX, f64::min);
    let mut flux = 0.0;
    if e0 > 0.0 && traj.len() > 1 {
        for fam in [Family::Plus, Family::Minus] {
            flux += flux_sup_series(traj, charts, fam, 0)?.last().copied().unwrap_or(0.0);
        }
    }
    Ok(LinearEnergyCheck { times, energy, source, slack: if slack == f64::MAX { 0.0 } else { slack }, flux })
}

/// Time series of weighted energies and fluxes with fitted constants.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    /// `e_orders[n][k] = (E+^k, E-^k)` at snapshot `n`
    pub e_orders: Vec<Vec<[f64; 2]>>,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    pub fitted_constants: Vec<FittedConstant>,
}

impl EnergyReport {
    pub fn k_max(&self) -> usize {
        self.e_orders.first().map_or(0, |r| r.len().saturating_sub(1))
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.fitted_constants.iter().find(|c| c.name == name).map(|c| c.value)
    }

    /// `max_t max(E+, E-) / (E+(0) + E-(0))`.
    pub fn energy_growth(&self) -> f64 {
        let e0 = self.e_plus.first().copied().unwrap_or(0.0) + self.e_minus.first().copied().unwrap_or(0.0);
        if e0 == 0.0 {
            return 0.0;
        }
        self.e_plus.iter().chain(&self.e_minus).cloned().fold(0.0, f64::max) / e0
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("t,e_plus,e_minus");
        for k in 1..=self.k_max() {
            let _ = write!(h, ",e{k}_plus,e{k}_minus");
        }
        h.push_str(",f_plus,f_minus");
        h
    }

    /// Summary block of fitted constants, one `name = value` line each.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.fitted_constants {
            let _ = match c.refined {
                Some(r) => writeln!(s, "{} = {:.6e} (refined {:.6e})", c.name, c.value, r),
                None => writeln!(s, "{} = {:.6e}", c.name, c.value),
            };
        }
        s
    }
}

/// Energies of every order up to `k_max` and order-0 fluxes at every snapshot.
pub fn energy_report(traj: &Trajectory, charts: &[CharacteristicChart], k_max: usize) -> Result<EnergyReport> {
    check_charts(traj, charts)?;
    let mut e_orders = Vec::with_capacity(traj.len());
    for (snap, chart) in traj.snapshots.iter().zip(charts) {
        let mut row = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let (a, b) = weighted_energy(&snap.state, chart, k, k_max)?;
            row.push([a, b]);
        }
        e_orders.push(row);
    }
    let zero_run = traj.snapshots.iter().all(|s| s.state.is_zero());
    let (f_plus, f_minus) = if zero_run || traj.len() < 2 {
        (vec![0.0; traj.len()], vec![0.0; traj.len()])
    } else {
        (flux_sup_series(traj, charts, Family::Plus, 0)?, flux_sup_series(traj, charts, Family::Minus, 0)?)
    };
    let eps = traj.config.epsilon;
    let mut report = EnergyReport {
        times: traj.times(),
        e_plus: e_orders.iter().map(|r: &Vec<[f64; 2]>| r[0][0]).collect(),
        e_minus: e_orders.iter().map(|r| r[0][1]).collect(),
        e_orders,
        f_plus,
        f_minus,
        fitted_constants: Vec::new(),
    };
    let per_eps = |x: f64| if eps > 0.0 { x / eps } else { 0.0 };
    let jac = charts
        .iter()
        .flat_map(|c| [c.jacobian_report(Family::Plus).0, c.jacobian_report(Family::Minus).0])
        .fold(0.0, f64::max);
    let fmax = report.f_plus.iter().chain(&report.f_minus).cloned().fold(0.0, f64::max);
    let decay = pressure_decay_report(traj);
    report.fitted_constants = vec![
        FittedConstant::new("c0_jacobian", per_eps(jac)),
        FittedConstant::new("c1_flux", per_eps(fmax.sqrt())),
        FittedConstant::new("energy_growth", report.energy_growth()),
        FittedConstant::new("pressure_decay_l1", decay.sup[0]),
        FittedConstant::new("pressure_decay_l2", decay.sup[1]),
        FittedConstant::new("pressure_decay_l3", decay.sup[2]),
    ];
    Ok(report)
}
