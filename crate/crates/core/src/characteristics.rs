//! Flow maps of `Z±`, characteristic label fields and line sampling.
//!
//! The flow of family `s` is `dψ/dt = Z_s(t, ψ) = s B0 + z_s(t, ψ)`. Positions
//! live on the universal cover; fields are sampled with periodic Catmull-Rom
//! stencils in space and linear interpolation in time between snapshots.
//!
//! Labels are written `Y_s(t, x) = x - s t B0 + η_s(t, x)` with `x` the
//! centered grid coordinate, so `η_s` is periodic and `u_s = Y_s^3` is
//! unwrapped.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Family, Grid3};
use crate::interp::{Stencil, TrigProbe};
use crate::solver::Trajectory;
use crate::spectral::Spectral;
use crate::weight::{weight_of, WeightParams};

type Mat3 = [[f64; 3]; 3];

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Borrowed field slices of one snapshot.
struct Frame<'a> {
    z: [&'a [f64]; 3],
    grad: Option<[[Vec<f64>; 3]; 3]>,
}

fn frame<'a>(traj: &'a Trajectory, n: usize, flow: Family, with_grad: bool) -> Frame<'a> {
    let v = traj.snapshots[n].state.field(flow);
    let grad = with_grad.then(|| {
        let sp = Spectral::new(&v.grid, false);
        let g = sp.gradient_tensor(&sp.forward_vector(v));
        // grad[a][b] = ∂b z^a
        [0, 1, 2].map(|a| [0, 1, 2].map(|b| g[b][a].as_slice().unwrap().to_vec()))
    });
    Frame { z: v.c.each_ref().map(|a| a.as_slice().expect("standard layout")), grad }
}

struct Interval<'a> {
    grid: Grid3,
    drift: [f64; 3],
    f0: Frame<'a>,
    f1: Frame<'a>,
    h: f64,
    /// Sample by trigonometric interpolation instead of the tricubic stencil.
    trig: bool,
}

impl<'a> Interval<'a> {
    fn new(traj: &'a Trajectory, n: usize, flow: Family, with_grad: bool) -> Self {
        let b0 = traj.initial().background;
        let s = flow.sign();
        let next = (n + 1).min(traj.len() - 1);
        Self {
            grid: *traj.grid(),
            drift: [s * b0[0], s * b0[1], s * b0[2]],
            f0: frame(traj, n, flow, with_grad),
            f1: frame(traj, next, flow, with_grad),
            h: traj.snapshots[next].t() - traj.snapshots[n].t(),
            trig: false,
        }
    }

    fn velocity(&self, theta: f64, x: [f64; 3]) -> [f64; 3] {
        if self.trig {
            let p = TrigProbe::new(&self.grid, x);
            let mut v = self.drift;
            for a in 0..3 {
                v[a] += (1.0 - theta) * p.apply_flat(self.f0.z[a]) + theta * p.apply_flat(self.f1.z[a]);
            }
            return v;
        }
        let st = Stencil::new(&self.grid, x);
        let mut v = self.drift;
        for a in 0..3 {
            let mut z = 0.0;
            if theta < 1.0 {
                z += (1.0 - theta) * st.apply(self.f0.z[a], &self.grid);
            }
            if theta > 0.0 {
                z += theta * st.apply(self.f1.z[a], &self.grid);
            }
            v[a] += z;
        }
        v
    }

    fn velocity_gradient(&self, theta: f64, x: [f64; 3]) -> ([f64; 3], Mat3) {
        let st = Stencil::new(&self.grid, x);
        let mut v = self.drift;
        let mut g = [[0.0; 3]; 3];
        let g0 = self.f0.grad.as_ref().expect("gradients requested");
        let g1 = self.f1.grad.as_ref().expect("gradients requested");
        for a in 0..3 {
            v[a] += (1.0 - theta) * st.apply(self.f0.z[a], &self.grid) + theta * st.apply(self.f1.z[a], &self.grid);
            for b in 0..3 {
                g[a][b] = (1.0 - theta) * st.apply(&g0[a][b], &self.grid) + theta * st.apply(&g1[a][b], &self.grid);
            }
        }
        (v, g)
    }

    /// RK4 from fraction `ta` to `tb` of the interval.
    fn rk4(&self, ta: f64, tb: f64, x: [f64; 3]) -> [f64; 3] {
        let h = (tb - ta) * self.h;
        let tm = 0.5 * (ta + tb);
        let k1 = self.velocity(ta, x);
        let k2 = self.velocity(tm, add(x, 0.5 * h, k1));
        let k3 = self.velocity(tm, add(x, 0.5 * h, k2));
        let k4 = self.velocity(tb, add(x, h, k3));
        [0, 1, 2].map(|a| x[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]))
    }

    /// RK4 for position and the variational equation `dJ/dt = ∇Z J`.
    fn rk4_jacobian(&self, ta: f64, tb: f64, x: [f64; 3], j: Mat3) -> ([f64; 3], Mat3) {
        let h = (tb - ta) * self.h;
        let tm = 0.5 * (ta + tb);
        let eval = |theta: f64, x: [f64; 3], j: &Mat3| {
            let (v, g) = self.velocity_gradient(theta, x);
            (v, matmul(&g, j))
        };
        let (k1, m1) = eval(ta, x, &j);
        let (k2, m2) = eval(tm, add(x, 0.5 * h, k1), &madd(&j, 0.5 * h, &m1));
        let (k3, m3) = eval(tm, add(x, 0.5 * h, k2), &madd(&j, 0.5 * h, &m2));
        let (k4, m4) = eval(tb, add(x, h, k3), &madd(&j, h, &m3));
        let xn = [0, 1, 2].map(|a| x[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]));
        let mut jn = j;
        for a in 0..3 {
            for b in 0..3 {
                jn[a][b] += h / 6.0 * (m1[a][b] + 2.0 * m2[a][b] + 2.0 * m3[a][b] + m4[a][b]);
            }
        }
        (xn, jn)
    }
}

#[inline]
fn add(x: [f64; 3], h: f64, k: [f64; 3]) -> [f64; 3] {
    [x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2]]
}

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

fn madd(a: &Mat3, h: f64, b: &Mat3) -> Mat3 {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] += h * b[i][j];
        }
    }
    c
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Segments `(interval, from, to)` covering `[t_from, t_to]` in travel order.
fn segments(traj: &Trajectory, t_from: f64, t_to: f64) -> Result<Vec<(usize, f64, f64)>> {
    traj.check_covers(t_from)?;
    traj.check_covers(t_to)?;
    let mut out = Vec::new();
    if traj.len() < 2 || t_from == t_to {
        return Ok(out);
    }
    let times = traj.times();
    let orient = (times[1] - times[0]).signum();
    let forward = (t_to - t_from) * orient > 0.0;
    let intervals: Vec<usize> = if forward {
        (0..times.len() - 1).collect()
    } else {
        (0..times.len() - 1).rev().collect()
    };
    for n in intervals {
        let (a, b) = (times[n], times[n + 1]);
        let lo = a.min(b);
        let hi = a.max(b);
        let s_lo = t_from.min(t_to).max(lo);
        let s_hi = t_from.max(t_to).min(hi);
        if s_hi - s_lo <= 1e-12 * (1.0 + hi.abs()) {
            continue;
        }
        let (ta, tb) = if t_to > t_from { (s_lo, s_hi) } else { (s_hi, s_lo) };
        let frac = |t: f64| ((t - a) / (b - a)).clamp(0.0, 1.0);
        out.push((n, frac(ta), frac(tb)));
    }
    Ok(out)
}

/// Move points along the flow of `Z_flow` from `t_from` to `t_to`.
pub fn trace_positions(
    traj: &Trajectory,
    flow: Family,
    positions: &mut [[f64; 3]],
    t_from: f64,
    t_to: f64,
) -> Result<()> {
    for (n, ta, tb) in segments(traj, t_from, t_to)? {
        let iv = Interval::new(traj, n, flow, false);
        positions.par_iter_mut().for_each(|x| *x = iv.rk4(ta, tb, *x));
    }
    Ok(())
}

/// Trace points from the first snapshot to the last, calling `visit` with the
/// snapshot index and the positions at every snapshot (including the first).
pub fn trace_snapshots(
    traj: &Trajectory,
    flow: Family,
    positions: &mut [[f64; 3]],
    mut visit: impl FnMut(usize, &[[f64; 3]]) -> Result<()>,
) -> Result<()> {
    visit(0, positions)?;
    for n in 0..traj.len().saturating_sub(1) {
        let iv = Interval::new(traj, n, flow, false);
        positions.par_iter_mut().for_each(|x| *x = iv.rk4(0.0, 1.0, *x));
        visit(n + 1, positions)?;
    }
    Ok(())
}

/// [`trace_snapshots`] with the velocity sampled by trigonometric
/// interpolation. Exact in space, `O(N^3)` per point and stage.
pub fn trace_snapshots_spectral(
    traj: &Trajectory,
    flow: Family,
    positions: &mut [[f64; 3]],
    mut visit: impl FnMut(usize, &[[f64; 3]]) -> Result<()>,
) -> Result<()> {
    visit(0, positions)?;
    for n in 0..traj.len().saturating_sub(1) {
        let mut iv = Interval::new(traj, n, flow, false);
        iv.trig = true;
        positions.par_iter_mut().for_each(|x| *x = iv.rk4(0.0, 1.0, *x));
        visit(n + 1, positions)?;
    }
    Ok(())
}

/// Centered coordinates of every grid point, in flat order.
pub fn grid_points(grid: &Grid3) -> Vec<[f64; 3]> {
    (0..grid.len())
        .map(|idx| {
            let (i, j, k) = grid.unflat(idx);
            grid.centered_point(i, j, k)
        })
        .collect()
}

/// `ψ(t, y)` over the initial label grid with its Jacobian `∂ψ/∂y`.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub t: f64,
    pub family: Family,
    pub grid: Grid3,
    pub positions: Vec<[f64; 3]>,
    pub jacobian: Vec<Mat3>,
}

impl FlowMap {
    pub fn identity(grid: &Grid3, family: Family) -> Self {
        Self {
            t: 0.0,
            family,
            grid: *grid,
            positions: grid_points(grid),
            jacobian: vec![IDENTITY; grid.len()],
        }
    }

    /// Range of `det(∂ψ/∂y)` over the labels.
    pub fn determinant_range(&self) -> (f64, f64) {
        self.jacobian.iter().map(det3).fold((f64::MAX, f64::MIN), |(lo, hi), d| (lo.min(d), hi.max(d)))
    }

    /// `(max |∂ψ/∂y - I|, max |∇_y(∂ψ/∂y)|)` over labels and entries.
    pub fn jacobian_report(&self) -> (f64, f64) {
        let dev = self
            .jacobian
            .iter()
            .flat_map(|m| (0..9).map(move |e| (m[e / 3][e % 3] - IDENTITY[e / 3][e % 3]).abs()))
            .fold(0.0, f64::max);
        let sp = Spectral::new(&self.grid, false);
        let mut grad = 0.0f64;
        for e in 0..9 {
            let f = ScalarField::from_shape_vec(
                self.grid.shape(),
                self.jacobian.iter().map(|m| m[e / 3][e % 3] - IDENTITY[e / 3][e % 3]).collect(),
            )
            .unwrap();
            let s = sp.forward(&f);
            for a in 0..3 {
                let d = sp.inverse(&sp.deriv(&s, a));
                grad = grad.max(d.iter().fold(0.0, |m, x| m.max(x.abs())));
            }
        }
        (dev, grad)
    }
}

/// Advance `ψ` and `∂ψ/∂y` by `dt` through the stored snapshots.
pub fn advance_flow(map: &FlowMap, traj: &Trajectory, dt: f64) -> Result<FlowMap> {
    let t_to = map.t + dt;
    traj.check_covers(map.t)?;
    traj.check_covers(t_to)?;
    map.grid.check_same(traj.grid())?;
    let mut out = map.clone();
    for (n, ta, tb) in segments(traj, map.t, t_to)? {
        let iv = Interval::new(traj, n, map.family, true);
        out.positions
            .par_iter_mut()
            .zip(out.jacobian.par_iter_mut())
            .for_each(|(x, j)| {
                let (xn, jn) = iv.rk4_jacobian(ta, tb, *x, *j);
                *x = xn;
                *j = jn;
            });
    }
    out.t = t_to;
    Ok(out)
}

/// Label fields `Y±(t, x)` on the Eulerian grid with their weights.
#[derive(Debug, Clone)]
pub struct CharacteristicChart {
    pub t: f64,
    pub grid: Grid3,
    pub background: [f64; 3],
    pub weight: WeightParams,
    /// `(x1+, x2+, u+)`
    pub labels_plus: VectorField,
    /// `(x1-, x2-, u-)`
    pub labels_minus: VectorField,
    /// `<u+>`
    pub weights_plus: ScalarField,
    /// `<u->`
    pub weights_minus: ScalarField,
}

impl CharacteristicChart {
    fn from_eta(t: f64, grid: &Grid3, background: [f64; 3], weight: WeightParams, eta: [&VectorField; 2]) -> Self {
        let mut labels = [VectorField::zeros(grid), VectorField::zeros(grid)];
        for (f, family) in [Family::Plus, Family::Minus].into_iter().enumerate() {
            let s = family.sign();
            for ((i, j, k), _) in eta[f].c[0].indexed_iter() {
                let x = grid.centered_point(i, j, k);
                for a in 0..3 {
                    labels[f].c[a][[i, j, k]] = x[a] - s * t * background[a] + eta[f].c[a][[i, j, k]];
                }
            }
        }
        let [lp, lm] = labels;
        let weights_plus = lp.c[2].mapv(|u| weight_of(u, &weight));
        let weights_minus = lm.c[2].mapv(|u| weight_of(u, &weight));
        Self { t, grid: *grid, background, weight, labels_plus: lp, labels_minus: lm, weights_plus, weights_minus }
    }

    /// Straight characteristics: `Y± = x ∓ t B0`.
    pub fn straight(grid: &Grid3, t: f64, weight: WeightParams) -> Self {
        let zero = VectorField::zeros(grid);
        Self::from_eta(t, grid, [0.0, 0.0, 1.0], weight, [&zero, &zero])
    }

    pub fn labels(&self, family: Family) -> &VectorField {
        match family {
            Family::Plus => &self.labels_plus,
            Family::Minus => &self.labels_minus,
        }
    }

    /// `u_family` on the grid.
    pub fn u(&self, family: Family) -> &ScalarField {
        &self.labels(family).c[2]
    }

    pub fn weights(&self, family: Family) -> &ScalarField {
        match family {
            Family::Plus => &self.weights_plus,
            Family::Minus => &self.weights_minus,
        }
    }

    /// Periodic part `η = Y - x + s t B0`.
    pub fn eta(&self, family: Family) -> VectorField {
        let s = family.sign();
        let lab = self.labels(family);
        let mut eta = VectorField::zeros(&self.grid);
        for ((i, j, k), _) in lab.c[0].indexed_iter() {
            let x = self.grid.centered_point(i, j, k);
            for a in 0..3 {
                eta.c[a][[i, j, k]] = lab.c[a][[i, j, k]] - x[a] + s * self.t * self.background[a];
            }
        }
        eta
    }

    /// Label of an arbitrary (unwrapped) point, by tricubic interpolation of `η`.
    pub fn label_at(&self, family: Family, eta: &VectorField, x: [f64; 3]) -> [f64; 3] {
        let st = Stencil::new(&self.grid, x);
        let s = family.sign();
        [0, 1, 2].map(|a| x[a] - s * self.t * self.background[a] + st.apply(eta.c[a].as_slice().unwrap(), &self.grid))
    }

    /// `(max |∂Y/∂x - I|, max |∇(∂Y/∂x)|)`.
    pub fn jacobian_report(&self, family: Family) -> (f64, f64) {
        let eta = self.eta(family);
        let sp = Spectral::new(&self.grid, false);
        let s = sp.forward_vector(&eta);
        let mut dev = 0.0f64;
        let mut grad = 0.0f64;
        let maxabs = |f: &ScalarField| f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for c in &s {
            for a in 0..3 {
                let d = sp.deriv(c, a);
                dev = dev.max(maxabs(&sp.inverse(&d)));
                for b in 0..3 {
                    grad = grad.max(maxabs(&sp.inverse(&sp.deriv(&d, b))));
                }
            }
        }
        (dev, grad)
    }
}

/// Chart from the label fields evolved by the solver.
pub fn chart_at_snapshot(traj: &Trajectory, index: usize) -> Result<CharacteristicChart> {
    let snap = &traj.snapshots[index];
    let labels = snap.labels.as_ref().ok_or(Error::LabelsNotTracked)?;
    Ok(CharacteristicChart::from_eta(
        snap.t(),
        traj.grid(),
        snap.state.background,
        traj.config.weight,
        [&labels.eta_plus, &labels.eta_minus],
    ))
}

/// Charts at every snapshot: evolved labels when tracked, backtracing otherwise.
pub fn chart_series(traj: &Trajectory) -> Result<Vec<CharacteristicChart>> {
    (0..traj.len())
        .map(|i| match chart_at_snapshot(traj, i) {
            Err(Error::LabelsNotTracked) => label_chart(traj, traj.snapshots[i].t()),
            other => other,
        })
        .collect()
}

/// Bound on the position error caused by linear time interpolation.
pub fn time_interpolation_estimate(traj: &Trajectory) -> f64 {
    let n = traj.len();
    if n < 3 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        for fam in [Family::Plus, Family::Minus] {
            let a = traj.snapshots[i - 1].state.field(fam);
            let b = traj.snapshots[i].state.field(fam);
            let c = traj.snapshots[i + 1].state.field(fam);
            for comp in 0..3 {
                let m = ndarray::Zip::from(&a.c[comp])
                    .and(&b.c[comp])
                    .and(&c.c[comp])
                    .fold(0.0f64, |m, x, y, z| m.max((x - 2.0 * y + z).abs()));
                worst = worst.max(m);
            }
        }
    }
    worst / 8.0 * (traj.t_end() - traj.t_start()).abs()
}

/// Labels at time `t` by backtracing every grid point to `t = 0`.
pub fn label_chart(traj: &Trajectory, t: f64) -> Result<CharacteristicChart> {
    traj.check_covers(t)?;
    let grid = *traj.grid();
    let tolerance = 1e-3 * grid.min_spacing();
    let estimate = time_interpolation_estimate(traj);
    if estimate > tolerance {
        return Err(Error::SnapshotDensity { estimate, tolerance });
    }
    let b0 = traj.initial().background;
    let t0 = traj.initial().t;
    let mut etas = Vec::with_capacity(2);
    for family in [Family::Plus, Family::Minus] {
        let start = grid_points(&grid);
        let mut pos = start.clone();
        trace_positions(traj, family, &mut pos, t, t0)?;
        let s = family.sign();
        let mut eta = VectorField::zeros(&grid);
        for (idx, (y, x)) in pos.iter().zip(&start).enumerate() {
            let (i, j, k) = grid.unflat(idx);
            for a in 0..3 {
                eta.c[a][[i, j, k]] = y[a] - x[a] + s * (t - t0) * b0[a];
            }
        }
        etas.push(eta);
    }
    Ok(CharacteristicChart::from_eta(t, &grid, b0, traj.config.weight, [&etas[0], &etas[1]]))
}

/// A characteristic line with the fields sampled along it.
#[derive(Debug, Clone, Default)]
pub struct LineSample {
    pub times: Vec<f64>,
    pub positions: Vec<[f64; 3]>,
    pub z_plus: Vec<[f64; 3]>,
    pub z_minus: Vec<[f64; 3]>,
    pub grad_p: Vec<[f64; 3]>,
    /// `|L∓| = (1 + |Z∓|^2)^{1/2}`
    pub line_measure: Vec<f64>,
}

/// Periodic `∇p` of every snapshot.
pub fn pressure_gradients(traj: &Trajectory) -> Vec<VectorField> {
    let sp = Spectral::new(traj.grid(), false);
    traj.snapshots
        .iter()
        .map(|s| {
            let ph = sp.forward(&s.pressure);
            sp.inverse_vector(&[sp.deriv(&ph, 0), sp.deriv(&ph, 1), sp.deriv(&ph, 2)])
        })
        .collect()
}

pub fn check_label_in_hull(grid: &Grid3, label: [f64; 3]) -> Result<()> {
    for a in 0..3 {
        let half = 0.5 * grid.length[a];
        if !(label[a] >= -half && label[a] <= half) {
            return Err(Error::LabelOutsideHull(label));
        }
    }
    Ok(())
}

/// The line `t ↦ ψ∓(t, label)` carrying `z±`, sampled at every snapshot.
pub fn sample_line(traj: &Trajectory, family: Family, label: [f64; 3]) -> Result<LineSample> {
    let grid = *traj.grid();
    check_label_in_hull(&grid, label)?;
    let flow = family.opposite();
    let grad_p = pressure_gradients(traj);
    let b0 = traj.initial().background;
    let s = flow.sign();
    let mut out = LineSample::default();
    let mut pos = vec![label];
    trace_snapshots(traj, flow, &mut pos, |n, p| {
        let x = p[0];
        let snap = &traj.snapshots[n];
        let st = Stencil::new(&grid, x);
        let sample = |v: &VectorField| [0, 1, 2].map(|a| st.apply(v.c[a].as_slice().unwrap(), &grid));
        let zp = sample(&snap.state.z_plus);
        let zm = sample(&snap.state.z_minus);
        let carrier = if flow == Family::Plus { zp } else { zm };
        let big: f64 = (0..3).map(|a| (carrier[a] + s * b0[a]).powi(2)).sum();
        out.times.push(snap.t());
        out.positions.push(x);
        out.z_plus.push(zp);
        out.z_minus.push(zm);
        out.grad_p.push(sample(&grad_p[n]));
        out.line_measure.push((1.0 + big).sqrt());
        Ok(())
    })?;
    Ok(out)
}
