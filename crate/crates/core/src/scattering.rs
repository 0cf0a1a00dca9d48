//! Scattering fields on the truncated infinities, the forward operators of the
//! four cases, their linearization and the fixed-point inverse.
//!
//! `z±` is carried along the flow of `Z∓`; its scattering field at `±T` is
//! `z±(0, y) - ∫_0^{±T} ∇p √(1 + |Z∓|^2) dτ` along `ψ∓(τ, y)`, indexed by the
//! initial label `y` (the simulation grid). Without the square-root factor the
//! same integral is the exact transport identity.

use rayon::prelude::*;

use crate::characteristics::{grid_points, trace_snapshots, trace_snapshots_spectral};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::field::{ElsasserState, VectorField};
use crate::grid::{Family, Grid3};
use crate::initial::initial_energy_norm_sq;
use crate::interp::{Stencil, TrigProbe};
use crate::solver::{run_from, Trajectory};
use crate::spectral::{leray_project, Spectral};
use crate::stats::loglog_slope;
use crate::weight::{weight_of, WeightParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Future,
    Past,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Future => 1.0,
            Direction::Past => -1.0,
        }
    }
}

/// `F±` (future) and `P±` (past) characteristic infinities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfinityKind {
    FuturePlus,
    FutureMinus,
    PastPlus,
    PastMinus,
}

impl InfinityKind {
    pub fn new(family: Family, direction: Direction) -> Self {
        match (family, direction) {
            (Family::Plus, Direction::Future) => Self::FuturePlus,
            (Family::Minus, Direction::Future) => Self::FutureMinus,
            (Family::Plus, Direction::Past) => Self::PastPlus,
            (Family::Minus, Direction::Past) => Self::PastMinus,
        }
    }

    pub fn family(self) -> Family {
        match self {
            Self::FuturePlus | Self::PastPlus => Family::Plus,
            Self::FutureMinus | Self::PastMinus => Family::Minus,
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Self::FuturePlus | Self::FutureMinus => Direction::Future,
            Self::PastPlus | Self::PastMinus => Direction::Past,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FuturePlus => "F+",
            Self::FutureMinus => "F-",
            Self::PastPlus => "P+",
            Self::PastMinus => "P-",
        }
    }
}

/// Label grid `(x1∓, x2∓, u∓)` of an infinity with the flat measure.
#[derive(Debug, Clone, PartialEq)]
pub struct InfinityManifold {
    pub kind: InfinityKind,
    /// The simulation's initial grid.
    pub grid: Grid3,
    pub weight: WeightParams,
}

impl InfinityManifold {
    /// `<u∓>` over the labels; `u∓ = y3` on the initial slice.
    pub fn weight_field(&self) -> crate::field::ScalarField {
        crate::field::scalar_from_fn(&self.grid, |y| weight_of(y[2], &self.weight))
    }

    /// Volume element `dμ∓` of one label cell.
    pub fn cell_measure(&self) -> f64 {
        self.grid.cell_volume()
    }
}

#[derive(Debug, Clone)]
pub struct ScatteringField {
    pub manifold: InfinityManifold,
    /// Paper integrand, with the line-measure factor.
    pub values: VectorField,
    /// Factor-free transport integral over the same paths.
    pub transport_values: VectorField,
    pub truncation_t: f64,
    pub tail_bound: f64,
    /// `max |integrand| (R + |t|)^ω` over labels and snapshots.
    pub envelope: f64,
}

impl ScatteringField {
    pub fn family(&self) -> Family {
        self.manifold.kind.family()
    }

    /// `max_y |values - transport_values|`.
    pub fn factor_difference(&self) -> f64 {
        self.values.sub(&self.transport_values).map(|d| d.max_norm()).unwrap_or(f64::NAN)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.scale(c);
        out.transport_values.scale(c);
        out.tail_bound *= c * c;
        out.envelope *= c * c;
        out
    }
}

fn sl(v: &VectorField, a: usize) -> &[f64] {
    v.c[a].as_slice().expect("standard layout")
}

fn pressure_gradient(sp: &Spectral, traj: &Trajectory, n: usize) -> VectorField {
    let ph = sp.forward(&traj.snapshots[n].pressure);
    sp.inverse_vector(&[sp.deriv(&ph, 0), sp.deriv(&ph, 1), sp.deriv(&ph, 2)])
}

fn check_direction(traj: &Trajectory, direction: Direction) -> Result<f64> {
    let horizon = traj.t_end() - traj.t_start();
    if traj.len() < 2 {
        return Err(Error::TooFewSnapshots { need: 2, have: traj.len() });
    }
    if traj.t_start() != 0.0 || horizon.signum() != direction.sign() {
        return Err(Error::Config(format!(
            "trajectory spans [{}, {}], expected [0, {}T]",
            traj.t_start(),
            traj.t_end(),
            if direction == Direction::Future { "+" } else { "-" }
        )));
    }
    let window = traj.grid().validity_window();
    if horizon.abs() > window + 1e-12 {
        return Err(Error::ValidityWindow { horizon: horizon.abs(), window });
    }
    Ok(traj.t_end())
}

/// Scattering field of `family` at the truncated infinity in `direction`.
pub fn scattering_field(traj: &Trajectory, family: Family, direction: Direction) -> Result<ScatteringField> {
    let horizon = check_direction(traj, direction)?;
    let grid = *traj.grid();
    let sp = Spectral::new(&grid, false);
    let flow = family.opposite();
    let s = flow.sign();
    let b0 = traj.initial().background;
    let params = traj.config.weight;
    let omega = params.omega();
    let z0 = traj.initial().field(family);
    let count = grid.len();
    let mut acc = vec![[0.0f64; 3]; count];
    let mut acc_free = vec![[0.0f64; 3]; count];
    let mut prev: Vec<([f64; 3], [f64; 3])> = vec![([0.0; 3], [0.0; 3]); count];
    let mut envelope = 0.0f64;
    let times = traj.times();
    let mut positions = grid_points(&grid);
    trace_snapshots(traj, flow, &mut positions, |n, pos| {
        let snap = &traj.snapshots[n];
        let gp = pressure_gradient(&sp, traj, n);
        let zf = snap.state.field(flow);
        let cur: Vec<([f64; 3], [f64; 3])> = pos
            .par_iter()
            .map(|&x| {
                let st = Stencil::new(&grid, x);
                let g = [0, 1, 2].map(|a| st.apply(sl(&gp, a), &grid));
                let big: f64 = (0..3).map(|a| (st.apply(sl(zf, a), &grid) + s * b0[a]).powi(2)).sum();
                let m = (1.0 + big).sqrt();
                ([g[0] * m, g[1] * m, g[2] * m], g)
            })
            .collect();
        let decay = (params.r + snap.t().abs()).powf(omega);
        for (w, _) in &cur {
            envelope = envelope.max((w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt() * decay);
        }
        if n > 0 {
            let h = times[n] - times[n - 1];
            for l in 0..count {
                for a in 0..3 {
                    acc[l][a] += 0.5 * h * (prev[l].0[a] + cur[l].0[a]);
                    acc_free[l][a] += 0.5 * h * (prev[l].1[a] + cur[l].1[a]);
                }
            }
        }
        prev = cur;
        Ok(())
    })?;
    let mut values = z0.clone();
    let mut transport_values = z0.clone();
    for (l, (a, b)) in acc.iter().zip(&acc_free).enumerate() {
        let (i, j, k) = grid.unflat(l);
        for c in 0..3 {
            values.c[c][[i, j, k]] -= a[c];
            transport_values.c[c][[i, j, k]] -= b[c];
        }
    }
    Ok(ScatteringField {
        manifold: InfinityManifold { kind: InfinityKind::new(family, direction), grid, weight: params },
        values,
        transport_values,
        truncation_t: horizon,
        tail_bound: tail_from_envelope(envelope, horizon, &params),
        envelope,
    })
}

/// `envelope · ∫_{|T|}^∞ (R+τ)^{-ω} dτ = envelope (R+|T|)^{-δ} / δ`.
pub fn tail_from_envelope(envelope: f64, horizon: f64, params: &WeightParams) -> f64 {
    envelope * (params.r + horizon.abs()).powf(1.0 - params.omega()) / (params.omega() - 1.0)
}

/// Tail estimate of the truncated integrals beyond `horizon`, using the
/// integrand envelope fitted on the part of `traj` within `|t| <= |horizon|`.
pub fn tail_bound(traj: &Trajectory, horizon: f64) -> Result<f64> {
    let cut = traj.truncated(horizon)?;
    let dir = if horizon >= 0.0 { Direction::Future } else { Direction::Past };
    let mut worst = 0.0f64;
    for fam in [Family::Plus, Family::Minus] {
        worst = worst.max(scattering_field(&cut, fam, dir)?.envelope);
    }
    Ok(tail_from_envelope(worst, horizon, &traj.config.weight))
}

/// Labels on a 4×4×4 lattice across `x1, x2` and the central quarter in `x3`.
pub fn probe_labels(grid: &Grid3) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(64);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let i = (2 * a + 1) * grid.n[0] / 8;
                let j = (2 * b + 1) * grid.n[1] / 8;
                let k3 = ((c as f64 - 1.5) / 1.5 * grid.n[2] as f64 / 8.0).round() as i64;
                let k = k3.rem_euclid(grid.n[2] as i64) as usize;
                out.push(grid.centered_point(i, j, k));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportCheck {
    pub t: f64,
    pub labels: Vec<[f64; 3]>,
    /// `z(t, ψ(t,y)) - (z(0,y) - ∫_0^t ∇p)` per label
    pub residuals: Vec<[f64; 3]>,
    /// Euclidean length of each residual.
    pub discrepancy: Vec<f64>,
    pub max_discrepancy: f64,
}

/// Exact transport identity along `ψ∓` for the 64 [`probe_labels`]. Paths and
/// fields are sampled by trigonometric interpolation, so the only path errors
/// are the RK4 step and the linear-in-time velocity between snapshots; `t`
/// must be a snapshot time.
pub fn transport_identity_check(traj: &Trajectory, family: Family, t: f64) -> Result<TransportCheck> {
    let idx = traj
        .snapshot_index(t)
        .ok_or_else(|| Error::Config(format!("t = {t} is not a snapshot time")))?;
    let cut = traj.truncated(traj.snapshots[idx].t())?;
    let grid = *traj.grid();
    let sp = Spectral::new(&grid, false);
    let labels = probe_labels(&grid);
    let flow = family.opposite();
    let z0 = traj.initial().field(family);
    let mut integral = vec![[0.0f64; 3]; labels.len()];
    let mut prev: Vec<[f64; 3]> = Vec::new();
    let mut last_pos = labels.clone();
    let times = cut.times();
    let mut positions = labels.clone();
    trace_snapshots_spectral(&cut, flow, &mut positions, |n, pos| {
        let gp = pressure_gradient(&sp, &cut, n);
        let cur: Vec<[f64; 3]> = pos
            .par_iter()
            .map(|&x| {
                let probe = TrigProbe::new(&grid, x);
                [0, 1, 2].map(|a| probe.apply(&gp.c[a]))
            })
            .collect();
        if n > 0 {
            let h = times[n] - times[n - 1];
            for (l, acc) in integral.iter_mut().enumerate() {
                for a in 0..3 {
                    acc[a] += 0.5 * h * (prev[l][a] + cur[l][a]);
                }
            }
        }
        prev = cur;
        last_pos.copy_from_slice(pos);
        Ok(())
    })?;
    let zt = cut.last().state.field(family);
    let residuals: Vec<[f64; 3]> = labels
        .par_iter()
        .zip(&last_pos)
        .zip(&integral)
        .map(|((y, x), int)| {
            let p0 = TrigProbe::new(&grid, *y);
            let pt = TrigProbe::new(&grid, *x);
            [0, 1, 2].map(|a| pt.apply(&zt.c[a]) - (p0.apply(&z0.c[a]) - int[a]))
        })
        .collect();
    let discrepancy: Vec<f64> = residuals.iter().map(|r| norm3(*r)).collect();
    let max_discrepancy = discrepancy.iter().cloned().fold(0.0, f64::max);
    Ok(TransportCheck { t: cut.t_end(), labels, residuals, discrepancy, max_discrepancy })
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Transport identity at snapshot strides `s`, `2s`, `4s`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrideStudy {
    pub strides: [usize; 3],
    pub max_discrepancy: [f64; 3],
    /// `max_discrepancy[1] / max_discrepancy[0]`.
    pub raw_ratio: f64,
    /// `max|r(4s) - r(2s)| / max|r(2s) - r(s)|` over labels: the growth of the
    /// stride-dependent part, independent of any stride-free floor.
    pub difference_ratio: f64,
    pub observed_order: f64,
}

pub fn transport_stride_study(traj: &Trajectory, family: Family, t: f64, stride: usize) -> Result<StrideStudy> {
    let strides = [stride, 2 * stride, 4 * stride];
    let checks = strides
        .iter()
        .map(|&k| {
            let sub = traj.subsampled(k);
            let uniform = sub.snapshot_index(t).is_some_and(|i| {
                let ts = &sub.times()[..=i];
                ts.windows(2).all(|w| ((w[1] - w[0]) - (ts[1] - ts[0])).abs() < 1e-9)
            });
            if !uniform {
                return Err(Error::Config(format!("t = {t} is not on a uniform stride-{k} snapshot grid")));
            }
            transport_identity_check(&sub, family, t)
        })
        .collect::<Result<Vec<_>>>()?;
    let diff = |a: &TransportCheck, b: &TransportCheck| {
        a.residuals
            .iter()
            .zip(&b.residuals)
            .map(|(x, y)| norm3([x[0] - y[0], x[1] - y[1], x[2] - y[2]]))
            .fold(0.0, f64::max)
    };
    let d1 = diff(&checks[1], &checks[0]);
    let d2 = diff(&checks[2], &checks[1]);
    let max_discrepancy = [0, 1, 2].map(|i| checks[i].max_discrepancy);
    let difference_ratio = if d1 > 0.0 { d2 / d1 } else { f64::NAN };
    Ok(StrideStudy {
        strides,
        max_discrepancy,
        raw_ratio: if max_discrepancy[0] > 0.0 { max_discrepancy[1] / max_discrepancy[0] } else { f64::NAN },
        difference_ratio,
        observed_order: difference_ratio.log2(),
    })
}

/// `Σ_{|β|<=N} ∫ |∂^β v|^2 <y3>^{2ω} dy` over a label grid.
pub fn label_sobolev_sq(v: &VectorField, weight: &WeightParams, order: usize) -> f64 {
    initial_energy_norm_sq(v, weight, order)
}

/// Weighted Sobolev sum `Σ_{|β|<=N} ∫ |∇^β F|^2 <u∓>^{2ω} dμ∓` (squared norm).
pub fn infinity_sobolev_norm(field: &ScatteringField, order: usize, k_max: usize) -> Result<f64> {
    if order > k_max {
        return Err(Error::OrderTooHigh { order, max: k_max });
    }
    Ok(label_sobolev_sq(&field.values, &field.manifold.weight, order))
}

/// `‖F - z(0)‖` in the weighted Sobolev norm of order `N` (not squared).
pub fn deviation_norm(field: &ScatteringField, initial: &VectorField, order: usize, k_max: usize) -> Result<f64> {
    if order > k_max {
        return Err(Error::OrderTooHigh { order, max: k_max });
    }
    if initial.grid != field.manifold.grid {
        return Err(Error::GridMismatch(format!(
            "initial data on {:?}, scattering field on {:?}",
            initial.grid.n, field.manifold.grid.n
        )));
    }
    let d = field.values.sub(initial)?;
    Ok(label_sobolev_sq(&d, &field.manifold.weight, order).sqrt())
}

/// The four pairings of adjacent infinities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    A,
    B,
    C,
    D,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::A, Case::B, Case::C, Case::D];

    /// Directions used for `(z+, z-)`.
    pub fn directions(self) -> (Direction, Direction) {
        use Direction::*;
        match self {
            Case::A => (Future, Future),
            Case::B => (Past, Future),
            Case::C => (Past, Past),
            Case::D => (Future, Past),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
            Case::D => "d",
        }
    }

    pub fn parse(s: &str) -> Option<Case> {
        Case::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone)]
pub struct ScatterPair {
    pub case: Case,
    pub plus: ScatteringField,
    pub minus: ScatteringField,
}

impl ScatterPair {
    pub fn field(&self, family: Family) -> &ScatteringField {
        match family {
            Family::Plus => &self.plus,
            Family::Minus => &self.minus,
        }
    }

    /// The pair read as initial data `(z+, z-)` at `t = 0`.
    pub fn as_state(&self) -> Result<ElsasserState> {
        ElsasserState::new(0.0, self.plus.values.clone(), self.minus.values.clone())
    }

    /// `sqrt(‖F+ - a+‖^2 + ‖F- - a-‖^2)` in the order-`N` weighted norm.
    pub fn distance_to(&self, state: &ElsasserState, order: usize) -> Result<f64> {
        let w = self.plus.manifold.weight;
        let a = label_sobolev_sq(&self.plus.values.sub(&state.z_plus)?, &w, order);
        let b = label_sobolev_sq(&self.minus.values.sub(&state.z_minus)?, &w, order);
        Ok((a + b).sqrt())
    }
}

/// Product norm `sqrt(‖z+‖^2 + ‖z-‖^2)` of a state in label coordinates.
pub fn state_norm(state: &ElsasserState, weight: &WeightParams, order: usize) -> f64 {
    (label_sobolev_sq(&state.z_plus, weight, order) + label_sobolev_sq(&state.z_minus, weight, order)).sqrt()
}

/// `L^(case)`: the identity on label-coordinate data.
pub fn linear_map(case: Case, initial: &ElsasserState, weight: &WeightParams) -> ScatterPair {
    let grid = *initial.grid();
    let (dp, dm) = case.directions();
    let field = |z: &VectorField, fam, dir| ScatteringField {
        manifold: InfinityManifold { kind: InfinityKind::new(fam, dir), grid, weight: *weight },
        values: z.clone(),
        transport_values: z.clone(),
        truncation_t: f64::INFINITY,
        tail_bound: 0.0,
        envelope: 0.0,
    };
    ScatterPair {
        case,
        plus: field(&initial.z_plus, Family::Plus, dp),
        minus: field(&initial.z_minus, Family::Minus, dm),
    }
}

/// Forward and backward trajectories from one initial state, run on demand.
pub struct ForwardRuns {
    pub future: Option<Trajectory>,
    pub past: Option<Trajectory>,
}

impl ForwardRuns {
    /// Runs the horizons `+|T|` and/or `-|T|` needed by `cases`, concurrently.
    pub fn new(cases: &[Case], initial: &ElsasserState, config: &SimConfig) -> Result<Self> {
        let need = |d: Direction| {
            cases.iter().any(|c| {
                let (a, b) = c.directions();
                a == d || b == d
            })
        };
        let t = config.horizon.abs();
        let mut cfg = config.clone();
        cfg.track_labels = false;
        let go = |d: Direction| -> Result<Option<Trajectory>> {
            if need(d) {
                run_from(&cfg.with_horizon(d.sign() * t), initial).map(Some)
            } else {
                Ok(None)
            }
        };
        let (f, p) = rayon::join(|| go(Direction::Future), || go(Direction::Past));
        Ok(Self { future: f?, past: p? })
    }

    pub fn trajectory(&self, d: Direction) -> &Trajectory {
        match d {
            Direction::Future => self.future.as_ref().expect("future run"),
            Direction::Past => self.past.as_ref().expect("past run"),
        }
    }

    pub fn pair(&self, case: Case) -> Result<ScatterPair> {
        let (dp, dm) = case.directions();
        Ok(ScatterPair {
            case,
            plus: scattering_field(self.trajectory(dp), Family::Plus, dp)?,
            minus: scattering_field(self.trajectory(dm), Family::Minus, dm)?,
        })
    }
}

/// `N^(case)(initial)` with horizon `|config.horizon|`.
pub fn forward_map(case: Case, initial: &ElsasserState, config: &SimConfig) -> Result<ScatterPair> {
    ForwardRuns::new(&[case], initial, config)?.pair(case)
}

/// All four cases from one pair of runs.
pub fn forward_map_all(initial: &ElsasserState, config: &SimConfig) -> Result<[ScatterPair; 4]> {
    let runs = ForwardRuns::new(&Case::ALL, initial, config)?;
    Ok([runs.pair(Case::A)?, runs.pair(Case::B)?, runs.pair(Case::C)?, runs.pair(Case::D)?])
}

/// Fitted log-log slope, or the sentinel for deviations that vanish identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeFit {
    Fitted(f64),
    ExactLinear,
}

impl SlopeFit {
    pub fn value(self) -> Option<f64> {
        match self {
            SlopeFit::Fitted(s) => Some(s),
            SlopeFit::ExactLinear => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationReport {
    pub case: Case,
    pub eps: Vec<f64>,
    /// `‖N(εx) - L(εx)‖`
    pub deviations: Vec<f64>,
    /// `‖N(εx) - εx‖ / ‖εx‖`
    pub relative: Vec<f64>,
    pub slope: SlopeFit,
    /// `relative / ε` per amplitude
    pub c_fit: Vec<f64>,
}

/// Deviation of `N^(case)(ε x)` from `ε x` across `eps_list` and its log-log slope.
pub fn linearization_slope(
    direction: &ElsasserState,
    case: Case,
    eps_list: &[f64],
    config: &SimConfig,
    order: usize,
) -> Result<LinearizationReport> {
    let pairs = eps_list
        .iter()
        .map(|&e| forward_map(case, &direction.scaled(e), &config.with_epsilon(e)).map(|p| (e, p)))
        .collect::<Result<Vec<_>>>()?;
    linearization_from_pairs(direction, case, &pairs, &config.weight, order)
}

/// As [`linearization_slope`] for pairs already computed at amplitudes `eps`.
pub fn linearization_from_pairs(
    direction: &ElsasserState,
    case: Case,
    pairs: &[(f64, ScatterPair)],
    weight: &WeightParams,
    order: usize,
) -> Result<LinearizationReport> {
    if pairs.len() < 3 {
        return Err(Error::Config("linearization needs at least 3 amplitudes".into()));
    }
    let eps: Vec<f64> = pairs.iter().map(|(e, _)| *e).collect();
    let lo = eps.iter().cloned().fold(f64::MAX, f64::min);
    let hi = eps.iter().cloned().fold(f64::MIN, f64::max);
    if !(lo > 0.0 && hi >= 4.0 * lo * (1.0 - 1e-12)) {
        return Err(Error::Config("amplitudes must be positive and span a factor of at least 4".into()));
    }
    let base = state_norm(direction, weight, order);
    let mut deviations = Vec::new();
    let mut relative = Vec::new();
    for (e, pair) in pairs {
        let x = direction.scaled(*e);
        let d = pair.distance_to(&x, order)?;
        deviations.push(d);
        relative.push(if base > 0.0 { d / (e * base) } else { 0.0 });
    }
    let c_fit = relative.iter().zip(&eps).map(|(r, e)| r / e).collect();
    let slope = if deviations.iter().all(|&d| d == 0.0) {
        SlopeFit::ExactLinear
    } else {
        let mut order_idx: Vec<usize> = (0..eps.len()).collect();
        order_idx.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));
        let monotone = order_idx.windows(2).all(|w| deviations[w[1]] > deviations[w[0]]);
        if !monotone {
            return Err(Error::UnresolvedRegime(format!(
                "deviations {deviations:?} are not increasing in eps {eps:?}"
            )));
        }
        SlopeFit::Fitted(loglog_slope(&eps, &deviations))
    };
    Ok(LinearizationReport { case, eps, deviations, relative, slope, c_fit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionStep {
    pub iteration: usize,
    /// `‖x_{k+1} - x_k‖`
    pub update_norm: f64,
    /// `‖N(x_k) - target‖`
    pub residual_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub state: ElsasserState,
    pub log: Vec<ReconstructionStep>,
    /// `x_0, x_1, ...`; the last entry is `state`.
    pub iterates: Vec<ElsasserState>,
}

impl Reconstruction {
    /// Successive update-norm ratios.
    pub fn contraction_factors(&self) -> Vec<f64> {
        self.log
            .windows(2)
            .filter(|w| w[0].update_norm > 0.0)
            .map(|w| w[1].update_norm / w[0].update_norm)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructOptions {
    /// Stop when the update norm is at most `tol · ‖target‖`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Sobolev order of the norms.
    pub order: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 10, order: 1 }
    }
}

fn project_state(z_plus: &VectorField, z_minus: &VectorField) -> Result<ElsasserState> {
    ElsasserState::new(0.0, leray_project(z_plus)?, leray_project(z_minus)?)
}

/// Fixed-point inversion `x_{k+1} = P(x_k - (N(x_k) - target))` from `x_0 = P(target)`,
/// with `P` the Leray projection.
pub fn reconstruct(
    target: &ScatterPair,
    case: Case,
    config: &SimConfig,
    opts: ReconstructOptions,
) -> Result<Reconstruction> {
    let weight = config.weight;
    let target_state = target.as_state()?;
    let scale = state_norm(&target_state, &weight, opts.order);
    let mut x = project_state(&target_state.z_plus, &target_state.z_minus)?;
    let mut log: Vec<ReconstructionStep> = Vec::new();
    let mut iterates = vec![x.clone()];
    let mut increases = 0;
    for iteration in 1..=opts.max_iterations {
        let image = forward_map(case, &x, config)?;
        let rp = image.plus.values.sub(&target.plus.values)?;
        let rm = image.minus.values.sub(&target.minus.values)?;
        let residual_norm =
            (label_sobolev_sq(&rp, &weight, opts.order) + label_sobolev_sq(&rm, &weight, opts.order)).sqrt();
        let mut zp = x.z_plus.clone();
        zp.axpy(-1.0, &rp);
        let mut zm = x.z_minus.clone();
        zm.axpy(-1.0, &rm);
        let next = project_state(&zp, &zm)?;
        let update_norm = (label_sobolev_sq(&next.z_plus.sub(&x.z_plus)?, &weight, opts.order)
            + label_sobolev_sq(&next.z_minus.sub(&x.z_minus)?, &weight, opts.order))
        .sqrt();
        if let Some(prev) = log.last() {
            if update_norm > prev.update_norm {
                increases += 1;
                if increases >= 2 {
                    log.push(ReconstructionStep { iteration, update_norm, residual_norm });
                    return Err(Error::OutsideBasin(format!(
                        "update norm increased twice, log: {:?}",
                        log.iter().map(|s| s.update_norm).collect::<Vec<_>>()
                    )));
                }
            }
        }
        log.push(ReconstructionStep { iteration, update_norm, residual_norm });
        x = next;
        iterates.push(x.clone());
        if update_norm <= opts.tol * scale {
            break;
        }
    }
    Ok(Reconstruction { state: x, log, iterates })
}
