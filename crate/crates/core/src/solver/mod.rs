//! Pseudo-spectral integration of the Elsasser fluctuation system
//!
//! ```text
//! ∂t z+ + Z-·∇z+ = -∇p,   ∂t z- + Z+·∇z- = -∇p,   Z± = z± ± B0,
//! -Δp = ∂i z-^j ∂j z+^i.
//! ```
//!
//! The state is held in Fourier space between stages. Products are formed on
//! the grid and truncated with the 2/3 rule, which makes the semi-discrete
//! system an exact Galerkin truncation that conserves `∫|z±|^2`.
//!
//! When label tracking is on, the solver also evolves the periodic parts `η±`
//! of the characteristic labels `Y± = x ∓ t B0 + η±`, which satisfy
//! `∂t η± + Z±·∇η± = -z±`.

mod oracle;

pub use oracle::{
    free_space_pressure_derivatives, localization_ratio, pressure_newtonian_oracle,
    pressure_newtonian_oracle_with, Cutoff,
};

use ndarray::Zip;
use num_complex::Complex64;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::field::{ElsasserState, ScalarField, VectorField};
use crate::grid::{Family, Grid3};
use crate::initial::initial_state;
use crate::spectral::{curl_spectral, Spectral, Spectrum};

/// Divergence tolerance relative to the gradient scale.
pub const DIV_TOLERANCE: f64 = 1e-8;

#[derive(Clone)]
struct SpecState {
    t: f64,
    zp: [Spectrum; 3],
    zm: [Spectrum; 3],
    eta: Option<[[Spectrum; 3]; 2]>,
}

struct Stage {
    dzp: [Spectrum; 3],
    dzm: [Spectrum; 3],
    deta: Option<[[Spectrum; 3]; 2]>,
    p_hat: Spectrum,
    max_speed: f64,
    l2: [f64; 2],
}

/// Time derivatives returned by [`elsasser_rhs`].
#[derive(Debug, Clone)]
pub struct Tendency {
    pub dz_plus: VectorField,
    pub dz_minus: VectorField,
    pub pressure: ScalarField,
}

/// Periodic parts of the characteristic labels at one snapshot.
#[derive(Debug, Clone)]
pub struct LabelFields {
    pub eta_plus: VectorField,
    pub eta_minus: VectorField,
}

impl LabelFields {
    pub fn eta(&self, family: Family) -> &VectorField {
        match family {
            Family::Plus => &self.eta_plus,
            Family::Minus => &self.eta_minus,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub state: ElsasserState,
    pub pressure: ScalarField,
    pub labels: Option<LabelFields>,
}

impl Snapshot {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

/// Per-step scalar diagnostics (one CSV row each).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    /// `∫|z+|^2 dx`
    pub l2_zplus: f64,
    /// `∫|z-|^2 dx`
    pub l2_zminus: f64,
    pub max_gradp: f64,
    /// `|dt| (1 + max|Z±|) / min spacing`
    pub cfl: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid3 {
        &self.config.grid
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t()).collect()
    }

    pub fn t_start(&self) -> f64 {
        self.snapshots.first().map(|s| s.t()).unwrap_or(0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.snapshots.last().map(|s| s.t()).unwrap_or(0.0)
    }

    pub fn initial(&self) -> &ElsasserState {
        &self.snapshots[0].state
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("non-empty trajectory")
    }

    /// Whether `t` lies in the closed span (either orientation).
    pub fn covers(&self, t: f64) -> bool {
        let (a, b) = (self.t_start(), self.t_end());
        let tol = 1e-9 * (1.0 + a.abs().max(b.abs()));
        t >= a.min(b) - tol && t <= a.max(b) + tol
    }

    pub fn check_covers(&self, t: f64) -> Result<()> {
        if self.covers(t) {
            Ok(())
        } else {
            Err(Error::OutsideTrajectory { t, start: self.t_start(), end: self.t_end() })
        }
    }

    /// Index of the snapshot stamped `t`, if any.
    pub fn snapshot_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.snapshots.iter().position(|s| (s.t() - t).abs() <= tol)
    }

    /// Interval `[n, n+1]` containing `t` and the fractional position in it.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        self.check_covers(t)?;
        let n = self.snapshots.len();
        if n == 1 {
            return Ok((0, 0.0));
        }
        for i in 0..n - 1 {
            let (a, b) = (self.snapshots[i].t(), self.snapshots[i + 1].t());
            let theta = (t - a) / (b - a);
            if (-1e-9..=1.0 + 1e-9).contains(&theta) {
                return Ok((i, theta.clamp(0.0, 1.0)));
            }
        }
        Err(Error::OutsideTrajectory { t, start: self.t_start(), end: self.t_end() })
    }

    /// Keep every `k`-th snapshot (the last one is always kept).
    pub fn subsampled(&self, k: usize) -> Trajectory {
        let k = k.max(1);
        let last = self.snapshots.len() - 1;
        let snapshots = self
            .snapshots
            .iter()
            .enumerate()
            .filter(|(i, _)| i % k == 0 || *i == last)
            .map(|(_, s)| s.clone())
            .collect();
        let mut config = self.config.clone();
        config.output_stride *= k;
        Trajectory { config, snapshots, diagnostics: self.diagnostics.clone() }
    }

    /// Time-truncated copy ending at the snapshot stamped `t`.
    pub fn truncated(&self, t: f64) -> Result<Trajectory> {
        let idx = self
            .snapshot_index(t)
            .ok_or_else(|| Error::Config(format!("no snapshot at t = {t}")))?;
        let mut config = self.config.clone();
        config.horizon = t;
        Ok(Trajectory {
            config,
            snapshots: self.snapshots[..=idx].to_vec(),
            diagnostics: self
                .diagnostics
                .iter()
                .filter(|d| d.t.abs() <= t.abs() + 1e-12)
                .copied()
                .collect(),
        })
    }
}

/// Stage evaluator and RK4 integrator on one grid.
pub struct Solver {
    sp: Spectral,
    background: [f64; 3],
    cfl: f64,
}

fn combine(base: &[Spectrum; 3], h: f64, k: &[Spectrum; 3]) -> [Spectrum; 3] {
    [0, 1, 2].map(|a| {
        let mut out = base[a].clone();
        out.scaled_add(Complex64::new(h, 0.0), &k[a]);
        out
    })
}

impl Solver {
    pub fn new(grid: &Grid3, dealias: bool, cfl: f64) -> Self {
        Self { sp: Spectral::new(grid, dealias), background: [0.0, 0.0, 1.0], cfl }
    }

    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }

    fn to_spectral(&self, state: &ElsasserState, eta: Option<&LabelFields>) -> SpecState {
        let mut zp = self.sp.forward_vector(&state.z_plus);
        let mut zm = self.sp.forward_vector(&state.z_minus);
        for c in zp.iter_mut().chain(zm.iter_mut()) {
            self.sp.truncate(c);
        }
        let eta = eta.map(|l| {
            [
                self.sp.forward_vector(&l.eta_plus),
                self.sp.forward_vector(&l.eta_minus),
            ]
        });
        SpecState { t: state.t, zp, zm, eta }
    }

    fn to_physical(&self, s: &SpecState) -> (ElsasserState, Option<LabelFields>) {
        let state = ElsasserState {
            t: s.t,
            z_plus: self.sp.inverse_vector(&s.zp),
            z_minus: self.sp.inverse_vector(&s.zm),
            background: self.background,
        };
        let labels = s.eta.as_ref().map(|e| LabelFields {
            eta_plus: self.sp.inverse_vector(&e[0]),
            eta_minus: self.sp.inverse_vector(&e[1]),
        });
        (state, labels)
    }

    fn rhs(&self, s: &SpecState) -> Result<Stage> {
        let sp = &self.sp;
        let grid = *sp.grid();
        let b0 = self.background;
        let zp = sp.inverse_vector(&s.zp);
        let zm = sp.inverse_vector(&s.zm);
        let amp = zp.max_norm().max(zm.max_norm());
        if !amp.is_finite() {
            return Err(Error::NonFinite { t: s.t, what: "fluctuation fields".into() });
        }
        if amp >= 0.5 {
            return Err(Error::BootstrapAmplitude(amp));
        }
        let gp = sp.gradient_tensor(&s.zp);
        let gm = sp.gradient_tensor(&s.zm);

        let n = grid.len();
        let mut np = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut nm = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut src = vec![0.0; n];
        let mut max_speed = 0.0f64;
        {
            let zp_s = zp.c.each_ref().map(|a| a.as_slice().unwrap());
            let zm_s = zm.c.each_ref().map(|a| a.as_slice().unwrap());
            let gp_s = gp.each_ref().map(|r| r.each_ref().map(|a| a.as_slice().unwrap()));
            let gm_s = gm.each_ref().map(|r| r.each_ref().map(|a| a.as_slice().unwrap()));
            for x in 0..n {
                let big_p = [zp_s[0][x] + b0[0], zp_s[1][x] + b0[1], zp_s[2][x] + b0[2]];
                let big_m = [zm_s[0][x] - b0[0], zm_s[1][x] - b0[1], zm_s[2][x] - b0[2]];
                let sp2 = big_p.iter().map(|v| v * v).sum::<f64>();
                let sm2 = big_m.iter().map(|v| v * v).sum::<f64>();
                max_speed = max_speed.max(sp2.max(sm2));
                for b in 0..3 {
                    np[b][x] = big_m[0] * gp_s[0][b][x] + big_m[1] * gp_s[1][b][x] + big_m[2] * gp_s[2][b][x];
                    nm[b][x] = big_p[0] * gm_s[0][b][x] + big_p[1] * gm_s[1][b][x] + big_p[2] * gm_s[2][b][x];
                }
                let mut acc = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        acc += gm_s[i][j][x] * gp_s[j][i][x];
                    }
                }
                src[x] = acc;
            }
        }
        let shape = grid.shape();
        let to_field = |v: Vec<f64>| ScalarField::from_shape_vec(shape, v).unwrap();
        let [np0, np1, np2] = np.map(to_field);
        let [nm0, nm1, nm2] = nm.map(to_field);
        let src = to_field(src);
        let mut hats = sp.forward_many(&[&np0, &np1, &np2, &nm0, &nm1, &nm2, &src]);
        for h in hats.iter_mut() {
            sp.truncate(h);
        }
        let mut p_hat = hats.pop().unwrap();
        sp.inverse_neg_laplacian(&mut p_hat);
        let grad_p = [sp.deriv(&p_hat, 0), sp.deriv(&p_hat, 1), sp.deriv(&p_hat, 2)];
        let mut it = hats.into_iter();
        let mut dzp: [Spectrum; 3] = [0, 1, 2].map(|_| it.next().unwrap());
        let mut dzm: [Spectrum; 3] = [0, 1, 2].map(|_| it.next().unwrap());
        for a in 0..3 {
            Zip::from(&mut dzp[a]).and(&grad_p[a]).for_each(|d, g| *d = -*d - *g);
            Zip::from(&mut dzm[a]).and(&grad_p[a]).for_each(|d, g| *d = -*d - *g);
        }
        sp.leray(&mut dzp);
        sp.leray(&mut dzm);

        let deta = match &s.eta {
            None => None,
            Some(eta) => {
                let mut out = Vec::with_capacity(2);
                for (f, z) in [(0usize, &zp), (1usize, &zm)] {
                    let sign = if f == 0 { 1.0 } else { -1.0 };
                    let ge = sp.gradient_tensor(&eta[f]);
                    let mut r = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
                    let z_s = z.c.each_ref().map(|a| a.as_slice().unwrap());
                    let ge_s = ge.each_ref().map(|row| row.each_ref().map(|a| a.as_slice().unwrap()));
                    for x in 0..n {
                        let v = [
                            z_s[0][x] + sign * b0[0],
                            z_s[1][x] + sign * b0[1],
                            z_s[2][x] + sign * b0[2],
                        ];
                        for b in 0..3 {
                            r[b][x] = -(v[0] * ge_s[0][b][x] + v[1] * ge_s[1][b][x] + v[2] * ge_s[2][b][x]) - z_s[b][x];
                        }
                    }
                    let [r0, r1, r2] = r.map(to_field);
                    let mut h = sp.forward_many(&[&r0, &r1, &r2]);
                    for c in h.iter_mut() {
                        sp.truncate(c);
                    }
                    let mut hi = h.into_iter();
                    out.push([hi.next().unwrap(), hi.next().unwrap(), hi.next().unwrap()]);
                }
                let minus = out.pop().unwrap();
                let plus = out.pop().unwrap();
                Some([plus, minus])
            }
        };
        Ok(Stage { dzp, dzm, deta, p_hat, max_speed: max_speed.sqrt(), l2: [zp.l2_sq(), zm.l2_sq()] })
    }

    fn advance(&self, s: &SpecState, h: f64, k: &Stage) -> SpecState {
        SpecState {
            t: s.t + h,
            zp: combine(&s.zp, h, &k.dzp),
            zm: combine(&s.zm, h, &k.dzm),
            eta: s.eta.as_ref().map(|e| {
                let d = k.deta.as_ref().unwrap();
                [combine(&e[0], h, &d[0]), combine(&e[1], h, &d[1])]
            }),
        }
    }

    fn cfl_limit(&self, max_speed: f64) -> f64 {
        self.cfl * self.sp.grid().min_spacing() / (1.0 + max_speed)
    }

    fn rk4(&self, s: &SpecState, dt: f64, k1: &Stage) -> Result<SpecState> {
        let limit = self.cfl_limit(k1.max_speed);
        if dt.abs() > limit {
            return Err(Error::Cfl { dt: dt.abs(), limit });
        }
        let k2 = self.rhs(&self.advance(s, 0.5 * dt, k1))?;
        let k3 = self.rhs(&self.advance(s, 0.5 * dt, &k2))?;
        let k4 = self.rhs(&self.advance(s, dt, &k3))?;
        let mut out = s.clone();
        out.t = s.t + dt;
        let w = [dt / 6.0, dt / 3.0, dt / 3.0, dt / 6.0];
        for (wi, k) in w.iter().zip([k1, &k2, &k3, &k4]) {
            let c = Complex64::new(*wi, 0.0);
            for a in 0..3 {
                out.zp[a].scaled_add(c, &k.dzp[a]);
                out.zm[a].scaled_add(c, &k.dzm[a]);
            }
            if let (Some(e), Some(d)) = (out.eta.as_mut(), k.deta.as_ref()) {
                for f in 0..2 {
                    for a in 0..3 {
                        e[f][a].scaled_add(c, &d[f][a]);
                    }
                }
            }
        }
        self.sp.leray(&mut out.zp);
        self.sp.leray(&mut out.zm);
        Ok(out)
    }

    /// Tendencies and pressure of a state.
    pub fn rhs_of(&self, state: &ElsasserState) -> Result<Tendency> {
        let s = self.to_spectral(state, None);
        let k = self.rhs(&s)?;
        Ok(Tendency {
            dz_plus: self.sp.inverse_vector(&k.dzp),
            dz_minus: self.sp.inverse_vector(&k.dzm),
            pressure: self.sp.inverse(&k.p_hat),
        })
    }

    /// One classical RK4 step followed by the Leray safeguard.
    pub fn step(&self, state: &ElsasserState, dt: f64) -> Result<ElsasserState> {
        let s = self.to_spectral(state, None);
        let k1 = self.rhs(&s)?;
        let out = self.rk4(&s, dt, &k1)?;
        Ok(self.to_physical(&out).0)
    }

    /// Integrate `steps` steps of size `dt` from `initial`, storing every
    /// `stride`-th state.
    pub fn integrate(&self, config: &SimConfig, initial: &ElsasserState) -> Result<Trajectory> {
        let steps = config.steps();
        let stride = config.output_stride;
        let zero_labels = config.track_labels.then(|| LabelFields {
            eta_plus: VectorField::zeros(&config.grid),
            eta_minus: VectorField::zeros(&config.grid),
        });
        let mut s = self.to_spectral(initial, zero_labels.as_ref());
        s.t = initial.t;
        let mut snapshots = Vec::with_capacity(steps / stride + 2);
        let mut diagnostics = Vec::with_capacity(steps + 1);
        for n in 0..=steps {
            let k1 = self.rhs(&s)?;
            let p = self.sp.inverse(&k1.p_hat);
            let grad_p = [0, 1, 2].map(|a| self.sp.deriv(&k1.p_hat, a));
            let gp = self.sp.inverse_vector(&grad_p);
            diagnostics.push(StepDiagnostics {
                t: s.t,
                l2_zplus: k1.l2[0],
                l2_zminus: k1.l2[1],
                max_gradp: gp.max_norm(),
                cfl: config.dt.abs() * (1.0 + k1.max_speed) / self.sp.grid().min_spacing(),
            });
            if n % stride == 0 || n == steps {
                let (state, labels) = self.to_physical(&s);
                snapshots.push(Snapshot { state, pressure: p, labels });
            }
            if n == steps {
                break;
            }
            s = self.rk4(&s, config.dt, &k1)?;
            s.t = initial.t + (n + 1) as f64 * config.dt;
        }
        Ok(Trajectory { config: config.clone(), snapshots, diagnostics })
    }
}

fn check_div_free(sp: &Spectral, v: &[Spectrum; 3]) -> Result<()> {
    let div = sp.inverse(&(sp.deriv(&v[0], 0) + sp.deriv(&v[1], 1) + sp.deriv(&v[2], 2)));
    let grads = sp.gradient_tensor(v);
    let gmax = grads
        .iter()
        .flat_map(|r| r.iter())
        .flat_map(|a| a.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let dmax = div.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if dmax > DIV_TOLERANCE * gmax.max(f64::MIN_POSITIVE) && dmax > 1e-14 {
        return Err(Error::NotDivergenceFree(dmax / gmax));
    }
    Ok(())
}

/// Pressure solving `-Δp = ∂i z-^j ∂j z+^i` spectrally with zero mean.
pub fn pressure_poisson(z_plus: &VectorField, z_minus: &VectorField) -> Result<ScalarField> {
    z_plus.grid.check_same(&z_minus.grid)?;
    z_plus.ensure_finite()?;
    z_minus.ensure_finite()?;
    let sp = Spectral::new(&z_plus.grid, true);
    let sp_hat = sp.forward_vector(z_plus);
    let sm_hat = sp.forward_vector(z_minus);
    check_div_free(&sp, &sp_hat)?;
    check_div_free(&sp, &sm_hat)?;
    let gp = sp.gradient_tensor(&sp_hat);
    let gm = sp.gradient_tensor(&sm_hat);
    let mut src = ScalarField::zeros(z_plus.grid.shape());
    for i in 0..3 {
        for j in 0..3 {
            Zip::from(&mut src).and(&gm[i][j]).and(&gp[j][i]).for_each(|s, a, b| *s += a * b);
        }
    }
    let mut s = sp.forward(&src);
    sp.truncate(&mut s);
    sp.inverse_neg_laplacian(&mut s);
    Ok(sp.inverse(&s))
}

/// `(-Z-·∇z+ - ∇p, -Z+·∇z- - ∇p, p)` with dealiased products.
pub fn elsasser_rhs(state: &ElsasserState) -> Result<Tendency> {
    let mut solver = Solver::new(state.grid(), true, 0.5);
    solver.background = state.background;
    solver.rhs_of(state)
}

/// Classical RK4 step with the default solver settings.
pub fn step_rk4(state: &ElsasserState, dt: f64) -> Result<ElsasserState> {
    let mut solver = Solver::new(state.grid(), true, 0.5);
    solver.background = state.background;
    solver.step(state, dt)
}

/// Integrate the configured initial data over `[0, T]`.
pub fn run(config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let initial = initial_state(&config.initial, &config.grid, config.epsilon, &config.weight, config.k_max)?;
    run_from(config, &initial)
}

/// Integrate given initial data with the time settings of `config`.
pub fn run_from(config: &SimConfig, initial: &ElsasserState) -> Result<Trajectory> {
    config.validate()?;
    config.grid.check_same(initial.grid())?;
    let mut solver = Solver::new(&config.grid, config.dealias, config.cfl);
    solver.background = initial.background;
    solver.integrate(config, initial)
}

/// Residual of the vorticity system at the interior snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VorticityResidual {
    pub t: f64,
    pub r_plus: f64,
    pub r_minus: f64,
}

/// `r± = ∂t j± + Z∓·∇j± + ∇z∓ ∧ ∇z±` with a centered time difference.
pub fn vorticity_residual(traj: &Trajectory) -> Result<Vec<VorticityResidual>> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::TooFewSnapshots { need: 3, have: n });
    }
    let grid = *traj.grid();
    let sp = Spectral::new(&grid, traj.config.dealias);
    let b0 = traj.initial().background;
    let vort = |s: &Snapshot| {
        (
            curl_spectral(&sp, &sp.forward_vector(&s.state.z_plus)),
            curl_spectral(&sp, &sp.forward_vector(&s.state.z_minus)),
        )
    };
    let parseval = grid.cell_volume() / grid.len() as f64;
    let mut out = Vec::with_capacity(n - 2);
    let mut prev = vort(&traj.snapshots[0]);
    let mut cur = vort(&traj.snapshots[1]);
    for i in 1..n - 1 {
        let next = vort(&traj.snapshots[i + 1]);
        let dt2 = traj.snapshots[i + 1].t() - traj.snapshots[i - 1].t();
        let snap = &traj.snapshots[i];
        let zp_hat = sp.forward_vector(&snap.state.z_plus);
        let zm_hat = sp.forward_vector(&snap.state.z_minus);
        let gp = sp.gradient_tensor(&zp_hat);
        let gm = sp.gradient_tensor(&zm_hat);
        let mut norms = [0.0; 2];
        for (f, (j_prev, j_cur, j_next)) in [
            (&prev.0, &cur.0, &next.0),
            (&prev.1, &cur.1, &next.1),
        ]
        .into_iter()
        .enumerate()
        {
            let (carrier, sign, ga, gb) = if f == 0 {
                (&snap.state.z_minus, -1.0, &gm, &gp)
            } else {
                (&snap.state.z_plus, 1.0, &gp, &gm)
            };
            let gj = sp.gradient_tensor(j_cur);
            let mut terms = Vec::with_capacity(3);
            for k in 0..3 {
                let mut t = ScalarField::zeros(grid.shape());
                for a in 0..3 {
                    let shift = sign * b0[a];
                    Zip::from(&mut t)
                        .and(&carrier.c[a])
                        .and(&gj[a][k])
                        .for_each(|acc, z, g| *acc += (z + shift) * g);
                }
                terms.push(t);
            }
            // (∇a ∧ ∇b)_k = ε_ijk ∂i a^l ∂l b^j
            let mut c = vec![vec![ScalarField::zeros(grid.shape()); 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        Zip::from(&mut c[i][j]).and(&ga[i][l]).and(&gb[l][j]).for_each(|acc, x, y| *acc += x * y);
                    }
                }
            }
            terms[0] = &terms[0] + &c[1][2] - &c[2][1];
            terms[1] = &terms[1] + &c[2][0] - &c[0][2];
            terms[2] = &terms[2] + &c[0][1] - &c[1][0];
            let hats = sp.forward_many(&[&terms[0], &terms[1], &terms[2]]);
            let mut total = 0.0;
            for (k, mut h) in hats.into_iter().enumerate() {
                sp.truncate(&mut h);
                Zip::from(&h).and(&j_next[k]).and(&j_prev[k]).for_each(|nl, jn, jp| {
                    let r = *nl + (*jn - *jp) / dt2;
                    total += r.norm_sqr();
                });
            }
            norms[f] = (total * parseval).sqrt();
        }
        out.push(VorticityResidual { t: snap.t(), r_plus: norms[0], r_minus: norms[1] });
        prev = cur;
        cur = next;
    }
    Ok(out)
}
