//! The invariant battery behind `mode = "verify"`.

use std::fmt;

use alfven_core::characteristics::{chart_series, CharacteristicChart};
use alfven_core::diagnostics::{divcurl_corpus, linear_energy_identity_check, pressure_decay_report, separation_report};
use alfven_core::initial::initial_state;
use alfven_core::scattering::transport_identity_check;
use alfven_core::solver::Trajectory;
use alfven_core::spectral::translate;
use alfven_core::stats::relative_change;
use alfven_core::{run, Error, Family, Grid3, InitialRecipe, Result, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: Bound,
    pub tolerance: f64,
    pub error: Option<String>,
}

impl Check {
    fn new(name: &'static str, bound: Bound, tolerance: f64, value: Result<f64>) -> Self {
        match value {
            Ok(v) => Self { name, value: v, bound, tolerance, error: None },
            Err(e) => Self { name, value: f64::NAN, bound, tolerance, error: Some(e.to_string()) },
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none()
            && match self.bound {
                Bound::AtMost => self.value <= self.tolerance,
                Bound::AtLeast => self.value >= self.tolerance,
            }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        write!(
            f,
            "{:<20} value={:<12.4e} tol{}{:<12.4e} {}",
            self.name,
            self.value,
            rel,
            self.tolerance,
            if self.passed() { "PASS" } else { "FAIL" }
        )?;
        if let Some(e) = &self.error {
            write!(f, "  ({e})")?;
        }
        Ok(())
    }
}

fn drift(traj: &Trajectory) -> f64 {
    let d0 = traj.diagnostics[0];
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
    traj.diagnostics
        .iter()
        .map(|d| rel(d.l2_zplus, d0.l2_zplus).max(rel(d.l2_zminus, d0.l2_zminus)))
        .fold(0.0, f64::max)
}

/// `max |z+(T) - z+(0)(· + T e3)|` and `max |p|` for one-family data.
fn traveling_wave(config: &SimConfig) -> Result<f64> {
    let (seed, k_band, sigma) = match &config.initial {
        InitialRecipe::TwoFamily { seed, k_band, sigma }
        | InitialRecipe::OneFamily { seed, k_band, sigma, .. }
        | InitialRecipe::Symmetric { seed, k_band, sigma } => (*seed, *k_band, *sigma),
        InitialRecipe::Zero => (0, 0.4, None),
    };
    let mut cfg = config.clone();
    cfg.track_labels = false;
    cfg.initial = InitialRecipe::OneFamily { family: Family::Plus, seed, k_band, sigma };
    let traj = run(&cfg)?;
    let t = traj.t_end();
    let exact = translate(&traj.initial().z_plus, [0.0, 0.0, -t])?;
    let err = traj.last().state.z_plus.sub(&exact)?.max_abs();
    let pmax = traj.snapshots.iter().flat_map(|s| s.pressure.iter()).fold(0.0f64, |m, p| m.max(p.abs()));
    Ok(err.max(pmax))
}

fn divcurl_stability(config: &SimConfig) -> Result<f64> {
    let sigma = config.grid.length[2] / 16.0;
    let fine = divcurl_corpus(&config.grid, 100, &config.weight, 0.4, sigma)?;
    let coarse_grid = Grid3::new(config.grid.n.map(|n| n / 2), config.grid.length)?;
    let coarse = divcurl_corpus(&coarse_grid, 100, &config.weight, 0.4, sigma)?;
    Ok(relative_change(fine, coarse))
}

/// Runs every check for the plan's configuration.
pub fn verify_suite(config: &SimConfig) -> Vec<Check> {
    let mut cfg = config.clone();
    cfg.track_labels = true;
    let eps = cfg.epsilon;
    let omega = cfg.weight.omega();
    let base = run(&cfg).and_then(|t| chart_series(&t).map(|c| (t, c))).map_err(|e| e.to_string());
    let on_run = |f: &dyn Fn(&Trajectory, &[CharacteristicChart]) -> Result<f64>| -> Result<f64> {
        match &base {
            Ok((t, c)) => f(t, c),
            Err(e) => Err(Error::Config(format!("run failed: {e}"))),
        }
    };
    let linear = base.as_ref().map_err(Clone::clone).and_then(|(t, c)| {
        linear_energy_identity_check(t, c).map_err(|e| e.to_string())
    });
    let e0 = linear.as_ref().map(|l| l.energy.first().copied().unwrap_or(0.0)).unwrap_or(0.0);
    let separation = base.as_ref().map_err(Clone::clone).and_then(|(t, c)| {
        separation_report(t, c).map_err(|e| e.to_string())
    });
    let from = |r: std::result::Result<f64, &String>| r.map_err(|e| Error::Config(e.clone()));
    vec![
        Check::new("conservation", Bound::AtMost, 1e-6, on_run(&|t, _| Ok(drift(t)))),
        Check::new("traveling_wave", Bound::AtMost, 1e-8, traveling_wave(&cfg)),
        Check::new("divcurl_corpus", Bound::AtMost, 0.25, divcurl_stability(&cfg)),
        Check::new(
            "separation_weight",
            Bound::AtLeast,
            0.5 * cfg.weight.r,
            from(separation.as_ref().map(|r| r.min_weight_ratio)),
        ),
        Check::new(
            "separation_decay",
            Bound::AtMost,
            -0.75 * omega,
            // no overlap at all counts as infinitely fast decay
            from(separation.as_ref().map(|r| {
                if r.cross_amplitude.iter().all(|&a| a == 0.0) {
                    f64::NEG_INFINITY
                } else {
                    r.decay_slope
                }
            })),
        ),
        Check::new(
            "pressure_decay",
            Bound::AtMost,
            3.0,
            on_run(&|t, _| Ok(pressure_decay_report(t).final_over_initial(1))),
        ),
        Check::new("linear_energy", Bound::AtLeast, -1e-4 * e0, from(linear.as_ref().map(|l| l.slack))),
        Check::new(
            "transport_identity",
            Bound::AtMost,
            1e-4 * eps,
            on_run(&|t, _| Ok(transport_identity_check(t, Family::Plus, t.t_end())?.max_discrepancy)),
        ),
    ]
}

/// Initial data of the plan, for modes that need it directly.
pub fn plan_initial(config: &SimConfig) -> Result<alfven_core::ElsasserState> {
    initial_state(&config.initial, &config.grid, config.epsilon, &config.weight, config.k_max)
}
