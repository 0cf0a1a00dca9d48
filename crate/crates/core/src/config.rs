//! Simulation configuration and its TOML representation.
//!
//! ```toml
//! [grid]
//! n = [32, 32, 32]
//! length = [48.0, 48.0, 48.0]
//!
//! [time]
//! dt = 0.1
//! horizon = 5.0          # negative for backward runs
//! output_stride = 1      # steps between stored snapshots
//! cfl = 0.5
//!
//! [physics]
//! epsilon = 0.05
//! dealias = true
//!
//! [weight]
//! r = 1.0
//! delta = 0.1
//!
//! [initial]
//! recipe = "two-family"  # zero | two-family | one-family | symmetric
//! seed = 7
//! k_band = 0.4
//!
//! [diagnostics]
//! k_max = 3
//! track_labels = true
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::initial::InitialRecipe;
use crate::weight::WeightParams;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid3,
    pub dt: f64,
    /// Truncation horizon; negative values integrate backward in time.
    pub horizon: f64,
    pub epsilon: f64,
    pub weight: WeightParams,
    pub initial: InitialRecipe,
    pub dealias: bool,
    pub output_stride: usize,
    pub cfl: f64,
    pub k_max: usize,
    /// Evolve the characteristic label fields alongside the solution.
    pub track_labels: bool,
}

impl SimConfig {
    /// Desk defaults: cube of side 48, R = 1, δ = 0.1, dt = 0.1.
    pub fn desk(n: usize, epsilon: f64, horizon: f64, initial: InitialRecipe) -> Self {
        Self {
            grid: Grid3 { n: [n; 3], length: [48.0; 3] },
            dt: 0.1f64.copysign(horizon),
            horizon,
            epsilon,
            weight: WeightParams::desk(),
            initial,
            dealias: true,
            output_stride: 1,
            cfl: 0.5,
            k_max: 3,
            track_labels: false,
        }
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        Grid3::new(self.grid.n, self.grid.length)?;
        self.weight.validate()?;
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::Config(format!("time.cfl = {} must lie in (0, 0.5]", self.cfl)));
        }
        if self.dt == 0.0 || !self.dt.is_finite() {
            return Err(Error::Config("time.dt must be nonzero".into()));
        }
        if self.horizon != 0.0 && self.horizon.signum() != self.dt.signum() {
            return Err(Error::Config("time.dt and time.horizon must share a sign".into()));
        }
        let ratio = self.horizon / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(Error::Config(format!(
                "time.horizon = {} is not a multiple of time.dt = {}",
                self.horizon, self.dt
            )));
        }
        if self.horizon.abs() > self.grid.validity_window() + 1e-12 {
            return Err(Error::ValidityWindow {
                horizon: self.horizon.abs(),
                window: self.grid.validity_window(),
            });
        }
        if self.output_stride == 0 {
            return Err(Error::Config("time.output_stride must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config("physics.epsilon must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        let mut c = self.clone();
        c.dt = self.dt.abs().copysign(horizon);
        c.horizon = horizon;
        c
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut c = self.clone();
        c.epsilon = epsilon;
        c
    }

    pub fn with_grid_n(&self, n: [usize; 3]) -> Self {
        let mut c = self.clone();
        c.grid.n = n;
        c
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = file.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ConfigFile::from_config(self)).expect("config serializes")
    }
}

/// On-disk layout of [`SimConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSection,
    pub time: TimeSection,
    pub physics: PhysicsSection,
    #[serde(default)]
    pub weight: Option<WeightParams>,
    pub initial: InitialRecipe,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: [usize; 3],
    pub length: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "one")]
    pub output_stride: usize,
    #[serde(default = "half")]
    pub cfl: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub epsilon: f64,
    #[serde(default = "yes")]
    pub dealias: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "three")]
    pub k_max: usize,
    #[serde(default)]
    pub track_labels: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { k_max: 3, track_labels: false }
    }
}

fn one() -> usize {
    1
}
fn three() -> usize {
    3
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}

impl ConfigFile {
    pub fn into_config(self) -> Result<SimConfig> {
        let grid = Grid3::new(self.grid.n, self.grid.length)?;
        Ok(SimConfig {
            grid,
            dt: self.time.dt,
            horizon: self.time.horizon,
            epsilon: self.physics.epsilon,
            weight: self.weight.unwrap_or_else(WeightParams::desk),
            initial: self.initial,
            dealias: self.physics.dealias,
            output_stride: self.time.output_stride,
            cfl: self.time.cfl,
            k_max: self.diagnostics.k_max,
            track_labels: self.diagnostics.track_labels,
        })
    }

    pub fn from_config(c: &SimConfig) -> Self {
        Self {
            grid: GridSection { n: c.grid.n, length: c.grid.length },
            time: TimeSection { dt: c.dt, horizon: c.horizon, output_stride: c.output_stride, cfl: c.cfl },
            physics: PhysicsSection { epsilon: c.epsilon, dealias: c.dealias },
            weight: Some(c.weight),
            initial: c.initial.clone(),
            diagnostics: DiagnosticsSection { k_max: c.k_max, track_labels: c.track_labels },
        }
    }
}
