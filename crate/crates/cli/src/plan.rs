//! Experiment plan files.
//!
//! A plan is a TOML file holding a `[plan]` table next to the simulation
//! sections understood by `alfven_core::config`:
//!
//! ```toml
//! [plan]
//! name = "desk"
//! mode = "verify"          # simulate | scatter | invert | verify | sweep
//! output = "runs/desk"     # optional
//! snapshots = "ends"       # simulate only: ends | all
//!
//! [grid]
//! n = [32, 32, 32]
//! length = [48.0, 48.0, 48.0]
//!
//! [time]
//! dt = 0.1
//! horizon = 5.0
//!
//! [physics]
//! epsilon = 0.05
//!
//! [initial]
//! recipe = "two-family"
//! seed = 7
//! k_band = 0.4
//!
//! [sweep]                  # sweep mode
//! epsilons = [0.02, 0.04, 0.08]
//! horizons = [6.0]
//! order = 1
//!
//! [invert]                 # invert mode
//! case = "a"
//! max_iterations = 5
//! tol = 1e-8
//! order = 1
//! ```

use std::path::{Path, PathBuf};

use alfven_core::config::{ConfigFile, DiagnosticsSection, GridSection, PhysicsSection, TimeSection};
use alfven_core::scattering::Case;
use alfven_core::{InitialRecipe, SimConfig, WeightParams};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Scatter,
    Invert,
    Verify,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Snapshots {
    #[default]
    Ends,
    All,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub name: String,
    pub mode: Mode,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub snapshots: Snapshots,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub horizons: Vec<f64>,
    #[serde(default = "one")]
    pub order: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertSection {
    #[serde(default = "case_a")]
    pub case: String,
    #[serde(default = "five")]
    pub max_iterations: usize,
    #[serde(default = "tiny")]
    pub tol: f64,
    #[serde(default = "one")]
    pub order: usize,
}

impl Default for InvertSection {
    fn default() -> Self {
        Self { case: case_a(), max_iterations: five(), tol: tiny(), order: one() }
    }
}

fn one() -> usize {
    1
}
fn five() -> usize {
    5
}
fn tiny() -> f64 {
    1e-8
}
fn case_a() -> String {
    "a".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    plan: PlanSection,
    grid: GridSection,
    time: TimeSection,
    physics: PhysicsSection,
    #[serde(default)]
    weight: Option<WeightParams>,
    initial: InitialRecipe,
    #[serde(default)]
    diagnostics: DiagnosticsSection,
    #[serde(default)]
    sweep: Option<SweepSection>,
    #[serde(default)]
    invert: Option<InvertSection>,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub name: String,
    pub mode: Mode,
    pub output: Option<PathBuf>,
    pub snapshots: Snapshots,
    pub config: SimConfig,
    pub sweep: Option<SweepSection>,
    pub invert: InvertSection,
    pub case: Case,
    /// The plan text as read, copied into the output directory.
    pub source: String,
}

impl Plan {
    pub fn seed(&self) -> Option<u64> {
        self.config.initial.seed()
    }

    pub fn parse(text: &str, seed: Option<u64>) -> Result<Self, String> {
        let file: PlanFile = toml::from_str(text).map_err(|e| e.to_string())?;
        let cfg = ConfigFile {
            grid: file.grid,
            time: file.time,
            physics: file.physics,
            weight: file.weight,
            initial: file.initial,
            diagnostics: file.diagnostics,
        };
        let mut config = cfg.into_config().map_err(|e| e.to_string())?;
        if let Some(s) = seed {
            config.initial = config.initial.with_seed(s);
        }
        config.validate().map_err(|e| e.to_string())?;
        if file.plan.name.is_empty() || file.plan.name.contains(['/', '\\']) {
            return Err("plan.name must be a non-empty file name".into());
        }
        let invert = file.invert.unwrap_or_default();
        let case = Case::parse(&invert.case).ok_or_else(|| format!("invert.case = {:?} must be a, b, c or d", invert.case))?;
        if file.plan.mode == Mode::Sweep {
            let sweep = file.sweep.as_ref().ok_or("sweep mode requires a [sweep] table with key `epsilons`")?;
            if sweep.epsilons.len() < 3 {
                return Err("sweep.epsilons needs at least 3 values".into());
            }
            if sweep.epsilons.iter().any(|&e| !(e > 0.0)) {
                return Err("sweep.epsilons must be positive".into());
            }
            for &h in &sweep.horizons {
                config.with_horizon(h.abs()).validate().map_err(|e| format!("sweep.horizons: {e}"))?;
            }
        }
        Ok(Self {
            name: file.plan.name,
            mode: file.plan.mode,
            output: file.plan.output,
            snapshots: file.plan.snapshots,
            config,
            sweep: file.sweep,
            invert,
            case,
            source: text.to_string(),
        })
    }

    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text, seed).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// `--out`, then `plan.output`, then `<env root>/<name>`, then `runs/<name>`.
    pub fn output_dir(&self, flag: Option<&Path>, env_root: Option<&Path>) -> PathBuf {
        if let Some(f) = flag {
            return f.to_path_buf();
        }
        if let Some(o) = &self.output {
            return o.clone();
        }
        env_root.map_or_else(|| PathBuf::from("runs"), Path::to_path_buf).join(&self.name)
    }
}
