//! Numerical laboratory for nonlinear Alfven waves in ideal incompressible MHD
//! with a strong background field.
//!
//! The crate integrates the Elsasser fluctuation system on a periodic box,
//! tracks the characteristic foliations generated by `Z± = z± ± B0`, measures
//! weighted energies and fluxes, and builds scattering fields on truncated
//! characteristic infinities together with the forward and inverse scattering
//! maps.

pub mod characteristics;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod initial;
pub mod interp;
pub mod io;
pub mod scattering;
pub mod solver;
pub mod spectral;
pub mod stats;
pub mod weight;

pub use config::SimConfig;
pub use error::{Error, Result};
pub use field::{ElsasserState, ScalarField, VectorField};
pub use grid::{Family, Grid3};
pub use initial::InitialRecipe;
pub use solver::{run, run_from, Trajectory};
pub use weight::{weight_of, WeightParams};
