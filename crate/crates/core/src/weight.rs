//! Space-time weights `<u> = (R^2 + u^2)^{1/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    #[serde(rename = "r")]
    pub r: f64,
    pub delta: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self { r: 100.0, delta: 0.1 }
    }
}

impl WeightParams {
    pub fn new(r: f64, delta: f64) -> Result<Self> {
        let p = Self { r, delta };
        p.validate()?;
        Ok(p)
    }

    /// Desk-scale parameters used by the default experiments.
    pub fn desk() -> Self {
        Self { r: 1.0, delta: 0.1 }
    }

    pub fn omega(&self) -> f64 {
        1.0 + self.delta
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::Config(format!("weight.r = {} must be positive", self.r)));
        }
        if !(self.delta > 0.0 && self.delta < 2.0 / 3.0) {
            return Err(Error::Config(format!(
                "weight.delta = {} must lie in (0, 2/3)",
                self.delta
            )));
        }
        Ok(())
    }
}

/// `(R^2 + u^2)^{1/2}`.
#[inline]
pub fn weight_of(u: f64, params: &WeightParams) -> f64 {
    params.r.hypot(u)
}
