//! Small regression helpers for scaling studies.

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// `max/min - 1` over positive values; 0 for an empty or all-zero list.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    if values.is_empty() || max == 0.0 {
        return 0.0;
    }
    max / min - 1.0
}

/// Largest deviation of any value from the mean, relative to the mean.
pub fn deviation_from_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    values.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max)
}

/// `|a/b - 1|`, treating two zeros as equal.
pub fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a / b - 1.0).abs()
}

/// A constant fitted from data, with a flag for refinement stability.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedConstant {
    pub name: String,
    pub value: f64,
    /// Value on the refined run, when one was made.
    pub refined: Option<f64>,
}

impl FittedConstant {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, refined: None }
    }

    pub fn with_refined(mut self, refined: f64) -> Self {
        self.refined = Some(refined);
        self
    }

    /// Stable within ±25% under refinement (unknown counts as unresolved).
    pub fn resolved(&self) -> bool {
        match self.refined {
            Some(r) => relative_change(r, self.value) <= 0.25,
            None => false,
        }
    }
}
