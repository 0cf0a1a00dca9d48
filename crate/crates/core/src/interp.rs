//! Point evaluation of grid fields: periodic Catmull-Rom tricubic stencils and
//! exact trigonometric interpolation for small probe sets.

use crate::field::ScalarField;
use crate::grid::Grid3;

/// Catmull-Rom weights and wrapped indices for one query point.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub idx: [[usize; 4]; 3],
    pub w: [[f64; 4]; 3],
}

#[inline]
pub(crate) fn cr_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

impl Stencil {
    /// Stencil for a point given in any unwrapped coordinates.
    #[inline]
    pub fn new(grid: &Grid3, x: [f64; 3]) -> Self {
        let mut idx = [[0usize; 4]; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..3 {
            let n = grid.n[a] as i64;
            let s = x[a] * grid.n[a] as f64 / grid.length[a];
            let base = s.floor();
            let t = s - base;
            let b = base as i64;
            for m in 0..4 {
                idx[a][m] = (b - 1 + m as i64).rem_euclid(n) as usize;
            }
            w[a] = cr_weights(t);
        }
        Self { idx, w }
    }

    /// Interpolated value of a standard-layout field.
    #[inline]
    pub fn apply(&self, f: &[f64], grid: &Grid3) -> f64 {
        let n1 = grid.n[1];
        let n2 = grid.n[2];
        let mut acc = 0.0;
        for (p, &i) in self.idx[0].iter().enumerate() {
            let mut acc_j = 0.0;
            for (q, &j) in self.idx[1].iter().enumerate() {
                let row = (i * n1 + j) * n2;
                let mut acc_k = 0.0;
                for (r, &k) in self.idx[2].iter().enumerate() {
                    acc_k += self.w[2][r] * f[row + k];
                }
                acc_j += self.w[1][q] * acc_k;
            }
            acc += self.w[0][p] * acc_j;
        }
        acc
    }
}

/// Tricubic sample of several fields at one point.
pub fn sample_many<const M: usize>(grid: &Grid3, fields: [&ScalarField; M], x: [f64; 3]) -> [f64; M] {
    let st = Stencil::new(grid, x);
    fields.map(|f| st.apply(f.as_slice().expect("standard layout"), grid))
}

/// Exact band-limited interpolation: separable trigonometric weights.
///
/// Costs `O(N^3)` per point, so it is reserved for small probe sets.
#[derive(Debug, Clone)]
pub struct TrigProbe {
    w: [Vec<f64>; 3],
}

fn trig_weights(n: usize, length: f64, x: f64) -> Vec<f64> {
    let h = length / n as f64;
    let half = n / 2;
    (0..n)
        .map(|j| {
            let d = 2.0 * std::f64::consts::PI * (x - j as f64 * h) / length;
            let mut s = 1.0 + (half as f64 * d).cos();
            for m in 1..half {
                s += 2.0 * (m as f64 * d).cos();
            }
            s / n as f64
        })
        .collect()
}

impl TrigProbe {
    pub fn new(grid: &Grid3, x: [f64; 3]) -> Self {
        Self { w: [0, 1, 2].map(|a| trig_weights(grid.n[a], grid.length[a], x[a])) }
    }

    pub fn apply(&self, f: &ScalarField) -> f64 {
        self.apply_flat(f.as_slice().expect("standard layout"))
    }

    /// Same as [`TrigProbe::apply`] on a row-major flat array of the grid.
    pub fn apply_flat(&self, s: &[f64]) -> f64 {
        let (n0, n1, n2) = (self.w[0].len(), self.w[1].len(), self.w[2].len());
        debug_assert_eq!(s.len(), n0 * n1 * n2);
        let mut acc = 0.0;
        for i in 0..n0 {
            let wi = self.w[0][i];
            let mut acc_j = 0.0;
            for j in 0..n1 {
                let row = &s[(i * n1 + j) * n2..(i * n1 + j + 1) * n2];
                let mut acc_k = 0.0;
                for k in 0..n2 {
                    acc_k += self.w[2][k] * row[k];
                }
                acc_j += self.w[1][j] * acc_k;
            }
            acc += wi * acc_j;
        }
        acc
    }
}
