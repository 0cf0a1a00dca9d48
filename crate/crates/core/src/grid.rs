//! Periodic grids and the two characteristic families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform triply periodic grid. Point `k` on axis `a` sits at `k·L_a/n_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub n: [usize; 3],
    pub length: [f64; 3],
}

impl Grid3 {
    pub fn new(n: [usize; 3], length: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if n[a] < 8 || n[a] % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "n{} = {} must be even and >= 8",
                    a + 1,
                    n[a]
                )));
            }
            if !(length[a] > 0.0) || !length[a].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "L{} = {} must be positive",
                    a + 1,
                    length[a]
                )));
            }
        }
        Ok(Self { n, length })
    }

    pub fn cube(n: usize, length: f64) -> Result<Self> {
        Self::new([n; 3], [length; 3])
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n[0], self.n[1], self.n[2])
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.length[0] / self.n[0] as f64,
            self.length[1] / self.n[1] as f64,
            self.length[2] / self.n[2] as f64,
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        let h = self.spacing();
        h[0].min(h[1]).min(h[2])
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h[0] * h[1] * h[2]
    }

    /// Coordinate `k·L/n` in `[0, L)`.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        k as f64 * self.length[axis] / self.n[axis] as f64
    }

    /// Coordinate of point `k` in the centered window `[-L/2, L/2)`.
    pub fn centered(&self, axis: usize, k: usize) -> f64 {
        let x = self.coord(axis, k);
        if 2 * k >= self.n[axis] {
            x - self.length[axis]
        } else {
            x
        }
    }

    pub fn centered_point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.centered(0, i), self.centered(1, j), self.centered(2, k)]
    }

    /// Flat index into a standard-layout array of this shape.
    #[inline]
    pub fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + k
    }

    /// Inverse of [`Grid3::flat`].
    #[inline]
    pub fn unflat(&self, idx: usize) -> (usize, usize, usize) {
        let k = idx % self.n[2];
        let ij = idx / self.n[2];
        (ij / self.n[1], ij % self.n[1], k)
    }

    /// Same physical box with every axis resolution multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            [self.n[0] * factor, self.n[1] * factor, self.n[2] * factor],
            self.length,
        )
    }

    /// Wrap-free horizon: counter-propagating packets stay apart for |T| <= L3/4.
    pub fn validity_window(&self) -> f64 {
        self.length[2] / 4.0
    }

    pub fn check_same(&self, other: &Grid3) -> Result<()> {
        if self.n != other.n || self.length != other.length {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self, other)));
        }
        Ok(())
    }
}

/// Characteristic family. `Plus` fields propagate along `-B0`, carried by `Z-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Plus,
    Minus,
}

impl Family {
    pub fn sign(self) -> f64 {
        match self {
            Family::Plus => 1.0,
            Family::Minus => -1.0,
        }
    }

    pub fn opposite(self) -> Family {
        match self {
            Family::Plus => Family::Minus,
            Family::Minus => Family::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Family::Plus => '+',
            Family::Minus => '-',
        }
    }
}
