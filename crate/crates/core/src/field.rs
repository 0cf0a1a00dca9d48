//! Vector fields on a periodic grid and the Elsasser state.

use ndarray::{Array3, Zip};

use crate::error::{Error, Result};
use crate::grid::{Family, Grid3};

/// Real scalar field on a [`Grid3`], standard (row-major) layout, x3 fastest.
pub type ScalarField = Array3<f64>;

pub fn zeros(grid: &Grid3) -> ScalarField {
    Array3::zeros(grid.shape())
}

/// Scalar field from a function of the centered coordinates.
pub fn scalar_from_fn(grid: &Grid3, f: impl Fn([f64; 3]) -> f64) -> ScalarField {
    Array3::from_shape_fn(grid.shape(), |(i, j, k)| f(grid.centered_point(i, j, k)))
}

/// Three real components sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid3,
    pub c: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(grid: &Grid3) -> Self {
        Self { grid: *grid, c: [zeros(grid), zeros(grid), zeros(grid)] }
    }

    pub fn from_components(grid: &Grid3, c: [ScalarField; 3]) -> Result<Self> {
        for comp in &c {
            if comp.dim() != grid.shape() {
                return Err(Error::GridMismatch(format!(
                    "component shape {:?} vs grid {:?}",
                    comp.dim(),
                    grid.shape()
                )));
            }
        }
        Ok(Self { grid: *grid, c })
    }

    /// Field from a function of the centered coordinates.
    pub fn from_fn(grid: &Grid3, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut v = Self::zeros(grid);
        for i in 0..grid.n[0] {
            for j in 0..grid.n[1] {
                for k in 0..grid.n[2] {
                    let val = f(grid.centered_point(i, j, k));
                    for a in 0..3 {
                        v.c[a][[i, j, k]] = val[a];
                    }
                }
            }
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|a| a.iter().all(|x| x.is_finite()))
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidField("non-finite values".into()))
        }
    }

    /// `∫|v|^2 dx` by the trapezoid (grid sum) rule.
    pub fn l2_sq(&self) -> f64 {
        let s: f64 = self.c.iter().map(|a| a.iter().map(|x| x * x).sum::<f64>()).sum();
        s * self.grid.cell_volume()
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    /// `max_x |v(x)|` with the Euclidean norm of the vector.
    pub fn max_norm(&self) -> f64 {
        let mut m = 0.0f64;
        Zip::from(&self.c[0]).and(&self.c[1]).and(&self.c[2]).for_each(|a, b, c| {
            m = m.max((a * a + b * b + c * c).sqrt());
        });
        m
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.c
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.c {
            a.mapv_inplace(|x| x * s);
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &VectorField) {
        for a in 0..3 {
            Zip::from(&mut self.c[a]).and(&other.c[a]).for_each(|x, y| *x += s * y);
        }
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.grid.check_same(&other.grid)?;
        let mut out = self.clone();
        out.axpy(-1.0, other);
        Ok(out)
    }

    /// Value at grid point `(i, j, k)`.
    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.c[0][[i, j, k]], self.c[1][[i, j, k]], self.c[2][[i, j, k]]]
    }

    /// Lattice translation: `out(x) = v(x - shift·h)`.
    pub fn shifted(&self, shift: [isize; 3]) -> VectorField {
        let g = self.grid;
        let mut out = VectorField::zeros(&g);
        for a in 0..3 {
            out.c[a] = shift_scalar(&g, &self.c[a], shift);
        }
        out
    }

    /// Mirror in x3 as a vector field: `out(x) = M v(Mx)`, `M = diag(1, 1, -1)`.
    pub fn reflected_x3(&self) -> VectorField {
        let g = self.grid;
        let mut out = VectorField::zeros(&g);
        for a in 0..3 {
            out.c[a] = reflect_scalar(&g, &self.c[a]);
        }
        out.c[2].mapv_inplace(|x| -x);
        out
    }
}

/// Lattice translation of a scalar field: `out(x) = f(x - shift·h)`.
pub fn shift_scalar(g: &Grid3, f: &ScalarField, shift: [isize; 3]) -> ScalarField {
    let n = g.n;
    Array3::from_shape_fn(g.shape(), |(i, j, k)| {
        let si = (i as isize - shift[0]).rem_euclid(n[0] as isize) as usize;
        let sj = (j as isize - shift[1]).rem_euclid(n[1] as isize) as usize;
        let sk = (k as isize - shift[2]).rem_euclid(n[2] as isize) as usize;
        f[[si, sj, sk]]
    })
}

/// `out(x1, x2, x3) = f(x1, x2, -x3)` on the lattice.
pub fn reflect_scalar(g: &Grid3, f: &ScalarField) -> ScalarField {
    let n3 = g.n[2];
    Array3::from_shape_fn(g.shape(), |(i, j, k)| f[[i, j, (n3 - k) % n3]])
}

/// The pair of fluctuation fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ElsasserState {
    pub t: f64,
    pub z_plus: VectorField,
    pub z_minus: VectorField,
    pub background: [f64; 3],
}

impl ElsasserState {
    pub fn new(t: f64, z_plus: VectorField, z_minus: VectorField) -> Result<Self> {
        z_plus.grid.check_same(&z_minus.grid)?;
        z_plus.ensure_finite()?;
        z_minus.ensure_finite()?;
        Ok(Self { t, z_plus, z_minus, background: [0.0, 0.0, 1.0] })
    }

    pub fn zero(grid: &Grid3) -> Self {
        Self {
            t: 0.0,
            z_plus: VectorField::zeros(grid),
            z_minus: VectorField::zeros(grid),
            background: [0.0, 0.0, 1.0],
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.z_plus.grid
    }

    pub fn field(&self, family: Family) -> &VectorField {
        match family {
            Family::Plus => &self.z_plus,
            Family::Minus => &self.z_minus,
        }
    }

    pub fn field_mut(&mut self, family: Family) -> &mut VectorField {
        match family {
            Family::Plus => &mut self.z_plus,
            Family::Minus => &mut self.z_minus,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            t: self.t,
            z_plus: self.z_plus.scaled(s),
            z_minus: self.z_minus.scaled(s),
            background: self.background,
        }
    }

    pub fn max_amplitude(&self) -> f64 {
        self.z_plus.max_norm().max(self.z_minus.max_norm())
    }

    pub fn is_zero(&self) -> bool {
        self.z_plus.max_abs() == 0.0 && self.z_minus.max_abs() == 0.0
    }
}
