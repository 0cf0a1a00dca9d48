//! Fourier calculus on the periodic grid.
//!
//! Spectra are full complex arrays with the same shape as the grid. Real
//! fields are transformed two at a time by packing them into one complex
//! array. Derivative symbols zero the Nyquist wavenumber so that odd
//! derivatives of real fields stay real.

use std::sync::Arc;

use ndarray::{Array3, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid3;

pub type Spectrum = Array3<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// FFT plans, wavenumbers and the 2/3 truncation mask for one grid.
pub struct Spectral {
    grid: Grid3,
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    wavenumber: [Vec<f64>; 3],
    keep: [Vec<bool>; 3],
    dealias: bool,
}

impl Spectral {
    pub fn new(grid: &Grid3, dealias: bool) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = [
            planner.plan_fft_forward(grid.n[0]),
            planner.plan_fft_forward(grid.n[1]),
            planner.plan_fft_forward(grid.n[2]),
        ];
        let inv = [
            planner.plan_fft_inverse(grid.n[0]),
            planner.plan_fft_inverse(grid.n[1]),
            planner.plan_fft_inverse(grid.n[2]),
        ];
        let wavenumber = [0, 1, 2].map(|a| {
            let n = grid.n[a];
            (0..n)
                .map(|k| {
                    let m = signed_index(k, n);
                    if 2 * k == n {
                        0.0
                    } else {
                        2.0 * std::f64::consts::PI * m as f64 / grid.length[a]
                    }
                })
                .collect::<Vec<_>>()
        });
        let keep = [0, 1, 2].map(|a| {
            let n = grid.n[a];
            (0..n).map(|k| 3 * signed_index(k, n).unsigned_abs() < n as u64).collect::<Vec<_>>()
        });
        Self { grid: *grid, fwd, inv, wavenumber, keep, dealias }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    /// Angular wavenumber used by derivative symbols (Nyquist zeroed).
    pub fn wavenumber(&self, axis: usize) -> &[f64] {
        &self.wavenumber[axis]
    }

    pub fn kept(&self, i: usize, j: usize, k: usize) -> bool {
        self.keep[0][i] && self.keep[1][j] && self.keep[2][k]
    }

    fn transform(&self, data: &mut Spectrum, inverse: bool) {
        let (n0, n1, n2) = self.grid.shape();
        let plans = if inverse { &self.inv } else { &self.fwd };
        let slice = data.as_slice_mut().expect("standard layout");
        let scratch_len = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let mut scratch = vec![Complex64::default(); scratch_len];

        plans[2].process_with_scratch(slice, &mut scratch);

        let mut buf = vec![Complex64::default(); n1 * n2];
        for slab in slice.chunks_exact_mut(n1 * n2) {
            for j in 0..n1 {
                for k in 0..n2 {
                    buf[k * n1 + j] = slab[j * n2 + k];
                }
            }
            plans[1].process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n1 {
                for k in 0..n2 {
                    slab[j * n2 + k] = buf[k * n1 + j];
                }
            }
        }

        let n12 = n1 * n2;
        let mut col = vec![Complex64::default(); n0 * n12];
        for i in 0..n0 {
            for m in 0..n12 {
                col[m * n0 + i] = slice[i * n12 + m];
            }
        }
        plans[0].process_with_scratch(&mut col, &mut scratch);
        let norm = if inverse { 1.0 / self.grid.len() as f64 } else { 1.0 };
        for i in 0..n0 {
            for m in 0..n12 {
                slice[i * n12 + m] = col[m * n0 + i] * norm;
            }
        }
    }

    pub fn forward(&self, f: &ScalarField) -> Spectrum {
        let mut s = f.mapv(|x| Complex64::new(x, 0.0));
        self.transform(&mut s, false);
        s
    }

    /// Spectra of two real fields from one complex transform.
    pub fn forward_pair(&self, a: &ScalarField, b: &ScalarField) -> (Spectrum, Spectrum) {
        let mut c = Zip::from(a).and(b).map_collect(|&x, &y| Complex64::new(x, y));
        self.transform(&mut c, false);
        let (n0, n1, n2) = self.grid.shape();
        let mut sa = Spectrum::zeros(self.grid.shape());
        let mut sb = Spectrum::zeros(self.grid.shape());
        {
            let cs = c.as_slice().unwrap();
            let xa = sa.as_slice_mut().unwrap();
            let xb = sb.as_slice_mut().unwrap();
            for i in 0..n0 {
                let ni = (n0 - i) % n0;
                for j in 0..n1 {
                    let nj = (n1 - j) % n1;
                    for k in 0..n2 {
                        let nk = (n2 - k) % n2;
                        let p = (i * n1 + j) * n2 + k;
                        let q = (ni * n1 + nj) * n2 + nk;
                        let cp = cs[p];
                        let cq = cs[q].conj();
                        xa[p] = (cp + cq) * 0.5;
                        xb[p] = (cp - cq) * Complex64::new(0.0, -0.5);
                    }
                }
            }
        }
        (sa, sb)
    }

    /// Real part of the inverse transform.
    pub fn inverse(&self, s: &Spectrum) -> ScalarField {
        let mut c = s.clone();
        self.transform(&mut c, true);
        c.mapv(|z| z.re)
    }

    /// Inverse of two Hermitian spectra from one complex transform.
    pub fn inverse_pair(&self, a: &Spectrum, b: &Spectrum) -> (ScalarField, ScalarField) {
        let mut c = Zip::from(a).and(b).map_collect(|&x, &y| x + I * y);
        self.transform(&mut c, true);
        (c.mapv(|z| z.re), c.mapv(|z| z.im))
    }

    pub fn forward_many(&self, fields: &[&ScalarField]) -> Vec<Spectrum> {
        let mut out = Vec::with_capacity(fields.len());
        for pair in fields.chunks(2) {
            if pair.len() == 2 {
                let (a, b) = self.forward_pair(pair[0], pair[1]);
                out.push(a);
                out.push(b);
            } else {
                out.push(self.forward(pair[0]));
            }
        }
        out
    }

    pub fn inverse_many(&self, specs: &[&Spectrum]) -> Vec<ScalarField> {
        let mut out = Vec::with_capacity(specs.len());
        for pair in specs.chunks(2) {
            if pair.len() == 2 {
                let (a, b) = self.inverse_pair(pair[0], pair[1]);
                out.push(a);
                out.push(b);
            } else {
                out.push(self.inverse(pair[0]));
            }
        }
        out
    }

    pub fn forward_vector(&self, v: &VectorField) -> [Spectrum; 3] {
        let mut s = self.forward_many(&[&v.c[0], &v.c[1], &v.c[2]]).into_iter();
        [s.next().unwrap(), s.next().unwrap(), s.next().unwrap()]
    }

    pub fn inverse_vector(&self, s: &[Spectrum; 3]) -> VectorField {
        let mut f = self.inverse_many(&[&s[0], &s[1], &s[2]]).into_iter();
        VectorField {
            grid: self.grid,
            c: [f.next().unwrap(), f.next().unwrap(), f.next().unwrap()],
        }
    }

    fn map_modes(&self, s: &mut Spectrum, f: impl Fn(usize, usize, usize, Complex64) -> Complex64) {
        let (n0, n1, n2) = self.grid.shape();
        let x = s.as_slice_mut().unwrap();
        for i in 0..n0 {
            for j in 0..n1 {
                let base = (i * n1 + j) * n2;
                for k in 0..n2 {
                    x[base + k] = f(i, j, k, x[base + k]);
                }
            }
        }
    }

    /// Spectrum of `∂_axis f`.
    pub fn deriv(&self, s: &Spectrum, axis: usize) -> Spectrum {
        let mut out = s.clone();
        let kx = &self.wavenumber[axis];
        self.map_modes(&mut out, |i, j, k, z| {
            let idx = [i, j, k][axis];
            z * Complex64::new(0.0, kx[idx])
        });
        out
    }

    /// Spectrum of `∂1^α1 ∂2^α2 ∂3^α3 f`.
    pub fn deriv_multi(&self, s: &Spectrum, alpha: [usize; 3]) -> Spectrum {
        let mut out = s.clone();
        let k = &self.wavenumber;
        self.map_modes(&mut out, |i, j, l, z| {
            let mut sym = Complex64::new(1.0, 0.0);
            for (a, idx) in [i, j, l].into_iter().enumerate() {
                for _ in 0..alpha[a] {
                    sym *= Complex64::new(0.0, k[a][idx]);
                }
            }
            z * sym
        });
        out
    }

    /// Spectrum of `f(x - shift)`; the Nyquist modes are left unchanged.
    pub fn translate(&self, s: &Spectrum, shift: [f64; 3]) -> Spectrum {
        let mut out = s.clone();
        let k = &self.wavenumber;
        self.map_modes(&mut out, |i, j, l, z| {
            let phase = -(k[0][i] * shift[0] + k[1][j] * shift[1] + k[2][l] * shift[2]);
            z * Complex64::from_polar(1.0, phase)
        });
        out
    }

    #[inline]
    pub fn k2(&self, i: usize, j: usize, k: usize) -> f64 {
        let w = &self.wavenumber;
        w[0][i] * w[0][i] + w[1][j] * w[1][j] + w[2][k] * w[2][k]
    }

    /// Zero the modes outside the 2/3 box when dealiasing is on.
    pub fn truncate(&self, s: &mut Spectrum) {
        if !self.dealias {
            return;
        }
        let keep = &self.keep;
        self.map_modes(s, |i, j, k, z| {
            if keep[0][i] && keep[1][j] && keep[2][k] {
                z
            } else {
                Complex64::default()
            }
        });
    }

    /// Always applies the 2/3 mask regardless of the dealias flag.
    pub fn truncate_always(&self, s: &mut Spectrum) {
        let keep = &self.keep;
        self.map_modes(s, |i, j, k, z| {
            if keep[0][i] && keep[1][j] && keep[2][k] {
                z
            } else {
                Complex64::default()
            }
        });
    }

    /// `ŝ / |k|^2`, zero mean: inverts `-Δ`.
    pub fn inverse_neg_laplacian(&self, s: &mut Spectrum) {
        self.map_modes(s, |i, j, k, z| {
            let k2 = self.k2(i, j, k);
            if k2 > 0.0 {
                z / k2
            } else {
                Complex64::default()
            }
        });
    }

    /// Remove the gradient part of a spectral vector field.
    pub fn leray(&self, v: &mut [Spectrum; 3]) {
        let (n0, n1, n2) = self.grid.shape();
        let w = &self.wavenumber;
        let [a, b, c] = v;
        let xa = a.as_slice_mut().unwrap();
        let xb = b.as_slice_mut().unwrap();
        let xc = c.as_slice_mut().unwrap();
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    let kk = [w[0][i], w[1][j], w[2][k]];
                    let k2 = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
                    if k2 == 0.0 {
                        continue;
                    }
                    let p = (i * n1 + j) * n2 + k;
                    let dot = (xa[p] * kk[0] + xb[p] * kk[1] + xc[p] * kk[2]) / k2;
                    xa[p] -= dot * kk[0];
                    xb[p] -= dot * kk[1];
                    xc[p] -= dot * kk[2];
                }
            }
        }
    }

    /// Physical-space partial derivatives `∂_a v^b` for a spectral vector field,
    /// returned as `g[a][b]`.
    pub fn gradient_tensor(&self, v: &[Spectrum; 3]) -> [[ScalarField; 3]; 3] {
        let mut specs = Vec::with_capacity(9);
        for a in 0..3 {
            for b in 0..3 {
                specs.push(self.deriv(&v[b], a));
            }
        }
        let refs: Vec<&Spectrum> = specs.iter().collect();
        let mut f = self.inverse_many(&refs).into_iter();
        let mut next = || f.next().unwrap();
        [
            [next(), next(), next()],
            [next(), next(), next()],
            [next(), next(), next()],
        ]
    }
}

fn signed_index(k: usize, n: usize) -> i64 {
    if 2 * k <= n {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Signed Fourier index of array position `k` on an axis of length `n`.
pub fn mode_index(k: usize, n: usize) -> i64 {
    signed_index(k, n)
}

fn checked(v: &VectorField) -> Result<Spectral> {
    v.ensure_finite()?;
    Ok(Spectral::new(&v.grid, false))
}

/// `ε_ijk ∂_i v^j e_k`.
pub fn curl(v: &VectorField) -> Result<VectorField> {
    let sp = checked(v)?;
    let s = sp.forward_vector(v);
    Ok(sp.inverse_vector(&curl_spectral(&sp, &s)))
}

pub fn curl_spectral(sp: &Spectral, s: &[Spectrum; 3]) -> [Spectrum; 3] {
    let d = |a: usize, b: usize| sp.deriv(&s[b], a);
    [d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)]
}

/// `∂_i v^i`.
pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    let sp = checked(v)?;
    let s = sp.forward_vector(v);
    Ok(sp.inverse(&(sp.deriv(&s[0], 0) + sp.deriv(&s[1], 1) + sp.deriv(&s[2], 2))))
}

/// `v - ∇Δ^{-1} div v`.
pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    let sp = checked(v)?;
    let mut s = sp.forward_vector(v);
    sp.leray(&mut s);
    Ok(sp.inverse_vector(&s))
}

/// `v(x - shift)` by spectral phase shift (exact for resolved modes).
pub fn translate(v: &VectorField, shift: [f64; 3]) -> Result<VectorField> {
    let sp = checked(v)?;
    let s = sp.forward_vector(v);
    Ok(sp.inverse_vector(&s.each_ref().map(|c| sp.translate(c, shift))))
}

pub fn gradient(f: &ScalarField, grid: &Grid3) -> Result<VectorField> {
    if !f.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidField("non-finite values".into()));
    }
    let sp = Spectral::new(grid, false);
    let s = sp.forward(f);
    let g = [sp.deriv(&s, 0), sp.deriv(&s, 1), sp.deriv(&s, 2)];
    Ok(sp.inverse_vector(&g))
}

/// All multi-indices `α` with `|α| = k`, in lexicographic order.
pub fn multi_indices(k: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in (0..=k).rev() {
        for b in (0..=k - a).rev() {
            out.push([a, b, k - a - b]);
        }
    }
    out
}
