//! Newtonian-potential evaluation of pressure derivatives.
//!
//! `∇^l p` is split into a near part `A_l`, integrating the source against
//! `∇(1/|x-x'|)` inside the cutoff `θ`, and a far part `B_l` where the
//! derivatives have been moved onto the kernel `∇^l(1/|x-x'|)(1-θ)`. Both are
//! summed directly over the grid as a free-space convolution. The singular
//! point `x' = x` is omitted, and the linear Taylor part of the near source is
//! integrated exactly instead of on the lattice.

use std::f64::consts::PI;

use ndarray::Zip;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid3;
use crate::spectral::Spectral;

/// Smooth monotone bridge between `θ = 1` (r <= 1) and `θ = 0` (r >= 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    /// `h(2-r) / (h(2-r) + h(r-1))` with `h(x) = exp(-1/x)`; C∞.
    Exponential,
    /// `1 - (6x^5 - 15x^4 + 10x^3)`, `x = r - 1`; C².
    Quintic,
}

impl Cutoff {
    /// `(θ, θ', θ'')` at radius `r`.
    pub fn eval(self, r: f64) -> (f64, f64, f64) {
        if r <= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        if r >= 2.0 {
            return (0.0, 0.0, 0.0);
        }
        match self {
            Cutoff::Quintic => {
                let x = r - 1.0;
                let s = x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
                let d1 = 30.0 * x * x * (x - 1.0) * (x - 1.0);
                let d2 = 60.0 * x * (2.0 * x - 1.0) * (x - 1.0);
                (1.0 - s, -d1, -d2)
            }
            Cutoff::Exponential => {
                let h = |x: f64| (-1.0 / x).exp();
                let h1 = |x: f64| h(x) / (x * x);
                let h2 = |x: f64| h(x) * (1.0 / x.powi(4) - 2.0 / x.powi(3));
                let (u, v) = (2.0 - r, r - 1.0);
                let a = h(u);
                let a1 = -h1(u);
                let a2 = h2(u);
                let b = h(v);
                let b1 = h1(v);
                let b2 = h2(v);
                let s = a + b;
                let s1 = a1 + b1;
                let s2 = a2 + b2;
                let th = a / s;
                let num1 = a1 * s - a * s1;
                let th1 = num1 / (s * s);
                let th2 = (a2 * s - a * s2) / (s * s) - 2.0 * s1 * num1 / (s * s * s);
                (th, th1, th2)
            }
        }
    }
}

/// Ratio of the largest value on the outermost grid planes to the peak value.
pub fn localization_ratio(v: &VectorField) -> f64 {
    let g = v.grid;
    let peak = v.max_norm();
    if peak == 0.0 {
        return 0.0;
    }
    let mut edge = 0.0f64;
    for i in 0..g.n[0] {
        for j in 0..g.n[1] {
            for k in 0..g.n[2] {
                let on_face = [i, j, k]
                    .iter()
                    .zip(g.n.iter())
                    .any(|(&m, &n)| m == n / 2 || m == n / 2 - 1);
                if on_face {
                    let x = v.at(i, j, k);
                    edge = edge.max((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
                }
            }
        }
    }
    edge / peak
}

const MAX_ORACLE_POINTS: usize = 32 * 32 * 32;
const LOCALIZATION_TOLERANCE: f64 = 1e-6;

struct Kernel {
    d1: [f64; 3],
    d2: [[f64; 3]; 3],
    d3: [[[f64; 3]; 3]; 3],
    th: f64,
    t1: [f64; 3],
    t2: [[f64; 3]; 3],
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Derivatives of `1/|r|` up to third order and of `θ(|r|)` up to second.
fn kernel(r: [f64; 3], cutoff: Cutoff) -> Kernel {
    let s2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let s = s2.sqrt();
    let inv3 = 1.0 / (s2 * s);
    let inv5 = inv3 / s2;
    let inv7 = inv5 / s2;
    let (th, th1, th2) = cutoff.eval(s);
    let n = [r[0] / s, r[1] / s, r[2] / s];
    let mut k = Kernel {
        d1: [0.0; 3],
        d2: [[0.0; 3]; 3],
        d3: [[[0.0; 3]; 3]; 3],
        th,
        t1: [0.0; 3],
        t2: [[0.0; 3]; 3],
    };
    for a in 0..3 {
        k.d1[a] = -r[a] * inv3;
        k.t1[a] = th1 * n[a];
        for b in 0..3 {
            k.d2[a][b] = 3.0 * r[a] * r[b] * inv5 - delta(a, b) * inv3;
            k.t2[a][b] = th2 * n[a] * n[b] + th1 * (delta(a, b) - n[a] * n[b]) / s;
            for c in 0..3 {
                k.d3[a][b][c] = -15.0 * r[a] * r[b] * r[c] * inv7
                    + 3.0 * (delta(a, b) * r[c] + delta(a, c) * r[b] + delta(b, c) * r[a]) * inv5;
            }
        }
    }
    k
}

/// `Σ θ(|r|) r_a r_b / |r|^3` over all nonzero lattice offsets, whether or
/// not they fall inside the box.
fn lattice_moment(grid: &Grid3, cutoff: Cutoff) -> [[f64; 3]; 3] {
    let h = grid.spacing();
    let reach = h.map(|d| (2.0 / d).ceil() as i64);
    let mut m = [[0.0; 3]; 3];
    for i in -reach[0]..=reach[0] {
        for j in -reach[1]..=reach[1] {
            for k in -reach[2]..=reach[2] {
                let r = [i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]];
                let s = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
                if s == 0.0 || s >= 2.0 {
                    continue;
                }
                let w = cutoff.eval(s).0 / (s * s * s);
                for a in 0..3 {
                    for b in 0..3 {
                        m[a][b] += w * r[a] * r[b];
                    }
                }
            }
        }
    }
    m
}

/// `∫_0^∞ θ(s) s ds`.
fn cutoff_moment(cutoff: Cutoff) -> f64 {
    let n = 2000;
    let h = 1.0 / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let s = 1.0 + i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * cutoff.eval(s).0 * s;
    }
    0.5 + sum * h / 3.0
}

struct Sources {
    /// `f = ∂i z-^j ∂j z+^i`
    f: Vec<f64>,
    /// `∂b f`
    df: [Vec<f64>; 3],
    /// `∂b ∂c f`
    ddf: [[Vec<f64>; 3]; 3],
    /// `∂b ∂c ∂e f`, only filled for third derivatives
    dddf: Vec<Vec<f64>>,
    /// `g^{ij} = z-^j z+^i`
    g: [[Vec<f64>; 3]; 3],
    /// `h^j = ∂i z-^j z+^i`
    h: [Vec<f64>; 3],
}

fn flat(a: ScalarField) -> Vec<f64> {
    a.into_raw_vec()
}

fn source_terms(zp: &VectorField, zm: &VectorField) -> ScalarField {
    let sp = Spectral::new(&zp.grid, false);
    let gp = sp.gradient_tensor(&sp.forward_vector(zp));
    let gm = sp.gradient_tensor(&sp.forward_vector(zm));
    let mut f = ScalarField::zeros(zp.grid.shape());
    for i in 0..3 {
        for j in 0..3 {
            Zip::from(&mut f).and(&gm[i][j]).and(&gp[j][i]).for_each(|s, a, b| *s += a * b);
        }
    }
    f
}

fn sources(zp: &VectorField, zm: &VectorField, l: usize) -> Sources {
    let grid = zp.grid;
    let sp = Spectral::new(&grid, false);
    let f = source_terms(zp, zm);
    let fh = sp.forward(&f);
    let df = [0, 1, 2].map(|b| flat(sp.inverse(&sp.deriv(&fh, b))));
    let ddf = [0, 1, 2].map(|b| [0, 1, 2].map(|c| flat(sp.inverse(&sp.deriv(&sp.deriv(&fh, b), c)))));
    let dddf = if l == 3 {
        (0..27)
            .map(|idx| {
                let (b, c, e) = (idx / 9, (idx / 3) % 3, idx % 3);
                flat(sp.inverse(&sp.deriv(&sp.deriv(&sp.deriv(&fh, b), c), e)))
            })
            .collect()
    } else {
        Vec::new()
    };
    let g = [0, 1, 2].map(|i| {
        [0, 1, 2].map(|j| {
            let mut x = zm.c[j].clone();
            Zip::from(&mut x).and(&zp.c[i]).for_each(|a, b| *a *= b);
            flat(x)
        })
    });
    let gm = sp.gradient_tensor(&sp.forward_vector(zm));
    let h = [0, 1, 2].map(|j| {
        let mut x = ScalarField::zeros(grid.shape());
        for i in 0..3 {
            Zip::from(&mut x).and(&gm[i][j]).and(&zp.c[i]).for_each(|acc, a, b| *acc += a * b);
        }
        flat(x)
    });
    Sources { f: flat(f), df, ddf, dddf, g, h }
}

/// `∇^l p` at grid points by the near/far kernel split with the exponential bridge.
pub fn pressure_newtonian_oracle(
    z_plus: &VectorField,
    z_minus: &VectorField,
    l: usize,
    points: &[[usize; 3]],
) -> Result<Vec<Vec<f64>>> {
    pressure_newtonian_oracle_with(z_plus, z_minus, l, points, Cutoff::Exponential)
}

/// As [`pressure_newtonian_oracle`] with an explicit bridge. Tensors are
/// flattened with the first index slowest, length `3^l`.
pub fn pressure_newtonian_oracle_with(
    z_plus: &VectorField,
    z_minus: &VectorField,
    l: usize,
    points: &[[usize; 3]],
    cutoff: Cutoff,
) -> Result<Vec<Vec<f64>>> {
    check_inputs(z_plus, z_minus, l)?;
    let grid = z_plus.grid;
    let size = 3usize.pow(l as u32);
    if z_minus.max_abs() == 0.0 || z_plus.max_abs() == 0.0 {
        return Ok(vec![vec![0.0; size]; points.len()]);
    }
    let src = sources(z_plus, z_minus, l);
    let bridge_moment = cutoff_moment(cutoff);
    let moment = lattice_moment(&grid, cutoff);
    let coords: Vec<[f64; 3]> = (0..grid.len())
        .map(|idx| {
            let (i, j, k) = grid.unflat(idx);
            grid.centered_point(i, j, k)
        })
        .collect();
    let norm = grid.cell_volume() / (4.0 * PI);
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let x = grid.centered_point(p[0], p[1], p[2]);
        let mut acc = vec![0.0; size];
        for (q, y) in coords.iter().enumerate() {
            let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
            let s2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
            if s2 == 0.0 {
                continue;
            }
            let kk = kernel(r, cutoff);
            let far = 1.0 - kk.th;
            match l {
                1 => {
                    for a in 0..3 {
                        let mut v = kk.d1[a] * kk.th * src.f[q];
                        if far > 0.0 || kk.t1[0] != 0.0 || kk.t1[1] != 0.0 || kk.t1[2] != 0.0 {
                            for i in 0..3 {
                                for j in 0..3 {
                                    let kij = kk.d3[a][i][j] * far
                                        - kk.d2[a][i] * kk.t1[j]
                                        - kk.d2[a][j] * kk.t1[i]
                                        - kk.d1[a] * kk.t2[i][j];
                                    v += kij * src.g[i][j][q];
                                }
                            }
                        }
                        acc[a] += v;
                    }
                }
                2 => {
                    for a in 0..3 {
                        for b in 0..3 {
                            let near = kk.d1[a] * (-kk.t1[b] * src.f[q] + kk.th * src.df[b][q]);
                            let mut farv = 0.0;
                            for j in 0..3 {
                                farv += (kk.d3[a][b][j] * far - kk.d2[a][b] * kk.t1[j]) * src.h[j][q];
                            }
                            acc[a * 3 + b] += near + farv;
                        }
                    }
                }
                _ => {
                    for a in 0..3 {
                        for b in 0..3 {
                            for c in 0..3 {
                                let inner = kk.t2[b][c] * src.f[q]
                                    - kk.t1[b] * src.df[c][q]
                                    - kk.t1[c] * src.df[b][q]
                                    + kk.th * src.ddf[b][c][q];
                                let near = kk.d1[a] * inner;
                                let farv = kk.d3[a][b][c] * far * src.f[q];
                                acc[(a * 3 + b) * 3 + c] += near + farv;
                            }
                        }
                    }
                }
            }
        }
        let flat_point = grid.flat(p[0], p[1], p[2]);
        let mut result: Vec<f64> = acc.into_iter().map(|v| v * norm).collect();
        // Replace the lattice sum of the linear Taylor term of the near source
        // by its exact integral, which removes the leading singular error.
        for (entry, value) in result.iter_mut().enumerate() {
            let a = entry / 3usize.pow(l as u32 - 1);
            let tail = entry % 3usize.pow(l as u32 - 1);
            let grad_s = |e: usize| match l {
                1 => src.df[e][flat_point],
                2 => src.ddf[tail][e][flat_point],
                _ => src.dddf[tail * 3 + e][flat_point],
            };
            let mut lattice = 0.0;
            for (e, m) in moment[a].iter().enumerate() {
                lattice += grad_s(e) * m;
            }
            *value += grad_s(a) * bridge_moment / 3.0 - norm * lattice;
        }
        out.push(result);
    }
    Ok(out)
}

fn check_inputs(z_plus: &VectorField, z_minus: &VectorField, l: usize) -> Result<()> {
    z_plus.grid.check_same(&z_minus.grid)?;
    z_plus.ensure_finite()?;
    z_minus.ensure_finite()?;
    if !(1..=3).contains(&l) {
        return Err(Error::Config(format!("derivative order l = {l} must be 1, 2 or 3")));
    }
    if z_plus.grid.len() > MAX_ORACLE_POINTS {
        return Err(Error::InvalidGrid("oracle limited to grids of at most 32^3 points".into()));
    }
    let ratio = localization_ratio(z_plus).max(localization_ratio(z_minus));
    if ratio > LOCALIZATION_TOLERANCE {
        return Err(Error::FreeSpaceViolated(ratio));
    }
    Ok(())
}

/// `∇^l p` at grid points from a periodic spectral solve on the doubled box
/// with the source zero-padded.
pub fn free_space_pressure_derivatives(
    z_plus: &VectorField,
    z_minus: &VectorField,
    l: usize,
    points: &[[usize; 3]],
) -> Result<Vec<Vec<f64>>> {
    check_inputs(z_plus, z_minus, l)?;
    let grid = z_plus.grid;
    let f = source_terms(z_plus, z_minus);
    let big = Grid3::new(
        [2 * grid.n[0], 2 * grid.n[1], 2 * grid.n[2]],
        [2.0 * grid.length[0], 2.0 * grid.length[1], 2.0 * grid.length[2]],
    )?;
    let embed = |k: usize, n: usize| if 2 * k >= n { k + n } else { k };
    let mut padded = ScalarField::zeros(big.shape());
    for ((i, j, k), v) in f.indexed_iter() {
        padded[[embed(i, grid.n[0]), embed(j, grid.n[1]), embed(k, grid.n[2])]] = *v;
    }
    let sp = Spectral::new(&big, false);
    let mut ph = sp.forward(&padded);
    sp.inverse_neg_laplacian(&mut ph);
    let size = 3usize.pow(l as u32);
    let mut comps = Vec::with_capacity(size);
    for idx in 0..size {
        let mut alpha = [0usize; 3];
        let mut rest = idx;
        for _ in 0..l {
            alpha[rest % 3] += 1;
            rest /= 3;
        }
        comps.push(sp.inverse(&sp.deriv_multi(&ph, alpha)));
    }
    Ok(points
        .iter()
        .map(|p| {
            let q = [embed(p[0], grid.n[0]), embed(p[1], grid.n[1]), embed(p[2], grid.n[2])];
            comps.iter().map(|c| c[q]).collect()
        })
        .collect())
}
