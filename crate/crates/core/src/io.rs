//! Field container, metadata sidecar and CSV artifacts.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "ALFVFLD1"
//! count      u32      number of arrays
//! per array:
//!   name_len u16
//!   name     name_len bytes, UTF-8
//!   len      u64      number of values
//!   data     len × f64 (IEEE-754 binary64, little-endian)
//! ```
//!
//! Arrays hold grid fields flattened in row-major `(i, j, k)` order, `k`
//! fastest. The sidecar `<file>.meta.toml` records grid dims, box lengths,
//! time, ε, R and δ.
//!
//! CSV files start with a `# seed=<n>` comment line when the data are seeded,
//! then a fixed header row; numbers use `{:.16e}`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::characteristics::{CharacteristicChart, LineSample};
use crate::diagnostics::{EnergyReport, PressureDecay};
use crate::error::{Error, Result};
use crate::field::{ElsasserState, ScalarField, VectorField};
use crate::grid::Grid3;
use crate::scattering::{ReconstructionStep, ScatteringField};
use crate::solver::StepDiagnostics;

pub const MAGIC: &[u8; 8] = b"ALFVFLD1";

/// Text sidecar describing a container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMeta {
    pub n: [usize; 3],
    pub length: [f64; 3],
    pub t: f64,
    pub epsilon: f64,
    pub r: f64,
    pub delta: f64,
}

impl FieldMeta {
    pub fn grid(&self) -> Result<Grid3> {
        Grid3::new(self.n, self.length)
    }
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

pub fn write_arrays(path: &Path, arrays: &[(&str, &[f64])]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(arrays.len() as u32).to_le_bytes())?;
    for (name, data) in arrays {
        let bytes = name.as_bytes();
        let len = u16::try_from(bytes.len()).map_err(|_| Error::Format(format!("array name too long: {name}")))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(data.len() as u64).to_le_bytes())?;
        for x in data.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated container: {e}")))?;
    Ok(buf)
}

pub fn read_arrays(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_exact::<8>(&mut r)? != MAGIC {
        return Err(Error::Format(format!("{} is not a field container", path.display())));
    }
    let count = u32::from_le_bytes(read_exact(&mut r)?);
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = u16::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(|e| Error::Format(e.to_string()))?;
        let name = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?;
        let n = u64::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f64::from_le_bytes(read_exact(&mut r)?));
        }
        out.push((name, data));
    }
    Ok(out)
}

pub fn write_meta(path: &Path, meta: &FieldMeta) -> Result<()> {
    let text = toml::to_string(meta).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(meta_path(path), text)?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<FieldMeta> {
    let text = std::fs::read_to_string(meta_path(path))?;
    toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))
}

fn slice(f: &ScalarField) -> &[f64] {
    f.as_slice().expect("standard layout")
}

fn vector_arrays<'a>(prefix: &str, v: &'a VectorField) -> Vec<(String, &'a [f64])> {
    (0..3).map(|a| (format!("{prefix}{}", a + 1), slice(&v.c[a]))).collect()
}

fn write_named(path: &Path, arrays: Vec<(String, &[f64])>, meta: &FieldMeta) -> Result<()> {
    let refs: Vec<(&str, &[f64])> = arrays.iter().map(|(n, d)| (n.as_str(), *d)).collect();
    write_arrays(path, &refs)?;
    write_meta(path, meta)
}

/// `z_plus1..3`, `z_minus1..3` and optionally `pressure`.
pub fn write_state(path: &Path, state: &ElsasserState, pressure: Option<&ScalarField>, meta: &FieldMeta) -> Result<()> {
    let mut arrays = vector_arrays("z_plus", &state.z_plus);
    arrays.extend(vector_arrays("z_minus", &state.z_minus));
    if let Some(p) = pressure {
        arrays.push(("pressure".into(), slice(p)));
    }
    write_named(path, arrays, meta)
}

fn find<'a>(arrays: &'a [(String, Vec<f64>)], name: &str) -> Result<&'a [f64]> {
    arrays
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, d)| d.as_slice())
        .ok_or_else(|| Error::Format(format!("missing array {name}")))
}

fn scalar_from(grid: &Grid3, data: &[f64]) -> Result<ScalarField> {
    ScalarField::from_shape_vec(grid.shape(), data.to_vec()).map_err(|e| Error::Format(e.to_string()))
}

fn vector_from(grid: &Grid3, arrays: &[(String, Vec<f64>)], prefix: &str) -> Result<VectorField> {
    let c = [1, 2, 3].map(|a| find(arrays, &format!("{prefix}{a}")).and_then(|d| scalar_from(grid, d)));
    let [a, b, c] = c;
    VectorField::from_components(grid, [a?, b?, c?])
}

/// Inverse of [`write_state`]; the pressure is `None` when not stored.
pub fn read_state(path: &Path) -> Result<(ElsasserState, Option<ScalarField>, FieldMeta)> {
    let meta = read_meta(path)?;
    let grid = meta.grid()?;
    let arrays = read_arrays(path)?;
    let zp = vector_from(&grid, &arrays, "z_plus")?;
    let zm = vector_from(&grid, &arrays, "z_minus")?;
    let p = match find(&arrays, "pressure") {
        Ok(d) => Some(scalar_from(&grid, d)?),
        Err(_) => None,
    };
    let mut state = ElsasserState::new(meta.t, zp, zm)?;
    state.t = meta.t;
    Ok((state, p, meta))
}

/// Labels `(x1±, x2±, u±)` and weights `<u±>` of a chart.
pub fn write_chart(path: &Path, chart: &CharacteristicChart, meta: &FieldMeta) -> Result<()> {
    let names = ["x1", "x2", "u"];
    let mut arrays = Vec::new();
    for (suffix, lab) in [("plus", &chart.labels_plus), ("minus", &chart.labels_minus)] {
        for a in 0..3 {
            arrays.push((format!("{}_{suffix}", names[a]), slice(&lab.c[a])));
        }
    }
    arrays.push(("weight_plus".into(), slice(&chart.weights_plus)));
    arrays.push(("weight_minus".into(), slice(&chart.weights_minus)));
    write_named(path, arrays, meta)
}

/// `value1..3` and `transport1..3` over the label grid.
pub fn write_scattering_field(path: &Path, field: &ScatteringField, meta: &FieldMeta) -> Result<()> {
    let mut arrays = vector_arrays("value", &field.values);
    arrays.extend(vector_arrays("transport", &field.transport_values));
    write_named(path, arrays, meta)
}

/// CSV writer with a fixed header and an optional seed comment.
pub struct CsvWriter {
    out: csv::Writer<BufWriter<File>>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, seed: Option<u64>, header: &[&str]) -> Result<Self> {
        let mut file = BufWriter::new(File::create(path)?);
        if let Some(s) = seed {
            writeln!(file, "# seed={s}")?;
        }
        let mut out = csv::Writer::from_writer(file);
        out.write_record(header).map_err(csv_error)?;
        Ok(Self { out, columns: header.len() })
    }

    /// A row of leading text cells followed by numbers.
    pub fn row(&mut self, text: &[&str], values: &[f64]) -> Result<()> {
        if text.len() + values.len() != self.columns {
            return Err(Error::Format(format!(
                "row has {} cells, header has {}",
                text.len() + values.len(),
                self.columns
            )));
        }
        let mut cells: Vec<String> = text.iter().map(|s| s.to_string()).collect();
        cells.extend(values.iter().map(|v| format!("{v:.16e}")));
        self.out.write_record(&cells).map_err(csv_error)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Parsed CSV: header and rows of raw cells, comment lines skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column {name}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.index(name)?;
        self.rows
            .iter()
            .map(|r| r[idx].parse::<f64>().map_err(|e| Error::Format(format!("{name}: {e}"))))
            .collect()
    }

    pub fn text_column(&self, name: &str) -> Result<Vec<String>> {
        let idx = self.index(name)?;
        Ok(self.rows.iter().map(|r| r[idx].clone()).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()).map_err(csv_error))
        .collect::<Result<_>>()?;
    Ok(CsvTable { header, rows })
}

pub const DIAGNOSTICS_HEADER: [&str; 5] = ["t", "l2_zplus", "l2_zminus", "max_gradp", "cfl"];

pub fn write_diagnostics_csv(path: &Path, seed: Option<u64>, rows: &[StepDiagnostics]) -> Result<()> {
    let mut w = CsvWriter::create(path, seed, &DIAGNOSTICS_HEADER)?;
    for d in rows {
        w.row(&[], &[d.t, d.l2_zplus, d.l2_zminus, d.max_gradp, d.cfl])?;
    }
    w.finish()
}

pub const LINE_HEADER: [&str; 14] = [
    "t", "x1", "x2", "x3", "zp1", "zp2", "zp3", "zm1", "zm2", "zm3", "gp1", "gp2", "gp3", "line_measure",
];

pub fn write_line_csv(path: &Path, seed: Option<u64>, line: &LineSample) -> Result<()> {
    let mut w = CsvWriter::create(path, seed, &LINE_HEADER)?;
    for n in 0..line.times.len() {
        let (x, p, m, g) = (line.positions[n], line.z_plus[n], line.z_minus[n], line.grad_p[n]);
        w.row(
            &[],
            &[line.times[n], x[0], x[1], x[2], p[0], p[1], p[2], m[0], m[1], m[2], g[0], g[1], g[2], line.line_measure[n]],
        )?;
    }
    w.finish()
}

pub const RECONSTRUCTION_HEADER: [&str; 3] = ["iteration", "update_norm", "residual_norm"];

pub fn write_reconstruction_csv(path: &Path, seed: Option<u64>, log: &[ReconstructionStep]) -> Result<()> {
    let mut w = CsvWriter::create(path, seed, &RECONSTRUCTION_HEADER)?;
    for s in log {
        w.row(&[], &[s.iteration as f64, s.update_norm, s.residual_norm])?;
    }
    w.finish()
}

pub fn write_energy_csv(path: &Path, seed: Option<u64>, report: &EnergyReport) -> Result<()> {
    let header = report.csv_header();
    let cols: Vec<&str> = header.split(',').collect();
    let mut w = CsvWriter::create(path, seed, &cols)?;
    for n in 0..report.times.len() {
        let mut row = vec![report.times[n], report.e_plus[n], report.e_minus[n]];
        for k in 1..=report.k_max() {
            row.extend(report.e_orders[n][k]);
        }
        row.push(report.f_plus[n]);
        row.push(report.f_minus[n]);
        w.row(&[], &row)?;
    }
    w.finish()
}

pub const PRESSURE_DECAY_HEADER: [&str; 4] = ["t", "l1", "l2", "l3"];

pub fn write_pressure_decay_csv(path: &Path, seed: Option<u64>, decay: &PressureDecay) -> Result<()> {
    let mut w = CsvWriter::create(path, seed, &PRESSURE_DECAY_HEADER)?;
    for n in 0..decay.times.len() {
        w.row(&[], &[decay.times[n], decay.series[0][n], decay.series[1][n], decay.series[2][n]])?;
    }
    w.finish()
}

pub const SLICE_HEADER: [&str; 5] = ["y1", "y3", "f1", "f2", "f3"];

/// Scattering-field values on the label plane `y2 = 0`.
pub fn write_scattering_slice_csv(path: &Path, seed: Option<u64>, field: &ScatteringField) -> Result<()> {
    let grid = field.manifold.grid;
    let mut w = CsvWriter::create(path, seed, &SLICE_HEADER)?;
    let mut order: Vec<usize> = (0..grid.n[0]).collect();
    order.sort_by(|&a, &b| grid.centered(0, a).total_cmp(&grid.centered(0, b)));
    let mut order3: Vec<usize> = (0..grid.n[2]).collect();
    order3.sort_by(|&a, &b| grid.centered(2, a).total_cmp(&grid.centered(2, b)));
    for &i in &order {
        for &k in &order3 {
            let v = field.values.at(i, 0, k);
            w.row(&[], &[grid.centered(0, i), grid.centered(2, k), v[0], v[1], v[2]])?;
        }
    }
    w.finish()
}
