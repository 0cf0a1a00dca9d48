//! Execution of the five plan modes. Each returns the files it wrote.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use alfven_core::characteristics::{chart_series, sample_line};
use alfven_core::diagnostics::{energy_report, pressure_decay_report};
use alfven_core::io::{
    write_chart, write_diagnostics_csv, write_energy_csv, write_line_csv, write_pressure_decay_csv,
    write_reconstruction_csv, write_scattering_field, write_scattering_slice_csv, write_state, CsvWriter, FieldMeta,
};
use alfven_core::scattering::{
    deviation_norm, forward_map, forward_map_all, infinity_sobolev_norm, linearization_from_pairs, reconstruct,
    state_norm, Case, ForwardRuns, ReconstructOptions, ScatteringField, SlopeFit,
};
use alfven_core::stats::deviation_from_mean;
use alfven_core::{run, ElsasserState, Family, Result, SimConfig};
use rayon::prelude::*;

use crate::plan::{Plan, Snapshots};
use crate::verify::{plan_initial, verify_suite, Check};

fn meta(config: &SimConfig, t: f64) -> FieldMeta {
    FieldMeta {
        n: config.grid.n,
        length: config.grid.length,
        t,
        epsilon: config.epsilon,
        r: config.weight.r,
        delta: config.weight.delta,
    }
}

pub fn simulate(plan: &Plan, out: &Path) -> Result<Vec<PathBuf>> {
    let config = &plan.config;
    let seed = plan.seed();
    let traj = run(config)?;
    let mut files = Vec::new();
    write_diagnostics_csv(&push(&mut files, out.join("diagnostics.csv")), seed, &traj.diagnostics)?;
    let charts = chart_series(&traj)?;
    let report = energy_report(&traj, &charts, config.k_max)?;
    write_energy_csv(&push(&mut files, out.join("energy.csv")), seed, &report)?;
    let mut summary = String::new();
    if let Some(s) = seed {
        let _ = writeln!(summary, "seed = {s}");
    }
    summary.push_str(&report.summary());
    fs::write(push(&mut files, out.join("energy_summary.txt")), summary)?;
    write_pressure_decay_csv(&push(&mut files, out.join("pressure_decay.csv")), seed, &pressure_decay_report(&traj))?;
    let snaps: Vec<usize> = match plan.snapshots {
        Snapshots::Ends => vec![0, traj.len() - 1],
        Snapshots::All => (0..traj.len()).collect(),
    };
    let dir = out.join("snapshots");
    fs::create_dir_all(&dir)?;
    for i in snaps {
        let s = &traj.snapshots[i];
        let p = push(&mut files, dir.join(format!("state_{i:05}.alfv")));
        write_state(&p, &s.state, Some(&s.pressure), &meta(config, s.t()))?;
        files.push(alfven_core::io::meta_path(&p));
    }
    let last = charts.last().expect("non-empty trajectory");
    let p = push(&mut files, out.join("chart_final.alfv"));
    write_chart(&p, last, &meta(config, last.t))?;
    files.push(alfven_core::io::meta_path(&p));
    for fam in [Family::Plus, Family::Minus] {
        let line = sample_line(&traj, fam, [0.0, 0.0, 0.0])?;
        write_line_csv(&push(&mut files, out.join(format!("line_{}.csv", name(fam)))), seed, &line)?;
    }
    Ok(files)
}

fn push(files: &mut Vec<PathBuf>, p: PathBuf) -> PathBuf {
    files.push(p.clone());
    p
}

fn name(f: Family) -> &'static str {
    match f {
        Family::Plus => "plus",
        Family::Minus => "minus",
    }
}

fn file_stem(field: &ScatteringField) -> &'static str {
    use alfven_core::scattering::InfinityKind::*;
    match field.manifold.kind {
        FuturePlus => "fplus",
        FutureMinus => "fminus",
        PastPlus => "pplus",
        PastMinus => "pminus",
    }
}

pub fn scatter(plan: &Plan, out: &Path) -> Result<Vec<PathBuf>> {
    let config = &plan.config;
    let seed = plan.seed();
    let initial = plan_initial(config)?;
    let runs = ForwardRuns::new(&Case::ALL, &initial, config)?;
    let a = runs.pair(Case::A)?;
    let c = runs.pair(Case::C)?;
    let fields = [a.plus, a.minus, c.plus, c.minus];
    let mut files = Vec::new();
    let mut dev = CsvWriter::create(
        &out.join("deviation.csv"),
        seed,
        &["infinity", "order", "norm_sq", "deviation", "tail_bound", "factor_difference"],
    )?;
    files.push(out.join("deviation.csv"));
    for f in &fields {
        let stem = file_stem(f);
        let p = out.join(format!("scatter_{stem}.alfv"));
        write_scattering_field(&p, f, &meta(config, f.truncation_t))?;
        files.push(alfven_core::io::meta_path(&p));
        files.push(p);
        let p = out.join(format!("slice_{stem}.csv"));
        write_scattering_slice_csv(&p, seed, f)?;
        files.push(p);
        let z0 = initial.field(f.family());
        for order in 0..=config.k_max {
            dev.row(
                &[f.manifold.kind.name(), &order.to_string()],
                &[
                    infinity_sobolev_norm(f, order, config.k_max)?,
                    deviation_norm(f, z0, order, config.k_max)?,
                    f.tail_bound,
                    f.factor_difference(),
                ],
            )?;
        }
    }
    dev.finish()?;
    Ok(files)
}

pub fn invert(plan: &Plan, out: &Path) -> Result<Vec<PathBuf>> {
    let config = &plan.config;
    let seed = plan.seed();
    let x0 = plan_initial(config)?;
    let target = forward_map(plan.case, &x0, config)?;
    let opts = ReconstructOptions {
        tol: plan.invert.tol,
        max_iterations: plan.invert.max_iterations,
        order: plan.invert.order,
    };
    let rec = reconstruct(&target, plan.case, config, opts)?;
    let mut files = vec![out.join("reconstruction.csv"), out.join("reconstructed.alfv"), out.join("invert_summary.txt")];
    write_reconstruction_csv(&files[0], seed, &rec.log)?;
    write_state(&files[1], &rec.state, None, &meta(config, 0.0))?;
    files.push(alfven_core::io::meta_path(&files[1]));
    let err = relative_error(&rec.state, &x0, config, opts.order)?;
    let mut s = String::new();
    if let Some(v) = seed {
        let _ = writeln!(s, "seed = {v}");
    }
    let _ = writeln!(s, "case = {}", plan.case.name());
    let _ = writeln!(s, "iterations = {}", rec.log.len());
    let _ = writeln!(s, "relative_error = {err:.6e}");
    let factors: Vec<String> = rec.contraction_factors().iter().map(|f| format!("{f:.6e}")).collect();
    let _ = writeln!(s, "contraction_factors = [{}]", factors.join(", "));
    fs::write(&files[2], s)?;
    Ok(files)
}

/// `‖a - b‖ / ‖b‖` in the product weighted norm.
pub fn relative_error(a: &ElsasserState, b: &ElsasserState, config: &SimConfig, order: usize) -> Result<f64> {
    let d = ElsasserState::new(0.0, a.z_plus.sub(&b.z_plus)?, a.z_minus.sub(&b.z_minus)?)?;
    let base = state_norm(b, &config.weight, order);
    Ok(if base > 0.0 { state_norm(&d, &config.weight, order) / base } else { state_norm(&d, &config.weight, order) })
}

pub fn sweep(plan: &Plan, out: &Path) -> Result<Vec<PathBuf>> {
    let sw = plan.sweep.as_ref().expect("validated sweep table");
    let seed = plan.seed();
    let base = &plan.config;
    let horizons = if sw.horizons.is_empty() { vec![base.horizon.abs()] } else { sw.horizons.iter().map(|h| h.abs()).collect() };
    let direction = plan_initial(&base.with_epsilon(1.0))?;
    let points: Vec<(f64, f64)> = horizons.iter().flat_map(|&h| sw.epsilons.iter().map(move |&e| (h, e))).collect();
    let results = points
        .par_iter()
        .map(|&(h, e)| {
            let cfg = base.with_horizon(h).with_epsilon(e);
            forward_map_all(&direction.scaled(e), &cfg).map(|p| (h, e, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut files = Vec::new();
    let mut pts = CsvWriter::create(&out.join("sweep_points.csv"), seed, &["horizon", "case", "eps", "deviation", "relative"])?;
    let mut slopes = CsvWriter::create(
        &out.join("slopes.csv"),
        seed,
        &["horizon", "case", "status", "slope", "c_fit_mean", "c_fit_spread"],
    )?;
    files.push(out.join("sweep_points.csv"));
    files.push(out.join("slopes.csv"));
    for (h, e, pairs) in &results {
        let dir = out.join(format!("T{h}_eps{e}"));
        fs::create_dir_all(&dir)?;
        let p = dir.join("deviation.csv");
        let mut w = CsvWriter::create(&p, seed, &["case", "deviation_plus", "deviation_minus"])?;
        for pair in pairs {
            let x = direction.scaled(*e);
            w.row(
                &[pair.case.name()],
                &[
                    deviation_norm(&pair.plus, &x.z_plus, sw.order, base.k_max)?,
                    deviation_norm(&pair.minus, &x.z_minus, sw.order, base.k_max)?,
                ],
            )?;
        }
        w.finish()?;
        files.push(p);
    }
    for &h in &horizons {
        for (ci, case) in Case::ALL.into_iter().enumerate() {
            let pairs: Vec<(f64, _)> =
                results.iter().filter(|(hh, _, _)| *hh == h).map(|(_, e, p)| (*e, p[ci].clone())).collect();
            let hs = h.to_string();
            match linearization_from_pairs(&direction, case, &pairs, &base.weight, sw.order) {
                Ok(rep) => {
                    for i in 0..rep.eps.len() {
                        pts.row(&[&hs, case.name()], &[rep.eps[i], rep.deviations[i], rep.relative[i]])?;
                    }
                    let mean = rep.c_fit.iter().sum::<f64>() / rep.c_fit.len() as f64;
                    let (status, slope) = match rep.slope {
                        SlopeFit::Fitted(s) => ("ok", s),
                        SlopeFit::ExactLinear => ("exact-linear", f64::NAN),
                    };
                    slopes.row(&[&hs, case.name(), status], &[slope, mean, deviation_from_mean(&rep.c_fit)])?;
                }
                Err(e) => {
                    eprintln!("case {} at T = {h}: {e}", case.name());
                    slopes.row(&[&hs, case.name(), "unresolved"], &[f64::NAN, f64::NAN, f64::NAN])?;
                }
            }
        }
    }
    pts.finish()?;
    slopes.finish()?;
    Ok(files)
}

pub fn verify(plan: &Plan, out: &Path) -> Result<(Vec<PathBuf>, Vec<Check>)> {
    let checks = verify_suite(&plan.config);
    let mut text = String::new();
    if let Some(s) = plan.seed() {
        let _ = writeln!(text, "# seed={s}");
    }
    for c in &checks {
        let _ = writeln!(text, "{c}");
    }
    let p = out.join("verify.txt");
    fs::write(&p, text)?;
    Ok((vec![p], checks))
}
