use std::fs;

use alfven_core::characteristics::chart_series;
use alfven_core::diagnostics::{energy_report, pressure_decay_report};
use alfven_core::io::*;
use alfven_core::scattering::{scattering_field, Direction};
use alfven_core::{run, Error, Family, InitialRecipe, SimConfig};
use tempfile::tempdir;

fn meta(cfg: &SimConfig, t: f64) -> FieldMeta {
    FieldMeta {
        n: cfg.grid.n,
        length: cfg.grid.length,
        t,
        epsilon: cfg.epsilon,
        r: cfg.weight.r,
        delta: cfg.weight.delta,
    }
}

#[test]
fn arrays_round_trip_bit_for_bit() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("a.bin");
    let x = [1.0, -0.0, f64::MIN_POSITIVE, 1e300, std::f64::consts::PI];
    let y: Vec<f64> = (0..7).map(|i| i as f64 / 3.0).collect();
    write_arrays(&path, &[("x", &x), ("why", &y), ("empty", &[])]).unwrap();
    let back = read_arrays(&path).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(back[0].0, "x");
    assert!(back[0].1.iter().zip(&x).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(back[1].1, y);
    assert!(back[2].1.is_empty());
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], MAGIC);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
}

#[test]
fn foreign_files_are_rejected() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("junk.bin");
    fs::write(&path, b"NOTMAGIC\x00\x00\x00\x00").unwrap();
    assert!(matches!(read_arrays(&path), Err(Error::Format(_))));
    fs::write(&path, &MAGIC[..5]).unwrap();
    assert!(read_arrays(&path).is_err());
}

#[test]
fn states_round_trip_with_their_metadata() {
    let cfg = SimConfig::desk(16, 0.05, 0.5, InitialRecipe::two_family(3));
    let traj = run(&cfg).unwrap();
    let snap = traj.last();
    let dir = tempdir().unwrap();
    let path = dir.path().join("state.bin");
    let m = meta(&cfg, snap.t());
    write_state(&path, &snap.state, Some(&snap.pressure), &m).unwrap();
    let (state, p, back) = read_state(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(state.t, snap.t());
    assert_eq!(state.z_plus, snap.state.z_plus);
    assert_eq!(state.z_minus, snap.state.z_minus);
    assert_eq!(p.unwrap(), snap.pressure);
    assert!(meta_path(&path).to_string_lossy().ends_with("state.bin.meta.toml"));

    write_state(&path, &snap.state, None, &m).unwrap();
    assert!(read_state(&path).unwrap().1.is_none());
}

#[test]
fn sidecar_with_unknown_keys_is_rejected() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("s.bin");
    fs::write(meta_path(&path), "n = [4, 4, 4]\nlength = [1.0, 1.0, 1.0]\nt = 0.0\nepsilon = 0.1\nr = 1.0\ndelta = 0.1\nextra = 1\n")
        .unwrap();
    assert!(matches!(read_meta(&path), Err(Error::Format(_))));
}

#[test]
fn charts_and_scattering_fields_are_named_arrays() {
    let mut cfg = SimConfig::desk(16, 0.05, 1.0, InitialRecipe::two_family(3));
    cfg.track_labels = true;
    let traj = run(&cfg).unwrap();
    let chart = chart_series(&traj).unwrap().pop().unwrap();
    let dir = tempdir().unwrap();
    let path = dir.path().join("chart.bin");
    write_chart(&path, &chart, &meta(&cfg, 1.0)).unwrap();
    let names: Vec<String> = read_arrays(&path).unwrap().into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        ["x1_plus", "x2_plus", "u_plus", "x1_minus", "x2_minus", "u_minus", "weight_plus", "weight_minus"]
    );
    let f = scattering_field(&traj, Family::Plus, Direction::Future).unwrap();
    let path = dir.path().join("scatter.bin");
    write_scattering_field(&path, &f, &meta(&cfg, 1.0)).unwrap();
    let arrays = read_arrays(&path).unwrap();
    let names: Vec<&str> = arrays.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["value1", "value2", "value3", "transport1", "transport2", "transport3"]);
    assert_eq!(arrays[0].1.as_slice(), f.values.c[0].as_slice().unwrap());
}

#[test]
fn csv_files_carry_seed_header_and_exact_numbers() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let mut w = CsvWriter::create(&path, Some(42), &["case", "a", "b"]).unwrap();
    w.row(&["a"], &[0.1, -3.5e-20]).unwrap();
    assert!(matches!(w.row(&[], &[1.0]), Err(Error::Format(_))));
    w.finish().unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# seed=42"));
    assert_eq!(lines.next(), Some("case,a,b"));
    assert_eq!(lines.next(), Some("a,1.0000000000000001e-1,-3.5000000000000000e-20"));
    let table = read_csv(&path).unwrap();
    assert_eq!(table.header, ["case", "a", "b"]);
    assert_eq!(table.column("a").unwrap(), vec![0.1]);
    assert_eq!(table.text_column("case").unwrap(), vec!["a"]);
    match table.column("missing") {
        Err(Error::Format(msg)) => assert!(msg.contains("missing")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn seedless_and_empty_csv_files_read_back() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    CsvWriter::create(&path, None, &PRESSURE_DECAY_HEADER).unwrap().finish().unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text, "t,l1,l2,l3\n");
    let table = read_csv(&path).unwrap();
    assert!(table.rows.is_empty());
    assert!(table.column("l2").unwrap().is_empty());
}

#[test]
fn artifact_writers_use_the_documented_headers() {
    let mut cfg = SimConfig::desk(16, 0.05, 1.0, InitialRecipe::two_family(3));
    cfg.track_labels = true;
    let traj = run(&cfg).unwrap();
    let charts = chart_series(&traj).unwrap();
    let dir = tempdir().unwrap();
    let d = dir.path();

    write_diagnostics_csv(&d.join("diag.csv"), Some(3), &traj.diagnostics).unwrap();
    let t = read_csv(&d.join("diag.csv")).unwrap();
    assert_eq!(t.header, DIAGNOSTICS_HEADER);
    assert_eq!(t.rows.len(), traj.diagnostics.len());
    assert_eq!(t.column("l2_zplus").unwrap()[0], traj.diagnostics[0].l2_zplus);

    let report = energy_report(&traj, &charts, 2).unwrap();
    write_energy_csv(&d.join("energy.csv"), Some(3), &report).unwrap();
    let t = read_csv(&d.join("energy.csv")).unwrap();
    assert_eq!(t.header, ["t", "e_plus", "e_minus", "e1_plus", "e1_minus", "e2_plus", "e2_minus", "f_plus", "f_minus"]);
    assert_eq!(t.column("e_minus").unwrap(), report.e_minus);

    let decay = pressure_decay_report(&traj);
    write_pressure_decay_csv(&d.join("pd.csv"), Some(3), &decay).unwrap();
    assert_eq!(read_csv(&d.join("pd.csv")).unwrap().column("l3").unwrap(), decay.series[2]);

    let line = alfven_core::characteristics::sample_line(&traj, Family::Minus, [0.0, 0.0, 1.0]).unwrap();
    write_line_csv(&d.join("line.csv"), Some(3), &line).unwrap();
    let t = read_csv(&d.join("line.csv")).unwrap();
    assert_eq!(t.header, LINE_HEADER);
    assert_eq!(t.column("line_measure").unwrap(), line.line_measure);

    let f = scattering_field(&traj, Family::Minus, Direction::Future).unwrap();
    write_scattering_slice_csv(&d.join("slice.csv"), Some(3), &f).unwrap();
    let t = read_csv(&d.join("slice.csv")).unwrap();
    assert_eq!(t.header, SLICE_HEADER);
    assert_eq!(t.rows.len(), 16 * 16);
    let y1 = t.column("y1").unwrap();
    assert!(y1.windows(2).all(|w| w[1] >= w[0]));
}
