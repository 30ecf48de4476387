use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chirpmem::cli::preset_chirp_products;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chirpmem"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn chirpmem")
}

fn summary_value(dir: &Path, key: &str) -> f64 {
    let text = fs::read_to_string(dir.join("summary.txt")).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing"));
    line.split(" = ").nth(1).unwrap().parse().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn simulate(preset: &str, extra: &[&str]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "simulate",
        "--preset",
        preset,
        "--out",
        dir.path().to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    dir
}

#[test]
fn preset_list() {
    let out = run(&["preset", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig2b", "fig2c", "fig2d", "fig2f"] {
        assert!(text.contains(name));
    }
}

#[test]
fn fig2c_scenario_files() {
    let dir = simulate("fig2c", &[]);
    assert!(summary_value(dir.path(), "eta") >= 0.9);
    assert!(summary_value(dir.path(), "f_prime") >= 0.9);
    assert_eq!(summary_value(dir.path(), "sim.n_z"), 1885.0);
    let (header, rows) = read_csv(&dir.path().join("output.csv"));
    assert_eq!(header, ["tau", "re_a", "im_a", "abs_a", "phase"]);
    assert_eq!(rows.len(), 1885);
    let (header, rows) = read_csv(&dir.path().join("spin.csv"));
    assert_eq!(header, ["z", "re_s", "im_s", "abs_s"]);
    assert_eq!(rows.len(), 1885);
    assert!(dir.path().join("input.csv").exists() && dir.path().join("leak.csv").exists());
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    for key in [
        "best_shift",
        "d_eff",
        "storage_residual",
        "physical.chirp_gradient",
        "pulse.fwhm",
        "readout.mode",
    ] {
        assert!(summary.contains(&format!("{key} = ")), "{key}");
    }
}

#[test]
fn fidelity_grows_with_chirp() {
    let b = simulate("fig2b", &[]);
    let d = simulate("fig2d", &[]);
    assert!(summary_value(d.path(), "f_prime") > summary_value(b.path(), "f_prime"));
}

#[test]
fn zero_coupling_override() {
    let dir = simulate("fig2c", &["--set", "override.kappa=0"]);
    assert_eq!(summary_value(dir.path(), "eta"), 0.0);
    assert!(summary_value(dir.path(), "storage_residual") < 1e-9);
    assert!(summary_value(dir.path(), "retrieval_residual") < 1e-9);
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = simulate("fig2f", &["--readout", "backward", "--time-shift", "0.05"]);
    let b = simulate("fig2f", &["--readout", "backward", "--time-shift", "0.05"]);
    for f in [
        "summary.txt",
        "input.csv",
        "leak.csv",
        "output.csv",
        "spin.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn explicit_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("explicit.kv");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(summary_value(dir.path(), "sim.n_z"), 2000.0);
    assert!(summary_value(dir.path(), "amplitude_correlation") > 0.99);
}

#[test]
fn chirp_sweep_trend() {
    let dir = tempfile::tempdir().unwrap();
    let [lo, _, hi] = preset_chirp_products();
    let (from, to) = (format!("{lo}"), format!("{hi}"));
    let out = run(&[
        "sweep",
        "--preset",
        "fig2c",
        "--axis",
        "chirp",
        "--from",
        &from,
        "--to",
        &to,
        "--points",
        "3",
        "--spacing",
        "log",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(&header[..3], ["chirp", "eta", "f_prime"]);
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        assert!(w[0][0] < w[1][0]);
        assert!(w[1][1] <= w[0][1], "eta not nonincreasing");
        assert!(w[1][2] >= w[0][2], "F' not nondecreasing");
    }
}

#[test]
fn time_shift_sweep_displaces_peak() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep",
        "--preset",
        "fig2c",
        "--axis",
        "time_shift",
        "--from",
        "0.05",
        "--to",
        "0.2",
        "--points",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    let col = header
        .iter()
        .position(|h| h == "peak_displacement")
        .unwrap();
    let step = 1.0 / 1884.0;
    for r in rows {
        assert!((r[col] - r[0]).abs() <= step, "{r:?}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    for args in [
        vec![
            "sweep", "--preset", "fig2c", "--axis", "chirp", "--from", "5", "--to", "5",
            "--points", "3", "--out", o,
        ],
        vec![
            "sweep", "--preset", "fig2c", "--axis", "chirp", "--from", "5", "--to", "9",
            "--points", "1", "--out", o,
        ],
        vec!["simulate", "--preset", "nope", "--out", o],
        vec!["simulate", "--out", o],
        vec!["simulate", "--bogus"],
        vec![
            "simulate",
            "--preset",
            "fig2c",
            "--readout",
            "sideways",
            "--out",
            o,
        ],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.kv");
    fs::write(&path, "preset = fig2c\n\nphysical.medium_length = 1\n").unwrap();
    let out = run(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.kv:1:"));
    fs::write(&path, "beam.source = grating\nthis line is wrong\n").unwrap();
    let out = run(&["design", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.kv:2:"));
}

fn design(name: &str) -> String {
    let out = run(&["design", "--config", configs().join(name).to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key}"))
        .to_string()
}

#[test]
fn design_reports() {
    let g = design("grating.kv");
    let zeta: f64 = value(&g, "spatial_dispersion").parse().unwrap();
    assert!((zeta / -5.2e-15 - 1.0).abs() < 0.02);
    let beta: f64 = value(&g, "frequency_gradient").parse().unwrap();
    assert!((beta / -1.9e14 - 1.0).abs() < 0.03);
    assert_eq!(value(&g, "raman_ok"), "true");
    assert_eq!(value(&g, "coverage.spatial_ok"), "true");

    let r = design("reticle.kv");
    let beta: f64 = value(&r, "frequency_gradient").parse().unwrap();
    assert!((beta / 3.14e9 - 1.0).abs() < 0.005);
    let d: f64 = value(&r, "gem_depth").parse().unwrap();
    assert!((d - 6.0).abs() < 0.01);
    let n: f64 = value(&r, "noise_photons").parse().unwrap();
    assert!(n < 1.0);

    let z = design("degenerate.kv");
    assert_eq!(value(&z, "stretch_factor"), "1.00000000000e0");
    assert_eq!(value(&z, "frequency_gradient"), "0.00000000000e0");
    assert_eq!(value(&z, "coverage.spectral_ok"), "false");
    assert_eq!(value(&z, "theta_min"), "none");

    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "design",
        "--config",
        configs().join("reticle.kv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("design.txt")).unwrap(),
        r
    );
}
