use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const HARMONIC: &str = r#"
[problem]
mass = "1"
potential = "0.5*x^2"
hbar = 1
kT = 0
x_lo = -6
x_hi = 6
"#;

const THERMAL: &str = r#"
[problem]
mass = "1"
potential = "0.5*x^2 + 0.1*x^4"
hbar = 1
kT = 0.5
x_lo = -3
x_hi = 3
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_effaction"))
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn tabulate_harmonic_five_points() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.ini", HARMONIC);
    let out = dir.path().join("table.csv");
    let o = run(&[
        "tabulate",
        "--config",
        s(&cfg),
        "--grid",
        "5",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("x,omega,Omega,a2,V,W,m_eff,valid\n"));
    let rows = rows(&out);
    assert_eq!(rows.len(), 5);
    for (i, r) in rows.iter().enumerate() {
        let f = |k: usize| r[k].parse::<f64>().unwrap();
        let x = -6.0 + 3.0 * i as f64;
        assert!((f(0) - x).abs() < 1e-15);
        assert!((f(2) - 1.0).abs() < 1e-12);
        assert!((f(5) - (0.5 * x * x + 0.5)).abs() < 1e-12);
        assert!((f(6) - 1.0).abs() < 1e-12);
        assert_eq!(r[7], "1");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.ini", THERMAL);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert!(run(&[
            "tabulate",
            "--config",
            s(&cfg),
            "--grid",
            "301",
            "--out",
            s(p)
        ])
        .status
        .success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn bad_mode_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.ini", HARMONIC);
    let o = run(&[
        "trajectory",
        "--config",
        s(&cfg),
        "--mode",
        "quantum",
        "--x0",
        "1",
        "--v0",
        "0",
        "--tmax",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.ini", "[problem]\nmass = \"1\"\n");
    let o = run(&["solve", "--config", s(&cfg), "--at", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(
        &dir,
        "neg.ini",
        &HARMONIC.replace("mass = \"1\"", "mass = \"x\""),
    );
    let o = run(&["solve", "--config", s(&cfg), "--at", "0"]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn trajectory_one_period_returns() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.ini", HARMONIC);
    let out = dir.path().join("traj.csv");
    let tmax = format!("{}", 2.0 * std::f64::consts::PI);
    let o = run(&[
        "trajectory",
        "--config",
        s(&cfg),
        "--mode",
        "classical",
        "--x0",
        "1",
        "--v0",
        "0",
        "--tmax",
        &tmax,
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,x,v,E,r\n"));
    let last = rows(&out).pop().unwrap();
    let t: f64 = last[0].parse().unwrap();
    let x: f64 = last[1].parse().unwrap();
    assert!((t - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!((x - 1.0).abs() < 1e-6, "x = {x}");
    let r: f64 = last[4].parse().unwrap();
    assert!(r >= 0.0);
}

#[test]
fn trajectory_leaving_the_domain_keeps_the_partial_record() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.ini", HARMONIC);
    let out = dir.path().join("traj.csv");
    let o = run(&[
        "trajectory",
        "--config",
        s(&cfg),
        "--mode",
        "classical",
        "--x0",
        "0",
        "--v0",
        "10",
        "--tmax",
        "10",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("left domain"));
    assert!(rows(&out).len() > 2);
}

#[test]
fn solve_prints_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.ini", HARMONIC);
    let o = run(&["solve", "--config", s(&cfg), "--at", "-0.5"]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = stdout.trim().split(',').collect();
    assert_eq!(row.len(), 8);
    assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(row[6], "1");
}

#[test]
fn validate_passes_and_reports_thermal_probe_skip() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.ini", HARMONIC);
    let o = run(&["validate", "--config", s(&cfg), "--z-probe"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );

    let cfg = write_config(&dir, "t.ini", THERMAL);
    let o = run(&["validate", "--config", s(&cfg), "--z-probe"]);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("T>0 unsupported by probe"), "{stdout}");
    assert_eq!(o.status.code(), Some(0), "{stdout}");
}

#[test]
fn validate_reports_failures_with_exit_one() {
    // quadrature too coarse for a sharply varying potential: the order
    // doubling check rejects it and the dependent checks fail
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "f.ini",
        "[problem]\nmass = \"1\"\npotential = \"0.5*x^2 + 0.01*cos(40*x)\"\nhbar = 1\nkT = 0\nx_lo = -3\nx_hi = 3\n\n[solver]\nquad_order = 8\n",
    );
    let o = run(&["validate", "--config", s(&cfg)]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL"), "{stdout}");
    assert_eq!(o.status.code(), Some(1), "{stdout}");
}
