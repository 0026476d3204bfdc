use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sixfilm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sixfilm"))
        .args(args)
        .env("SIXFILM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> toml::Table {
    std::fs::read_to_string(dir.join("manifest.toml"))
        .unwrap()
        .parse()
        .unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|c| c == name)
        .unwrap();
    lines
        .filter_map(|l| {
            l.split(',')
                .nth(idx)
                .filter(|c| !c.is_empty())
                .map(|c| c.parse().unwrap())
        })
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn steady_film_stays_put() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let cfg = configs().join("steady.ini");
    let out = sixfilm(&["simulate", s(&cfg), "-o", s(&run)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let series = std::fs::read_to_string(run.join("series.csv")).unwrap();
    let mass = column(&series, "mass");
    assert!(mass.len() > 10);
    assert!(mass.iter().all(|m| (m - 1.0).abs() < 1e-14));

    let diag = tmp.path().join("diag");
    let out = sixfilm(&["diagnose", s(&cfg), "--traj", s(&run), "-o", s(&diag)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(diag.join("diagnostics.csv")).unwrap();
    for col in ["entropy_residual", "energy_residual"] {
        let v = column(&text, col);
        assert!(!v.is_empty());
        assert!(v.iter().all(|r| r.abs() <= 1e-12), "{col}: {v:?}");
    }
}

#[test]
fn missing_key_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.ini");
    std::fs::write(&cfg, "[grid]\nn = 16\n[params]\ndelta = 0\nr = 1\n[run]\ndt0 = 1e-6\nt_end = 1e-5\n[init]\nh0 = 1\n").unwrap();
    let out = sixfilm(&["simulate", s(&cfg), "-o", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.ini:3") && err.contains("beta"), "{err}");
}

#[test]
fn pinch_exits_with_positivity_code() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let out = sixfilm(&["simulate", s(&configs().join("pinch.ini")), "-o", s(&run)]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = manifest(&run);
    assert_eq!(m["exit_status"].as_integer(), Some(2));
    let t = m["last_good_time"].as_float().unwrap();
    assert!(t > 0.0 && t < 1e-2);
    assert_eq!(m["audit_passed"].as_bool(), Some(true));
}

#[test]
fn dispersion_table_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sixfilm(&[
        "dispersion",
        "--beta",
        "12",
        "--delta",
        "12",
        "--r",
        "3",
        "--hbar",
        "0.8",
        "--modes",
        "1..3",
        "-o",
        s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("dispersion.csv")).unwrap();
    let sigma = column(&text, "sigma");
    assert_eq!(sigma.len(), 3);
    let h3 = 0.8f64.powi(3);
    for (m, got) in (1..=3).zip(sigma) {
        let k = 2.0 * PI * m as f64;
        let want = -h3 * k.powi(6) / (1.0 + h3 * k.powi(4));
        assert!((got / want - 1.0).abs() < 1e-12, "m={m}: {got} vs {want}");
    }
}

#[test]
fn runs_are_byte_identical_and_digested() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("decay.ini");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = sixfilm(&["--seed", "7", "simulate", s(&cfg), "-o", s(dir)]);
        assert_eq!(out.status.code(), Some(0));
    }
    let m = manifest(&a);
    assert_eq!(m["seed"].as_integer(), Some(7));
    assert_eq!(m["audit_passed"].as_bool(), Some(true));
    let files = m["files"].as_array().unwrap();
    assert!(files.len() > 2);
    for f in files {
        let rel = f["path"].as_str().unwrap();
        let bytes_a = std::fs::read(a.join(rel)).unwrap();
        assert_eq!(
            bytes_a,
            std::fs::read(b.join(rel)).unwrap(),
            "{rel} differs"
        );
        assert_eq!(
            hex::encode(Sha256::digest(&bytes_a)),
            f["sha256"].as_str().unwrap()
        );
    }
}

#[test]
fn sweep_reports_slopes_per_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sixfilm(&[
        "--seed",
        "3",
        "sweep-eps",
        s(&configs().join("decay.ini")),
        "-o",
        s(tmp.path()),
        "--eps",
        "1/8,1/16,1/32,1/64",
        "--random-pairs",
        "1",
        "--q",
        "8",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for k in 1..=4 {
        let text = std::fs::read_to_string(tmp.path().join(format!("sweep_pair{k}.csv"))).unwrap();
        assert!(text.starts_with("term,eps,magnitude,predicted_exponent,fitted_slope"));
    }
    assert!(tmp.path().join("sweep_limit.csv").exists());
}
