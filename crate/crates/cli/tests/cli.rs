use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mfou::io::Manifest;

fn mfou(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfou"))
        .args(args)
        .output()
        .expect("failed to launch mfou")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A short grid: 2^12 points, T = T_tot/16.
const SMALL: [&str; 6] = ["--n-points", "4096", "--t-large", "0.0625", "--epsilon-dt-multiple", "4"];

fn synth_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["synth", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(&SMALL);
    args.extend_from_slice(extra);
    mfou(&args)
}

#[test]
fn synth_writes_files_and_manifest_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = ["--n-traj", "2", "--seed", "11", "--hurst", "0.4", "--gamma-sq", "0.02"];
    let out = synth_into(a.path(), &run);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(synth_into(b.path(), &run).status.success());

    let mut names: Vec<String> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["manifest.txt", "traj_0000.bin", "traj_0001.bin"]);

    let ma = Manifest::read(a.path()).unwrap();
    let mb = Manifest::read(b.path()).unwrap();
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.config.hurst, 0.4);
    assert!(ma.corrupted_files(a.path()).is_empty());

    // flipping one byte is detected
    let f = a.path().join("traj_0001.bin");
    let mut bytes = fs::read(&f).unwrap();
    bytes[100] ^= 0x40;
    fs::write(&f, bytes).unwrap();
    assert_eq!(ma.corrupted_files(a.path()), ["traj_0001.bin"]);
}

#[test]
fn synth_gaussian_variance_matches_theory() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfou(&[
        "synth",
        "--out",
        dir.path().to_str().unwrap(),
        "--n-points",
        "65536",
        "--t-large",
        "0.0009765625",
        "--n-traj",
        "4",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let m = Manifest::read(dir.path()).unwrap();
    let get = |k: &str| m.summary.iter().find(|(key, _)| key == k).unwrap().1;
    // fOU variance at H = 1/2 is T/2
    assert!((get("theory_variance") - 0.0009765625 / 2.0).abs() < 1e-15);
    assert!((get("variance_ratio") - 1.0).abs() < 0.05, "ratio {}", get("variance_ratio"));
    assert_eq!(get("chaos_second_moment"), 1.0);
}

#[test]
fn synth_rejects_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth_into(dir.path(), &["--hurst", "1.2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("error"));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nn_points = 2048\nt_large = 0.05\nepsilon = 0.001953125\nhurst = 0.3\nn_traj = 1\n")
        .unwrap();
    let out_dir = dir.path().join("out");
    let out = mfou(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--gamma-sq",
        "0.01",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let m = Manifest::read(&out_dir).unwrap();
    assert_eq!(m.config.n_points, 2048);
    assert_eq!(m.config.hurst, 0.3);
    assert_eq!(m.config.gamma_sq, 0.01);
    assert_eq!(m.config.epsilon, 4.0 / 2048.0);
    assert_eq!(m.files.len(), 1);
}

fn csv_value(csv: &str, quantity: &str, order: &str) -> f64 {
    csv.lines()
        .find_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0] == quantity && f[1] == order).then(|| f[3].parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no row {quantity},{order}"))
}

#[test]
fn theory_reports_c4_at_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfou(&[
        "theory",
        "--hurst",
        "0.5",
        "--gamma-sq",
        "0.04",
        "--orders",
        "2,4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("theory.csv")).unwrap();
    assert!(csv.starts_with("quantity,order,tau,value,error\n"));
    let t: f64 = 1.0 / 128.0;
    let c4 = csv_value(&csv, "c2n", "4");
    assert!((c4 / (t * t) / 1.179_841_951_027 - 1.0).abs() < 1e-3, "{c4}");
    assert!(dir.path().join("theory_summary.txt").exists());
}

#[test]
fn theory_gaussian_flatness_exponent_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfou(&["theory", "--hurst", "0.6", "--orders", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("theory.csv")).unwrap();
    assert!(csv.contains("\nflatness_exponent,,,0,\n"), "{csv}");
    assert!(csv.contains("\nflatness_amplitude,,,1,\n"));
}

#[test]
fn theory_order_ranges() {
    // γ² = 0.04 < H = 1/3 allows the fourth moment
    let ok = mfou(&["theory", "--hurst", "0.3333333333333333", "--gamma-sq", "0.04", "--orders", "4"]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("c_4"));
    // γ² = 0.2 ≥ H/2 excludes the sixth; the fourth is still reported
    let bad = mfou(&["theory", "--hurst", "0.3333333333333333", "--gamma-sq", "0.2", "--orders", "4,6"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("order 6 skipped"));
    assert!(stdout(&bad).contains("c_4"));
}

#[test]
fn analyze_is_deterministic_and_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(synth_into(&data, &["--n-traj", "2", "--gamma-sq", "0.03", "--hurst", "0.45"]).status.success());

    let run = |out: &Path, extra: &[&str]| {
        let mut args = vec!["analyze", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--scales", "1dt:256dt:2"];
        args.extend_from_slice(extra);
        mfou(&args)
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = run(&a, &["--oracle"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("PASS"));
    assert!(run(&b, &[]).status.success());
    for name in ["moments.csv", "flatness.csv", "histograms.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name}");
    }
    let moments = fs::read_to_string(a.join("moments.csv")).unwrap();
    assert!(moments.starts_with("tau,order,value,n_samples\n"));
    // 16 distinct lags (√2 rounds onto 1) × 3 orders
    assert_eq!(moments.lines().count(), 1 + 16 * 3);
}

#[test]
fn analyze_without_fourth_order_omits_flatness() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(synth_into(&data, &["--n-traj", "1"]).status.success());
    let out_dir = dir.path().join("an");
    let out = mfou(&["analyze", data.to_str().unwrap(), "--orders", "2,3", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("flatness omitted"));
    assert!(!out_dir.join("flatness.csv").exists());
    assert!(out_dir.join("moments.csv").exists());
}

#[test]
fn analyze_rejects_mixed_configs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(synth_into(&a, &["--n-traj", "1", "--hurst", "0.3"]).status.success());
    assert!(synth_into(&b, &["--n-traj", "1", "--hurst", "0.7"]).status.success());
    let out = mfou(&[
        "analyze",
        a.join("traj_0000.bin").to_str().unwrap(),
        b.join("traj_0000.bin").to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mixed configurations"));
}

/// A fast verify grid: 2^16 points, T = T_tot/16, fit range 32..256 steps.
fn verify_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "verify",
        "--n-points",
        "65536",
        "--t-large",
        "0.0625",
        "--n-traj",
        "2",
        "--seed",
        "5",
        "--hurst",
        "0.5",
        "--skip-numerics",
    ];
    v.extend_from_slice(extra);
    v
}

#[test]
fn verify_gaussian_config_activates_constancy_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfou(&verify_args(&["--gamma-sq", "0", "--out", dir.path().to_str().unwrap()]));
    let text = stdout(&out);
    assert!(text.contains(" 3 flatness_max_deviation"), "{text}");
    assert!(text.contains("SKIP  4 flatness_exponent"), "{text}");
    assert!(!text.contains("SKIP  3"), "{text}");
    assert_eq!(fs::read_to_string(dir.path().join("verify_report.txt")).unwrap(), text);
    let csv = fs::read_to_string(dir.path().join("verify_report.csv")).unwrap();
    assert!(csv.starts_with("criterion,name,"));
}

#[test]
fn verify_is_byte_reproducible() {
    let args = verify_args(&["--gamma-sq", "0.04"]);
    let a = mfou(&args);
    let b = mfou(&args);
    assert!(a.status.code().is_some());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_detects_mis_scaled_kernel() {
    let out = mfou(&verify_args(&["--gamma-sq", "0", "--kernel-scale", "1.5"]));
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    let line = text.lines().find(|l| l.contains("s2_amplitude_ratio")).unwrap();
    assert!(line.starts_with("FAIL"), "{line}");
    assert!(text.ends_with("overall: FAIL\n"));
}
