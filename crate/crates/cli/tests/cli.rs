use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nls-spectral"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["frobnicate"][..],
        &["soliton", "--bogus"],
        &["threshold", "--problem", "nls3d"],
        &["threshold", "--problem", "nls3d", "--quantity", "nonsense"],
        &["soliton", "--problem", "cqnls", "--gamma", "0.2"],
        &["soliton", "--problem", "nls3d", "--gamma", "0.01"],
        &["verdict", "--tol", "1e-8"],
    ] {
        let o = run(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let help = run(&["--help"], dir.path());
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("--problem"));
}

#[test]
fn config_errors_carry_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "problem = \"nls3d\"\n\n[tolerances]\nwidget = 3\n").unwrap();
    let o = run(&["soliton", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"), "{}", String::from_utf8_lossy(&o.stderr));

    std::fs::write(&cfg, "problem = \"cqnls\"\ngamma = 0.2\n").unwrap();
    let o = run(&["soliton", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn config_override_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[domains]\nr_max_index_3d = 400\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&["index", "--problem", "nls3d", "--sigma", "1", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["config"]["r_max_index_3d"], 400.0);
}

#[test]
fn threshold_reports_sigma2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["threshold", "--problem", "nls3d", "--quantity", "Jratio0", "--bracket", "0.8", "0.9"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = report(dir.path())["tasks"][0]["result"]["value"].as_f64().unwrap();
    assert!((v - 0.807425).abs() <= 1e-3, "{v}");
}

#[test]
fn slope_scan_finds_gamma_star() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["slope", "--problem", "cqnls", "--scan", "0", "0.05"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = report(dir.path())["tasks"][0]["result"]["root"].as_f64().unwrap();
    assert!((v - 0.0255453).abs() <= 1e-4, "{v}");
}

#[test]
fn index_nls1d_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["index", "--problem", "nls1d", "--sigma", "3.0"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let sectors = report(dir.path())["tasks"][0]["result"][0]["sectors"].clone();
    let counts: Vec<(String, u64)> = sectors
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["sector"].as_str().unwrap().to_string(), s["root_count"].as_u64().unwrap()))
        .collect();
    let want = [("calL_plus_even", 1), ("calL_plus_odd", 1), ("calL_minus_even", 1), ("calL_minus_odd", 0)];
    for (tag, n) in want {
        assert!(counts.contains(&(tag.to_string(), n)), "{counts:?}");
    }
    assert!(dir.path().join("index.csv").exists());
}

#[test]
fn sweep_csv_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["sweep", "--problem", "nls3d", "--grid", "0.9", "1.1", "3", "--delta0", "1e-4"], out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &Path| std::fs::read(p.join("sweep.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(String::from_utf8(read(&a)).unwrap().lines().count(), 4);
}

#[test]
fn verdict_writes_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verdict", "--problem", "nls3d", "--sigma", "1.15"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    for f in ["soliton.csv", "eigen.csv", "index.csv", "products.csv", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let r = report(dir.path());
    let v = &r["tasks"][0]["result"]["per_delta0"][0]["run"]["verdict"];
    assert_eq!(v["established"], false);
    assert_eq!(v["failing"][0], "calL_plus_k1");
}

#[test]
fn full_battery_passes_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reproduce-paper"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS criterion")).count(), 12, "{stdout}");
    let r = report(dir.path());
    let acc = r["acceptance"].as_array().unwrap();
    assert_eq!(acc.len(), 12);
    assert!(acc.iter().all(|c| c["pass"] == true));
    for p in ["nls3d", "cqnls", "nls1d"] {
        assert!(dir.path().join(p).join("sweep.csv").exists());
    }
}
