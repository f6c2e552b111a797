use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use num_complex::Complex64;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bergman-lab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_DISC: &str = "resolution = 0.02\nsteps = 5\nrays = 3\nradius_sweep = [0.5]\ndegree = 12\n";

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_DISC);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for cmd in ["omega-scan", "net", "hankel", "decompose"] {
        for (dir, threads) in [(&a, "1"), (&b, "3")] {
            let out = lab(&[cmd, "--config", &cfg, "--out", dir.to_str().unwrap(), "--threads", threads]);
            assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 10);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?} differs");
    }
}

#[test]
fn kernel_csv_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lab(&["kernel", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("kernel.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "re_z1,im_z1,re_w1,im_w1,re_B,im_B");
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (z, w) = (Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]));
        let want = 1.0 / (std::f64::consts::PI * (1.0 - z * w.conj()).powi(2));
        assert!((Complex64::new(v[4], v[5]) - want).norm() <= 1e-12 * want.norm());
        rows += 1;
    }
    assert!(rows > 100);
}

#[test]
fn disc_scan_summary_reports_decay() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lab(&["omega-scan", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let s = json(&tmp.path().join("omega-scan.json"));
    assert!(s["result"]["tail_trend"].as_f64().unwrap() < 0.2);
    assert_eq!(s["result"]["decaying"], true);
    let keys: Vec<&String> = s.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["command", "provenance", "warnings", "result"]);
    assert_eq!(s["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn egg_t91_skips_the_chart_condition() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "domain = \"egg\"\nkernel = \"numerical\"\ndegree = 6\nresolution = 0.15\n");
    let out = lab(&["t91", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("condition (5) skipped"));
    let s = json(&tmp.path().join("t91.json"));
    let conds = s["result"]["conditions"].as_array().unwrap();
    assert_eq!(conds.len(), 5);
    assert!(conds[4]["estimate"].is_null());
    assert!(conds[..4].iter().all(|c| c["estimate"]["value"].as_f64().unwrap().is_finite()));
}

#[test]
fn errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    assert_eq!(lab(&["frobnicate", "--out", dir]).status.code(), Some(16));

    let cfg = write_config(tmp.path(), "symbol = \"z1 / z2\"\n");
    let out = lab(&["hankel", "--config", &cfg, "--out", dir]);
    assert_eq!(out.status.code(), Some(14));
    assert!(String::from_utf8_lossy(&out.stderr).contains("position 3"));

    assert_eq!(lab(&["variety", "--out", dir]).status.code(), Some(10));

    let cfg = write_config(tmp.path(), "radius = -2.0\n");
    assert_eq!(lab(&["net", "--config", &cfg, "--out", dir]).status.code(), Some(15));
}

#[test]
fn variety_on_bidisc_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "domain = \"bidisc\"\ndim = 2\nsymbol = \"conj(z2)\"\n");
    assert!(lab(&["variety", "--config", &cfg, "--out", dir.to_str().unwrap()]).status.success());
    let v = json(&dir.join("variety.json"));
    assert!((v["result"]["residual"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(v["result"]["holomorphic_along_disc"], false);

    assert!(lab(&["report", "--config", &cfg, "--out", dir.to_str().unwrap()]).status.success());
    let r = json(&dir.join("report.json"));
    assert_eq!(r["result"]["variety"]["result"]["symbol"], "conj(z2)");
}

#[test]
fn resolution_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    assert!(lab(&["distance", "--out", dir, "--resolution", "0.04"]).status.success());
    let coarse = json(&tmp.path().join("distance.json"));
    assert!(lab(&["distance", "--out", dir, "--resolution", "0.02"]).status.success());
    let fine = json(&tmp.path().join("distance.json"));
    assert!(fine["result"]["nodes"].as_u64().unwrap() > 3 * coarse["result"]["nodes"].as_u64().unwrap());
    assert_ne!(coarse["provenance"]["grid_checksum"], fine["provenance"]["grid_checksum"]);
}
