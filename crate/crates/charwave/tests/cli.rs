//! End-to-end runs of the `charwave` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn charwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charwave")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("uni.json", r#"{"model": "riccati-dip", "r": 6, "n": 64}"#),
        ("wave.json", r#"{"model": "paper-fig", "lambda": 0.25, "n": 64}"#),
    ] {
        let cfg = write_config(tmp.path(), name, text);
        let (a, b) = (tmp.path().join(format!("{name}-a")), tmp.path().join(format!("{name}-b")));
        for out in [&a, &b] {
            let o = charwave(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        let files = files_under(&a);
        assert_eq!(files, files_under(&b));
        assert!(files.iter().any(|f| f.ends_with("report.json")));
        assert!(files.iter().any(|f| f.ends_with("history.json")));
        assert!(files.iter().any(|f| f.ends_with("fields/state.csv")));
        for f in files {
            assert!(fs::read(a.join(&f)).unwrap() == fs::read(b.join(&f)).unwrap(), "{f:?} differs");
        }
    }
}

#[test]
fn exit_codes_follow_the_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let run = |text: &str| {
        let cfg = write_config(tmp.path(), "c.json", text);
        charwave(&["run", "--config", cfg.to_str().unwrap(), "--out", out])
    };
    let o = run(r#"{"model": "paper-fig", "lambda": 1.5}"#);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/lambda"));
    assert_eq!(run(r#"{"model": "paper-fig", "foo": 1}"#).status.code(), Some(2));
    assert_eq!(run("not json").status.code(), Some(2));
    // u0(0) = 1 breaks the boundary compatibility of the unidirectional problem
    let o = run(r#"{"equation": "unidirectional", "lambda": 0.5, "flux": {"builtin": "burgers"}, "initial": {"poly": [1]}}"#);
    assert_eq!(o.status.code(), Some(2));
    // two sweeps cannot reach tol = 1e-10
    assert_eq!(run(r#"{"model": "riccati-dip", "n": 32, "max_iter": 2}"#).status.code(), Some(4));
    let o = charwave(&["run", "--config", tmp.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(run(r#"{"model": "riccati-dip", "n": 32, "r": 2}"#).status.code(), Some(0));
}

#[test]
fn sweep_writes_one_directory_per_lambda() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", r#"{"model": "paper-fig", "n": 48}"#);
    let out = tmp.path().join("sweep");
    let o = Command::new(env!("CARGO_BIN_EXE_charwave"))
        .args(["sweep", "--config", cfg.to_str().unwrap(), "--lambdas", "0.2,0.25,0.3333333333333333"])
        .args(["--out", out.to_str().unwrap()])
        .env("CHARWAVE_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(2).unwrap().starts_with("2.5000000000000000e-1,holder13,"));
    for d in ["lambda-0.2", "lambda-0.25", "lambda-0.3333333333333333"] {
        assert!(out.join(d).join("report.json").exists(), "{d}");
        assert!(out.join(d).join("fields/u.csv").exists(), "{d}");
    }
    let r = report(&out);
    assert_eq!(r["sweep"].as_array().unwrap().len(), 3);
    assert_eq!(r["experiment"], "sweep");

    let bad = charwave(&["sweep", "--config", cfg.to_str().unwrap(), "--lambdas", "0.25,2"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("/lambdas/1"));
}

#[test]
fn linear_transport_has_no_blowup_and_small_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.json", r#"{"model": "linear-transport", "r": 4, "n": 128}"#);
    let out = tmp.path().join("o");
    let o = charwave(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let s = &r["solve"];
    assert_eq!(s["blowup"]["detected"], false);
    let h = 4.0 / 127.0;
    assert!(s["residuals"]["energy"].as_f64().unwrap() <= 10.0 * h, "{}", s["residuals"]);
    assert!(s["residuals"]["weak"].as_f64().unwrap() <= 10.0 * h);
    assert!(s["residuals"]["inverse_mismatch"].as_f64().unwrap() <= 10.0 * h);
    // the report's recovered horizon is the last level in physical.csv
    let phys = fs::read_to_string(out.join("fields/physical.csv")).unwrap();
    let last_t: f64 = phys.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(last_t, s["recovered_t_max"].as_f64().unwrap());
}

#[test]
fn verify_constant_speed_records_the_dalembert_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "v.json", r#"{"model": "constant-speed", "n": 128}"#);
    let out = tmp.path().join("o");
    let o = charwave(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let checks = r["verify"].as_array().unwrap();
    let dal = checks.iter().find(|c| c["name"] == "dalembert").unwrap();
    assert!(dal["measured"].as_f64().unwrap() <= 1e-3);
    assert_eq!(dal["passed"], true);
}
