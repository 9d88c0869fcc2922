use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dyadic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .args(args)
        .current_dir(dir)
        .env_remove("DYADIC_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn help_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let out = dyadic(d.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("simulate"));
    let out = dyadic(d.path(), &["decay", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--t-max"));
}

#[test]
fn malformed_input_exits_two_with_one_line() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        vec!["bogus"],
        vec!["gamma", "--method", "newton"],
        vec!["radius", "--tol", "abc"],
        vec!["radius", "--tol", "-1"],
        vec!["series", "--config", "missing.conf"],
    ] {
        let out = dyadic(d.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
    fs::write(d.path().join("bad.conf"), "tol = 1e-9\nsuite = all\n").unwrap();
    let out = dyadic(d.path(), &["radius", "--config", "bad.conf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("suite"));
}

#[test]
fn numeric_failure_exits_three_with_error_name() {
    let d = tempfile::tempdir().unwrap();
    let out = dyadic(d.path(), &["radius", "--terms", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("RadiusExceeded"));
}

#[test]
fn radius_artifact() {
    let d = tempfile::tempdir().unwrap();
    let out = dyadic(d.path(), &["radius", "--tol", "1e-10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&d.path().join("out/radius.json"));
    for k in [
        "R",
        "bracket_lo",
        "bracket_hi",
        "residual",
        "z1",
        "schema_version",
    ] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
    let r = v["R"].as_f64().unwrap();
    assert!((r - 0.885765931).abs() < 1e-8);
    assert!(v["bracket_hi"].as_f64().unwrap() - v["bracket_lo"].as_f64().unwrap() <= 1e-10);
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, v);
}

#[test]
fn gamma_both_routes() {
    let d = tempfile::tempdir().unwrap();
    let out = dyadic(d.path(), &["gamma", "--method", "both"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&d.path().join("out/gamma.json"));
    let s = v["gamma_series"].as_f64().unwrap();
    let h = v["gamma_shooting"].as_f64().unwrap();
    assert!((v["difference"].as_f64().unwrap() - (s - h).abs()).abs() < 1e-15);
    assert_eq!(v["classification"], "Critical");
    assert!(v["lambda_prime_max"].as_f64().unwrap() < 1e-6);
    assert!(v["R"].is_f64());
}

#[test]
fn series_and_profile_csv_headers() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        dyadic(d.path(), &["series", "--terms", "50"]).status.code(),
        Some(0)
    );
    let csv = fs::read_to_string(d.path().join("out/series.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,d,d_prime,D"));
    assert_eq!(csv.lines().count(), 52);
    let row: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(row[0], 0.0);
    assert!((row[1] - 0.8155665066).abs() < 1e-9);

    assert_eq!(
        dyadic(d.path(), &["selfsimilar", "--modes", "30"])
            .status
            .code(),
        Some(0)
    );
    let csv = fs::read_to_string(d.path().join("out/profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,a_n"));
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn config_file_flags_and_env_precedence() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("run.conf"),
        "# series table\nterms = 40\nout_dir = from_config\n",
    )
    .unwrap();
    let out = dyadic(d.path(), &["series", "--config", "run.conf"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&d.path().join("from_config/series.json"));
    assert_eq!(v["terms"], 40);

    let out = dyadic(
        d.path(),
        &["series", "--config", "run.conf", "--terms", "30"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&d.path().join("from_config/series.json"))["terms"], 30);

    let out = Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .args(["series", "--config", "run.conf"])
        .current_dir(d.path())
        .env("DYADIC_OUT", "from_env")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(d.path().join("from_env/series.json").exists());

    let out = dyadic(
        d.path(),
        &["series", "--config", "run.conf", "--out-dir", "from_flag"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(d.path().join("from_flag/series.json").exists());
}

#[test]
fn resolved_config_reproduces_run() {
    let d = tempfile::tempdir().unwrap();
    let out = dyadic(d.path(), &["coalesce", "--modes", "14", "--out-dir", "a"]);
    assert_eq!(out.status.code(), Some(0));
    let out = dyadic(
        d.path(),
        &["coalesce", "--config", "a/coalesce.conf", "--out-dir", "b"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(snapshot(&d.path().join("a")), snapshot(&d.path().join("b")));
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 4] = [
        &[
            "simulate", "--preset", "flat", "--modes", "16", "--t-end", "5",
        ],
        &[
            "decay",
            "--kind",
            "dissipation",
            "--modes",
            "16",
            "--m",
            "4",
        ],
        &["verify", "--suite", "all", "--grid", "720"],
        &["gamma", "--method", "both"],
    ];
    for dir in ["first", "second"] {
        for c in commands {
            let mut args = c.to_vec();
            args.extend(["--out-dir", dir]);
            assert_eq!(dyadic(d.path(), &args).status.code(), Some(0), "{args:?}");
        }
    }
    let a = snapshot(&d.path().join("first"));
    assert!(a.len() >= 10);
    assert_eq!(a, snapshot(&d.path().join("second")));
    for (name, bytes) in &a {
        if name.ends_with(".json") {
            let v: Value = serde_json::from_slice(bytes).unwrap();
            assert!(v.is_object() && v["schema_version"] == 1, "{name}");
        }
        if name.ends_with(".csv") {
            let text = String::from_utf8_lossy(bytes);
            assert!(
                text.lines()
                    .next()
                    .unwrap()
                    .starts_with(char::is_alphabetic),
                "{name}"
            );
        }
        assert!(!name.ends_with(".tmp"), "{name}");
    }
}

#[test]
fn simulate_trace_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let out = dyadic(
        d.path(),
        &[
            "simulate",
            "--preset",
            "single",
            "--modes",
            "12",
            "--t-start",
            "0",
            "--t-end",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let trace = dyadic::Trace::read_csv(&d.path().join("out/simulate_trace.csv")).unwrap();
    assert_eq!(trace.n_modes(), 12);
    assert_eq!(trace.first().unwrap().x[0], 1.0);
    assert_eq!(trace.last().unwrap().t, 3.0);
    let v = json(&d.path().join("out/simulate.json"));
    assert!(v["scalars"]["energy_drift"].as_f64().unwrap() < 1e-10);
}

#[test]
fn failing_check_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let out = dyadic(
        d.path(),
        &[
            "simulate", "--preset", "flat", "--modes", "10", "--t-end", "20", "--rtol", "1e-2",
            "--atol", "1e-2", "--method", "dopri5",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let v = json(&d.path().join("out/simulate.json"));
    assert_eq!(v["pass"], false);
    assert!(v["scalars"]["energy_drift"].as_f64().unwrap() > 1e-8);
}
