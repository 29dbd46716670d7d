use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
scenario = "part-b"
seed = 4
system = "burgers"
[grid]
points = 32
[data]
s = -0.5
[integrator]
dt = 1e-4
horizon = 0.03
per_decade = 8
uniform = 10
[analysis]
p = 4.0
decades = 3.0
per_decade = 2
[ensemble]
seeds = 1
norms = [1.0]
[calibration]
seeds = 2
seed_offset = 0
norms = [1.0, 5.0, 10.0]
lambdas = [0.0, 1.0, 2.0, 4.0]
horizons = [1e-3, 1e-2, 3e-2]
"#;

fn radius(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radius"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_estimate_verify_export() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("part-b.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let out = dir.path().join("out");

    let run = radius(&["--threads", "1", "run", "-c", path(&config), "-o", path(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("passed"));
    for name in ["report.json", "norms.csv", "constants.json", "trace.json", "trace.bin"] {
        assert!(out.join(name).exists(), "{name}");
    }

    let est = radius(&["estimate", "--trace", path(&out.join("trace"))]);
    assert_eq!(est.status.code(), Some(0));
    let csv = String::from_utf8(est.stdout).unwrap();
    assert!(csv.starts_with("t,delta_fit,ratio,shells,floor_flag\n"));
    assert!(csv.lines().count() > 10);

    let verify = radius(&[
        "verify",
        "--trace",
        path(&out.join("trace")),
        "--constants",
        path(&out.join("constants.json")),
    ]);
    let code = verify.status.code();
    assert!(code == Some(0) || code == Some(1), "{}", String::from_utf8_lossy(&verify.stderr));
    let report: serde_json::Value = serde_json::from_slice(&verify.stdout).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), csv.lines().count() - 1);
    let bad = radius(&[
        "verify",
        "--trace",
        path(&out.join("trace")),
        "--constants",
        path(&out.join("constants.json")),
        "--horizons",
        "1.2345e-3",
    ]);
    assert_eq!(bad.status.code(), Some(3));

    let plots = dir.path().join("plots");
    let export = radius(&["export", "--report", path(&out.join("report.json")), "-o", path(&plots)]);
    assert_eq!(export.status.code(), Some(0));
    assert!(plots.join("radius_run0.csv").exists());
}

#[test]
fn seed_flag_changes_the_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(radius(&["run", "-c", path(&config), "-o", path(&a)]).status.code(), Some(0));
    assert_eq!(radius(&["run", "-c", path(&config), "--seed", "9", "-o", path(&b)]).status.code(), Some(0));
    let ra: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    let rb: serde_json::Value = serde_json::from_slice(&std::fs::read(b.join("report.json")).unwrap()).unwrap();
    assert_eq!(ra["seeds"], serde_json::json!([4]));
    assert_eq!(rb["seeds"], serde_json::json!([9]));
}

#[test]
fn calibrate_writes_constants() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let out = dir.path().join("cal");
    let cal = radius(&["calibrate", "-c", path(&config), "-o", path(&out)]);
    assert_eq!(cal.status.code(), Some(0), "{}", String::from_utf8_lossy(&cal.stderr));
    let c: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("constants.json")).unwrap()).unwrap();
    assert!(c["c_lemma"].as_f64().unwrap() > 0.0);
    assert_eq!(c["provenance"]["seeds"], serde_json::json!([4, 5]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(radius(&["run"]).status.code(), Some(2));
    assert_eq!(radius(&["frobnicate"]).status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, CONFIG.replace("decades = 3.0", "decadez = 3.0")).unwrap();
    let out = radius(&["run", "-c", path(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("decadez") && err.contains("line"), "{err}");

    assert_eq!(radius(&["run", "-c", path(&dir.path().join("missing.toml"))]).status.code(), Some(3));

    // a baseline factor no run can meet fails its check
    let strict = dir.path().join("strict.toml");
    std::fs::write(
        &strict,
        r#"
scenario = "baseline-sqrt-t"
system = "burgers"
[grid]
points = 64
[data]
s = -0.5
norm = 1.0
[integrator]
horizon = 1.0
first_snapshot = 1e-4
per_decade = 4
uniform = 0
[analysis]
baseline_factor = 1000.0
"#,
    )
    .unwrap();
    let failed = radius(&["run", "-c", path(&strict)]);
    assert_eq!(failed.status.code(), Some(1), "{}", String::from_utf8_lossy(&failed.stderr));
}
