use std::f64::consts::PI;
use std::path::Path;

use radius_core::experiments::{
    export_plotdata, generate_initial_data, run_scenario, InitialDataLaw, ScenarioConfig, ScenarioKind, PLOT_HEADER,
};
use radius_core::norms::sobolev_norm;
use radius_core::spectral::make_grid;
use radius_core::Error;

const SMALL_PART_B: &str = r#"
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
seeds = 2
norms = [1.0]
[calibration]
seeds = 2
seed_offset = 0
norms = [1.0, 5.0, 10.0]
lambdas = [0.0, 1.0, 2.0, 4.0]
horizons = [1e-3, 1e-2, 3e-2]
"#;

fn law(s: f64) -> InitialDataLaw {
    InitialDataLaw {
        s,
        amplitude: 1.0,
        margin: 0.25,
        cutoff: None,
        norm: None,
        solenoidal: false,
    }
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn identical_config_gives_identical_artifacts() {
    let config = ScenarioConfig::from_toml(SMALL_PART_B).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_scenario(&config, Some(a.path())).unwrap();
    let rb = run_scenario(&config, Some(b.path())).unwrap();
    assert_eq!(ra, rb);
    for name in ["report.json", "norms.csv", "constants.json", "trace.bin", "trace.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let constants = ra.constants.as_ref().unwrap();
    assert_eq!(constants.provenance.seeds, vec![4, 5]);
    assert_eq!(ra.seeds, vec![4, 5]);
}

#[test]
fn part_b_report_has_lambda_table_and_radii() {
    let config = ScenarioConfig::from_toml(SMALL_PART_B).unwrap();
    let report = run_scenario(&config, None).unwrap();
    assert_eq!(report.scenario, ScenarioKind::PartB);
    assert_eq!(report.runs.len(), 2);
    for run in &report.runs {
        assert_eq!(run.rows.len(), 7);
        assert!(run.rows.iter().all(|r| r.measured_radius.is_some()));
    }
    let dir = tempfile::tempdir().unwrap();
    let files = export_plotdata(&report, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let csv = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(csv.lines().next().unwrap(), PLOT_HEADER);
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn malformed_configs_name_the_problem() {
    let typo = SMALL_PART_B.replace("decades = 3.0", "decade = 3.0");
    let msg = ScenarioConfig::from_toml(&typo).unwrap_err().to_string();
    assert!(msg.contains("decade") && msg.contains("line 16"), "{msg}");

    let bad_kind = SMALL_PART_B.replace("part-b", "part-c");
    let msg = ScenarioConfig::from_toml(&bad_kind).unwrap_err().to_string();
    assert!(msg.contains("part-c") && msg.contains("line 2"), "{msg}");

    let missing = SMALL_PART_B.replace("[grid]\npoints = 32\n", "");
    assert!(matches!(ScenarioConfig::from_toml(&missing), Err(Error::Config(_))));

    let unknown_system = SMALL_PART_B.replace("burgers", "kdv");
    assert!(ScenarioConfig::from_toml(&unknown_system).is_err());
}

#[test]
fn calibration_file_must_match() {
    let config = ScenarioConfig::from_toml(SMALL_PART_B).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&config, Some(dir.path())).unwrap();
    let text = SMALL_PART_B.replace("p = 4.0", "p = 5.0").replace(
        "[calibration]\nseeds = 2",
        &format!("[calibration]\nfile = {:?}\nseeds = 2", dir.path().join("constants.json")),
    );
    let err = run_scenario(&ScenarioConfig::from_toml(&text).unwrap(), None).unwrap_err();
    assert!(matches!(err, Error::CalibrationMismatch(_)), "{err}");
}

#[test]
fn generated_norms_match_the_law() {
    for (dim, points, s) in [(1, 128, -0.5), (2, 64, 0.0), (3, 32, 0.5)] {
        let g = make_grid(dim, points, 2.0 * PI, (points / 2 - 1) as f64).unwrap();
        let l = law(s);
        for seed in 0..3 {
            let u = generate_initial_data(&l, &g, 1, seed).unwrap();
            for sigma in [s, s + 0.1] {
                let target = l.target_norm(&g, sigma).unwrap();
                let measured = sobolev_norm(&u, sigma);
                assert!((measured - target).abs() <= 0.05 * target, "d = {dim}: {measured} vs {target}");
            }
        }
    }
}

#[test]
fn roughness_is_witnessed_by_a_resolution_scan() {
    let l = law(0.0);
    let mut smooth = Vec::new();
    let mut rough = Vec::new();
    for points in [64, 128, 256, 512, 1024] {
        let g = make_grid(1, points, 2.0 * PI, (points / 2 - 1) as f64).unwrap();
        let u = generate_initial_data(&l, &g, 1, 3).unwrap();
        smooth.push(sobolev_norm(&u, 0.0));
        rough.push(sobolev_norm(&u, 0.1 + l.margin));
    }
    let spread = smooth.iter().cloned().fold(0.0, f64::max) / smooth.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1.2, "{smooth:?}");
    assert!(rough.windows(2).all(|w| w[1] > w[0] * 1.1), "{rough:?}");
}

#[test]
fn navier_stokes_data_is_divergence_free() {
    let g = make_grid(3, 32, 2.0 * PI, 15.0).unwrap();
    let mut l = law(0.5);
    l.solenoidal = true;
    l.norm = Some(2.0);
    let u = generate_initial_data(&l, &g, 3, 8).unwrap();
    assert!(u.divergence().unwrap().max_abs() <= 1e-14);
    assert!(u.is_mean_free(0.0));
}

#[test]
fn scaling_check_on_a_power_of_two_is_exact() {
    let text = r#"
scenario = "scaling-check"
system = "cubic-heat-1d"
[grid]
points = 32
[data]
s = -0.5
norm = 1.0
[integrator]
dt = 1e-4
horizon = 0.01
uniform = 10
[analysis]
p = 6.0
rescale = 4.0
"#;
    let report = run_scenario(&ScenarioConfig::from_toml(text).unwrap(), None).unwrap();
    assert!(report.passed, "{:?}", report.checks);
}

#[test]
fn lemma_check_on_cubic_heat_records_provenance() {
    let text = r#"
scenario = "lemma-check"
seed = 2
system = "cubic-heat-1d"
[grid]
points = 64
[data]
s = -0.5
[integrator]
dt = 1e-4
horizon = 0.03
per_decade = 16
uniform = 30
[analysis]
p = 6.0
[calibration]
seeds = 3
seed_offset = 10
norms = [0.3, 1.0, 3.0]
lambdas = [0.0, 1.0, 2.0, 3.0, 4.0]
horizons = [1e-3, 1e-2, 3e-2]
"#;
    let report = run_scenario(&ScenarioConfig::from_toml(text).unwrap(), None).unwrap();
    assert!(report.passed, "{:?}", report.checks);
    let c = report.constants.unwrap();
    assert!(c.c_lemma > 0.0 && c.c_small.is_finite());
    assert_eq!(c.provenance.seeds, vec![12, 13, 14]);
    assert_eq!(c.provenance.runs, 9);
    assert_eq!(c.provenance.system, "cubic-heat-1d");
    let summary = report.calibration.unwrap();
    assert_eq!(summary.samples, 9 * 5 * 3);
}
