use std::f64::consts::PI;

use proptest::prelude::*;
use radius_core::analyticity::{
    multiplier_inequality_check, verify_bootstrap, CalibratedConstants, LambdaRule, Provenance,
};
use radius_core::experiments::{generate_initial_data, InitialDataLaw};
use radius_core::integrator::{dense_times, integrate, IntegratorOptions, SnapshotPolicy, Trace};
use radius_core::models::builtin_burgers;
use radius_core::spectral::make_grid;
use radius_core::Error;

const HORIZONS: [f64; 3] = [1e-4, 1e-3, 1e-2];

fn burgers_trace(norm: f64) -> Trace {
    let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
    let law = InitialDataLaw {
        s: -0.5,
        amplitude: 1.0,
        margin: 0.25,
        cutoff: None,
        norm: Some(norm),
        solenoidal: false,
    };
    let u0 = generate_initial_data(&law, &g, 1, 11).unwrap();
    let mut times = dense_times(1e-7, 16, 20, 1e-2).unwrap();
    times.extend(HORIZONS);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let opts = IntegratorOptions::new(1e-2, 1e-5).with_snapshots(SnapshotPolicy::Explicit { times });
    integrate(&builtin_burgers(), &u0, &opts).unwrap()
}

fn constants() -> CalibratedConstants {
    CalibratedConstants::new(2, 0.1, 4.0, 0.03, Provenance::default()).unwrap()
}

#[test]
fn small_data_passes_the_bootstrap() {
    let report = verify_bootstrap(&burgers_trace(1.0), 0.1, 4.0, &constants(), LambdaRule::Critical, &HORIZONS).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(report.rows.iter().all(|r| r.certified_radius.is_some()));
}

#[test]
fn hundredfold_data_reports_a_violation() {
    let rule = LambdaRule::Fixed { lambda: 0.5 };
    let report = verify_bootstrap(&burgers_trace(100.0), 0.1, 4.0, &constants(), rule, &HORIZONS).unwrap();
    assert!(!report.passed);
    assert!(report.first_violation.is_some());
    assert!(report.rows.iter().any(|r| r.resolved && !r.hypothesis_ok && r.certified_radius.is_none()));
}

#[test]
fn unresolved_rows_are_not_certified() {
    let rule = LambdaRule::Fixed { lambda: 20.0 };
    let report = verify_bootstrap(&burgers_trace(1.0), 0.1, 4.0, &constants(), rule, &[1e-2]).unwrap();
    let row = &report.rows[0];
    assert!(!row.resolved);
    assert!(row.certified_radius.is_none());
    assert_eq!(report.unresolved, 1);
    assert!(report.first_violation.is_none());
    assert!(!report.passed);
}

#[test]
fn mismatched_constants_are_rejected() {
    let c = CalibratedConstants::new(2, 0.2, 4.0, 0.03, Provenance::default()).unwrap();
    let err = verify_bootstrap(&burgers_trace(1.0), 0.1, 4.0, &c, LambdaRule::Critical, &HORIZONS).unwrap_err();
    assert!(matches!(err, Error::CalibrationMismatch(_)));
    let text = serde_json::to_string(&constants()).unwrap();
    let back: CalibratedConstants = serde_json::from_str(&text).unwrap();
    assert_eq!(back, constants());
}

#[test]
fn horizon_must_be_a_snapshot() {
    let err = verify_bootstrap(&burgers_trace(1.0), 0.1, 4.0, &constants(), LambdaRule::Critical, &[2.345e-3]);
    assert!(err.is_err());
}

proptest! {
    #[test]
    fn multiplier_inequality_holds(
        lambda in 0.0f64..20.0,
        eps in 0.001f64..0.999,
        log_t in -8.0f64..3.0,
        u in 0.0f64..1.0,
    ) {
        let horizon = 10f64.powf(log_t);
        let scale = lambda / ((1.0 - eps) * horizon.sqrt()) + 1.0;
        let r = multiplier_inequality_check(lambda, eps, horizon, &[4.0 * scale * u]).unwrap();
        prop_assert_eq!(r.violations, 0);
    }

    #[test]
    fn slack_vanishes_only_at_the_equality_point(lambda in 0.1f64..10.0, eps in 0.05f64..0.95, log_t in -4.0f64..1.0) {
        let horizon = 10f64.powf(log_t);
        let xi0 = lambda / (2.0 * (1.0 - eps) * horizon.sqrt());
        let r = multiplier_inequality_check(lambda, eps, horizon, &[xi0, 2.0 * xi0]).unwrap();
        prop_assert!((r.equality_xi - xi0).abs() <= 1e-12 * xi0);
        prop_assert!(r.worst_slack.abs() <= 1e-9 * xi0 * xi0);
        prop_assert_eq!(r.worst_xi, xi0);
    }
}
