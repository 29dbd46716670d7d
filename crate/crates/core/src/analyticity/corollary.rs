//! Shifted construction for global small solutions: wait until
//! `|u(t0)|_{H^{s_crit}}` is below `c / (2 K)`, then bootstrap from `t0` with a
//! horizon-independent `lambda`.

use serde::{Deserialize, Serialize};

use super::bootstrap::{verify_bootstrap, BootstrapReport, LambdaRule};
use super::bounds::corollary_lambda;
use super::calibration::CalibratedConstants;
use super::radius::{estimate_radius, FitOptions};
use crate::error::{Error, Result};
use crate::integrator::{dense_times, integrate, IntegratorOptions, Scheme, SnapshotPolicy};
use crate::models::SystemSpec;
use crate::norms::sobolev_norm;
use crate::spectral::SpectralField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryOptions {
    pub eps: f64,
    pub p: f64,
    /// Earliest admissible `t0`.
    pub min_t0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// Horizons `T` of the shifted bootstrap on `[t0, t0 + T]`.
    pub shifted_horizons: Vec<f64>,
    /// Snapshot density (per decade near `t0`, and uniform count).
    pub per_decade: usize,
    pub uniform: usize,
    pub fit: FitOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSample {
    pub time: f64,
    pub delta_fit: Option<f64>,
    /// `delta_fit / sqrt(t)`.
    pub ratio: Option<f64>,
    pub shells: usize,
    pub floor_flag: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub eps: f64,
    pub p: f64,
    pub c_small: f64,
    pub k_eps: f64,
    /// `c / (2 K)`.
    pub threshold: f64,
    pub t0: f64,
    pub norm_at_t0: f64,
    /// `2 (1 - eps)^{1/2} log^{1/2}(c / (2 K |u(t0)|))`; infinite for zero data.
    pub certified_ratio: f64,
    /// `(t, |u(t)|_{H^{s_crit}})`.
    pub decay: Vec<(f64, f64)>,
    pub bootstrap: Option<BootstrapReport>,
    pub radius: Vec<RadiusSample>,
    pub ratio_at_t0: Option<f64>,
    pub ratio_final: Option<f64>,
    pub trivial: bool,
    pub passed: bool,
}

pub fn radius_sample(u: &SpectralField, t: f64, fit: &FitOptions) -> RadiusSample {
    match estimate_radius(u, fit) {
        Ok(r) => RadiusSample {
            time: t,
            delta_fit: Some(r.delta_fit),
            ratio: (t > 0.0).then(|| r.delta_fit / t.sqrt()),
            shells: r.shells,
            floor_flag: r.floor_flag,
        },
        Err(_) => RadiusSample {
            time: t,
            delta_fit: None,
            ratio: None,
            shells: 0,
            floor_flag: false,
        },
    }
}

pub fn corollary_experiment(
    spec: &SystemSpec,
    u0: &SpectralField,
    constants: &CalibratedConstants,
    opts: &CorollaryOptions,
) -> Result<CorollaryReport> {
    constants.check_matches(spec.order, opts.eps, opts.p)?;
    let k_eps = constants
        .k_eps
        .ok_or_else(|| Error::CalibrationMismatch("K_eps missing".into()))?;
    let scaling = spec.scaling_data()?;
    let c = constants.c_small;
    let threshold = c / (2.0 * k_eps);
    let mut report = CorollaryReport {
        eps: opts.eps,
        p: opts.p,
        c_small: c,
        k_eps,
        threshold,
        t0: 0.0,
        norm_at_t0: 0.0,
        certified_ratio: f64::INFINITY,
        decay: Vec::new(),
        bootstrap: None,
        radius: Vec::new(),
        ratio_at_t0: None,
        ratio_final: None,
        trivial: false,
        passed: false,
    };
    if sobolev_norm(u0, scaling.s_crit) == 0.0 {
        report.trivial = true;
        report.passed = true;
        return Ok(report);
    }

    let first = opts.horizon * 1e-6;
    let times = dense_times(first, opts.per_decade, opts.uniform, opts.horizon)?;
    let integ = IntegratorOptions::new(opts.horizon, opts.dt)
        .with_scheme(opts.scheme)
        .with_snapshots(SnapshotPolicy::Explicit { times });
    let trace = integrate(spec, u0, &integ).map_err(|e| e.in_run("corollary", "integration"))?;
    report.decay = trace
        .times
        .iter()
        .zip(&trace.snapshots)
        .map(|(&t, u)| (t, sobolev_norm(u, scaling.s_crit)))
        .collect();
    let start = report
        .decay
        .iter()
        .position(|&(t, h)| t >= opts.min_t0 && h <= threshold)
        .ok_or_else(|| Error::ThresholdNotReached {
            threshold,
            horizon: opts.horizon,
            last: report.decay.last().map(|d| d.1).unwrap_or(f64::NAN),
        })?;
    let (t0, norm_at_t0) = report.decay[start];
    report.t0 = t0;
    report.norm_at_t0 = norm_at_t0;
    let lambda = corollary_lambda(c, k_eps, norm_at_t0, opts.eps)?;
    report.certified_ratio = lambda;

    let shifted_end = opts.shifted_horizons.iter().cloned().fold(0.0, f64::max);
    if shifted_end > 0.0 {
        let mut times = dense_times(shifted_end * 1e-6, opts.per_decade, opts.uniform, shifted_end)?;
        times.extend(opts.shifted_horizons.iter().cloned());
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        let integ = IntegratorOptions::new(shifted_end, opts.dt)
            .with_scheme(opts.scheme)
            .with_snapshots(SnapshotPolicy::Explicit { times });
        let shifted = integrate(spec, &trace.snapshots[start], &integ)
            .map_err(|e| e.in_run("corollary", "shifted integration"))?;
        let rule = if lambda.is_finite() {
            LambdaRule::Fixed { lambda }
        } else {
            LambdaRule::Critical
        };
        report.bootstrap = Some(
            verify_bootstrap(&shifted, opts.eps, opts.p, constants, rule, &opts.shifted_horizons)
                .map_err(|e| e.in_run("corollary", "shifted bootstrap"))?,
        );
    }

    report.radius = trace
        .times
        .iter()
        .zip(&trace.snapshots)
        .skip(start)
        .map(|(&t, u)| radius_sample(u, t, &opts.fit))
        .collect();
    report.ratio_at_t0 = report.radius.first().and_then(|r| r.ratio);
    report.ratio_final = report.radius.last().and_then(|r| r.ratio);
    let grew = matches!((report.ratio_at_t0, report.ratio_final), (Some(a), Some(b)) if b > a);
    report.passed = grew && report.bootstrap.as_ref().is_none_or(|b| b.passed);
    Ok(report)
}
