//! Along-the-trace check of the induction hypothesis and its consequence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{lambda_from_heat_norm, lambda_t_subcritical};
use super::calibration::CalibratedConstants;
use super::weight::{ua_kato_norm, GevreyParams};
use crate::error::{Error, Result};
use crate::integrator::Trace;
use crate::norms::{heat_flow_kato_norm, log_weighted_norm};

/// How `lambda` is chosen for each horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaRule {
    Fixed { lambda: f64 },
    /// From the heat-flow Kato norm of the data.
    Critical,
    /// From `|U0|_{H^{s_crit + delta}}` and `eta`.
    Subcritical { data_norm: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRow {
    pub horizon: f64,
    pub lambda: f64,
    pub ua_norm: f64,
    pub heat_norm: f64,
    /// `c exp(-lambda^2 / (4 (1 - eps)))`.
    pub hypothesis_bound: f64,
    pub hypothesis_ok: bool,
    /// `|U_a| <= (4/3) H`.
    pub comparison_ok: bool,
    /// `T^{1/p} |exp(lambda sqrt(T) |D|) U(T)|_{H^{s_p}}`.
    pub gevrey_value: f64,
    pub gevrey_ok: bool,
    /// `lambda sqrt(T)` when every check of the row passes.
    pub certified_radius: Option<f64>,
    pub endpoint_warning: bool,
    /// False when `lambda sqrt(T)` is too large for the lattice to carry the
    /// weight above roundoff; such rows are neither certified nor violations.
    pub resolved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub eps: f64,
    pub p: f64,
    pub c_small: f64,
    pub rule: LambdaRule,
    pub rows: Vec<BootstrapRow>,
    pub first_violation: Option<f64>,
    pub unresolved: usize,
    pub passed: bool,
}

fn snapshot_at(trace: &Trace, t: f64) -> Result<usize> {
    trace
        .times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-9 * t.max(1e-300))
        .ok_or_else(|| Error::InvalidParameter(format!("horizon {t} is not a snapshot time")))
}

/// Checks, for each `T` in `horizons` (each a snapshot time), the induction
/// hypothesis `|U_a|_{K^p_T} <= c exp(-lambda^2/(4(1-eps)))`, the comparison
/// `|U_a|_{K^p_T} <= (4/3) |exp(eps t Lap) U0|_{K^p_T}` and the resulting
/// Gevrey bound at `t = T`.
pub fn verify_bootstrap(
    trace: &Trace,
    eps: f64,
    p: f64,
    constants: &CalibratedConstants,
    rule: LambdaRule,
    horizons: &[f64],
) -> Result<BootstrapReport> {
    constants.check_matches(trace.spec.order, eps, p)?;
    let scaling = trace.spec.scaling_data()?;
    let s = scaling.kato_index(p);
    let c = constants.c_small;
    let u0 = trace.initial();
    let rows = horizons
        .par_iter()
        .map(|&horizon| {
            let index = snapshot_at(trace, horizon)?;
            let heat_norm = heat_flow_kato_norm(u0, eps, p, s, horizon);
            let lambda = match rule {
                LambdaRule::Fixed { lambda } => lambda,
                LambdaRule::Critical => match lambda_from_heat_norm(heat_norm, eps, c) {
                    Ok(l) => l,
                    Err(Error::Admissibility { .. }) => 0.0,
                    Err(e) => return Err(e),
                },
                LambdaRule::Subcritical { data_norm } => {
                    let (Some(delta), Some(eta)) = (constants.delta, constants.eta) else {
                        return Err(Error::CalibrationMismatch("no subcritical heat constant".into()));
                    };
                    lambda_t_subcritical(horizon, data_norm, delta, eps, eta)?
                }
            };
            if heat_norm == 0.0 {
                return Ok(BootstrapRow {
                    horizon,
                    lambda,
                    ua_norm: 0.0,
                    heat_norm,
                    hypothesis_bound: c,
                    hypothesis_ok: true,
                    comparison_ok: true,
                    gevrey_value: 0.0,
                    gevrey_ok: true,
                    certified_radius: None,
                    endpoint_warning: false,
                    resolved: true,
                });
            }
            let params = GevreyParams::new(lambda, eps, horizon, p)?;
            let resolved = params.resolved(trace.grid().max_magnitude());
            let kato = ua_kato_norm(trace, &params, s)?;
            let g = params.gaussian_exponent();
            let hypothesis_bound = c * (-g).exp();
            let hypothesis_ok = kato.value <= hypothesis_bound;
            let comparison_ok = kato.value <= 4.0 / 3.0 * heat_norm;
            let sigma = lambda * horizon.sqrt();
            let (log_norm, _) = log_weighted_norm(&trace.snapshots[index], s, |r| sigma * r);
            let gevrey_value = horizon.powf(1.0 / p) * log_norm.exp();
            let gevrey_ok = gevrey_value <= c * (1.0 + 1e-12);
            let all = resolved && hypothesis_ok && comparison_ok && gevrey_ok;
            Ok(BootstrapRow {
                horizon,
                lambda,
                ua_norm: kato.value,
                heat_norm,
                hypothesis_bound,
                hypothesis_ok,
                comparison_ok,
                gevrey_value,
                gevrey_ok,
                certified_radius: all.then_some(sigma),
                endpoint_warning: kato.endpoint_warning,
                resolved,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first_violation = rows
        .iter()
        .filter(|r| r.resolved && !(r.hypothesis_ok && r.comparison_ok && r.gevrey_ok))
        .map(|r| r.horizon)
        .reduce(f64::min);
    let unresolved = rows.iter().filter(|r| !r.resolved).count();
    Ok(BootstrapReport {
        eps,
        unresolved,
        p,
        c_small: c,
        rule,
        passed: first_violation.is_none() && unresolved == 0,
        first_violation,
        rows,
    })
}
