//! Empirical surrogates for the existential constants of the bootstrap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{eta_constant, small_constant};
use super::weight::{ua_kato_norm, GevreyParams};
use crate::error::{Error, Result};
use crate::integrator::Trace;
use crate::models::ScalingData;
use crate::norms::{heat_flow_kato_norm, heat_flow_subcritical_bound_constant, sobolev_norm};
use crate::spectral::SpectralField;

/// Where a set of constants came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub description: String,
    pub system: String,
    pub seeds: Vec<u64>,
    pub points: usize,
    pub lambdas: Vec<f64>,
    pub horizons: Vec<f64>,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibratedConstants {
    pub order: u32,
    pub eps: f64,
    pub p: f64,
    /// Empirical `C_{k,eps}`.
    pub c_lemma: f64,
    /// `(4 C_{k,eps})^{-1/(k-1)}`.
    pub c_small: f64,
    pub delta: Option<f64>,
    /// Empirical `C_{delta,p}`.
    pub c_heat: Option<f64>,
    pub eta: Option<f64>,
    /// Empirical `K_eps` with `|exp(eps t Lap) u|_{K^p_inf} <= K_eps |u|_{H^{s_crit}}`.
    pub k_eps: Option<f64>,
    pub provenance: Provenance,
}

impl CalibratedConstants {
    pub fn new(order: u32, eps: f64, p: f64, c_lemma: f64, provenance: Provenance) -> Result<Self> {
        Ok(CalibratedConstants {
            order,
            eps,
            p,
            c_lemma,
            c_small: small_constant(c_lemma, order)?,
            delta: None,
            c_heat: None,
            eta: None,
            k_eps: None,
            provenance,
        })
    }

    pub fn with_heat_constant(mut self, delta: f64, c_heat: f64) -> Result<Self> {
        self.eta = Some(eta_constant(self.c_small, c_heat, delta)?);
        self.delta = Some(delta);
        self.c_heat = Some(c_heat);
        Ok(self)
    }

    pub fn with_k_eps(mut self, k_eps: f64) -> Self {
        self.k_eps = Some(k_eps);
        self
    }

    pub fn check_matches(&self, order: u32, eps: f64, p: f64) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if self.order != order || !close(self.eps, eps) || !close(self.p, p) {
            return Err(Error::CalibrationMismatch(format!(
                "calibrated for (k, eps, p) = ({}, {}, {}), used with ({order}, {eps}, {p})",
                self.order, self.eps, self.p
            )));
        }
        Ok(())
    }
}

/// One evaluation of the lemma ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSample {
    pub run: usize,
    pub lambda: f64,
    pub horizon: f64,
    pub ua_norm: f64,
    pub heat_norm: f64,
    pub ratio: f64,
    /// False when the weight amplifies roundoff (see `GevreyParams::resolved`);
    /// such samples do not enter the constant.
    pub resolved: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaCalibration {
    pub c_lemma: f64,
    pub c_small: f64,
    pub samples: Vec<LemmaSample>,
    pub worst: LemmaSample,
}

/// `(|U_a| - H)_+ / (exp(lambda^2 (k-1) / (4 (1-eps))) |U_a|^k)`.
pub fn lemma_ratio(ua_norm: f64, heat_norm: f64, lambda: f64, eps: f64, order: u32) -> f64 {
    let excess = ua_norm - heat_norm;
    if excess <= 0.0 || ua_norm == 0.0 {
        return 0.0;
    }
    let k = order as f64;
    let log_den = lambda * lambda * (k - 1.0) / (4.0 * (1.0 - eps)) + k * ua_norm.ln();
    (excess.ln() - log_den).exp()
}

/// Largest lemma ratio over traces, `lambdas` and `horizons`. Every horizon
/// must be covered by every trace.
pub fn calibrate_lemma_constant(
    traces: &[Trace],
    eps: f64,
    p: f64,
    lambdas: &[f64],
    horizons: &[f64],
) -> Result<LemmaCalibration> {
    let Some(first) = traces.first() else {
        return Err(Error::DegenerateCalibration("empty ensemble".into()));
    };
    let order = first.spec.order;
    let scaling = first.spec.scaling_data()?;
    let s = scaling.kato_index(p);
    let per_run: Vec<Vec<LemmaSample>> = traces
        .par_iter()
        .enumerate()
        .map(|(run, trace)| {
            let mut out = Vec::new();
            let max_xi = trace.grid().max_magnitude();
            for &horizon in horizons {
                if horizon > trace.horizon() * (1.0 + 1e-12) {
                    return Err(Error::InvalidParameter(format!(
                        "horizon {horizon} beyond trace end {}",
                        trace.horizon()
                    ))
                    .in_run(run.to_string(), "lemma calibration"));
                }
                let heat_norm = heat_flow_kato_norm(trace.initial(), eps, p, s, horizon);
                for &lambda in lambdas {
                    let params = GevreyParams::new(lambda, eps, horizon, p)?;
                    let ua_norm = ua_kato_norm(trace, &params, s)
                        .map_err(|e| e.in_run(run.to_string(), "lemma calibration"))?
                        .value;
                    out.push(LemmaSample {
                        run,
                        lambda,
                        horizon,
                        ua_norm,
                        heat_norm,
                        ratio: lemma_ratio(ua_norm, heat_norm, lambda, eps, order),
                        resolved: params.resolved(max_xi),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let samples: Vec<LemmaSample> = per_run.into_iter().flatten().collect();
    let worst = samples
        .iter()
        .filter(|s| s.resolved)
        .cloned()
        .reduce(|a, b| if b.ratio > a.ratio { b } else { a })
        .ok_or_else(|| Error::DegenerateCalibration("no resolved samples".into()))?;
    if worst.ratio <= 0.0 {
        return Err(Error::DegenerateCalibration(
            "|U_a| never exceeds the heat-flow norm; enlarge the data or the lambda grid".into(),
        ));
    }
    Ok(LemmaCalibration {
        c_lemma: worst.ratio,
        c_small: small_constant(worst.ratio, order)?,
        samples,
        worst,
    })
}

/// Empirical `C_{delta,p}`: the largest heat-flow ratio over an ensemble.
pub fn calibrate_heat_constant(
    fields: &[SpectralField],
    scaling: &ScalingData,
    delta: f64,
    p: f64,
    eps: f64,
    horizons: &[f64],
) -> Result<f64> {
    let ratios = fields
        .par_iter()
        .map(|u| heat_flow_subcritical_bound_constant(u, scaling, delta, p, eps, horizons))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Empirical `K_eps`: the largest `|exp(eps t Lap) u|_{K^p_inf} / |u|_{H^{s_crit}}`
/// over `fields`.
pub fn calibrate_k_eps(fields: &[SpectralField], scaling: &ScalingData, eps: f64, p: f64) -> f64 {
    let s = scaling.kato_index(p);
    fields
        .par_iter()
        .map(|u| {
            let n = sobolev_norm(u, scaling.s_crit);
            if n == 0.0 {
                0.0
            } else {
                heat_flow_kato_norm(u, eps, p, s, f64::INFINITY) / n
            }
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Mode-by-mode bound `(p e eps)^{-1/p}` on `K_eps`.
pub fn k_eps_upper_bound(eps: f64, p: f64) -> f64 {
    (p * std::f64::consts::E * eps).powf(-1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn ratio_vanishes_when_dominated() {
        assert_eq!(lemma_ratio(0.5, 0.6, 1.0, 0.1, 2), 0.0);
        let r = lemma_ratio(2.0, 1.0, 0.0, 0.1, 2);
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn k_eps_below_modewise_bound() {
        let g = make_grid(3, 16, 2.0 * PI, 7.0).unwrap();
        let scaling = crate::models::builtin_navier_stokes(3).unwrap().scaling_data().unwrap();
        let u = SpectralField::from_fn(g.clone(), 3, |m| {
            let r = g.magnitude(m);
            vec![Complex64::new((-r).exp(), 0.0); 3]
        });
        let k = calibrate_k_eps(&[u], &scaling, 0.2, 4.0);
        assert!(k > 0.0 && k <= k_eps_upper_bound(0.2, 4.0) * (1.0 + 1e-9));
    }

    #[test]
    fn mismatch_is_reported() {
        let c = CalibratedConstants::new(2, 0.1, 4.0, 0.5, Provenance::default()).unwrap();
        assert!(c.check_matches(2, 0.1, 4.0).is_ok());
        assert!(matches!(c.check_matches(2, 0.2, 4.0), Err(Error::CalibrationMismatch(_))));
    }
}
