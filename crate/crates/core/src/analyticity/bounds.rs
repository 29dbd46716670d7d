//! Closed-form radius bounds and threshold times.

use crate::error::{Error, Result};
use crate::norms::heat_flow_kato_norm;
use crate::spectral::SpectralField;

/// `c = (4 C)^{-1/(k-1)}`.
pub fn small_constant(c_lemma: f64, order: u32) -> Result<f64> {
    if !(c_lemma > 0.0 && c_lemma.is_finite()) || order < 2 {
        return Err(Error::DegenerateCalibration(format!(
            "lemma constant {c_lemma} with order {order}"
        )));
    }
    Ok((4.0 * c_lemma).powf(-1.0 / (order as f64 - 1.0)))
}

/// `eta = (c / (2 C_heat))^{2/delta}`.
pub fn eta_constant(c_small: f64, c_heat: f64, delta: f64) -> Result<f64> {
    if !(c_heat > 0.0 && delta > 0.0) {
        return Err(Error::DegenerateCalibration(format!(
            "heat constant {c_heat} with delta {delta}"
        )));
    }
    Ok((c_small / (2.0 * c_heat)).powf(2.0 / delta))
}

/// `T_eps(U0) = eta |U0|^{-2/delta}`.
pub fn t_eps_subcritical(data_norm: f64, delta: f64, eta: f64) -> f64 {
    eta * data_norm.powf(-2.0 / delta)
}

/// `sqrt(2 delta (1 - eps)) log^{1/2}(eta / (T |U0|^{2/delta}))`; zero at the
/// threshold time, an error beyond it.
pub fn lambda_t_subcritical(horizon: f64, data_norm: f64, delta: f64, eps: f64, eta: f64) -> Result<f64> {
    if data_norm == 0.0 {
        return Ok(f64::INFINITY);
    }
    let log_arg = eta.ln() - horizon.ln() - (2.0 / delta) * data_norm.ln();
    if log_arg < -1e-12 {
        return Err(Error::AboveThreshold {
            time: horizon,
            threshold: t_eps_subcritical(data_norm, delta, eta),
        });
    }
    Ok((2.0 * delta * (1.0 - eps) * log_arg.max(0.0)).sqrt())
}

/// `2 (1 - eps)^{1/2} log^{1/2}(c / (2 H))` from a heat-flow Kato norm `H`.
/// Zero for `c/2 <= H <= c`; `H > c` violates admissibility.
pub fn lambda_from_heat_norm(heat_norm: f64, eps: f64, c_small: f64) -> Result<f64> {
    if heat_norm > c_small {
        return Err(Error::Admissibility {
            norm: heat_norm,
            limit: c_small,
        });
    }
    if heat_norm == 0.0 {
        return Ok(f64::INFINITY);
    }
    let log_arg = (c_small / (2.0 * heat_norm)).ln();
    Ok(2.0 * ((1.0 - eps) * log_arg.max(0.0)).sqrt())
}

/// `lambda_T` of the critical case with `H = |exp(eps t Lap) U0|_{K^p_T}` at `s`.
pub fn lambda_t_critical(horizon: f64, u0: &SpectralField, eps: f64, p: f64, s: f64, c_small: f64) -> Result<f64> {
    lambda_from_heat_norm(heat_flow_kato_norm(u0, eps, p, s, horizon), eps, c_small)
}

/// Largest `T <= t_max` with `|exp(eps t Lap) U0|_{K^p_T} <= c / 2`, by
/// bisection in `log T` on the nondecreasing map `T -> H_T`.
pub fn t_eps_critical(u0: &SpectralField, eps: f64, p: f64, s: f64, c_small: f64, t_max: f64) -> Result<f64> {
    let target = 0.5 * c_small;
    let h = |t: f64| heat_flow_kato_norm(u0, eps, p, s, t);
    if h(t_max) <= target {
        return Ok(t_max);
    }
    let mut lo = t_max;
    let mut steps = 0;
    while h(lo) > target {
        lo *= 0.1;
        steps += 1;
        if steps > 60 {
            return Err(Error::ThresholdNotReached {
                threshold: target,
                horizon: lo,
                last: h(lo),
            });
        }
    }
    let (mut a, mut b) = (lo.ln(), (lo * 10.0).ln());
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if h(m.exp()) <= target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a.exp())
}

/// Uniform lower bound `2 (1 - eps)^{1/2} log^{1/2}(c / (2 K |u(t0)|))` of the
/// shifted construction.
pub fn corollary_lambda(c_small: f64, k_eps: f64, norm_at_t0: f64, eps: f64) -> Result<f64> {
    let limit = c_small / (2.0 * k_eps);
    if norm_at_t0 > limit {
        return Err(Error::Admissibility {
            norm: norm_at_t0,
            limit,
        });
    }
    if norm_at_t0 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * ((1.0 - eps) * (limit / norm_at_t0).ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn constant_arithmetic() {
        assert!((small_constant(0.5, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((small_constant(0.25, 3).unwrap() - 1.0).abs() < 1e-15);
        assert!(small_constant(0.0, 2).is_err());
    }

    #[test]
    fn subcritical_anchor_points() {
        let (delta, eps, eta, norm) = (0.5, 0.1, 1.0, 1.0);
        let t_eps = t_eps_subcritical(norm, delta, eta);
        assert_eq!(lambda_t_subcritical(t_eps, norm, delta, eps, eta).unwrap(), 0.0);
        let l = lambda_t_subcritical(t_eps / E, norm, delta, eps, eta).unwrap();
        assert!((l - (2.0 * delta * (1.0 - eps)).sqrt()).abs() < 1e-14);
        let l = lambda_t_subcritical((-4f64).exp(), norm, delta, eps, eta).unwrap();
        assert!((l - 0.9f64.sqrt() * 2.0).abs() < 1e-14);
        assert!((l - 1.897).abs() < 1e-3);
        assert!(matches!(
            lambda_t_subcritical(2.0 * t_eps, norm, delta, eps, eta),
            Err(Error::AboveThreshold { .. })
        ));
    }

    #[test]
    fn critical_anchor_points() {
        let (c, eps) = (0.8, 0.3);
        assert_eq!(lambda_from_heat_norm(c / 2.0, eps, c).unwrap(), 0.0);
        let l = lambda_from_heat_norm(c / (2.0 * E), eps, c).unwrap();
        assert!((l - 2.0 * (1.0 - eps).sqrt()).abs() < 1e-14);
        assert_eq!(lambda_from_heat_norm(0.9 * c, eps, c).unwrap(), 0.0);
        assert!(matches!(lambda_from_heat_norm(1.1 * c, eps, c), Err(Error::Admissibility { .. })));
    }

    #[test]
    fn lambda_decreases_in_horizon() {
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let t = 1e-4 * 1.5f64.powi(i);
            let l = lambda_t_subcritical(t, 2.0, 0.25, 0.1, 1.0).unwrap_or(0.0);
            assert!(l <= last);
            last = l;
        }
    }
}
