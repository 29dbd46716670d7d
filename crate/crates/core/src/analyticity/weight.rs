use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trace;
use crate::models::ScalingData;
use crate::norms::{kato_sup, log_weighted_norm, KatoNorm};
use crate::spectral::SpectralField;

/// Largest admissible log-amplification `lambda sqrt(T) |xi|` of the weight:
/// coefficients at a relative noise floor of 1e-13 stay below 1e-3 after
/// weighting.
pub const LOG_AMPLIFICATION_LIMIT: f64 = 23.0;

/// Parameters of the comparison function `U_a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GevreyParams {
    pub lambda: f64,
    pub eps: f64,
    pub horizon: f64,
    pub p: f64,
}

impl GevreyParams {
    pub fn new(lambda: f64, eps: f64, horizon: f64, p: f64) -> Result<Self> {
        let params = GevreyParams {
            lambda,
            eps,
            horizon,
            p,
        };
        params.check_ranges()?;
        Ok(params)
    }

    fn check_ranges(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon = {} must be > 0", self.horizon)));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p = {} must be finite and > 0", self.p)));
        }
        Ok(())
    }

    /// Checks `max(2/alpha, k) < p`, which also gives `0 < 2/p < alpha`.
    pub fn validate(&self, scaling: &ScalingData) -> Result<()> {
        self.check_ranges()?;
        let lower = scaling.min_kato_exponent();
        if self.p <= lower || 2.0 / self.p >= scaling.alpha {
            return Err(Error::InvalidParameter(format!(
                "Kato exponent p = {} must exceed max(2/alpha, k) = {lower}",
                self.p
            )));
        }
        Ok(())
    }

    /// `-lambda^2 t / (4 (1 - eps) T) + lambda t |xi| / sqrt(T)`.
    pub fn log_weight(&self, t: f64, xi: f64) -> f64 {
        let l = self.lambda;
        -l * l * t / (4.0 * (1.0 - self.eps) * self.horizon) + l * t * xi / self.horizon.sqrt()
    }

    /// Whether the weight at `t = T` keeps roundoff negligible on a lattice
    /// reaching `max_xi`: `lambda sqrt(T) max_xi <= LOG_AMPLIFICATION_LIMIT`.
    pub fn resolved(&self, max_xi: f64) -> bool {
        self.lambda * self.horizon.sqrt() * max_xi <= LOG_AMPLIFICATION_LIMIT
    }

    /// `lambda^2 / (4 (1 - eps))`.
    pub fn gaussian_exponent(&self) -> f64 {
        self.lambda * self.lambda / (4.0 * (1.0 - self.eps))
    }
}

/// `U_a(t)`: coefficient moduli times `exp(log_weight(t, |xi|))`, a real
/// nonnegative comparison field. Moduli are taken per component.
pub fn gevrey_weight_field(u: &SpectralField, params: &GevreyParams, t: f64) -> Result<SpectralField> {
    params.check_ranges()?;
    if !(0.0..=params.horizon * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "time {t} outside [0, {}]",
            params.horizon
        )));
    }
    let grid = u.grid();
    let mut data = Vec::with_capacity(u.components());
    for comp in u.data() {
        let mut out = Vec::with_capacity(comp.len());
        for (mode, c) in comp.iter().enumerate() {
            let modulus = c.norm();
            if modulus == 0.0 {
                out.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let r = grid.magnitude(mode);
            let lw = params.log_weight(t, r);
            let v = if lw < 700.0 {
                modulus * lw.exp()
            } else {
                (modulus.ln() + lw).exp()
            };
            if !v.is_finite() {
                return Err(Error::Overflow { shell: r });
            }
            out.push(Complex64::new(v, 0.0));
        }
        data.push(out);
    }
    SpectralField::from_components(grid.clone(), data)
}

/// `sup_{t <= T} t^{1/p} |U_a(t)|_{H^s}` over the snapshots in `[0, T]`,
/// evaluated in log space.
pub fn ua_kato_norm(trace: &Trace, params: &GevreyParams, s: f64) -> Result<KatoNorm> {
    params.check_ranges()?;
    let limit = params.horizon * (1.0 + 1e-12);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (&t, u) in trace.times.iter().zip(&trace.snapshots) {
        if t > limit {
            break;
        }
        let (log_norm, shell) = log_weighted_norm(u, s, |r| params.log_weight(t, r));
        let v = log_norm.exp();
        if v.is_infinite() {
            return Err(Error::Overflow { shell });
        }
        times.push(t);
        values.push(v);
    }
    Ok(kato_sup(&times, &values, params.p))
}

/// Worst case of the pointwise inequality
/// `-lambda^2/(4(1-eps)T) + lambda |xi|/sqrt(T) - |xi|^2 <= -eps |xi|^2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub samples: usize,
    pub violations: usize,
    /// `min (rhs - lhs)`; nonnegative when the inequality holds everywhere.
    pub worst_slack: f64,
    pub worst_xi: f64,
    /// `|xi|` where the slack vanishes, `lambda / (2 (1 - eps) sqrt(T))`.
    pub equality_xi: f64,
}

pub fn multiplier_inequality_check(lambda: f64, eps: f64, horizon: f64, xi_samples: &[f64]) -> Result<MultiplierReport> {
    let params = GevreyParams::new(lambda, eps, horizon, 1.0)?;
    let a = params.gaussian_exponent() / horizon;
    let b = lambda / horizon.sqrt();
    let mut report = MultiplierReport {
        samples: xi_samples.len(),
        violations: 0,
        worst_slack: f64::INFINITY,
        worst_xi: f64::NAN,
        equality_xi: lambda / (2.0 * (1.0 - eps) * horizon.sqrt()),
    };
    for &xi in xi_samples {
        let lhs = -a + b * xi - xi * xi;
        let rhs = -eps * xi * xi;
        let slack = rhs - lhs;
        let roundoff = 8.0 * f64::EPSILON * (a + b * xi + xi * xi);
        if slack < -roundoff {
            report.violations += 1;
        }
        if slack < report.worst_slack {
            report.worst_slack = slack;
            report.worst_xi = xi;
        }
    }
    Ok(report)
}
