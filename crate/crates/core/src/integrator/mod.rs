//! Time integration of the truncated system. The heat semigroup is applied
//! exactly (exponential time differencing or integrating factor), so only
//! the nonlinearity is approximated.

mod etd;
mod picard;
mod rescale;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Nonlinearity, SystemSpec};
use crate::norms::sobolev_norm;
use crate::spectral::SpectralField;

use etd::{lincomb, EtdCoefficients, IfCoefficients, LinearGroups};

pub(crate) use etd::phi123;
pub use picard::{find_contraction_horizon, picard_solve, PicardOptions, PicardOutcome};
pub use rescale::{rescale_data, rescale_solution};
pub use trace::{read_trace, write_trace, StepDiagnostics, Trace, TraceIndex, TRACE_MAGIC, TRACE_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Etdrk4,
    IfRk4,
}

/// Which sample times a run records, besides `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SnapshotPolicy {
    /// Log-spaced from `first` to the horizon, `per_decade` samples per decade.
    LogSpaced { first: f64, per_decade: usize },
    /// Explicit increasing positive times; the horizon is appended if absent.
    Explicit { times: Vec<f64> },
}

impl SnapshotPolicy {
    pub fn times(&self, horizon: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0];
        match self {
            SnapshotPolicy::LogSpaced { first, per_decade } => {
                out.extend(log_spaced(*first, horizon, *per_decade)?);
            }
            SnapshotPolicy::Explicit { times } => {
                for &t in times {
                    if t > 0.0 && t < horizon * (1.0 - 1e-14) {
                        out.push(t);
                    }
                }
                out.push(horizon);
            }
        }
        if out.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("snapshot times must increase strictly".into()));
        }
        Ok(out)
    }
}

/// Log-spaced times in `[first, last]`, both included.
pub fn log_spaced(first: f64, last: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(first > 0.0 && last >= first && per_decade > 0) {
        return Err(Error::InvalidParameter(format!(
            "log spacing needs 0 < first <= last and per_decade > 0 (got {first}, {last}, {per_decade})"
        )));
    }
    let decades = (last / first).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    if n == 0 {
        return Ok(vec![last]);
    }
    let mut out: Vec<f64> = (0..n).map(|i| first * 10f64.powf(decades * i as f64 / n as f64)).collect();
    out.push(last);
    Ok(out)
}

/// Union of a log-spaced grid and `uniform` equal steps on `(0, horizon]`,
/// merged and deduplicated.
pub fn dense_times(first: f64, per_decade: usize, uniform: usize, horizon: f64) -> Result<Vec<f64>> {
    let mut t = log_spaced(first, horizon, per_decade)?;
    t.extend((1..=uniform).map(|i| horizon * i as f64 / uniform as f64));
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    Ok(t)
}

/// Abort when the `H^{s_crit + 2/p}` norm exceeds `factor` times its
/// initial value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupGuard {
    pub factor: f64,
    /// Kato exponent; defaults to `2 max(2/alpha, k)`.
    #[serde(default)]
    pub p: Option<f64>,
}

impl Default for BlowupGuard {
    fn default() -> Self {
        BlowupGuard { factor: 1e6, p: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOptions {
    pub scheme: Scheme,
    /// Base (maximal) step.
    pub dt: f64,
    /// Relative local error tolerance for step-doubling control; `None`
    /// runs with fixed steps.
    #[serde(default)]
    pub tolerance: Option<f64>,
    pub horizon: f64,
    pub snapshots: SnapshotPolicy,
    #[serde(default)]
    pub guard: Option<BlowupGuard>,
}

impl IntegratorOptions {
    /// ETDRK4 with fixed step `dt`, 16 log-spaced snapshots per decade from
    /// `horizon * 1e-6` and the default blow-up guard.
    pub fn new(horizon: f64, dt: f64) -> Self {
        IntegratorOptions {
            scheme: Scheme::Etdrk4,
            dt,
            tolerance: None,
            horizon,
            snapshots: SnapshotPolicy::LogSpaced {
                first: horizon * 1e-6,
                per_decade: 16,
            },
            guard: Some(BlowupGuard::default()),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_snapshots(mut self, snapshots: SnapshotPolicy) -> Self {
        self.snapshots = snapshots;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn without_guard(mut self) -> Self {
        self.guard = None;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0) {
                return Err(Error::InvalidParameter("tolerance must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One-step map for a fixed system and grid, caching the linear
/// coefficients of the most recent step size.
pub struct Stepper {
    nonlinearity: Nonlinearity,
    groups: LinearGroups,
    scheme: Scheme,
    etd: Option<EtdCoefficients>,
    ifc: Option<IfCoefficients>,
    pub evals: usize,
}

impl Stepper {
    pub fn new(spec: &SystemSpec, u0: &SpectralField, scheme: Scheme) -> Result<Self> {
        let nonlinearity = Nonlinearity::new(spec, u0.grid().clone())?;
        if u0.components() != spec.components {
            return Err(Error::InvalidSystem(format!(
                "initial data has {} components, system has {}",
                u0.components(),
                spec.components
            )));
        }
        Ok(Stepper {
            groups: LinearGroups::new(u0.grid()),
            nonlinearity,
            scheme,
            etd: None,
            ifc: None,
            evals: 0,
        })
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    fn eval(&mut self, u: &SpectralField) -> Result<SpectralField> {
        self.evals += 1;
        self.nonlinearity.eval(u)
    }

    /// Advance `u` by `h`.
    pub fn step(&mut self, u: &SpectralField, h: f64) -> Result<SpectralField> {
        match self.scheme {
            Scheme::Etdrk4 => self.step_etdrk4(u, h),
            Scheme::IfRk4 => self.step_ifrk4(u, h),
        }
    }

    fn step_etdrk4(&mut self, u: &SpectralField, h: f64) -> Result<SpectralField> {
        if self.etd.as_ref().is_none_or(|c| c.h != h) {
            self.etd = Some(EtdCoefficients::new(&self.groups, h));
        }
        if self.nonlinearity.is_zero() {
            let c = self.etd.as_ref().unwrap();
            return Ok(lincomb(&self.groups, &[(Some(&c.e), 1.0, u)]));
        }
        let nu = self.eval(u)?;
        let c = self.etd.as_ref().unwrap();
        let a = lincomb(&self.groups, &[(Some(&c.e2), 1.0, u), (Some(&c.q), 1.0, &nu)]);
        let na = self.eval(&a)?;
        let c = self.etd.as_ref().unwrap();
        let b = lincomb(&self.groups, &[(Some(&c.e2), 1.0, u), (Some(&c.q), 1.0, &na)]);
        let nb = self.eval(&b)?;
        let c = self.etd.as_ref().unwrap();
        let cc = lincomb(
            &self.groups,
            &[(Some(&c.e2), 1.0, &a), (Some(&c.q), 2.0, &nb), (Some(&c.q), -1.0, &nu)],
        );
        let nc = self.eval(&cc)?;
        let c = self.etd.as_ref().unwrap();
        Ok(lincomb(
            &self.groups,
            &[
                (Some(&c.e), 1.0, u),
                (Some(&c.f1), 1.0, &nu),
                (Some(&c.f2), 2.0, &na),
                (Some(&c.f2), 2.0, &nb),
                (Some(&c.f3), 1.0, &nc),
            ],
        ))
    }

    fn step_ifrk4(&mut self, u: &SpectralField, h: f64) -> Result<SpectralField> {
        if self.ifc.as_ref().is_none_or(|c| c.h != h) {
            self.ifc = Some(IfCoefficients::new(&self.groups, h));
        }
        if self.nonlinearity.is_zero() {
            let c = self.ifc.as_ref().unwrap();
            return Ok(lincomb(&self.groups, &[(Some(&c.e), 1.0, u)]));
        }
        let k1 = self.eval(u)?;
        let c = self.ifc.as_ref().unwrap();
        let a = lincomb(&self.groups, &[(Some(&c.e2), 1.0, u), (Some(&c.e2), 0.5 * h, &k1)]);
        let k2 = self.eval(&a)?;
        let c = self.ifc.as_ref().unwrap();
        let b = lincomb(&self.groups, &[(Some(&c.e2), 1.0, u), (None, 0.5 * h, &k2)]);
        let k3 = self.eval(&b)?;
        let c = self.ifc.as_ref().unwrap();
        let cc = lincomb(&self.groups, &[(Some(&c.e), 1.0, u), (Some(&c.e2), h, &k3)]);
        let k4 = self.eval(&cc)?;
        let c = self.ifc.as_ref().unwrap();
        Ok(lincomb(
            &self.groups,
            &[
                (Some(&c.e), 1.0, u),
                (Some(&c.e), h / 6.0, &k1),
                (Some(&c.e2), h / 3.0, &k2),
                (Some(&c.e2), h / 3.0, &k3),
                (None, h / 6.0, &k4),
            ],
        ))
    }
}

fn check_initial_data(spec: &SystemSpec, u0: &SpectralField) -> Result<()> {
    if u0.hermitian_defect() > 1e-10 {
        return Err(Error::InvalidParameter("initial data is not Hermitian-symmetric".into()));
    }
    if spec.terms.iter().any(|t| matches!(t.symbol, crate::models::Symbol::LerayDivergence { .. })) {
        let scale = u0.max_abs().max(f64::MIN_POSITIVE);
        let div = u0.divergence()?.max_abs() / scale;
        if div > 1e-10 || !u0.is_mean_free(1e-14 * scale) {
            return Err(Error::InvalidParameter(
                "Navier-Stokes data must be mean-free and divergence-free".into(),
            ));
        }
    }
    Ok(())
}

/// Integrate the truncated system from `u0` over `[0, opts.horizon]`,
/// recording snapshots per `opts.snapshots`.
pub fn integrate(spec: &SystemSpec, u0: &SpectralField, opts: &IntegratorOptions) -> Result<Trace> {
    opts.validate()?;
    check_initial_data(spec, u0)?;
    let scaling = spec.scaling_data()?;
    let times = opts.snapshots.times(opts.horizon)?;
    let mut stepper = Stepper::new(spec, u0, opts.scheme)?;

    let guard = opts.guard.map(|g| {
        let p = g.p.unwrap_or(2.0 * scaling.min_kato_exponent());
        let s = scaling.kato_index(p);
        (s, g.factor * sobolev_norm(u0, s))
    });
    let check_guard = |u: &SpectralField, t: f64| -> Result<()> {
        if let Some((s, ceiling)) = guard {
            if ceiling > 0.0 {
                let norm = sobolev_norm(u, s);
                if !(norm <= ceiling) {
                    return Err(Error::BlowUp { time: t, norm, ceiling });
                }
            }
        }
        Ok(())
    };

    let mut diagnostics = StepDiagnostics::default();
    let mut snapshots = vec![u0.clone()];
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut h_adapt = opts.dt;

    for &target in &times[1..] {
        match opts.tolerance {
            None => {
                let n = (((target - t) / opts.dt) - 1e-9).ceil().max(1.0) as usize;
                let h = (target - t) / n as f64;
                for _ in 0..n {
                    u = stepper.step(&u, h)?;
                    diagnostics.steps += 1;
                    diagnostics.dts.push(h);
                    t += h;
                    check_guard(&u, t)?;
                }
            }
            Some(tol) => {
                while target - t > 1e-14 * target {
                    let mut h = h_adapt.min(opts.dt);
                    let landing = h >= target - t;
                    if landing {
                        h = target - t;
                    }
                    if h < 1e-14 * target.max(1e-300) {
                        return Err(Error::StepUnderflow { time: t, dt: h });
                    }
                    let full = stepper.step(&u, h)?;
                    let half = stepper.step(&u, 0.5 * h)?;
                    let two = stepper.step(&half, 0.5 * h)?;
                    let err = two.distance(&full) / two.l2().max(f64::MIN_POSITIVE);
                    let factor = if err == 0.0 { 2.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 2.0) };
                    if err <= tol {
                        u = two;
                        t = if landing { target } else { t + h };
                        diagnostics.steps += 1;
                        diagnostics.dts.push(h);
                        check_guard(&u, t)?;
                        if !landing {
                            h_adapt = h * factor;
                        }
                    } else {
                        diagnostics.rejected += 1;
                        h_adapt = h * factor;
                    }
                }
            }
        }
        t = target;
        snapshots.push(u.clone());
    }
    diagnostics.nonlinear_evals = stepper.evals;
    Ok(Trace {
        spec: spec.clone(),
        times,
        snapshots,
        diagnostics,
    })
}

/// The exact heat flow `exp(t Lap) U0` sampled at `times`.
pub fn heat_flow_trace(spec: &SystemSpec, u0: &SpectralField, times: &[f64]) -> Result<Trace> {
    let snapshots = times
        .iter()
        .map(|&t| u0.apply_multiplier(crate::spectral::heat_symbol(t), num_complex::Complex64::new(1.0, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trace {
        spec: spec.clone(),
        times: times.to_vec(),
        snapshots,
        diagnostics: StepDiagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spacing_endpoints() {
        let t = log_spaced(1e-4, 1.0, 16).unwrap();
        assert_eq!(t.len(), 65);
        assert!((t[0] - 1e-4).abs() < 1e-18);
        assert_eq!(*t.last().unwrap(), 1.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn explicit_policy_appends_horizon() {
        let p = SnapshotPolicy::Explicit { times: vec![0.1, 0.5] };
        assert_eq!(p.times(1.0).unwrap(), vec![0.0, 0.1, 0.5, 1.0]);
        let bad = SnapshotPolicy::Explicit { times: vec![0.5, 0.1] };
        assert!(bad.times(1.0).is_err());
    }

    #[test]
    fn dense_times_merge() {
        let t = dense_times(1e-3, 4, 10, 1.0).unwrap();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!(t.contains(&0.5));
        assert_eq!(*t.last().unwrap(), 1.0);
    }
}
