//! Norm functionals: homogeneous Sobolev, Gevrey-weighted Sobolev, the
//! Kato norm `sup_{t <= T} t^{1/p} |U(t)|_{H^s}`, the heat-flow Kato norm of
//! initial data, the dyadic `E^q_T` norm and the product-law ratio.
//!
//! All lattice sums carry the weight `(L / 2 pi)^d` (see `Grid::norm_weight`)
//! and exclude the zero mode.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trace;
use crate::models::ScalingData;
use crate::spectral::{dealiased_product, shell_map, ShellPolicy, SpectralField};

/// `(sum_{xi != 0} |xi|^{2s} |c(xi)|^2 (2 pi / L)^d)^{1/2}`.
pub fn sobolev_norm(field: &SpectralField, s: f64) -> f64 {
    let grid = field.grid();
    let mut acc = 0.0;
    for mode in 0..grid.len() {
        let r = grid.magnitude(mode);
        if r == 0.0 {
            continue;
        }
        let e = field.mode_energy(mode);
        if e == 0.0 {
            continue;
        }
        acc += r.powf(2.0 * s) * e;
    }
    (acc * grid.norm_weight()).sqrt()
}

/// Natural log of `(sum |xi|^{2s} exp(2 w(|xi|)) |c|^2 w)^{1/2}` evaluated
/// without forming the exponential weights. Returns the log-norm and the
/// `|xi|` of the largest term; `-inf` for a field vanishing off zero.
pub fn log_weighted_norm(field: &SpectralField, s: f64, log_weight: impl Fn(f64) -> f64) -> (f64, f64) {
    let grid = field.grid();
    let mut logs = Vec::with_capacity(grid.len());
    let mut top = f64::NEG_INFINITY;
    let mut top_r = 0.0;
    for mode in 0..grid.len() {
        let r = grid.magnitude(mode);
        let e = field.mode_energy(mode);
        if r == 0.0 || e == 0.0 {
            continue;
        }
        let l = e.ln() + 2.0 * s * r.ln() + 2.0 * log_weight(r);
        if l > top {
            top = l;
            top_r = r;
        }
        logs.push(l);
    }
    if logs.is_empty() {
        return (f64::NEG_INFINITY, 0.0);
    }
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    (0.5 * (top + sum.ln() + grid.norm_weight().ln()), top_r)
}

/// Sobolev norm of `exp(sigma |D|) U` at index `s`, computed in log space.
pub fn gevrey_norm(field: &SpectralField, sigma: f64, s: f64) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("Gevrey weight {sigma} must be >= 0")));
    }
    let (log_norm, shell) = log_weighted_norm(field, s, |r| sigma * r);
    let value = log_norm.exp();
    if value.is_infinite() {
        return Err(Error::Overflow { shell });
    }
    Ok(value)
}

/// A time-indexed series of norm values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormSeries {
    pub norm_id: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl NormSeries {
    pub const CSV_HEADER: &'static str = "time,value,norm_id";

    /// CSV with header `time,value,norm_id`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{t:e},{v:e},{}", self.norm_id);
        }
        out
    }

    pub fn sobolev(trace: &Trace, s: f64) -> Self {
        NormSeries {
            norm_id: format!("sobolev(s={s})"),
            times: trace.times.clone(),
            values: trace.snapshots.iter().map(|u| sobolev_norm(u, s)).collect(),
        }
    }
}

/// Kato norm with its maximizing sample.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KatoNorm {
    pub value: f64,
    pub argmax_time: f64,
    /// Set when the maximum sits at the first positive sample or the last
    /// sample, i.e. the snapshot grid may not resolve the supremum.
    pub endpoint_warning: bool,
}

fn time_weight(t: f64, p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        t.powf(1.0 / p)
    }
}

/// `max_i t_i^{1/p} values_i` over samples; `p = inf` drops the time weight.
pub fn kato_sup(times: &[f64], values: &[f64], p: f64) -> KatoNorm {
    let mut best = KatoNorm {
        value: 0.0,
        argmax_time: 0.0,
        endpoint_warning: false,
    };
    let mut best_index = None;
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        let w = time_weight(t, p) * v;
        if w > best.value {
            best.value = w;
            best.argmax_time = t;
            best_index = Some(i);
        }
    }
    if let Some(i) = best_index {
        let last = i + 1 == times.len();
        let first = p.is_finite() && times.iter().position(|&t| t > 0.0) == Some(i);
        best.endpoint_warning = last || first;
    }
    best
}

/// `sup_{t_i} t_i^{1/p} |U(t_i)|_{H^s}` over the snapshots of a trace.
pub fn kato_norm(trace: &Trace, p: f64, s: f64) -> KatoNorm {
    let values: Vec<f64> = trace.snapshots.iter().map(|u| sobolev_norm(u, s)).collect();
    kato_sup(&trace.times, &values, p)
}

/// Running Kato norm `T -> |U|_{K^p_T}` at each snapshot time.
pub fn kato_norm_series(trace: &Trace, p: f64, s: f64) -> NormSeries {
    let mut running: f64 = 0.0;
    let values = trace
        .times
        .iter()
        .zip(&trace.snapshots)
        .map(|(&t, u)| {
            running = running.max(time_weight(t, p) * sobolev_norm(u, s));
            running
        })
        .collect();
    NormSeries {
        norm_id: format!("kato(p={p},s={s})"),
        times: trace.times.clone(),
        values,
    }
}

/// Squared-magnitude groups of an initial datum: `(|xi|^2, sum |xi|^{2s} |c|^2 w)`.
fn heat_profile(u0: &SpectralField, s: f64) -> Vec<(f64, f64)> {
    let grid = u0.grid();
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for mode in 0..grid.len() {
        let r = grid.magnitude(mode);
        let e = u0.mode_energy(mode);
        if r == 0.0 || e == 0.0 {
            continue;
        }
        groups.push((r * r, r.powf(2.0 * s) * e * grid.norm_weight()));
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (k2, w) in groups {
        match merged.last_mut() {
            Some(last) if (last.0 - k2).abs() <= 1e-12 * k2 => last.1 += w,
            _ => merged.push((k2, w)),
        }
    }
    merged
}

fn heat_value(profile: &[(f64, f64)], eps: f64, p: f64, t: f64) -> f64 {
    let sum: f64 = profile.iter().map(|(k2, w)| w * (-2.0 * eps * t * k2).exp()).sum();
    time_weight(t, p) * sum.sqrt()
}

/// `sup_{0 < t <= T} t^{1/p} |exp(eps t Lap) U0|_{H^s}` (T may be infinite).
///
/// On `t < 1/(p eps max|xi|^2)` the map is increasing and on
/// `t > 1/(p eps min|xi|^2)` decreasing, so the supremum is located on that
/// window by log-spaced sampling (64 per decade) followed by golden-section
/// refinement around the discrete maximum.
pub fn heat_flow_kato_norm(u0: &SpectralField, eps: f64, p: f64, s: f64, horizon: f64) -> f64 {
    heat_flow_kato_argmax(u0, eps, p, s, horizon).0
}

/// As [`heat_flow_kato_norm`], also returning the maximizing time.
pub fn heat_flow_kato_argmax(u0: &SpectralField, eps: f64, p: f64, s: f64, horizon: f64) -> (f64, f64) {
    let profile = heat_profile(u0, s);
    if profile.is_empty() || horizon <= 0.0 {
        return (0.0, 0.0);
    }
    if p.is_infinite() {
        let total: f64 = profile.iter().map(|(_, w)| w).sum();
        return (total.sqrt(), 0.0);
    }
    let k2_min = profile[0].0;
    let k2_max = profile[profile.len() - 1].0;
    let t_hi = horizon.min(1.0 / (p * eps * k2_min));
    let t_lo = t_hi.min(1.0 / (p * eps * k2_max));
    let decades = (t_hi / t_lo).log10();
    let count = ((decades * 64.0).ceil() as usize).max(1);
    let sample = |i: usize| t_lo * 10f64.powf(decades * i as f64 / count as f64);
    let mut best = (heat_value(&profile, eps, p, t_lo), t_lo, 0usize);
    for i in 1..=count {
        let t = if i == count { t_hi } else { sample(i) };
        let v = heat_value(&profile, eps, p, t);
        if v > best.0 {
            best = (v, t, i);
        }
    }
    if count == 1 {
        return (best.0, best.1);
    }
    let lo = sample(best.2.saturating_sub(1)).ln();
    let hi = if best.2 + 1 >= count { t_hi } else { sample(best.2 + 1) }.ln();
    let f = |x: f64| heat_value(&profile, eps, p, x.exp());
    let (x, v) = golden_max(f, lo, hi, 60);
    if v > best.0 {
        (v, x.exp())
    } else {
        (best.0, best.1)
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Empirical constant of `|exp(eps t Lap) U0|_{K^p_T} <= C T^{delta/2} |U0|_{H^{s_crit + delta}}`:
/// the largest ratio over `horizons`.
pub fn heat_flow_subcritical_bound_constant(
    u0: &SpectralField,
    scaling: &ScalingData,
    delta: f64,
    p: f64,
    eps: f64,
    horizons: &[f64],
) -> Result<f64> {
    if !(delta >= 1e-6 && delta < scaling.alpha) {
        return Err(Error::InvalidParameter(format!(
            "regularity gain delta = {delta} must lie in (0, {})",
            scaling.alpha
        )));
    }
    let data_norm = sobolev_norm(u0, scaling.s_crit + delta);
    if data_norm == 0.0 {
        return Ok(0.0);
    }
    let s = scaling.kato_index(p);
    Ok(horizons
        .iter()
        .map(|&t| heat_flow_kato_norm(u0, eps, p, s, t) / (t.powf(0.5 * delta) * data_norm))
        .fold(0.0, f64::max))
}

/// `|| 2^{j(1/2 + 2/q)} |Delta_j V|_{L^q([0,T]; L^2)} ||_{l^2(j)}` with the
/// time integral by the trapezoid rule on the snapshot grid (max for
/// `q = inf`).
pub fn dyadic_eq_norm(trace: &Trace, q: f64) -> f64 {
    let Some(first) = trace.snapshots.first() else {
        return 0.0;
    };
    let grid = first.grid();
    let map = shell_map(grid, ShellPolicy::Dyadic);
    let shells = map.labels.len();
    let weight = grid.norm_weight();
    let per_time: Vec<Vec<f64>> = trace
        .snapshots
        .iter()
        .map(|u| {
            let mut e = vec![0.0; shells];
            for (mode, shell) in map.of_mode.iter().enumerate() {
                if let Some(s) = shell {
                    e[*s] += u.mode_energy(mode);
                }
            }
            e.into_iter().map(|v| (v * weight).sqrt()).collect()
        })
        .collect();
    let mut total = 0.0;
    for (s, &label) in map.labels.iter().enumerate() {
        let series: Vec<f64> = per_time.iter().map(|e| e[s]).collect();
        let lq = if q.is_infinite() {
            series.iter().cloned().fold(0.0, f64::max)
        } else {
            let mut integral = 0.0;
            for i in 1..series.len() {
                let h = trace.times[i] - trace.times[i - 1];
                integral += 0.5 * h * (series[i].powf(q) + series[i - 1].powf(q));
            }
            integral.powf(1.0 / q)
        };
        let weight = 2f64.powf(label as f64 * (0.5 + 2.0 / q));
        total += (weight * lq).powi(2);
    }
    total.sqrt()
}

/// `|prod a_i|_{H^{ks - (k-1) d/2}} / prod |a_i|_{H^s}` for `d/2 - d/k < s < d/2`.
pub fn product_law_ratio(s: f64, fields: &[&SpectralField]) -> Result<f64> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidParameter("product law needs at least one field".into()))?;
    let k = fields.len() as f64;
    let d = first.grid().dim() as f64;
    let (lower, upper) = (d / 2.0 - d / k, d / 2.0);
    if !(s > lower && s < upper) {
        return Err(Error::IndexOutOfRange { s, lower, upper });
    }
    let product = dealiased_product(fields)?;
    let numerator = sobolev_norm(&product, k * s - (k - 1.0) * d / 2.0);
    let denominator: f64 = fields.iter().map(|f| sobolev_norm(f, s)).product();
    if denominator == 0.0 {
        return Err(Error::InvalidParameter("product law ratio of a zero field".into()));
    }
    Ok(numerator / denominator)
}
