//! Fixed-point iteration on the Duhamel form
//! `U(t) = exp(t Lap) U0 + int_0^t exp((t - s) Lap) P_n(U(s)) ds`.
//!
//! The time integral uses product integration on the sample grid: `P_n(U)`
//! is interpolated linearly between samples and integrated exactly against
//! the heat kernel, so stiffness costs no accuracy. The truncated
//! nonlinearity is bounded at `s = 0`, hence no endpoint-singular weights
//! are needed.

use super::etd::{lincomb, LinearGroups};
use super::{heat_flow_trace, phi123, StepDiagnostics, Trace};
use crate::error::{Error, Result};
use crate::models::{Nonlinearity, SystemSpec};
use crate::norms::sobolev_norm;
use crate::spectral::SpectralField;

#[derive(Clone, Debug)]
pub struct PicardOptions {
    /// Kato exponent `p` of the distance `sup t^{1/p} |.|_{H^{s_crit + 2/p}}`.
    pub p: f64,
    /// Sample times, starting at 0.
    pub times: Vec<f64>,
    pub max_iters: usize,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub trace: Trace,
    pub iterations: usize,
    /// Kato distance between successive iterates.
    pub distances: Vec<f64>,
    /// Ratios of successive distances.
    pub ratios: Vec<f64>,
}

impl PicardOutcome {
    /// Largest observed ratio of successive distances (0 if fewer than two).
    pub fn contraction_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(0.0, f64::max)
    }
}

fn kato_distance(a: &[SpectralField], b: &[SpectralField], times: &[f64], p: f64, s: f64) -> f64 {
    a.iter()
        .zip(b)
        .zip(times)
        .map(|((x, y), &t)| t.powf(1.0 / p) * sobolev_norm(&x.sub(y), s))
        .fold(0.0, f64::max)
}

pub fn picard_solve(spec: &SystemSpec, u0: &SpectralField, opts: &PicardOptions) -> Result<PicardOutcome> {
    let times = &opts.times;
    if times.first() != Some(&0.0) || times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "Picard time grid must start at 0 and increase strictly".into(),
        ));
    }
    let scaling = spec.scaling_data()?;
    let s = scaling.kato_index(opts.p);
    let nonlinearity = Nonlinearity::new(spec, u0.grid().clone())?;
    let groups = LinearGroups::new(u0.grid());
    // per-interval kernel weights: decay, left weight, right weight
    let weights: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = times
        .windows(2)
        .map(|w| {
            let h = w[1] - w[0];
            let e = groups.map(|k2| (-h * k2).exp());
            let phis: Vec<[f64; 3]> = groups.k2.iter().map(|&k2| phi123(-h * k2)).collect();
            let left = phis.iter().map(|p| h * (p[0] - p[1])).collect();
            let right = phis.iter().map(|p| h * p[1]).collect();
            (e, left, right)
        })
        .collect();

    let heat = heat_flow_trace(spec, u0, times)?.snapshots;
    let mut current = heat.clone();
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut growth = 0;
    let mut evals = 0;

    for iteration in 1..=opts.max_iters {
        let forcing = current
            .iter()
            .map(|u| nonlinearity.eval(u))
            .collect::<Result<Vec<_>>>()?;
        evals += forcing.len();
        let mut next = Vec::with_capacity(times.len());
        let mut integral = SpectralField::zeros(u0.grid().clone(), u0.components());
        next.push(heat[0].clone());
        for (i, (e, left, right)) in weights.iter().enumerate() {
            integral = lincomb(
                &groups,
                &[
                    (Some(e), 1.0, &integral),
                    (Some(left), 1.0, &forcing[i]),
                    (Some(right), 1.0, &forcing[i + 1]),
                ],
            );
            let mut u = heat[i + 1].clone();
            u.axpy(1.0, &integral);
            next.push(u);
        }
        let distance = kato_distance(&next, &current, times, opts.p, s);
        if let Some(&prev) = distances.last() {
            let ratio = if prev > 0.0 { distance / prev } else { 0.0 };
            ratios.push(ratio);
            if distance > prev {
                growth += 1;
                if growth >= 3 {
                    return Err(Error::NonContraction { ratio, iteration });
                }
            } else {
                growth = 0;
            }
        }
        distances.push(distance);
        current = next;
        if distance < opts.tol {
            return Ok(PicardOutcome {
                trace: Trace {
                    spec: spec.clone(),
                    times: times.clone(),
                    snapshots: current,
                    diagnostics: StepDiagnostics {
                        steps: iteration,
                        rejected: 0,
                        nonlinear_evals: evals,
                        dts: Vec::new(),
                    },
                },
                iterations: iteration,
                distances,
                ratios,
            });
        }
        if !distance.is_finite() {
            return Err(Error::NonContraction {
                ratio: f64::INFINITY,
                iteration,
            });
        }
    }
    Err(Error::PicardNotConverged {
        iterations: opts.max_iters,
        distance: *distances.last().unwrap_or(&f64::NAN),
    })
}

/// Largest horizon (by bisection in `log T` between `lower` and `upper`)
/// on which Picard iteration converges; the grid at each trial is
/// `time_grid(T)`. Used when no explicit existence time is available.
pub fn find_contraction_horizon(
    spec: &SystemSpec,
    u0: &SpectralField,
    p: f64,
    lower: f64,
    upper: f64,
    bisections: usize,
    time_grid: impl Fn(f64) -> Vec<f64>,
) -> Result<f64> {
    let converges = |t: f64| {
        let opts = PicardOptions {
            p,
            times: time_grid(t),
            max_iters: 60,
            tol: 1e-10 * (1.0 + sobolev_norm(u0, spec.scaling_data().map(|s| s.s_crit).unwrap_or(0.0))),
        };
        picard_solve(spec, u0, &opts).is_ok()
    };
    if !converges(lower) {
        return Err(Error::InvalidParameter(format!(
            "Picard iteration does not converge even on T = {lower:e}"
        )));
    }
    if converges(upper) {
        return Ok(upper);
    }
    let (mut lo, mut hi) = (lower.ln(), upper.ln());
    for _ in 0..bisections {
        let mid = 0.5 * (lo + hi);
        if converges(mid.exp()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.exp())
}
