use std::sync::Arc;

use super::Trace;
use crate::error::{Error, Result};
use crate::spectral::{Grid, GridParams, SpectralField};

fn factor_of(lambda: f64) -> Result<usize> {
    let f = lambda.round();
    if (lambda - f).abs() > 1e-12 || f < 1.0 || !(f as usize).is_power_of_two() {
        return Err(Error::IncompatibleScale(lambda));
    }
    Ok(f as usize)
}

fn rescaled_grid(grid: &Grid, lambda: f64) -> Result<Arc<Grid>> {
    let p = grid.params();
    let target = Arc::new(Grid::new(GridParams {
        dim: p.dim,
        points: p.points,
        period: p.period / lambda,
        truncation: p.truncation * lambda,
    })?);
    if target.len() != grid.len() {
        return Err(Error::IncompatibleScale(lambda));
    }
    Ok(target)
}

fn rescale_onto(u: &SpectralField, target: &Arc<Grid>, amplitude: f64) -> SpectralField {
    let mut data = u.data().to_vec();
    for comp in &mut data {
        for c in comp.iter_mut() {
            *c *= amplitude;
        }
    }
    SpectralField::from_components(target.clone(), data).expect("same mode set")
}

/// `lambda^alpha U0(lambda x)`. The result is `L / lambda` periodic and lives
/// on the torus of that side: same lattice indices, wavevectors and
/// truncation radius times `lambda`. `lambda` must be a power of two.
pub fn rescale_data(u0: &SpectralField, lambda: f64, alpha: f64) -> Result<SpectralField> {
    let factor = factor_of(lambda)?;
    if factor == 1 {
        return Ok(u0.clone());
    }
    let target = rescaled_grid(u0.grid(), factor as f64)?;
    Ok(rescale_onto(u0, &target, lambda.powf(alpha)))
}

/// `U_lambda(t, x) = lambda^alpha U(lambda^2 t, lambda x)`: wavevectors move to
/// `lambda xi`, amplitudes scale by `lambda^alpha` and times by `lambda^-2`.
pub fn rescale_solution(trace: &Trace, lambda: f64) -> Result<Trace> {
    let factor = factor_of(lambda)?;
    if factor == 1 {
        return Ok(trace.clone());
    }
    let alpha = trace.spec.scaling_data()?.alpha;
    let target = rescaled_grid(trace.grid(), factor as f64)?;
    let amplitude = lambda.powf(alpha);
    let mut spec = trace.spec.clone();
    spec.truncation_radius = spec.truncation_radius.map(|n| n * lambda);
    Ok(Trace {
        spec,
        times: trace.times.iter().map(|t| t / (lambda * lambda)).collect(),
        snapshots: trace
            .snapshots
            .iter()
            .map(|u| rescale_onto(u, &target, amplitude))
            .collect(),
        diagnostics: trace.diagnostics.clone(),
    })
}
