//! Analyticity-strip fit: `log shell_max(xi) ~ c - a log xi - delta xi [- gamma xi^2]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{shell_decompose, ShellPolicy, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Index of the first shell entering the window.
    pub min_shell: usize,
    /// Noise floor relative to the largest shell maximum in the window.
    pub floor: f64,
    /// Add the `-gamma xi^2` term.
    pub gaussian: bool,
    pub min_shells: usize,
    pub policy: ShellPolicy,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            min_shell: 0,
            floor: 1e-13,
            gaussian: false,
            min_shells: 6,
            policy: ShellPolicy::Unit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub delta_fit: f64,
    pub alpha_fit: f64,
    pub gamma_fit: Option<f64>,
    /// `|xi|` range of the shells used.
    pub window: (f64, f64),
    pub shells: usize,
    /// RMS of the log residuals.
    pub residual: f64,
    pub floor_flag: bool,
}

/// Least-squares fit on explicit `(xi, shell_max)` pairs, in increasing
/// `xi`. Zero entries are skipped; the window ends at the first entry below
/// the floor.
pub fn fit_shell_profile(xi: &[f64], shell_max: &[f64], opts: &FitOptions) -> Result<RadiusEstimate> {
    let pairs: Vec<(f64, f64)> = xi
        .iter()
        .zip(shell_max)
        .skip(opts.min_shell)
        .filter(|(&x, &a)| x > 0.0 && a > 0.0)
        .map(|(&x, &a)| (x, a))
        .collect();
    let top = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    let cut = top * opts.floor;
    let mut window = Vec::new();
    let mut floor_flag = false;
    for &(x, a) in &pairs {
        if a < cut {
            floor_flag = true;
            break;
        }
        window.push((x, a));
    }
    let required = opts.min_shells.max(if opts.gaussian { 4 } else { 3 });
    if window.len() < required {
        return Err(Error::Unresolved {
            usable: window.len(),
            required,
        });
    }
    let cols = if opts.gaussian { 4 } else { 3 };
    let scale = window.last().unwrap().0;
    let a = DMatrix::from_fn(window.len(), cols, |i, j| {
        let x = window[i].0 / scale;
        match j {
            0 => 1.0,
            1 => -x.ln(),
            2 => -x,
            _ => -x * x,
        }
    });
    let b = DVector::from_iterator(window.len(), window.iter().map(|w| w.1.ln()));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidParameter(format!("least squares failed: {e}")))?;
    let residual = ((&a * &coef - &b).norm_squared() / window.len() as f64).sqrt();
    Ok(RadiusEstimate {
        delta_fit: (coef[2] / scale).max(0.0),
        alpha_fit: coef[1],
        gamma_fit: opts.gaussian.then(|| coef[3] / (scale * scale)),
        window: (window[0].0, scale),
        shells: window.len(),
        residual,
        floor_flag,
    })
}

/// Radius estimate from the shell maxima of a field; the abscissa of each
/// shell is the `|xi|` of its maximizing mode.
pub fn estimate_radius(field: &SpectralField, opts: &FitOptions) -> Result<RadiusEstimate> {
    let spectrum = shell_decompose(field, opts.policy);
    fit_shell_profile(&spectrum.argmax_radius, &spectrum.shell_max, opts)
}
