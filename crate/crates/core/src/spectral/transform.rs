use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = planner().lock().expect("fft planner poisoned");
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

/// Unnormalized in-place d-dimensional FFT of a row-major `size^dim` array
/// (axis 0 slowest). Always single-threaded, so results are bit-identical
/// from run to run.
pub(crate) fn fft_nd(buf: &mut [Complex64], size: usize, dim: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), size.pow(dim as u32));
    let fft = plan(size, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::new(0.0, 0.0); size];
    for axis in 0..dim {
        let stride = size.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            for chunk in buf.chunks_exact_mut(size) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * size;
        for outer in (0..buf.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    buf[base + k * stride] = *v;
                }
            }
        }
    }
}

fn flat_index(m: &[i64], size: usize) -> usize {
    m.iter()
        .fold(0usize, |acc, &mi| acc * size + mi.rem_euclid(size as i64) as usize)
}

/// Synthesize `sum_m c_m exp(i m . x)` on a `size^d` sampling of the box.
/// Requires `size > 2 * mode_limit` so retained modes do not collide.
pub(crate) fn modes_to_physical(grid: &Grid, coeffs: &[Complex64], size: usize) -> Vec<Complex64> {
    debug_assert!(size > 2 * grid.mode_limit());
    let dim = grid.dim();
    let mut buf = vec![Complex64::new(0.0, 0.0); size.pow(dim as u32)];
    for (mode, c) in coeffs.iter().enumerate() {
        buf[flat_index(grid.lattice(mode), size)] = *c;
    }
    fft_nd(&mut buf, size, dim, true);
    buf
}

/// Fourier coefficients (normalized by `size^d`) of samples on a `size^d`
/// grid, restricted to the retained modes.
pub(crate) fn physical_to_modes(grid: &Grid, mut values: Vec<Complex64>, size: usize) -> Vec<Complex64> {
    let dim = grid.dim();
    fft_nd(&mut values, size, dim, false);
    let norm = 1.0 / values.len() as f64;
    (0..grid.len())
        .map(|mode| values[flat_index(grid.lattice(mode), size)] * norm)
        .collect()
}

/// Forward transform of real samples, one vector per component, laid out
/// row-major with axis 0 slowest at nodes `x_j = j L / points`.
///
/// Coefficients carry the `1 / points^d` factor, so `coeff(xi)` is the
/// Fourier coefficient of the sampled function. Modes outside the retained
/// ball are dropped.
pub fn forward_transform(grid: &Arc<Grid>, components: &[Vec<f64>]) -> Result<SpectralField> {
    let expected = grid.physical_len();
    let data = components
        .iter()
        .map(|comp| {
            if comp.len() != expected {
                return Err(Error::SizeMismatch {
                    expected,
                    got: comp.len(),
                });
            }
            let values = comp.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            Ok(physical_to_modes(grid, values, grid.points()))
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralField::from_components(grid.clone(), data)
}

/// Inverse transform to real samples on the grid nodes. The imaginary part
/// (zero for Hermitian-symmetric fields) is discarded.
pub fn inverse_transform(field: &SpectralField) -> Vec<Vec<f64>> {
    let grid = field.grid();
    field
        .data()
        .iter()
        .map(|comp| {
            modes_to_physical(grid, comp, grid.points())
                .into_iter()
                .map(|v| v.re)
                .collect()
        })
        .collect()
}

/// Physical coordinates of node `flat` of the `points^d` sampling.
pub fn node_position(grid: &Grid, flat: usize) -> Vec<f64> {
    let n = grid.points();
    let h = grid.period() / n as f64;
    let mut x = vec![0.0; grid.dim()];
    let mut rest = flat;
    for axis in (0..grid.dim()).rev() {
        x[axis] = (rest % n) as f64 * h;
        rest /= n;
    }
    x
}
