use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when comparing wavenumber magnitudes against the
/// truncation radius, so that `|xi| == n` is retained despite roundoff.
const RADIUS_SLACK: f64 = 1e-12;

/// The four numbers that define a grid. This is what gets serialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub dim: usize,
    pub points: usize,
    pub period: f64,
    pub truncation: f64,
}

/// A periodic box `[0, L)^d` sampled with `points` nodes per axis, together
/// with the table of Fourier modes retained by the spectral ball `|xi| <= n`.
///
/// Wavenumbers are `xi = 2 pi m / L` for integer lattice vectors `m`. Modes
/// with some `|m_i| = points / 2` (the Nyquist line) are never retained, so
/// every retained set is closed under `m -> -m`.
#[derive(Debug)]
pub struct Grid {
    params: GridParams,
    mode_limit: usize,
    lattice: Vec<i64>,
    wavevectors: Vec<f64>,
    magnitudes: Vec<f64>,
    partner: Vec<usize>,
    zero: Option<usize>,
    lookup: Vec<u32>,
}

/// Build a grid, rejecting non power-of-two sizes and truncation radii
/// above the Nyquist wavenumber `pi * points / L`.
pub fn make_grid(dim: usize, points: usize, period: f64, truncation: f64) -> Result<Arc<Grid>> {
    Grid::new(GridParams {
        dim,
        points,
        period,
        truncation,
    })
    .map(Arc::new)
}

impl Grid {
    pub fn new(params: GridParams) -> Result<Self> {
        let GridParams {
            dim,
            points,
            period,
            truncation,
        } = params;
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(points));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        if !(truncation.is_finite() && truncation > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "truncation radius must be positive, got {truncation}"
            )));
        }
        let spacing = 2.0 * PI / period;
        let nyquist = PI * points as f64 / period;
        if truncation > nyquist * (1.0 + RADIUS_SLACK) {
            return Err(Error::AboveNyquist {
                radius: truncation,
                nyquist,
            });
        }

        let cap = truncation * (1.0 + RADIUS_SLACK);
        let by_radius = (cap / spacing).floor() as usize;
        let mode_limit = by_radius.min(points / 2 - 1);
        let side = 2 * mode_limit + 1;
        let m_lim = mode_limit as i64;

        let mut lattice = Vec::new();
        let mut wavevectors = Vec::new();
        let mut magnitudes = Vec::new();
        let mut lookup = vec![u32::MAX; side.pow(dim as u32)];
        let mut zero = None;

        for flat in 0..lookup.len() {
            let mut m = [0i64; 3];
            let mut rest = flat;
            for axis in (0..dim).rev() {
                m[axis] = (rest % side) as i64 - m_lim;
                rest /= side;
            }
            let xi: Vec<f64> = m[..dim].iter().map(|&mi| spacing * mi as f64).collect();
            let mag = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            if mag > cap {
                continue;
            }
            let idx = magnitudes.len();
            if m[..dim].iter().all(|&mi| mi == 0) {
                zero = Some(idx);
            }
            lookup[flat] = idx as u32;
            lattice.extend_from_slice(&m[..dim]);
            wavevectors.extend_from_slice(&xi);
            magnitudes.push(mag);
        }

        let mut grid = Grid {
            params,
            mode_limit,
            lattice,
            wavevectors,
            magnitudes,
            partner: Vec::new(),
            zero,
            lookup,
        };
        let partner = (0..grid.len())
            .map(|i| {
                let neg: Vec<i64> = grid.lattice(i).iter().map(|m| -m).collect();
                grid.index_of(&neg).expect("retained set is symmetric")
            })
            .collect();
        grid.partner = partner;
        Ok(grid)
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn points(&self) -> usize {
        self.params.points
    }

    pub fn period(&self) -> f64 {
        self.params.period
    }

    pub fn truncation(&self) -> f64 {
        self.params.truncation
    }

    /// Lattice spacing `2 pi / L` in wavenumber space.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.params.period
    }

    /// Volume of one wavenumber cell, `(2 pi / L)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.params.dim as i32)
    }

    /// Weight of a lattice sum of squared Fourier coefficients, `(L / 2 pi)^d`.
    /// With it `sum |xi|^{2s} |c|^2` approximates `(2 pi)^-d int |xi|^{2s} |f^|^2`
    /// independently of `L`, and homogeneous norms are exactly dilation
    /// covariant.
    pub fn norm_weight(&self) -> f64 {
        self.cell_volume().recip()
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.params.points as f64 / self.params.period
    }

    /// Largest `|m_i|` among retained modes.
    pub fn mode_limit(&self) -> usize {
        self.mode_limit
    }

    /// Number of retained modes.
    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Total number of physical sample points, `points^d`.
    pub fn physical_len(&self) -> usize {
        self.params.points.pow(self.params.dim as u32)
    }

    pub fn lattice(&self, mode: usize) -> &[i64] {
        let d = self.params.dim;
        &self.lattice[mode * d..(mode + 1) * d]
    }

    pub fn wavevector(&self, mode: usize) -> &[f64] {
        let d = self.params.dim;
        &self.wavevectors[mode * d..(mode + 1) * d]
    }

    pub fn magnitude(&self, mode: usize) -> f64 {
        self.magnitudes[mode]
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Index of the mode `-m`.
    pub fn partner(&self, mode: usize) -> usize {
        self.partner[mode]
    }

    pub fn zero_mode(&self) -> Option<usize> {
        self.zero
    }

    /// Index of the retained mode with lattice vector `m`, if any.
    pub fn index_of(&self, m: &[i64]) -> Option<usize> {
        if m.len() != self.params.dim {
            return None;
        }
        let lim = self.mode_limit as i64;
        let side = 2 * lim + 1;
        let mut flat = 0i64;
        for &mi in m {
            if mi.abs() > lim {
                return None;
            }
            flat = flat * side + (mi + lim);
        }
        match self.lookup[flat as usize] {
            u32::MAX => None,
            idx => Some(idx as usize),
        }
    }

    /// Largest retained `|xi|`.
    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest nonzero retained `|xi|`.
    pub fn min_magnitude(&self) -> Option<f64> {
        self.magnitudes
            .iter()
            .cloned()
            .filter(|&m| m > 0.0)
            .reduce(f64::min)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || self.params == other.params
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_integer_wavenumbers() {
        let g = make_grid(1, 64, 2.0 * PI, 21.0).unwrap();
        assert_eq!(g.mode_limit(), 21);
        assert_eq!(g.len(), 43);
        for i in 0..g.len() {
            let m = g.lattice(i)[0];
            assert!((g.wavevector(i)[0] - m as f64).abs() < 1e-12);
            assert!(m.abs() <= 32);
        }
        assert!((g.cell_volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_dimensional_lattice() {
        let g = make_grid(3, 32, 2.0 * PI, 10.0).unwrap();
        assert_eq!(g.physical_len(), 32 * 32 * 32);
        assert!(g.max_magnitude() <= 10.0 + 1e-9);
        let z = g.zero_mode().unwrap();
        assert_eq!(g.partner(z), z);
        for i in 0..g.len() {
            let p = g.partner(i);
            let sum: Vec<i64> = g.lattice(i).iter().zip(g.lattice(p)).map(|(a, b)| a + b).collect();
            assert!(sum.iter().all(|&s| s == 0));
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(make_grid(1, 48, 2.0 * PI, 10.0), Err(Error::NotPowerOfTwo(48))));
        assert!(matches!(
            make_grid(1, 64, 2.0 * PI, 33.0),
            Err(Error::AboveNyquist { .. })
        ));
        assert!(matches!(make_grid(4, 8, 1.0, 1.0), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn nyquist_line_excluded() {
        let g = make_grid(1, 16, 2.0 * PI, 8.0).unwrap();
        assert_eq!(g.mode_limit(), 7);
        assert!(g.index_of(&[8]).is_none());
    }

    #[test]
    fn non_unit_period_scales_wavenumbers() {
        let g = make_grid(2, 16, 4.0 * PI, 3.0).unwrap();
        assert!((g.spacing() - 0.5).abs() < 1e-15);
        assert_eq!(g.mode_limit(), 6);
        assert!((g.cell_volume() - 0.25).abs() < 1e-15);
    }
}
