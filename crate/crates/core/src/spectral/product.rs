use std::sync::Arc;

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;
use super::transform::{modes_to_physical, physical_to_modes};
use crate::error::{Error, Result};

/// Physical sampling fine enough to multiply `order` truncated fields
/// without aliasing onto the retained modes.
///
/// A product of `order` factors with `|m_i| <= M` has `|m_i| <= order * M`;
/// an alias of such a mode lands within the retained box only if the
/// sampling size is at most `(order + 1) * M`, so any size above that
/// gives exact coefficients on the retained ball.
#[derive(Clone, Debug)]
pub struct PaddedSpace {
    grid: Arc<Grid>,
    size: usize,
}

impl PaddedSpace {
    pub fn new(grid: Arc<Grid>, order: usize) -> Self {
        let m = grid.mode_limit();
        let minimum = (order.max(1) + 1) * m + 1;
        let mut size = (minimum + minimum % 2).max(2);
        while !is_smooth(size) {
            size += 2;
        }
        PaddedSpace { grid, size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn to_physical(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        modes_to_physical(&self.grid, coeffs, self.size)
    }

    pub fn to_modes(&self, values: Vec<Complex64>) -> Vec<Complex64> {
        physical_to_modes(&self.grid, values, self.size)
    }
}

/// Only factors 2, 3 and 5, for which the FFT is fastest.
fn is_smooth(mut n: usize) -> bool {
    for f in [2, 3, 5] {
        while n % f == 0 {
            n /= f;
        }
    }
    n == 1
}

/// Exact Fourier coefficients, on the retained ball, of the pointwise
/// product of `k` fields. Multi-component fields multiply componentwise.
pub fn dealiased_product(fields: &[&SpectralField]) -> Result<SpectralField> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidParameter("product of zero fields".into()))?;
    for f in &fields[1..] {
        first.check_compatible(f)?;
    }
    let space = PaddedSpace::new(first.grid().clone(), fields.len());
    let data = (0..first.components())
        .map(|j| {
            let mut acc = space.to_physical(fields[0].component(j));
            for f in &fields[1..] {
                for (a, b) in acc.iter_mut().zip(space.to_physical(f.component(j))) {
                    *a *= b;
                }
            }
            space.to_modes(acc)
        })
        .collect();
    SpectralField::from_components(first.grid().clone(), data)
}
