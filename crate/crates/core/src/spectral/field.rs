use std::sync::Arc;

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Fourier coefficients of an `N`-component field on the retained modes of
/// a [`Grid`]. Modes outside the ball `|xi| <= n` are not stored, so the
/// truncation invariant holds by construction.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    data: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: Arc<Grid>, components: usize) -> Self {
        let data = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; components];
        SpectralField { grid, data }
    }

    pub fn from_components(grid: Arc<Grid>, data: Vec<Vec<Complex64>>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidParameter("field needs at least one component".into()));
        }
        for comp in &data {
            if comp.len() != grid.len() {
                return Err(Error::SizeMismatch {
                    expected: grid.len(),
                    got: comp.len(),
                });
            }
        }
        Ok(SpectralField { grid, data })
    }

    /// Build a field mode by mode; `f` receives the mode index and returns
    /// one coefficient per component.
    pub fn from_fn(grid: Arc<Grid>, components: usize, mut f: impl FnMut(usize) -> Vec<Complex64>) -> Self {
        let mut out = SpectralField::zeros(grid, components);
        for mode in 0..out.grid.len() {
            let values = f(mode);
            for (j, v) in values.into_iter().enumerate().take(components) {
                out.data[j][mode] = v;
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.data.len()
    }

    pub fn component(&self, j: usize) -> &[Complex64] {
        &self.data[j]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j]
    }

    pub fn data(&self) -> &[Vec<Complex64>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Vec<Complex64>> {
        self.data
    }

    /// Squared modulus of the coefficient vector at one mode, summed over
    /// components.
    pub fn mode_energy(&self, mode: usize) -> f64 {
        self.data.iter().map(|c| c[mode].norm_sqr()).sum()
    }

    pub fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if !self.grid.same_as(&other.grid) || self.components() != other.components() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Projection onto Hermitian-symmetric fields, `(c(xi) + conj c(-xi)) / 2`.
    pub fn hermitian_part(&self) -> SpectralField {
        let mut out = self.clone();
        for (dst, src) in out.data.iter_mut().zip(&self.data) {
            for (mode, v) in dst.iter_mut().enumerate() {
                *v = 0.5 * (src[mode] + src[self.grid.partner(mode)].conj());
            }
        }
        out
    }

    /// Largest `|c(xi) - conj c(-xi)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for comp in &self.data {
            for (mode, v) in comp.iter().enumerate() {
                worst = worst.max((v - comp[self.grid.partner(mode)].conj()).norm());
            }
        }
        worst / scale
    }

    /// Zero-mode coefficients, one per component.
    pub fn mean(&self) -> Vec<Complex64> {
        match self.grid.zero_mode() {
            Some(z) => self.data.iter().map(|c| c[z]).collect(),
            None => vec![Complex64::new(0.0, 0.0); self.components()],
        }
    }

    pub fn is_mean_free(&self, tol: f64) -> bool {
        self.mean().iter().all(|c| c.norm() <= tol)
    }

    pub fn remove_mean(&mut self) {
        if let Some(z) = self.grid.zero_mode() {
            for comp in &mut self.data {
                comp[z] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for comp in &mut self.data {
            for v in comp.iter_mut() {
                *v *= factor;
            }
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        debug_assert_eq!(self.components(), other.components());
        for (dst, src) in self.data.iter_mut().zip(&other.data) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += a * s;
            }
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Euclidean norm of the coefficient array (mean square of the field).
    pub fn l2(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, other: &SpectralField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Multiply every component by `symbol(xi)`; the value at `xi = 0` is
    /// `at_zero`, never evaluated from the symbol.
    pub fn apply_multiplier(
        &self,
        symbol: impl Fn(&[f64]) -> Complex64,
        at_zero: Complex64,
    ) -> Result<SpectralField> {
        let mut factors = Vec::with_capacity(self.grid.len());
        for mode in 0..self.grid.len() {
            let s = if Some(mode) == self.grid.zero_mode() {
                at_zero
            } else {
                symbol(self.grid.wavevector(mode))
            };
            if !(s.re.is_finite() && s.im.is_finite()) {
                return Err(Error::NonFiniteSymbol {
                    mode: self.grid.lattice(mode).to_vec(),
                });
            }
            factors.push(s);
        }
        let mut out = self.clone();
        for comp in &mut out.data {
            for (v, f) in comp.iter_mut().zip(&factors) {
                *v *= f;
            }
        }
        Ok(out)
    }

    /// Leray projection `(delta_jm - xi_j xi_m / |xi|^2)`, zero at `xi = 0`.
    pub fn leray_project(&self) -> Result<SpectralField> {
        let d = self.grid.dim();
        if self.components() != d {
            return Err(Error::InvalidParameter(format!(
                "Leray projection needs {d} components, field has {}",
                self.components()
            )));
        }
        let mut out = SpectralField::zeros(self.grid.clone(), d);
        for mode in 0..self.grid.len() {
            let xi = self.grid.wavevector(mode);
            let k2: f64 = xi.iter().map(|x| x * x).sum();
            if k2 == 0.0 {
                continue;
            }
            let dot: Complex64 = (0..d).map(|m| self.data[m][mode] * xi[m]).sum();
            for j in 0..d {
                out.data[j][mode] = self.data[j][mode] - dot * (xi[j] / k2);
            }
        }
        Ok(out)
    }

    /// Scalar field `sum_j i xi_j c_j(xi)`.
    pub fn divergence(&self) -> Result<SpectralField> {
        let d = self.grid.dim();
        if self.components() != d {
            return Err(Error::InvalidParameter("divergence needs d components".into()));
        }
        let mut out = SpectralField::zeros(self.grid.clone(), 1);
        for mode in 0..self.grid.len() {
            let xi = self.grid.wavevector(mode);
            out.data[0][mode] = (0..d)
                .map(|j| Complex64::new(0.0, xi[j]) * self.data[j][mode])
                .sum();
        }
        Ok(out)
    }
}

/// Symbol of the heat semigroup `exp(-t |xi|^2)`.
pub fn heat_symbol(t: f64) -> impl Fn(&[f64]) -> Complex64 {
    move |xi| Complex64::new((-t * xi.iter().map(|x| x * x).sum::<f64>()).exp(), 0.0)
}

/// Symbol of the spectral ball indicator `1_{|xi| <= radius}`.
pub fn ball_symbol(radius: f64) -> impl Fn(&[f64]) -> Complex64 {
    move |xi| {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        Complex64::new(if r <= radius { 1.0 } else { 0.0 }, 0.0)
    }
}

/// Symbol of `exp(sigma |D|)`.
pub fn gevrey_symbol(sigma: f64) -> impl Fn(&[f64]) -> Complex64 {
    move |xi| Complex64::new((sigma * xi.iter().map(|x| x * x).sum::<f64>().sqrt()).exp(), 0.0)
}
