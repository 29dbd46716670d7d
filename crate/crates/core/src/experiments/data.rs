//! Random initial data with a prescribed algebraic envelope.
//!
//! Mode `m` gets total modulus `A |xi|^{-(s + d/2 + margin)}` (Euclidean over
//! components) and random phases and polarization. Randomness is drawn from
//! ChaCha8 seeded with the run seed and positioned at a word offset derived
//! from the lattice vector, so a given mode receives the same draw at every
//! resolution and a field refines consistently when the grid is doubled.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataLaw {
    /// Target regularity `s`: the field lies in `H^s` and barely misses `H^{s + margin}`.
    pub s: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Largest `|xi|` carrying energy; defaults to the truncation radius.
    #[serde(default)]
    pub cutoff: Option<f64>,
    /// If set, the amplitude is chosen so that `|U0|_{H^s}` equals this value.
    #[serde(default)]
    pub norm: Option<f64>,
    /// Project onto divergence-free fields (one direction per mode, orthogonal to `xi`).
    #[serde(default)]
    pub solenoidal: bool,
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_margin() -> f64 {
    0.25
}

/// Counter offset of a lattice vector: zigzag-encoded components packed in
/// 20-bit fields, 16 words per mode.
fn word_position(m: &[i64]) -> u128 {
    let mut key: u128 = 0;
    for (i, &mi) in m.iter().enumerate() {
        let z = ((mi << 1) ^ (mi >> 63)) as u64 as u128;
        key |= z << (20 * i);
    }
    key * 16
}

/// True for the member of a `{m, -m}` pair that draws the randomness.
fn is_leader(m: &[i64]) -> bool {
    m.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Orthonormal basis of the plane orthogonal to `xi` (d = 3) or of its
/// orthogonal line (d = 2).
fn transverse_basis(xi: &[f64]) -> Vec<Vec<f64>> {
    let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n: Vec<f64> = xi.iter().map(|x| x / r).collect();
    match n.len() {
        2 => vec![vec![-n[1], n[0]]],
        3 => {
            let pivot = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let dot: f64 = pivot.iter().zip(&n).map(|(a, b)| a * b).sum();
            let mut e1: Vec<f64> = pivot.iter().zip(&n).map(|(a, b)| a - dot * b).collect();
            let l = e1.iter().map(|x| x * x).sum::<f64>().sqrt();
            e1.iter_mut().for_each(|x| *x /= l);
            let e2 = vec![
                n[1] * e1[2] - n[2] * e1[1],
                n[2] * e1[0] - n[0] * e1[2],
                n[0] * e1[1] - n[1] * e1[0],
            ];
            vec![e1, e2]
        }
        _ => Vec::new(),
    }
}

/// Unit complex vector with `components` entries drawn from `rng`.
fn random_polarization(rng: &mut ChaCha8Rng, basis: Option<&[Vec<f64>]>, components: usize) -> Vec<Complex64> {
    match basis {
        Some(basis) => {
            let mut out = vec![Complex64::new(0.0, 0.0); components];
            let weights = unit_weights(rng, basis.len());
            for (e, w) in basis.iter().zip(weights) {
                let phase = Complex64::from_polar(w, 2.0 * PI * rng.random::<f64>());
                for (o, &ei) in out.iter_mut().zip(e) {
                    *o += phase * ei;
                }
            }
            out
        }
        None => unit_weights(rng, components)
            .into_iter()
            .map(|w| Complex64::from_polar(w, 2.0 * PI * rng.random::<f64>()))
            .collect(),
    }
}

/// Nonnegative weights with unit Euclidean norm.
fn unit_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let l = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.into_iter().map(|x| x / l).collect()
}

impl InitialDataLaw {
    pub fn exponent(&self, dim: usize) -> f64 {
        self.s + 0.5 * dim as f64 + self.margin
    }

    fn support(&self, grid: &Grid) -> Result<f64> {
        let cutoff = self.cutoff.unwrap_or(grid.truncation()).min(grid.truncation());
        if !(self.margin > 0.0) {
            return Err(Error::InvalidParameter(format!("margin {} must be > 0", self.margin)));
        }
        if cutoff / grid.spacing() < 8.0 {
            return Err(Error::InvalidParameter(format!(
                "envelope cutoff {cutoff} spans fewer than 8 shells of width {}",
                grid.spacing()
            )));
        }
        Ok(cutoff)
    }

    /// Closed-form `|U0|_{H^sigma}` of the envelope with amplitude 1:
    /// `(w sum_{0 < |xi| <= cutoff} |xi|^{2 (sigma - s) - d - 2 margin})^{1/2}`.
    pub fn unit_norm(&self, grid: &Grid, sigma: f64) -> Result<f64> {
        let cutoff = self.support(grid)?;
        let power = 2.0 * (sigma - self.s) - grid.dim() as f64 - 2.0 * self.margin;
        let sum: f64 = (0..grid.len())
            .map(|m| grid.magnitude(m))
            .filter(|&r| r > 0.0 && r <= cutoff * (1.0 + 1e-12))
            .map(|r| r.powf(power))
            .sum();
        Ok((sum * grid.norm_weight()).sqrt())
    }

    /// Amplitude actually used on `grid`.
    pub fn effective_amplitude(&self, grid: &Grid) -> Result<f64> {
        match self.norm {
            Some(n) => Ok(n / self.unit_norm(grid, self.s)?),
            None => Ok(self.amplitude),
        }
    }

    /// Closed-form `|U0|_{H^sigma}` of the generated field.
    pub fn target_norm(&self, grid: &Grid, sigma: f64) -> Result<f64> {
        Ok(self.effective_amplitude(grid)? * self.unit_norm(grid, sigma)?)
    }
}

pub fn generate_initial_data(law: &InitialDataLaw, grid: &Arc<Grid>, components: usize, seed: u64) -> Result<SpectralField> {
    let cutoff = law.support(grid)?;
    let amplitude = law.effective_amplitude(grid)?;
    let exponent = law.exponent(grid.dim());
    if law.solenoidal && components != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "solenoidal data needs {} components, got {components}",
            grid.dim()
        )));
    }
    if law.solenoidal && grid.dim() == 1 {
        return Err(Error::InvalidParameter("no nonzero solenoidal field in one dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; components];
    for mode in 0..grid.len() {
        let m = grid.lattice(mode);
        let r = grid.magnitude(mode);
        if r == 0.0 || r > cutoff * (1.0 + 1e-12) || !is_leader(m) {
            continue;
        }
        rng.set_word_pos(word_position(m));
        let basis = law.solenoidal.then(|| transverse_basis(grid.wavevector(mode)));
        let pol = random_polarization(&mut rng, basis.as_deref(), components);
        let modulus = amplitude * r.powf(-exponent);
        let partner = grid.partner(mode);
        for (j, c) in pol.into_iter().enumerate() {
            data[j][mode] = c * modulus;
            data[j][partner] = (c * modulus).conj();
        }
    }
    let field = SpectralField::from_components(grid.clone(), data)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::sobolev_norm;
    use crate::spectral::make_grid;

    fn law(s: f64) -> InitialDataLaw {
        InitialDataLaw {
            s,
            amplitude: 1.0,
            margin: 0.25,
            cutoff: None,
            norm: None,
            solenoidal: false,
        }
    }

    #[test]
    fn deterministic_and_hermitian() {
        let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
        let a = generate_initial_data(&law(0.0), &g, 1, 5).unwrap();
        let b = generate_initial_data(&law(0.0), &g, 1, 5).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(a.hermitian_defect(), 0.0);
        assert!(a.is_mean_free(0.0));
        let c = generate_initial_data(&law(0.0), &g, 1, 6).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn phases_do_not_depend_on_resolution() {
        let coarse = make_grid(2, 32, 2.0 * PI, 15.0).unwrap();
        let fine = make_grid(2, 64, 2.0 * PI, 31.0).unwrap();
        let l = law(0.5);
        let a = generate_initial_data(&l, &coarse, 2, 9).unwrap();
        let b = generate_initial_data(&l, &fine, 2, 9).unwrap();
        for mode in 0..coarse.len() {
            let j = fine.index_of(coarse.lattice(mode)).unwrap();
            for c in 0..2 {
                assert_eq!(a.component(c)[mode], b.component(c)[j]);
            }
        }
    }

    #[test]
    fn norm_matches_closed_form() {
        let g = make_grid(3, 32, 2.0 * PI, 12.0).unwrap();
        let mut l = law(0.5);
        l.solenoidal = true;
        l.norm = Some(0.3);
        let u = generate_initial_data(&l, &g, 3, 1).unwrap();
        assert!((sobolev_norm(&u, 0.5) - 0.3).abs() < 1e-12);
        let target = l.target_norm(&g, 1.0).unwrap();
        assert!((sobolev_norm(&u, 1.0) - target).abs() < 1e-12 * target);
        assert!(u.divergence().unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn too_narrow_envelope_is_rejected() {
        let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
        let mut l = law(0.0);
        l.cutoff = Some(5.0);
        assert!(generate_initial_data(&l, &g, 1, 0).is_err());
    }
}
