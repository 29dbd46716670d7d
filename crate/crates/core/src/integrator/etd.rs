use crate::spectral::{Grid, SpectralField};

/// `|z|` below which the phi functions are summed as power series.
const SERIES_SWITCH: f64 = 1.0;
const SERIES_TERMS: usize = 30;

/// `phi_1, phi_2, phi_3` at real `z`, with `phi_k(z) = sum_j z^j / (j + k)!`.
pub(crate) fn phi123(z: f64) -> [f64; 3] {
    if z.abs() < SERIES_SWITCH {
        let mut out = [0.0; 3];
        for (k, slot) in out.iter_mut().enumerate() {
            // term_j = z^j / (j + k + 1)!
            let mut fact = 1.0;
            for i in 2..=(k + 1) {
                fact *= i as f64;
            }
            let mut term = 1.0 / fact;
            let mut sum = term;
            for j in 1..SERIES_TERMS {
                term *= z / (j + k + 1) as f64;
                sum += term;
            }
            *slot = sum;
        }
        out
    } else {
        let em1 = z.exp_m1();
        [
            em1 / z,
            (em1 - z) / (z * z),
            (em1 - z - 0.5 * z * z) / (z * z * z),
        ]
    }
}

/// Modes grouped by `|xi|^2`, since every linear coefficient depends on the
/// mode only through it.
#[derive(Debug)]
pub(crate) struct LinearGroups {
    pub k2: Vec<f64>,
    pub of_mode: Vec<usize>,
}

impl LinearGroups {
    pub fn new(grid: &Grid) -> Self {
        let mut k2: Vec<f64> = Vec::new();
        let mut of_mode = Vec::with_capacity(grid.len());
        let mut lookup: std::collections::HashMap<i64, usize> = std::collections::HashMap::new();
        for mode in 0..grid.len() {
            let m2: i64 = grid.lattice(mode).iter().map(|m| m * m).sum();
            let idx = *lookup.entry(m2).or_insert_with(|| {
                let r = grid.magnitude(mode);
                k2.push(r * r);
                k2.len() - 1
            });
            of_mode.push(idx);
        }
        LinearGroups { k2, of_mode }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.k2.iter().map(|&k2| f(k2)).collect()
    }
}

/// `sum_i scale_i * coef_i[group(mode)] * field_i` mode by mode. A `None`
/// coefficient vector stands for all ones.
pub(crate) fn lincomb(groups: &LinearGroups, parts: &[(Option<&[f64]>, f64, &SpectralField)]) -> SpectralField {
    let first = parts[0].2;
    let mut out = SpectralField::zeros(first.grid().clone(), first.components());
    for j in 0..first.components() {
        let dst = out.component_mut(j);
        for &(coef, scale, field) in parts {
            let src = field.component(j);
            match coef {
                Some(c) => {
                    for (mode, d) in dst.iter_mut().enumerate() {
                        *d += src[mode] * (scale * c[groups.of_mode[mode]]);
                    }
                }
                None => {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s * scale;
                    }
                }
            }
        }
    }
    out
}

/// Cox-Matthews ETDRK4 coefficients for one step size.
#[derive(Debug)]
pub(crate) struct EtdCoefficients {
    pub h: f64,
    pub e: Vec<f64>,
    pub e2: Vec<f64>,
    /// `(h/2) phi_1(-h mu / 2)`
    pub q: Vec<f64>,
    /// `h (phi_1 - 3 phi_2 + 4 phi_3)`
    pub f1: Vec<f64>,
    /// `h (phi_2 - 2 phi_3)`
    pub f2: Vec<f64>,
    /// `h (-phi_2 + 4 phi_3)`
    pub f3: Vec<f64>,
}

impl EtdCoefficients {
    pub fn new(groups: &LinearGroups, h: f64) -> Self {
        let e = groups.map(|k2| (-h * k2).exp());
        let e2 = groups.map(|k2| (-0.5 * h * k2).exp());
        let q = groups.map(|k2| 0.5 * h * phi123(-0.5 * h * k2)[0]);
        let phis: Vec<[f64; 3]> = groups.k2.iter().map(|&k2| phi123(-h * k2)).collect();
        let f1 = phis.iter().map(|p| h * (p[0] - 3.0 * p[1] + 4.0 * p[2])).collect();
        let f2 = phis.iter().map(|p| h * (p[1] - 2.0 * p[2])).collect();
        let f3 = phis.iter().map(|p| h * (-p[1] + 4.0 * p[2])).collect();
        EtdCoefficients { h, e, e2, q, f1, f2, f3 }
    }
}

/// Integrating-factor RK4 coefficients for one step size.
#[derive(Debug)]
pub(crate) struct IfCoefficients {
    pub h: f64,
    pub e: Vec<f64>,
    pub e2: Vec<f64>,
}

impl IfCoefficients {
    pub fn new(groups: &LinearGroups, h: f64) -> Self {
        IfCoefficients {
            h,
            e: groups.map(|k2| (-h * k2).exp()),
            e2: groups.map(|k2| (-0.5 * h * k2).exp()),
        }
    }
}
