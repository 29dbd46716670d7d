use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::Grid;

/// How `(0, n]` is cut into shells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShellPolicy {
    /// Shell `j >= 1` holds `(j - 1/2, j + 1/2]` in units of the lattice
    /// spacing, with the first shell widened down to zero.
    Unit,
    /// Shell `j` holds `2^j <= |xi| < 2^(j+1)`.
    Dyadic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShellSpectrum {
    pub policy: ShellPolicy,
    /// Shell labels: `j` for unit shells, the dyadic exponent otherwise.
    pub labels: Vec<i32>,
    /// `labels.len() + 1` increasing edges.
    pub edges: Vec<f64>,
    pub shell_max: Vec<f64>,
    pub shell_energy: Vec<f64>,
    pub shell_count: Vec<usize>,
    /// `|xi|` of the mode attaining `shell_max` (0 for empty shells).
    pub argmax_radius: Vec<f64>,
}

/// Shell assignment of every retained mode; the zero mode maps to `None`.
#[derive(Clone, Debug)]
pub struct ShellMap {
    pub labels: Vec<i32>,
    pub edges: Vec<f64>,
    pub of_mode: Vec<Option<usize>>,
}

fn dyadic_exponent(r: f64) -> i32 {
    let mut j = r.log2().floor() as i32;
    while 2f64.powi(j) > r {
        j -= 1;
    }
    while 2f64.powi(j + 1) <= r {
        j += 1;
    }
    j
}

pub fn shell_map(grid: &Grid, policy: ShellPolicy) -> ShellMap {
    let spacing = grid.spacing();
    let top = grid.truncation().max(grid.max_magnitude());
    match policy {
        ShellPolicy::Unit => {
            let count = ((top / spacing - 0.5).ceil() as i64).max(1) as usize;
            let labels: Vec<i32> = (1..=count as i32).collect();
            let mut edges = vec![0.0];
            edges.extend((1..=count).map(|j| (j as f64 + 0.5) * spacing));
            let of_mode = grid
                .magnitudes()
                .iter()
                .map(|&r| {
                    if r == 0.0 {
                        return None;
                    }
                    let j = ((r / spacing - 0.5).ceil() as i64).max(1) as usize;
                    Some(j.min(count) - 1)
                })
                .collect();
            ShellMap {
                labels,
                edges,
                of_mode,
            }
        }
        ShellPolicy::Dyadic => {
            let low = dyadic_exponent(grid.min_magnitude().unwrap_or(spacing));
            let high = dyadic_exponent(top);
            let labels: Vec<i32> = (low..=high).collect();
            let edges = (low..=high + 1).map(|j| 2f64.powi(j)).collect();
            let of_mode = grid
                .magnitudes()
                .iter()
                .map(|&r| (r > 0.0).then(|| (dyadic_exponent(r) - low) as usize))
                .collect();
            ShellMap {
                labels,
                edges,
                of_mode,
            }
        }
    }
}

/// Per-shell maxima and energies of a field. For vector fields the
/// per-mode amplitude is the Euclidean norm over components.
pub fn shell_decompose(field: &SpectralField, policy: ShellPolicy) -> ShellSpectrum {
    let grid = field.grid();
    let map = shell_map(grid, policy);
    let n = map.labels.len();
    let mut shell_max = vec![0.0; n];
    let mut shell_energy = vec![0.0; n];
    let mut shell_count = vec![0; n];
    let mut argmax_radius = vec![0.0; n];
    for (mode, shell) in map.of_mode.iter().enumerate() {
        let Some(s) = *shell else { continue };
        let e = field.mode_energy(mode);
        let a = e.sqrt();
        shell_energy[s] += e;
        shell_count[s] += 1;
        if shell_count[s] == 1 || a > shell_max[s] {
            shell_max[s] = a;
            argmax_radius[s] = grid.magnitude(mode);
        }
    }
    ShellSpectrum {
        policy,
        labels: map.labels,
        edges: map.edges,
        shell_max,
        shell_energy,
        shell_count,
        argmax_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::make_grid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_lands_in_its_shell() {
        let g = make_grid(1, 64, 2.0 * PI, 20.0).unwrap();
        let u = SpectralField::from_fn(g.clone(), 1, |m| {
            let v = if g.lattice(m)[0] == 5 { 2.5 } else { 0.0 };
            vec![Complex64::new(0.0, v)]
        });
        let s = shell_decompose(&u, ShellPolicy::Unit);
        for (i, &label) in s.labels.iter().enumerate() {
            let expect = if label == 5 { 2.5 } else { 0.0 };
            assert_eq!(s.shell_max[i], expect);
        }
        assert_eq!(*s.edges.last().unwrap(), 20.5);
    }

    #[test]
    fn white_spectrum() {
        let g = make_grid(2, 32, 2.0 * PI, 12.0).unwrap();
        let u = SpectralField::from_fn(g.clone(), 1, |_| vec![Complex64::new(0.6, 0.8)]);
        for policy in [ShellPolicy::Unit, ShellPolicy::Dyadic] {
            let s = shell_decompose(&u, policy);
            for (max, count) in s.shell_max.iter().zip(&s.shell_count) {
                assert!(*count > 0);
                assert!((max - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn parseval_over_shells() {
        let g = make_grid(3, 16, 2.0 * PI, 7.0).unwrap();
        let u = SpectralField::from_fn(g.clone(), 3, |m| {
            let r = g.magnitude(m);
            vec![Complex64::new(r, 0.5); 3]
        });
        let total: f64 = (0..g.len()).map(|m| u.mode_energy(m)).sum();
        let z = u.mode_energy(g.zero_mode().unwrap());
        for policy in [ShellPolicy::Unit, ShellPolicy::Dyadic] {
            let s = shell_decompose(&u, policy);
            let sum: f64 = s.shell_energy.iter().sum();
            assert!((sum - (total - z)).abs() < 1e-10 * total);
        }
    }

    #[test]
    fn dyadic_edges_follow_powers_of_two() {
        let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
        let map = shell_map(&g, ShellPolicy::Dyadic);
        assert_eq!(map.labels, vec![0, 1, 2, 3, 4]);
        let of = |m: i64| map.of_mode[g.index_of(&[m]).unwrap()].unwrap();
        assert_eq!(of(1), 0);
        assert_eq!(of(2), 1);
        assert_eq!(of(3), 1);
        assert_eq!(of(16), 4);
        assert_eq!(of(31), 4);
    }
}
