use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radius_core::models::{builtin_burgers, builtin_navier_stokes, evaluate_nonlinearity};
use radius_core::spectral::{dealiased_product, make_grid, Grid, SpectralField};

fn random_field(grid: &Arc<Grid>, components: usize, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SpectralField::from_fn(grid.clone(), components, |_| {
        (0..components)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    })
    .hermitian_part()
}

/// Full lattice convolution of single-component fields, no truncation.
fn convolve(fields: &[&[Complex64]], grid: &Grid) -> HashMap<Vec<i64>, Complex64> {
    let mut acc: HashMap<Vec<i64>, Complex64> = HashMap::from([(vec![0; grid.dim()], Complex64::new(1.0, 0.0))]);
    for f in fields {
        let mut next: HashMap<Vec<i64>, Complex64> = HashMap::new();
        for (key, a) in &acc {
            for (mode, b) in f.iter().enumerate() {
                let m: Vec<i64> = key.iter().zip(grid.lattice(mode)).map(|(x, y)| x + y).collect();
                *next.entry(m).or_default() += a * b;
            }
        }
        acc = next;
    }
    acc
}

fn relative_error(fast: &[Complex64], slow: &HashMap<Vec<i64>, Complex64>, grid: &Grid) -> f64 {
    let (mut err, mut size) = (0.0f64, 0.0f64);
    for (mode, v) in fast.iter().enumerate() {
        let exact = slow.get(grid.lattice(mode)).copied().unwrap_or_default();
        err = err.max((v - exact).norm());
        size = size.max(exact.norm());
    }
    err / size
}

#[test]
fn product_matches_brute_force_convolution() {
    for (dim, points, truncation) in [(1, 32, 15.0), (1, 32, 10.5), (2, 16, 7.0), (3, 16, 7.0)] {
        let g = make_grid(dim, points, 2.0 * PI, truncation).unwrap();
        for k in 1..=3 {
            let fields: Vec<SpectralField> = (0..k).map(|j| random_field(&g, 1, 7 * j as u64 + dim as u64)).collect();
            let refs: Vec<&SpectralField> = fields.iter().collect();
            let fast = dealiased_product(&refs).unwrap();
            let comps: Vec<&[Complex64]> = fields.iter().map(|f| f.component(0)).collect();
            let err = relative_error(fast.component(0), &convolve(&comps, &g), &g);
            assert!(err <= 1e-12, "d = {dim}, k = {k}: {err:e}");
        }
    }
}

#[test]
fn burgers_matches_brute_force() {
    let g = make_grid(1, 32, 2.0 * PI, 15.0).unwrap();
    let u = random_field(&g, 1, 3);
    let fast = evaluate_nonlinearity(&builtin_burgers(), &u).unwrap();
    let sq = convolve(&[u.component(0), u.component(0)], &g);
    // -(u^2 / 2)_x
    let exact: HashMap<Vec<i64>, Complex64> = sq
        .into_iter()
        .map(|(m, v)| {
            let xi = m[0] as f64;
            (m, -Complex64::new(0.0, xi) * v * 0.5)
        })
        .collect();
    assert!(relative_error(fast.component(0), &exact, &g) <= 1e-12);
}

#[test]
fn navier_stokes_matches_brute_force() {
    let g = make_grid(3, 16, 2.0 * PI, 7.0).unwrap();
    let u = random_field(&g, 3, 5).leray_project().unwrap();
    let fast = evaluate_nonlinearity(&builtin_navier_stokes(3).unwrap(), &u).unwrap();
    let mut pairs = HashMap::new();
    for a in 0..3 {
        for b in 0..3 {
            pairs.insert((a, b), convolve(&[u.component(a), u.component(b)], &g));
        }
    }
    for out in 0..3 {
        let mut exact: HashMap<Vec<i64>, Complex64> = HashMap::new();
        for mode in 0..g.len() {
            let m = g.lattice(mode).to_vec();
            let xi: Vec<f64> = m.iter().map(|&x| x as f64).collect();
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            let mut v = Complex64::new(0.0, 0.0);
            if r2 > 0.0 {
                for a in 0..3 {
                    let proj = if a == out { 1.0 } else { 0.0 } - xi[out] * xi[a] / r2;
                    for b in 0..3 {
                        let w = pairs[&(a, b)].get(&m).copied().unwrap_or_default();
                        v += -Complex64::new(0.0, xi[b]) * proj * w;
                    }
                }
            }
            exact.insert(m, v);
        }
        let err = relative_error(fast.component(out), &exact, &g);
        assert!(err <= 1e-12, "component {out}: {err:e}");
    }
    let div = fast.divergence().unwrap();
    assert!(div.max_abs() <= 1e-14 * fast.max_abs().max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn product_is_symmetric_and_hermitian(seed in 0u64..1000, dim in 1usize..=2, trunc in 3.0f64..7.0) {
        let g = make_grid(dim, 16, 2.0 * PI, trunc).unwrap();
        let a = random_field(&g, 1, seed);
        let b = random_field(&g, 1, seed + 1);
        let ab = dealiased_product(&[&a, &b]).unwrap();
        let ba = dealiased_product(&[&b, &a]).unwrap();
        prop_assert!(ab.distance(&ba) <= 1e-13 * ab.l2().max(1.0));
        prop_assert!(ab.hermitian_defect() <= 1e-13 * ab.max_abs().max(1.0));
        for mode in 0..g.len() {
            prop_assert!(g.magnitude(mode) <= trunc + 1e-12);
        }
    }

    #[test]
    fn product_with_constant_scales(seed in 0u64..1000, c in -3.0f64..3.0) {
        let g = make_grid(1, 32, 2.0 * PI, 15.0).unwrap();
        let a = random_field(&g, 1, seed);
        let one = SpectralField::from_fn(g.clone(), 1, |m| {
            vec![Complex64::new(if g.magnitude(m) == 0.0 { c } else { 0.0 }, 0.0)]
        });
        let p = dealiased_product(&[&a, &one]).unwrap();
        prop_assert!(p.distance(&a.scaled(c)) <= 1e-13 * a.l2());
    }
}
