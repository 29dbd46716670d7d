use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use radius_core::integrator::{
    dense_times, integrate, picard_solve, read_trace, rescale_data, rescale_solution, write_trace,
    IntegratorOptions, PicardOptions, Scheme, SnapshotPolicy,
};
use radius_core::models::{builtin, builtin_burgers, builtin_navier_stokes};
use radius_core::norms::{kato_norm, sobolev_norm};
use radius_core::spectral::{make_grid, Grid, SpectralField};
use radius_core::Error;

fn sine(grid: &Arc<Grid>, amp: f64) -> SpectralField {
    SpectralField::from_fn(grid.clone(), 1, |m| {
        let c = match grid.lattice(m)[0] {
            1 => Complex64::new(0.0, -0.5 * amp),
            -1 => Complex64::new(0.0, 0.5 * amp),
            _ => Complex64::new(0.0, 0.0),
        };
        vec![c]
    })
}

/// Mean-free data with a few modes and fixed phases.
fn multi_mode(grid: &Arc<Grid>, amp: f64) -> SpectralField {
    SpectralField::from_fn(grid.clone(), 1, |m| {
        let k = grid.lattice(m)[0];
        if k == 0 || k.abs() > 6 {
            return vec![Complex64::new(0.0, 0.0)];
        }
        let phase = 0.7 * k as f64;
        let a = amp / (k.abs() as f64).powi(2);
        vec![Complex64::from_polar(a, phase)]
    })
    .hermitian_part()
}

#[test]
fn heat_flow_is_exact() {
    let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
    let u0 = multi_mode(&g, 1.0);
    let spec = builtin("heat-1d").unwrap();
    for scheme in [Scheme::Etdrk4, Scheme::IfRk4] {
        let opts = IntegratorOptions::new(1.0, 0.013).with_scheme(scheme);
        let trace = integrate(&spec, &u0, &opts).unwrap();
        for (t, u) in trace.times.iter().zip(&trace.snapshots) {
            for mode in 0..g.len() {
                let expect = u0.component(0)[mode] * (-t * g.magnitude(mode).powi(2)).exp();
                let got = u.component(0)[mode];
                assert!((got - expect).norm() <= 1e-12 * expect.norm().max(1e-300) + 1e-300);
            }
        }
    }
}

fn burgers_final(dt: f64, scheme: Scheme) -> SpectralField {
    let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
    let opts = IntegratorOptions::new(0.5, dt)
        .with_scheme(scheme)
        .with_snapshots(SnapshotPolicy::Explicit { times: vec![] });
    integrate(&builtin_burgers(), &sine(&g, 1.0), &opts).unwrap().last().clone()
}

#[test]
fn etdrk4_converges_at_fourth_order() {
    let reference = burgers_final(1e-3 / 8.0, Scheme::Etdrk4);
    let e1 = burgers_final(0.05, Scheme::Etdrk4).distance(&reference);
    let e2 = burgers_final(0.025, Scheme::Etdrk4).distance(&reference);
    let order = (e1 / e2).log2();
    assert!(order >= 3.5, "observed order {order} ({e1:e} -> {e2:e})");
}

#[test]
fn ifrk4_converges() {
    let reference = burgers_final(1e-3 / 8.0, Scheme::Etdrk4);
    let e1 = burgers_final(0.05, Scheme::IfRk4).distance(&reference);
    let e2 = burgers_final(0.025, Scheme::IfRk4).distance(&reference);
    assert!((e1 / e2).log2() >= 3.5);
}

#[test]
fn adaptive_matches_fixed_step() {
    let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
    let reference = burgers_final(1e-3 / 8.0, Scheme::Etdrk4);
    let opts = IntegratorOptions::new(0.5, 0.1)
        .with_tolerance(1e-10)
        .with_snapshots(SnapshotPolicy::Explicit { times: vec![] });
    let trace = integrate(&builtin_burgers(), &sine(&g, 1.0), &opts).unwrap();
    assert!(trace.last().distance(&reference) < 1e-8);
}

#[test]
fn navier_stokes_energy_decays_and_stays_solenoidal() {
    let g = make_grid(3, 16, 2.0 * PI, 7.0).unwrap();
    // Taylor-Green: u = (sin x cos y cos z, -cos x sin y cos z, 0)
    let u0 = SpectralField::from_fn(g.clone(), 3, |mode| {
        let m = g.lattice(mode);
        let mut c = vec![Complex64::new(0.0, 0.0); 3];
        if m[0].abs() == 1 && m[1].abs() == 1 && m[2].abs() == 1 {
            let sx = Complex64::new(0.0, -0.5 * m[0].signum() as f64);
            c[0] = sx * 0.25;
            let sy = Complex64::new(0.0, -0.5 * m[1].signum() as f64);
            c[1] = -sy * 0.25;
        }
        c
    })
    .scaled(2.0);
    assert!(u0.divergence().unwrap().max_abs() < 1e-15);
    let spec = builtin_navier_stokes(3).unwrap();
    let trace = integrate(&spec, &u0, &IntegratorOptions::new(1.0, 0.01)).unwrap();
    let energies: Vec<f64> = trace.snapshots.iter().map(|u| u.l2()).collect();
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
    for u in &trace.snapshots {
        assert!(u.divergence().unwrap().max_abs() < 1e-14);
        assert!(u.is_mean_free(1e-15));
    }
}

#[test]
fn picard_of_linear_system_stops_after_one_iteration() {
    let g = make_grid(1, 32, 2.0 * PI, 15.0).unwrap();
    let opts = PicardOptions {
        p: 4.0,
        times: dense_times(1e-4, 8, 20, 0.1).map(|t| [vec![0.0], t].concat()).unwrap(),
        max_iters: 5,
        tol: 1e-14,
    };
    let out = picard_solve(&builtin("heat-1d").unwrap(), &multi_mode(&g, 1.0), &opts).unwrap();
    assert_eq!(out.iterations, 1);
}

#[test]
fn picard_agrees_with_time_stepping() {
    let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
    let u0 = multi_mode(&g, 0.3);
    let horizon = 0.2;
    let times = [vec![0.0], dense_times(1e-5, 16, 4000, horizon).unwrap()].concat();
    let p = 4.0;
    let out = picard_solve(
        &builtin_burgers(),
        &u0,
        &PicardOptions {
            p,
            times: times.clone(),
            max_iters: 50,
            tol: 1e-12,
        },
    )
    .unwrap();
    assert!(out.contraction_ratio() < 1.0);
    let opts = IntegratorOptions::new(horizon, 1e-3).with_snapshots(SnapshotPolicy::Explicit {
        times: times[1..].to_vec(),
    });
    let stepped = integrate(&builtin_burgers(), &u0, &opts).unwrap();
    let s = -0.5 + 2.0 / p;
    let dist = times
        .iter()
        .zip(out.trace.snapshots.iter().zip(&stepped.snapshots))
        .map(|(t, (a, b))| t.powf(1.0 / p) * sobolev_norm(&a.sub(b), s))
        .fold(0.0, f64::max);
    assert!(dist <= 1e-6, "Kato distance {dist:e}");
}

#[test]
fn picard_contracts_for_large_data_on_short_horizon() {
    let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
    let u0 = multi_mode(&g, 30.0);
    let horizon = 1e-4;
    let times = [vec![0.0], dense_times(1e-8, 8, 200, horizon).unwrap()].concat();
    let out = picard_solve(
        &builtin_burgers(),
        &u0,
        &PicardOptions {
            p: 4.0,
            times,
            max_iters: 40,
            tol: 1e-10,
        },
    )
    .unwrap();
    assert!(out.contraction_ratio() < 1.0);
}

#[test]
fn rescaling_by_one_is_identity() {
    let g = make_grid(1, 32, 2.0 * PI, 15.0).unwrap();
    let trace = integrate(&builtin_burgers(), &sine(&g, 1.0), &IntegratorOptions::new(0.1, 0.01)).unwrap();
    let same = rescale_solution(&trace, 1.0).unwrap();
    assert_eq!(same.times, trace.times);
    assert!(matches!(rescale_solution(&trace, 3.0), Err(Error::IncompatibleScale(_))));
    assert!(matches!(rescale_solution(&trace, 1.5), Err(Error::IncompatibleScale(_))));
}

#[test]
fn rescaled_heat_flow_is_heat_flow_of_rescaled_data() {
    let g = make_grid(1, 32, 2.0 * PI, 15.0).unwrap();
    let spec = builtin("heat-1d").unwrap();
    let u0 = sine(&g, 1.0);
    let trace = integrate(&spec, &u0, &IntegratorOptions::new(0.4, 0.01)).unwrap();
    let scaled = rescale_solution(&trace, 2.0).unwrap();
    let v0 = rescale_data(&u0, 2.0, 1.0).unwrap();
    for (t, v) in scaled.times.iter().zip(&scaled.snapshots) {
        let exact = v0.apply_multiplier(radius_core::spectral::heat_symbol(*t), Complex64::new(1.0, 0.0)).unwrap();
        assert!(v.distance(&exact) <= 1e-15 * (1.0 + exact.l2()));
    }
}

#[test]
fn burgers_is_scaling_covariant() {
    let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
    let u0 = multi_mode(&g, 0.5);
    let spec = builtin_burgers();
    let horizon = 0.4;
    let times: Vec<f64> = (1..=20).map(|i| horizon * i as f64 / 20.0).collect();
    let opts = IntegratorOptions::new(horizon, 1e-3)
        .with_snapshots(SnapshotPolicy::Explicit { times: times.clone() });
    let scaled = rescale_solution(&integrate(&spec, &u0, &opts).unwrap(), 2.0).unwrap();
    let v0 = rescale_data(&u0, 2.0, 1.0).unwrap();
    let small: Vec<f64> = times.iter().map(|t| t / 4.0).collect();
    let spec_small = scaled.spec.clone();
    let opts = IntegratorOptions::new(horizon / 4.0, 1e-3 / 4.0)
        .with_snapshots(SnapshotPolicy::Explicit { times: small });
    let direct = integrate(&spec_small, &v0, &opts).unwrap();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (a, b) in scaled.snapshots.iter().zip(&direct.snapshots) {
        worst = worst.max(a.distance(b));
        scale = scale.max(b.l2());
    }
    assert!(worst <= 1e-6 * scale, "{worst:e} vs {scale:e}");
}

#[test]
fn kato_norm_is_scale_invariant() {
    let g = make_grid(1, 64, 2.0 * PI, 31.0).unwrap();
    let u0 = multi_mode(&g, 0.5);
    let trace = integrate(&builtin_burgers(), &u0, &IntegratorOptions::new(0.5, 0.005)).unwrap();
    let scaled = rescale_solution(&trace, 2.0).unwrap();
    for p in [3.0, 4.0, 8.0] {
        let s = -0.5 + 2.0 / p;
        let a = kato_norm(&trace, p, s).value;
        let b = kato_norm(&scaled, p, s).value;
        assert!((a - b).abs() <= 1e-6 * a, "p={p}: {a} vs {b}");
    }
}

#[test]
fn trace_round_trips_through_disk() {
    let g = make_grid(2, 16, 2.0 * PI, 7.0).unwrap();
    let u0 = SpectralField::from_fn(g.clone(), 1, |m| {
        let r = g.magnitude(m);
        vec![Complex64::new((-r).exp(), 0.0)]
    });
    let mut u0 = u0.hermitian_part();
    u0.remove_mean();
    let trace = integrate(&builtin("cubic-heat-2d").unwrap(), &u0, &IntegratorOptions::new(0.1, 0.01)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("run");
    write_trace(&trace, &stem).unwrap();
    let back = read_trace(&stem).unwrap();
    assert_eq!(back.times, trace.times);
    assert_eq!(back.spec, trace.spec);
    for (a, b) in back.snapshots.iter().zip(&trace.snapshots) {
        assert_eq!(a.distance(b), 0.0);
    }
    let index: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(index["format"], "sp-trace");
    assert_eq!(index["version"], 1);
}

#[test]
fn focusing_blow_up_guard_trips() {
    let g = make_grid(1, 32, 2.0 * PI, 15.0).unwrap();
    let u0 = multi_mode(&g, 40.0);
    let spec = builtin("cubic-heat-focusing-1d").unwrap();
    let mut opts = IntegratorOptions::new(1.0, 1e-4);
    opts.guard = Some(radius_core::integrator::BlowupGuard { factor: 1e3, p: None });
    assert!(matches!(integrate(&spec, &u0, &opts), Err(Error::BlowUp { .. })));
}
