//! Scenario drivers: calibration, ensemble runs and the checks each
//! scenario reports.

use std::sync::Arc;

use rayon::prelude::*;

use super::config::{KEpsMode, ScenarioConfig, ScenarioKind};
use super::data::generate_initial_data;
use super::report::{
    CalibrationSummary, Check, DoubledCalibration, HorizonRow, PlotPoint, PlotSeries, RunReport, ScenarioReport,
};
use crate::analyticity::{
    calibrate_heat_constant, calibrate_k_eps, calibrate_lemma_constant, corollary_experiment, k_eps_upper_bound,
    radius_sample, t_eps_critical, t_eps_subcritical, verify_bootstrap, CalibratedConstants, CorollaryOptions,
    GevreyParams, LambdaRule, Provenance,
};
use crate::error::{Error, Result};
use crate::integrator::{
    dense_times, integrate, rescale_data, rescale_solution, IntegratorOptions, SnapshotPolicy, Trace,
};
use crate::models::{ScalingData, Symbol, SystemSpec};
use crate::norms::{heat_flow_kato_norm, kato_norm, product_law_ratio, sobolev_norm};
use crate::spectral::{Grid, SpectralField};

/// One ensemble member.
struct Member {
    run: usize,
    seed: u64,
    u0: SpectralField,
}

/// Output of a scenario body: the report plus one representative trace.
pub(crate) struct Outcome {
    pub report: ScenarioReport,
    pub trace: Option<Trace>,
}

fn needs_solenoidal(spec: &SystemSpec) -> bool {
    spec.terms.iter().any(|t| matches!(t.symbol, Symbol::LerayDivergence { .. }))
}

fn members(
    config: &ScenarioConfig,
    spec: &SystemSpec,
    grid: &Arc<Grid>,
    seeds: usize,
    seed_base: u64,
    norms: &[f64],
) -> Result<Vec<Member>> {
    let levels: Vec<Option<f64>> = if norms.is_empty() {
        vec![None]
    } else {
        norms.iter().map(|&n| Some(n)).collect()
    };
    let mut law = config.data.clone();
    law.solenoidal |= needs_solenoidal(spec);
    let mut out = Vec::new();
    for i in 0..seeds as u64 {
        for level in &levels {
            if let Some(n) = level {
                law.norm = Some(*n);
            }
            let seed = seed_base + i;
            let run = out.len();
            let u0 = generate_initial_data(&law, grid, spec.components, seed)
                .map_err(|e| e.in_run(format!("run {run}"), "initial data"))?;
            out.push(Member { run, seed, u0 });
        }
    }
    Ok(out)
}

/// Sorted union; entries of `extra` win over base entries within a relative
/// distance of 1e-9.
fn merge_times(base: Vec<f64>, extra: &[f64]) -> Vec<f64> {
    let mut all: Vec<(f64, bool)> = base.into_iter().map(|t| (t, false)).collect();
    all.extend(extra.iter().map(|&t| (t, true)));
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, bool)> = Vec::with_capacity(all.len());
    for (t, keep) in all {
        match out.last_mut() {
            Some(last) if (t - last.0).abs() <= 1e-9 * t.abs() => {
                if keep && !last.1 {
                    *last = (t, true);
                }
            }
            _ => out.push((t, keep)),
        }
    }
    out.into_iter().map(|x| x.0).collect()
}

fn run_trace(config: &ScenarioConfig, spec: &SystemSpec, u0: &SpectralField, horizon: f64, extra: &[f64]) -> Result<Trace> {
    let ic = &config.integrator;
    let base = dense_times(ic.first_snapshot.min(horizon), ic.per_decade, ic.uniform, horizon)?;
    let opts = IntegratorOptions::new(horizon, ic.dt.min(horizon))
        .with_scheme(ic.scheme)
        .with_snapshots(SnapshotPolicy::Explicit {
            times: merge_times(base, extra),
        });
    integrate(spec, u0, &opts)
}

fn snapshot_near<'a>(trace: &'a Trace, t: f64) -> Option<&'a SpectralField> {
    trace
        .times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-9 * t)
        .map(|i| &trace.snapshots[i])
}

/// `n` decades below `top`, `per_decade` samples each, decreasing.
fn decades_below(top: f64, decades: f64, per_decade: usize) -> Vec<f64> {
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n).map(|j| top * 10f64.powf(-(j as f64) / per_decade as f64)).collect()
}

fn horizons_below(config: &ScenarioConfig, top: f64) -> Vec<f64> {
    let a = &config.analysis;
    if a.horizons.is_empty() {
        decades_below(top, a.decades, a.per_decade)
    } else {
        a.horizons.iter().cloned().filter(|&t| t > 0.0 && t <= top * (1.0 + 1e-12)).collect()
    }
}

fn kato_exponent(config: &ScenarioConfig, scaling: &ScalingData, eps: f64) -> Result<f64> {
    let p = match (config.scenario, config.analysis.delta) {
        (ScenarioKind::PartA, Some(delta)) => {
            let p = 2.0 / delta;
            if let Some(given) = config.analysis.p {
                if (given - p).abs() > 1e-12 * p {
                    return Err(Error::Config(format!("part-a fixes p = 2/delta = {p}, got p = {given}")));
                }
            }
            p
        }
        _ => config.analysis.p.unwrap_or(2.0 * scaling.min_kato_exponent()),
    };
    GevreyParams::new(0.0, eps, 1.0, p)?.validate(scaling)?;
    Ok(p)
}

fn ratio_factor(a: f64, b: f64) -> f64 {
    a.max(b) / a.min(b)
}

struct Calibrated {
    constants: CalibratedConstants,
    summary: Option<CalibrationSummary>,
    trace: Option<Trace>,
}

fn calibrate_at(
    config: &ScenarioConfig,
    spec: &SystemSpec,
    p: f64,
    eps: f64,
    refine: usize,
) -> Result<(CalibratedConstants, CalibrationSummary, Trace)> {
    let cal = &config.calibration;
    let scaling = spec.scaling_data()?;
    let grid = config.make_grid(spec.dim, refine)?;
    let seed_base = config.seed + cal.seed_offset;
    let horizon = cal.horizons.iter().cloned().fold(0.0, f64::max);
    if !(horizon > 0.0) || cal.lambdas.is_empty() {
        return Err(Error::Config("calibration needs positive horizons and a lambda grid".into()));
    }
    let ensemble = members(config, spec, &grid, cal.seeds, seed_base, &cal.norms)?;
    let traces = ensemble
        .par_iter()
        .map(|m| {
            run_trace(config, spec, &m.u0, horizon, &cal.horizons)
                .map_err(|e| e.in_run(format!("calibration {}", m.run), "integration"))
        })
        .collect::<Result<Vec<_>>>()?;
    let lemma = calibrate_lemma_constant(&traces, eps, p, &cal.lambdas, &cal.horizons)?;
    let provenance = Provenance {
        description: format!(
            "largest lemma ratio over {} runs, {} lambdas and {} horizons at {} points per axis",
            traces.len(),
            cal.lambdas.len(),
            cal.horizons.len(),
            grid.points()
        ),
        system: spec.name.clone(),
        seeds: (seed_base..seed_base + cal.seeds as u64).collect(),
        points: grid.points(),
        lambdas: cal.lambdas.clone(),
        horizons: cal.horizons.clone(),
        runs: traces.len(),
    };
    let mut constants = CalibratedConstants::new(spec.order, eps, p, lemma.c_lemma, provenance)?;
    if let Some(delta) = config.analysis.delta {
        let fields: Vec<SpectralField> = ensemble.iter().map(|m| m.u0.clone()).collect();
        let c_heat = calibrate_heat_constant(&fields, &scaling, delta, p, eps, &cal.horizons)?;
        constants = constants.with_heat_constant(delta, c_heat)?;
    }
    let k = match cal.k_eps {
        KEpsMode::Bound => k_eps_upper_bound(eps, p),
        KEpsMode::Empirical => {
            let fields: Vec<SpectralField> = traces.iter().flat_map(|t| t.snapshots.iter().cloned()).collect();
            calibrate_k_eps(&fields, &scaling, eps, p)
        }
    };
    constants = constants.with_k_eps(k);
    let summary = CalibrationSummary {
        samples: lemma.samples.len(),
        unresolved: lemma.samples.iter().filter(|s| !s.resolved).count(),
        worst: lemma.worst,
        doubled: None,
    };
    let first = traces.into_iter().next().expect("nonempty ensemble");
    Ok((constants, summary, first))
}

fn calibrate(config: &ScenarioConfig, spec: &SystemSpec, p: f64, eps: f64) -> Result<Calibrated> {
    if let Some(file) = &config.calibration.file {
        let text = std::fs::read_to_string(file)
            .map_err(|e| Error::Config(format!("cannot read calibration {}: {e}", file.display())))?;
        let constants: CalibratedConstants = serde_json::from_str(&text)?;
        constants.check_matches(spec.order, eps, p)?;
        return Ok(Calibrated {
            constants,
            summary: None,
            trace: None,
        });
    }
    let (constants, mut summary, trace) = calibrate_at(config, spec, p, eps, 1)?;
    if config.ensemble.double_resolution {
        let (fine, _, _) = calibrate_at(config, spec, p, eps, 2)?;
        summary.doubled = Some(DoubledCalibration {
            points: fine.provenance.points,
            c_lemma: fine.c_lemma,
            c_heat: fine.c_heat,
            c_lemma_factor: ratio_factor(constants.c_lemma, fine.c_lemma),
            c_heat_factor: constants.c_heat.zip(fine.c_heat).map(|(a, b)| ratio_factor(a, b)),
        });
    }
    Ok(Calibrated {
        constants,
        summary: Some(summary),
        trace: Some(trace),
    })
}

fn measured(trace: &Trace, t: f64, config: &ScenarioConfig) -> (Option<f64>, bool) {
    match snapshot_near(trace, t) {
        Some(u) => {
            let r = radius_sample(u, t, &config.fit);
            (r.delta_fit, r.delta_fit.is_some() && r.floor_flag)
        }
        None => (None, false),
    }
}

fn series_of(run: &RunReport) -> PlotSeries {
    PlotSeries {
        label: format!("run{}", run.run),
        points: run
            .rows
            .iter()
            .rev()
            .map(|r| PlotPoint {
                t: r.horizon,
                r_measured: r.measured_radius,
                r_certified: r.certified_radius,
                lambda_t: Some(r.lambda),
                norm_factor: r.norm_factor,
            })
            .collect(),
    }
}

fn bootstrap_check(runs: &[RunReport], what: &str) -> Check {
    let rows: usize = runs.iter().filter_map(|r| r.bootstrap.as_ref()).map(|b| b.rows.len()).sum();
    let violations = runs
        .iter()
        .filter_map(|r| r.bootstrap.as_ref())
        .flat_map(|b| &b.rows)
        .filter(|row| row.resolved && !(row.hypothesis_ok && row.comparison_ok && row.gevrey_ok))
        .count();
    let unresolved: usize = runs.iter().filter_map(|r| r.bootstrap.as_ref()).map(|b| b.unresolved).sum();
    let failures: Vec<&str> = runs.iter().filter_map(|r| r.failure.as_deref()).collect();
    Check::new(
        format!("bootstrap holds for every {what}"),
        violations == 0 && unresolved == 0 && failures.is_empty() && rows > 0,
        format!(
            "{violations} violations and {unresolved} unresolved rows out of {rows} in {} runs{}",
            runs.len(),
            failures.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn attach_calibration(report: &mut ScenarioReport, cal: &Calibrated) {
    report.constants = Some(cal.constants.clone());
    report.calibration = cal.summary.clone();
}

fn part_b(config: &ScenarioConfig, spec: &SystemSpec) -> Result<Outcome> {
    let scaling = spec.scaling_data()?;
    let eps = config.analysis.eps;
    let p = kato_exponent(config, &scaling, eps)?;
    let s = scaling.kato_index(p);
    let cal = calibrate(config, spec, p, eps)?;
    let c = cal.constants.c_small;
    let grid = config.make_grid(spec.dim, 1)?;
    let ensemble = members(config, spec, &grid, config.ensemble.seeds, config.seed, &config.ensemble.norms)?;
    let results = ensemble
        .par_iter()
        .map(|m| -> Result<(RunReport, Trace)> {
            let tag = format!("run {}", m.run);
            let t_eps = t_eps_critical(&m.u0, eps, p, s, c, config.integrator.horizon)
                .map_err(|e| e.in_run(tag.clone(), "threshold"))?;
            let horizons = horizons_below(config, t_eps);
            let top = horizons.iter().cloned().fold(0.0, f64::max);
            if !(top > 0.0) {
                return Err(Error::Config("no horizon below the threshold time".into()).in_run(tag, "horizons"));
            }
            let trace = run_trace(config, spec, &m.u0, top, &horizons).map_err(|e| e.in_run(tag.clone(), "integration"))?;
            let boot = verify_bootstrap(&trace, eps, p, &cal.constants, LambdaRule::Critical, &horizons)
                .map_err(|e| e.in_run(tag.clone(), "bootstrap"))?;
            let rows = boot
                .rows
                .iter()
                .map(|row| {
                    let (measured_radius, measured_resolved) = measured(&trace, row.horizon, config);
                    HorizonRow {
                        horizon: row.horizon,
                        lambda: row.lambda,
                        heat_norm: row.heat_norm,
                        certified_radius: row.certified_radius,
                        measured_radius,
                        measured_resolved,
                        norm_factor: None,
                        ratio: None,
                    }
                })
                .collect();
            let t_min = horizons.iter().cloned().fold(f64::INFINITY, f64::min);
            let tiny = t_min * 1e-8;
            let mut run = RunReport {
                run: m.run,
                seed: m.seed,
                points: grid.points(),
                data_norm: sobolev_norm(&m.u0, scaling.s_crit),
                t_eps: Some(t_eps),
                rows,
                bootstrap: Some(boot),
                ..Default::default()
            };
            run.metrics.insert("heat_norm_tiny".into(), heat_flow_kato_norm(&m.u0, eps, p, s, tiny));
            run.metrics
                .insert("heat_floor_bound".into(), tiny.powf(1.0 / p) * sobolev_norm(&m.u0, s));
            run.metrics.insert("tiny_horizon".into(), tiny);
            Ok((run, trace))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ScenarioReport::empty(ScenarioKind::PartB, &spec.name, config.seed);
    attach_calibration(&mut report, &cal);
    report.seeds = ensemble.iter().map(|m| m.seed).collect();
    let mut first = None;
    for (run, trace) in results {
        report.series.push(series_of(&run));
        report.runs.push(run);
        first.get_or_insert(trace);
    }
    report.checks.push(bootstrap_check(&report.runs, "T <= T_eps"));

    let mut monotone = true;
    let mut span = f64::INFINITY;
    for run in &report.runs {
        // rows run from the largest horizon down
        monotone &= run.rows.windows(2).all(|w| w[1].lambda > w[0].lambda);
        let (lo, hi) = run.rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
            (lo.min(r.horizon), hi.max(r.horizon))
        });
        span = span.min((hi / lo).log10());
    }
    report.checks.push(Check::new(
        "lambda_T increases strictly as T decreases over at least 3 decades",
        monotone && span >= 3.0 - 1e-9,
        format!("smallest span {span:.3} decades"),
    ));
    let mut vanish = true;
    for run in &report.runs {
        let tiny = run.metrics["heat_norm_tiny"];
        let floor = run.metrics["heat_floor_bound"];
        let smallest = run.rows.last().map(|r| r.heat_norm).unwrap_or(0.0);
        vanish &= run.rows.windows(2).all(|w| w[1].heat_norm <= w[0].heat_norm);
        vanish &= tiny <= floor * (1.0 + 1e-9) && tiny <= smallest;
    }
    report.checks.push(Check::new(
        "heat-flow Kato norm decreases to zero with T, down to the lattice floor",
        vanish,
        "monotone over the horizons and below T^{1/p} |U0|_{H^{s_p}} at 1e-8 of the smallest horizon",
    ));
    Ok(Outcome {
        report,
        trace: first.or(cal.trace),
    })
}

fn part_a(config: &ScenarioConfig, spec: &SystemSpec) -> Result<Outcome> {
    let scaling = spec.scaling_data()?;
    let eps = config.analysis.eps;
    let delta = config.analysis.delta.ok_or_else(|| Error::Config("part-a needs analysis.delta".into()))?;
    let p = kato_exponent(config, &scaling, eps)?;
    let cal = calibrate(config, spec, p, eps)?;
    let eta = cal
        .constants
        .eta
        .filter(|_| cal.constants.delta.is_some_and(|d| (d - delta).abs() <= 1e-12))
        .ok_or_else(|| Error::CalibrationMismatch(format!("no heat constant for delta = {delta}")))?;
    let grid = config.make_grid(spec.dim, 1)?;
    let ensemble = members(config, spec, &grid, config.ensemble.seeds, config.seed, &config.ensemble.norms)?;
    let floor = (2.0 * delta * (1.0 - eps)).sqrt();
    let results = ensemble
        .par_iter()
        .map(|m| -> Result<(RunReport, Trace)> {
            let tag = format!("run {}", m.run);
            let data_norm = sobolev_norm(&m.u0, scaling.s_crit + delta);
            let t_eps = t_eps_subcritical(data_norm, delta, eta);
            let top = (t_eps / 10.0).min(config.integrator.horizon);
            let horizons = horizons_below(config, top);
            let end = horizons.iter().cloned().fold(0.0, f64::max);
            if !(end > 0.0) {
                return Err(Error::Config("no horizon below T_eps / 10".into()).in_run(tag, "horizons"));
            }
            let trace = run_trace(config, spec, &m.u0, end, &horizons).map_err(|e| e.in_run(tag.clone(), "integration"))?;
            let boot = verify_bootstrap(
                &trace,
                eps,
                p,
                &cal.constants,
                LambdaRule::Subcritical { data_norm },
                &horizons,
            )
            .map_err(|e| e.in_run(tag.clone(), "bootstrap"))?;
            let rows = boot
                .rows
                .iter()
                .map(|row| {
                    let (measured_radius, measured_resolved) = measured(&trace, row.horizon, config);
                    let norm_factor = (eta / (row.horizon * data_norm.powf(2.0 / delta))).ln().sqrt();
                    HorizonRow {
                        horizon: row.horizon,
                        lambda: row.lambda,
                        heat_norm: row.heat_norm,
                        certified_radius: row.certified_radius,
                        measured_radius,
                        measured_resolved,
                        norm_factor: Some(norm_factor),
                        ratio: row.certified_radius.map(|r| r / (row.horizon.sqrt() * norm_factor)),
                    }
                })
                .collect();
            Ok((
                RunReport {
                    run: m.run,
                    seed: m.seed,
                    points: grid.points(),
                    data_norm,
                    t_eps: Some(t_eps),
                    rows,
                    bootstrap: Some(boot),
                    ..Default::default()
                },
                trace,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ScenarioReport::empty(ScenarioKind::PartA, &spec.name, config.seed);
    attach_calibration(&mut report, &cal);
    report.seeds = ensemble.iter().map(|m| m.seed).collect();
    let mut first = None;
    for (run, trace) in results {
        report.series.push(series_of(&run));
        report.runs.push(run);
        first.get_or_insert(trace);
    }
    report.checks.push(bootstrap_check(&report.runs, "T <= T_eps / 10"));
    let worst = report
        .runs
        .iter()
        .flat_map(|r| &r.rows)
        .map(|r| r.ratio.unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    report.checks.push(Check::new(
        "certified ratio stays above 0.95 sqrt(2 delta (1 - eps))",
        worst >= 0.95 * floor,
        format!("smallest ratio {worst:.6}, bound {:.6}", 0.95 * floor),
    ));
    Ok(Outcome {
        report,
        trace: first.or(cal.trace),
    })
}

fn corollary(config: &ScenarioConfig, spec: &SystemSpec) -> Result<Outcome> {
    let scaling = spec.scaling_data()?;
    let mut eps_values = vec![config.analysis.eps];
    eps_values.extend(config.analysis.eps_sweep.iter().cloned().filter(|&e| e != config.analysis.eps));
    if eps_values.len() > 1 && config.calibration.file.is_some() {
        return Err(Error::Config("an eps sweep recalibrates; drop calibration.file".into()));
    }
    let grid = config.make_grid(spec.dim, 1)?;
    let ensemble = members(config, spec, &grid, config.ensemble.seeds, config.seed, &config.ensemble.norms)?;
    let mut report = ScenarioReport::empty(ScenarioKind::Corollary, &spec.name, config.seed);
    report.seeds = ensemble.iter().map(|m| m.seed).collect();
    let mut first_trace = None;
    let mut best: Option<(f64, f64)> = None;
    for (k, &eps) in eps_values.iter().enumerate() {
        let p = kato_exponent(config, &scaling, eps)?;
        let cal = calibrate(config, spec, p, eps)?;
        if k == 0 {
            attach_calibration(&mut report, &cal);
            first_trace = cal.trace.clone();
        }
        let opts = CorollaryOptions {
            eps,
            p,
            min_t0: config.analysis.min_t0,
            horizon: config.integrator.horizon,
            dt: config.integrator.dt,
            scheme: config.integrator.scheme,
            shifted_horizons: config.analysis.shifted_horizons.clone(),
            per_decade: config.integrator.per_decade,
            uniform: config.integrator.uniform,
            fit: config.fit,
        };
        let runs = ensemble
            .par_iter()
            .map(|m| -> Result<RunReport> {
                let mut run = RunReport {
                    run: m.run + k * ensemble.len(),
                    seed: m.seed,
                    points: grid.points(),
                    data_norm: sobolev_norm(&m.u0, scaling.s_crit),
                    ..Default::default()
                };
                run.metrics.insert("eps".into(), eps);
                match corollary_experiment(spec, &m.u0, &cal.constants, &opts) {
                    Ok(r) => {
                        run.t_eps = Some(r.t0);
                        run.corollary = Some(r);
                    }
                    Err(e @ Error::ThresholdNotReached { .. }) => run.failure = Some(e.to_string()),
                    Err(e) => return Err(e.in_run(format!("run {}", m.run), "corollary")),
                }
                Ok(run)
            })
            .collect::<Result<Vec<_>>>()?;
        for run in runs {
            if let Some(r) = &run.corollary {
                if best.is_none_or(|(_, b)| r.certified_ratio > b) {
                    best = Some((eps, r.certified_ratio));
                }
                let mut points: Vec<PlotPoint> = r
                    .radius
                    .iter()
                    .map(|s| PlotPoint {
                        t: s.time,
                        r_measured: s.delta_fit,
                        r_certified: None,
                        lambda_t: None,
                        norm_factor: None,
                    })
                    .collect();
                if let Some(b) = &r.bootstrap {
                    points.extend(b.rows.iter().map(|row| PlotPoint {
                        t: r.t0 + row.horizon,
                        r_measured: None,
                        r_certified: row.certified_radius,
                        lambda_t: None,
                        norm_factor: None,
                    }));
                }
                points.sort_by(|a, b| a.t.total_cmp(&b.t));
                report.series.push(PlotSeries {
                    label: format!("run{}", run.run),
                    points,
                });
            }
            report.runs.push(run);
        }
    }
    let reached = report.runs.iter().all(|r| r.corollary.is_some());
    let failure = report.runs.iter().find_map(|r| r.failure.clone()).unwrap_or_default();
    report.checks.push(Check::new(
        "H^{s_crit} norm falls below c / (2 K_eps) within the horizon",
        reached,
        failure,
    ));
    let reports: Vec<_> = report.runs.iter().filter_map(|r| r.corollary.as_ref()).collect();
    let shifted_ok = reports.iter().all(|r| r.bootstrap.as_ref().is_none_or(|b| b.passed));
    report.checks.push(Check::new(
        "shifted bootstrap holds for every tested T",
        reached && shifted_ok,
        format!("{} runs", reports.len()),
    ));
    let grew = reports
        .iter()
        .all(|r| matches!((r.ratio_at_t0, r.ratio_final), (Some(a), Some(b)) if b > a) || r.trivial);
    report.checks.push(Check::new(
        "measured R(t) / sqrt(t) at the final time exceeds its value at t0",
        reached && grew,
        reports
            .iter()
            .map(|r| format!("{:?} -> {:?}", r.ratio_at_t0, r.ratio_final))
            .collect::<Vec<_>>()
            .join("; "),
    ));
    if let Some((eps, ratio)) = best {
        if let Some(run) = report.runs.first_mut() {
            run.metrics.insert("best_eps".into(), eps);
            run.metrics.insert("best_certified_ratio".into(), ratio);
        }
    }
    Ok(Outcome {
        report,
        trace: first_trace,
    })
}

fn lemma_check(config: &ScenarioConfig, spec: &SystemSpec) -> Result<Outcome> {
    if config.calibration.file.is_some() {
        return Err(Error::Config("lemma-check calibrates; drop calibration.file".into()));
    }
    let scaling = spec.scaling_data()?;
    let eps = config.analysis.eps;
    let p = kato_exponent(config, &scaling, eps)?;
    let cal = calibrate(config, spec, p, eps)?;
    let mut report = ScenarioReport::empty(ScenarioKind::LemmaCheck, &spec.name, config.seed);
    attach_calibration(&mut report, &cal);
    report.seeds = cal.constants.provenance.seeds.clone();
    let c = &cal.constants;
    report.checks.push(Check::new(
        "lemma constant is positive and finite",
        c.c_lemma > 0.0 && c.c_lemma.is_finite(),
        format!("C = {:e}, c = {:e}", c.c_lemma, c.c_small),
    ));
    if let Some(d) = cal.summary.as_ref().and_then(|s| s.doubled.as_ref()) {
        report.checks.push(Check::new(
            "lemma constant varies by less than a factor 2 when resolution doubles",
            d.c_lemma_factor < 2.0,
            format!("{:e} -> {:e} at {} points", c.c_lemma, d.c_lemma, d.points),
        ));
        if let Some(f) = d.c_heat_factor {
            report.checks.push(Check::new(
                "heat-flow constant varies by less than a factor 2 when resolution doubles",
                f < 2.0,
                format!("{:?} -> {:?}", c.c_heat, d.c_heat),
            ));
        }
    }
    Ok(Outcome {
        report,
        trace: cal.trace,
    })
}

fn product_law(config: &ScenarioConfig, spec: &SystemSpec) -> Result<Outcome> {
    let k = config.analysis.product_order.unwrap_or(spec.order as usize).max(2);
    let d = spec.dim as f64;
    let indices = if config.analysis.product_s.is_empty() {
        vec![d / 2.0 - d / (2.0 * k as f64)]
    } else {
        config.analysis.product_s.clone()
    };
    let mut report = ScenarioReport::empty(ScenarioKind::ProductLaw, &spec.name, config.seed);
    let refinements: &[usize] = if config.ensemble.double_resolution { &[1, 2] } else { &[1] };
    let mut worst_by_level: Vec<Vec<f64>> = Vec::new();
    for &refine in refinements {
        let grid = config.make_grid(spec.dim, refine)?;
        let mut worst = Vec::new();
        for &s in &indices {
            let mut law = config.data.clone();
            law.s = s;
            law.solenoidal = false;
            let ratios = (0..config.ensemble.seeds)
                .into_par_iter()
                .map(|i| -> Result<f64> {
                    let fields = (0..k)
                        .map(|j| generate_initial_data(&law, &grid, 1, config.seed + (i * k + j) as u64))
                        .collect::<Result<Vec<_>>>()?;
                    let refs: Vec<&SpectralField> = fields.iter().collect();
                    product_law_ratio(s, &refs).map_err(|e| e.in_run(format!("run {i}"), "product law"))
                })
                .collect::<Result<Vec<f64>>>()?;
            for (i, r) in ratios.iter().enumerate() {
                let mut run = RunReport {
                    run: report.runs.len(),
                    seed: config.seed + (i * k) as u64,
                    points: grid.points(),
                    ..Default::default()
                };
                run.metrics.insert("s".into(), s);
                run.metrics.insert("ratio".into(), *r);
                report.runs.push(run);
            }
            worst.push(ratios.iter().cloned().fold(0.0, f64::max));
        }
        worst_by_level.push(worst);
    }
    report.seeds = (0..(config.ensemble.seeds * k) as u64).map(|i| config.seed + i).collect();
    let base = &worst_by_level[0];
    report.checks.push(Check::new(
        "product-law ratios are finite",
        base.iter().all(|r| r.is_finite() && *r > 0.0),
        format!("largest ratio per index {base:?}"),
    ));
    if let Some(fine) = worst_by_level.get(1) {
        let factor = base.iter().zip(fine).map(|(a, b)| ratio_factor(*a, *b)).fold(1.0, f64::max);
        report.checks.push(Check::new(
            "largest product-law ratio varies by less than a factor 2 when resolution doubles",
            factor < 2.0,
            format!("factor {factor:.4}"),
        ));
    }
    Ok(Outcome { report, trace: None })
}

fn scaling_check(config: &ScenarioConfig, spec: &SystemSpec) -> Result<Outcome> {
    let scaling = spec.scaling_data()?;
    let lambda = config.analysis.rescale;
    let p = kato_exponent(config, &scaling, config.analysis.eps)?;
    let s = scaling.kato_index(p);
    let grid = config.make_grid(spec.dim, 1)?;
    let ensemble = members(config, spec, &grid, config.ensemble.seeds, config.seed, &config.ensemble.norms)?;
    let horizon = config.integrator.horizon;
    let uniform = config.integrator.uniform.max(1);
    let times: Vec<f64> = (1..=uniform).map(|i| horizon * i as f64 / uniform as f64).collect();
    let results = ensemble
        .par_iter()
        .map(|m| -> Result<(RunReport, Trace)> {
            let tag = format!("run {}", m.run);
            let opts = IntegratorOptions::new(horizon, config.integrator.dt)
                .with_scheme(config.integrator.scheme)
                .with_snapshots(SnapshotPolicy::Explicit { times: times.clone() });
            let trace = integrate(spec, &m.u0, &opts).map_err(|e| e.in_run(tag.clone(), "integration"))?;
            let scaled = rescale_solution(&trace, lambda).map_err(|e| e.in_run(tag.clone(), "rescale"))?;
            let v0 = rescale_data(&m.u0, lambda, scaling.alpha)?;
            let l2 = lambda * lambda;
            let opts = IntegratorOptions::new(horizon / l2, config.integrator.dt / l2)
                .with_scheme(config.integrator.scheme)
                .with_snapshots(SnapshotPolicy::Explicit {
                    times: times.iter().map(|t| t / l2).collect(),
                });
            let direct = integrate(&scaled.spec, &v0, &opts).map_err(|e| e.in_run(tag.clone(), "rescaled integration"))?;
            let (mut worst, mut size) = (0.0f64, 0.0f64);
            for (a, b) in scaled.snapshots.iter().zip(&direct.snapshots) {
                worst = worst.max(a.distance(b));
                size = size.max(b.l2());
            }
            let ka = kato_norm(&trace, p, s).value;
            let kb = kato_norm(&direct, p, s).value;
            let mut run = RunReport {
                run: m.run,
                seed: m.seed,
                points: grid.points(),
                data_norm: sobolev_norm(&m.u0, scaling.s_crit),
                ..Default::default()
            };
            run.metrics.insert("solution_error".into(), worst / size.max(f64::MIN_POSITIVE));
            run.metrics.insert("kato_error".into(), (ka - kb).abs() / ka.max(f64::MIN_POSITIVE));
            Ok((run, trace))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ScenarioReport::empty(ScenarioKind::ScalingCheck, &spec.name, config.seed);
    report.seeds = ensemble.iter().map(|m| m.seed).collect();
    let mut first = None;
    for (run, trace) in results {
        report.runs.push(run);
        first.get_or_insert(trace);
    }
    let tol = config.analysis.tolerance;
    let worst = |key: &str| report.runs.iter().map(|r| r.metrics[key]).fold(0.0, f64::max);
    let (sol, kato) = (worst("solution_error"), worst("kato_error"));
    report.checks.push(Check::new(
        format!("rescaled solution matches the rescaled run (lambda = {lambda})"),
        sol <= tol,
        format!("relative error {sol:e}, tolerance {tol:e}"),
    ));
    report.checks.push(Check::new(
        "critical Kato norm is scale invariant",
        kato <= tol,
        format!("relative error {kato:e}, tolerance {tol:e}"),
    ));
    Ok(Outcome { report, trace: first })
}

fn baseline(config: &ScenarioConfig, spec: &SystemSpec) -> Result<Outcome> {
    let scaling = spec.scaling_data()?;
    let grid = config.make_grid(spec.dim, 1)?;
    let ensemble = members(config, spec, &grid, config.ensemble.seeds, config.seed, &config.ensemble.norms)?;
    let factor = config.analysis.baseline_factor;
    let results = ensemble
        .par_iter()
        .map(|m| -> Result<(RunReport, Trace)> {
            let trace = run_trace(config, spec, &m.u0, config.integrator.horizon, &[])
                .map_err(|e| e.in_run(format!("run {}", m.run), "integration"))?;
            let radius: Vec<_> = trace
                .times
                .iter()
                .zip(&trace.snapshots)
                .filter(|(t, _)| **t > 0.0)
                .map(|(&t, u)| radius_sample(u, t, &config.fit))
                .collect();
            let window: Vec<_> = radius.iter().filter(|r| r.delta_fit.is_some() && r.floor_flag).collect();
            let mut run = RunReport {
                run: m.run,
                seed: m.seed,
                points: grid.points(),
                data_norm: sobolev_norm(&m.u0, scaling.s_crit),
                ..Default::default()
            };
            let min_ratio = window.iter().filter_map(|r| r.ratio).fold(f64::INFINITY, f64::min);
            run.metrics.insert("window_samples".into(), window.len() as f64);
            if let (Some(a), Some(b)) = (window.first(), window.last()) {
                run.metrics.insert("window_start".into(), a.time);
                run.metrics.insert("window_end".into(), b.time);
                run.metrics.insert("min_ratio".into(), min_ratio);
            }
            run.radius = radius;
            Ok((run, trace))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ScenarioReport::empty(ScenarioKind::BaselineSqrtT, &spec.name, config.seed);
    report.seeds = ensemble.iter().map(|m| m.seed).collect();
    let mut first = None;
    for (run, trace) in results {
        report.series.push(PlotSeries {
            label: format!("run{}", run.run),
            points: run
                .radius
                .iter()
                .map(|r| PlotPoint {
                    t: r.time,
                    r_measured: r.delta_fit,
                    r_certified: None,
                    lambda_t: None,
                    norm_factor: None,
                })
                .collect(),
        });
        report.runs.push(run);
        first.get_or_insert(trace);
    }
    let ok = report.runs.iter().all(|r| {
        r.metrics["window_samples"] >= 3.0 && r.metrics.get("min_ratio").is_some_and(|&m| m >= factor)
    });
    let worst = report
        .runs
        .iter()
        .filter_map(|r| r.metrics.get("min_ratio"))
        .cloned()
        .fold(f64::INFINITY, f64::min);
    report.checks.push(Check::new(
        format!("delta_fit(t) >= {factor} sqrt(t) over the resolved window"),
        ok,
        format!("smallest delta_fit / sqrt(t) = {worst:.4}; a sample is resolved when its spectrum reaches the fit floor inside the lattice"),
    ));
    Ok(Outcome { report, trace: first })
}

pub(crate) fn run_body(config: &ScenarioConfig) -> Result<Outcome> {
    let spec = config.system_spec()?;
    match config.scenario {
        ScenarioKind::PartA => part_a(config, &spec),
        ScenarioKind::PartB => part_b(config, &spec),
        ScenarioKind::Corollary => corollary(config, &spec),
        ScenarioKind::LemmaCheck => lemma_check(config, &spec),
        ScenarioKind::ProductLaw => product_law(config, &spec),
        ScenarioKind::ScalingCheck => scaling_check(config, &spec),
        ScenarioKind::BaselineSqrtT => baseline(config, &spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_prefers_requested_times() {
        let t = merge_times(vec![0.1, 0.2, 0.30000000001], &[0.3, 0.05]);
        assert_eq!(t, vec![0.05, 0.1, 0.2, 0.3]);
    }

    #[test]
    fn decades_are_inclusive() {
        let t = decades_below(1.0, 3.0, 2);
        assert_eq!(t.len(), 7);
        assert!((t[6] - 1e-3).abs() < 1e-15);
    }
}
