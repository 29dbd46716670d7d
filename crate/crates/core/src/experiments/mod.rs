//! Scenario configuration, reproducible initial data and report export.

mod config;
mod data;
mod report;
mod scenarios;

use std::path::Path;

pub use config::{
    AnalysisConfig, CalibrationConfig, EnsembleConfig, GridConfig, IntegratorConfig, KEpsMode, ScenarioConfig,
    ScenarioKind,
};
pub use data::{generate_initial_data, InitialDataLaw};
pub use report::{
    export_plotdata, series_csv, CalibrationSummary, Check, DoubledCalibration, HorizonRow, PlotPoint, PlotSeries,
    RunReport, ScenarioReport, PLOT_HEADER,
};

use crate::error::Result;
use crate::integrator::write_trace;
use crate::norms::NormSeries;

/// Runs a scenario. With an output directory (the argument, else
/// `config.output`) writes `report.json`, `norms.csv`, `constants.json` when
/// calibrated, and the first trace as `trace.*`.
pub fn run_scenario(config: &ScenarioConfig, output: Option<&Path>) -> Result<ScenarioReport> {
    let outcome = scenarios::run_body(config)?;
    let mut report = outcome.report;
    report.finish();
    if let Some(dir) = output.or(config.output.as_deref()) {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
        let norms = match &outcome.trace {
            Some(trace) => {
                let s = trace.spec.scaling_data()?.s_crit;
                NormSeries::sobolev(trace, s).to_csv()
            }
            None => format!("{}\n", NormSeries::CSV_HEADER),
        };
        std::fs::write(dir.join("norms.csv"), norms)?;
        if let Some(c) = &report.constants {
            std::fs::write(dir.join("constants.json"), serde_json::to_string_pretty(c)?)?;
        }
        if let Some(trace) = &outcome.trace {
            write_trace(trace, &dir.join("trace"))?;
        }
    }
    Ok(report)
}
