//! Scenario reports and their CSV export.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScenarioKind;
use crate::analyticity::{BootstrapReport, CalibratedConstants, CorollaryReport, LemmaSample, RadiusSample};
use crate::error::Result;

/// One named pass/fail outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Calibration diagnostics beyond the constants themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub samples: usize,
    pub unresolved: usize,
    pub worst: LemmaSample,
    /// Constants recomputed on the grid with twice the points per axis.
    pub doubled: Option<DoubledCalibration>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubledCalibration {
    pub points: usize,
    pub c_lemma: f64,
    pub c_heat: Option<f64>,
    /// `max(a, b) / min(a, b)` against the base resolution.
    pub c_lemma_factor: f64,
    pub c_heat_factor: Option<f64>,
}

/// One row of a per-horizon table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonRow {
    pub horizon: f64,
    pub lambda: f64,
    pub heat_norm: f64,
    /// `lambda sqrt(T)` when the bootstrap certifies it.
    pub certified_radius: Option<f64>,
    pub measured_radius: Option<f64>,
    pub measured_resolved: bool,
    /// `log^{1/2}(eta / (T |U0|^{2/delta}))` (part-a).
    pub norm_factor: Option<f64>,
    /// `certified_radius / (sqrt(T) norm_factor)` (part-a).
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: usize,
    pub seed: u64,
    pub points: usize,
    /// Norm of the data in the law's space.
    pub data_norm: f64,
    pub t_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<HorizonRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corollary: Option<CorollaryReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radius: Vec<RadiusSample>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    /// Set when the run could not be carried out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// A sample of a radius-versus-time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub t: f64,
    pub r_measured: Option<f64>,
    pub r_certified: Option<f64>,
    pub lambda_t: Option<f64>,
    pub norm_factor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<PlotPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioKind,
    pub system: String,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub constants: Option<CalibratedConstants>,
    pub calibration: Option<CalibrationSummary>,
    pub runs: Vec<RunReport>,
    pub series: Vec<PlotSeries>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ScenarioReport {
    pub fn empty(scenario: ScenarioKind, system: impl Into<String>, seed: u64) -> Self {
        ScenarioReport {
            scenario,
            system: system.into(),
            seed,
            seeds: Vec::new(),
            constants: None,
            calibration: None,
            runs: Vec::new(),
            series: Vec::new(),
            checks: Vec::new(),
            passed: false,
        }
    }

    /// Passed when there is at least one check and all of them pass.
    pub fn finish(&mut self) {
        self.passed = !self.checks.is_empty() && self.checks.iter().all(|c| c.passed);
    }
}

pub const PLOT_HEADER: &str = "t,R_measured,R_certified,sqrt_t,lambda_T_sqrt_t,norm_factor";

fn cell(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        let _ = write!(out, "{v:e}");
    }
}

/// CSV of one series with header [`PLOT_HEADER`]. Missing values are empty
/// cells; `lambda_T_sqrt_t` is the formula value whether or not certified.
pub fn series_csv(series: &PlotSeries) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for p in &series.points {
        let _ = write!(out, "{:e},", p.t);
        cell(&mut out, p.r_measured);
        out.push(',');
        cell(&mut out, p.r_certified);
        let _ = write!(out, ",{:e},", p.t.sqrt());
        cell(&mut out, p.lambda_t.map(|l| l * p.t.sqrt()));
        out.push(',');
        cell(&mut out, p.norm_factor);
        out.push('\n');
    }
    out
}

/// Writes `radius_<label>.csv` per series into `dir`; a report without
/// series yields a header-only `radius.csv`. Returns the files written.
pub fn export_plotdata(report: &ScenarioReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if report.series.is_empty() {
        let path = dir.join("radius.csv");
        std::fs::write(&path, format!("{PLOT_HEADER}\n"))?;
        written.push(path);
    }
    for s in &report.series {
        let label: String = s
            .label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        let path = dir.join(format!("radius_{label}.csv"));
        std::fs::write(&path, series_csv(s))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let r = ScenarioReport::empty(ScenarioKind::PartB, "burgers", 0);
        let files = export_plotdata(&r, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(std::fs::read_to_string(&files[0]).unwrap(), format!("{PLOT_HEADER}\n"));
    }

    #[test]
    fn rows_carry_formula_and_certified_columns() {
        let s = PlotSeries {
            label: "run 0".into(),
            points: vec![PlotPoint {
                t: 0.25,
                r_measured: Some(1.0),
                r_certified: None,
                lambda_t: Some(2.0),
                norm_factor: None,
            }],
        };
        let csv = series_csv(&s);
        assert_eq!(csv.lines().nth(1).unwrap(), "2.5e-1,1e0,,5e-1,1e0,");
    }
}
