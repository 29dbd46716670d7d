//! Scenario configuration, one TOML file per scenario. Unknown keys are
//! rejected at every level.
//!
//! ```toml
//! scenario = "part-b"          # part-a | part-b | corollary | lemma-check |
//!                              # product-law | scaling-check | baseline-sqrt-t
//! seed = 0                     # base seed; run i uses seed + i
//! system = "burgers"           # builtin name, or give an inline [spec] table
//! output = "out/part-b"        # optional; the CLI --output flag wins
//!
//! [grid]
//! points = 64                  # per axis, power of two
//! period = 6.283185307179586   # default 2 pi
//! truncation = 31.0            # default (points / 2 - 1) * 2 pi / period
//!
//! [data]                       # initial-data law, see InitialDataLaw
//! s = -0.5
//! norm = 1.0
//!
//! [integrator]
//! dt = 1e-4
//! scheme = "etdrk4"            # or "if-rk4"
//! horizon = 0.03
//! first_snapshot = 1e-7
//! per_decade = 16
//! uniform = 40
//!
//! [analysis]
//! eps = 0.1
//! p = 4.0                      # default 2 max(2/alpha, k); part-a forces 2/delta
//! delta = 0.5                  # part-a only
//! horizons = []                # explicit T list; empty = `decades` below the threshold
//! decades = 3.0
//! per_decade = 3
//!
//! [ensemble]
//! seeds = 20
//! norms = [1.0, 5.0]           # each seed at each norm; empty = law as given
//!
//! [calibration]
//! file = "constants.json"      # use stored constants instead of calibrating
//! seeds = 8
//! norms = [0.3, 1.0, 3.0]
//! lambdas = [0.0, 1.0, 2.0]
//! horizons = [1e-3, 1e-2]
//!
//! [fit]                        # see FitOptions
//! floor = 1e-13
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::data::InitialDataLaw;
use crate::analyticity::FitOptions;
use crate::error::{Error, Result};
use crate::integrator::Scheme;
use crate::models::{builtin, SystemSpec};
use crate::spectral::{make_grid, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    PartA,
    PartB,
    Corollary,
    LemmaCheck,
    ProductLaw,
    ScalingCheck,
    BaselineSqrtT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    #[serde(default = "two_pi")]
    pub period: f64,
    #[serde(default)]
    pub truncation: Option<f64>,
}

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub horizon: f64,
    pub first_snapshot: f64,
    pub per_decade: usize,
    pub uniform: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-4,
            scheme: Scheme::Etdrk4,
            horizon: 0.1,
            first_snapshot: 1e-7,
            per_decade: 16,
            uniform: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub eps: f64,
    /// Extra `eps` values for the corollary sweep.
    pub eps_sweep: Vec<f64>,
    pub p: Option<f64>,
    pub delta: Option<f64>,
    pub horizons: Vec<f64>,
    pub decades: f64,
    pub per_decade: usize,
    /// Earliest `t0` of the corollary.
    pub min_t0: f64,
    pub shifted_horizons: Vec<f64>,
    /// Scaling factor of scaling-check (a power of two).
    pub rescale: f64,
    pub tolerance: f64,
    /// Required `delta_fit / sqrt(t)` in baseline-sqrt-t.
    pub baseline_factor: f64,
    /// Sobolev indices of product-law, each in `(d/2 - d/k, d/2)`; empty =
    /// the midpoint `d/2 - d/(2k)`.
    pub product_s: Vec<f64>,
    /// Number of factors of product-law; default the system order.
    pub product_order: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            eps: 0.1,
            eps_sweep: Vec::new(),
            p: None,
            delta: None,
            horizons: Vec::new(),
            decades: 3.0,
            per_decade: 3,
            min_t0: 1e-3,
            shifted_horizons: Vec::new(),
            rescale: 2.0,
            tolerance: 1e-6,
            baseline_factor: 0.9,
            product_s: Vec::new(),
            product_order: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub seeds: usize,
    pub norms: Vec<f64>,
    /// Repeat the measurement with twice the points per axis.
    pub double_resolution: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            seeds: 1,
            norms: Vec::new(),
            double_resolution: false,
        }
    }
}

/// How `K_eps` enters the constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KEpsMode {
    /// Largest ratio over the calibration snapshots.
    Empirical,
    /// The mode-by-mode bound `(p e eps)^{-1/p}`.
    Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub file: Option<PathBuf>,
    pub seeds: usize,
    /// Calibration seeds start at `seed + seed_offset`.
    pub seed_offset: u64,
    pub norms: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub horizons: Vec<f64>,
    pub k_eps: KEpsMode,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            file: None,
            seeds: 8,
            seed_offset: 1000,
            norms: Vec::new(),
            lambdas: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            horizons: vec![1e-4, 1e-3, 1e-2],
            k_eps: KEpsMode::Empirical,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    /// Builtin system name; exclusive with `spec`.
    #[serde(default)]
    pub system: Option<String>,
    #[serde(default)]
    pub spec: Option<SystemSpec>,
    pub grid: GridConfig,
    pub data: InitialDataLaw,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Parses TOML; errors carry the line, column and offending key.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; a relative calibration file is resolved against
    /// the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config =
            Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(file), Some(dir)) = (&config.calibration.file, path.parent()) {
            if file.is_relative() {
                config.calibration.file = Some(dir.join(file));
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.system_spec()?;
        let a = &self.analysis;
        if !(a.eps > 0.0 && a.eps < 1.0) || a.eps_sweep.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Config("analysis.eps must lie in (0, 1)".into()));
        }
        if self.scenario == ScenarioKind::PartA && a.delta.is_none() {
            return Err(Error::Config("part-a needs analysis.delta".into()));
        }
        if self.ensemble.seeds == 0 {
            return Err(Error::Config("ensemble.seeds must be at least 1".into()));
        }
        if self.integrator.per_decade == 0 || !(self.integrator.first_snapshot > 0.0) {
            return Err(Error::Config(
                "integrator.first_snapshot and per_decade must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        match (&self.system, &self.spec) {
            (Some(name), None) => builtin(name),
            (None, Some(spec)) => {
                spec.validate()?;
                Ok(spec.clone())
            }
            (Some(_), Some(_)) => Err(Error::Config("give either `system` or `[spec]`, not both".into())),
            (None, None) => Err(Error::Config("missing `system` or `[spec]`".into())),
        }
    }

    /// The grid, with `points` per axis scaled by `refine`.
    pub fn make_grid(&self, dim: usize, refine: usize) -> Result<std::sync::Arc<Grid>> {
        let g = &self.grid;
        let points = g.points * refine;
        let spacing = 2.0 * std::f64::consts::PI / g.period;
        let truncation = match g.truncation {
            Some(t) if refine == 1 => t,
            Some(t) => t * refine as f64 + spacing * (refine as f64 - 1.0),
            None => spacing * (points / 2 - 1) as f64,
        };
        make_grid(dim, points, g.period, truncation)
    }
}
