use thiserror::Error;

/// Errors produced anywhere in the solver and measurement pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("points per axis must be a power of two, got {0}")]
    NotPowerOfTwo(usize),

    #[error("unsupported spatial dimension {0}")]
    UnsupportedDimension(usize),

    #[error("truncation radius {radius} exceeds the Nyquist wavenumber {nyquist}")]
    AboveNyquist { radius: f64, nyquist: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("fields live on incompatible grids")]
    GridMismatch,

    #[error("multiplier symbol is not finite at lattice vector {mode:?}")]
    NonFiniteSymbol { mode: Vec<i64> },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("scaling hypothesis violated: alpha = {alpha} is not in ({lower}, {upper}]")]
    KatoHypothesis { alpha: f64, lower: f64, upper: f64 },

    #[error("blow-up guard triggered at t = {time}: norm {norm:e} exceeds ceiling {ceiling:e}")]
    BlowUp { time: f64, norm: f64, ceiling: f64 },

    #[error("step size underflow at t = {time} (dt = {dt:e})")]
    StepUnderflow { time: f64, dt: f64 },

    #[error("Picard iteration does not contract: distance grew for 3 iterates (last ratio {ratio})")]
    NonContraction { ratio: f64, iteration: usize },

    #[error("Picard iteration did not reach tolerance within {iterations} iterations (last distance {distance:e})")]
    PicardNotConverged { iterations: usize, distance: f64 },

    #[error("rescaling factor {0} is not compatible with the grid")]
    IncompatibleScale(f64),

    #[error("weighted norm overflows at shell |xi| = {shell}")]
    Overflow { shell: f64 },

    #[error("Sobolev index {s} outside the admissible range ({lower}, {upper})")]
    IndexOutOfRange { s: f64, lower: f64, upper: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("radius unresolved: {usable} usable shells, at least {required} required")]
    Unresolved { usable: usize, required: usize },

    #[error("admissibility violated: heat-flow Kato norm {norm:e} exceeds {limit:e}")]
    Admissibility { norm: f64, limit: f64 },

    #[error("time {time:e} lies above the threshold time {threshold:e}")]
    AboveThreshold { time: f64, threshold: f64 },

    #[error("parameters do not match calibration: {0}")]
    CalibrationMismatch(String),

    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),

    #[error("decay threshold {threshold:e} not reached within horizon {horizon} (last norm {last:e})")]
    ThresholdNotReached {
        threshold: f64,
        horizon: f64,
        last: f64,
    },

    #[error("run {run} failed during {phase}: {source}")]
    Run {
        run: String,
        phase: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("trace format: {0}")]
    TraceFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_run(self, run: impl Into<String>, phase: impl Into<String>) -> Self {
        Error::Run {
            run: run.into(),
            phase: phase.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
