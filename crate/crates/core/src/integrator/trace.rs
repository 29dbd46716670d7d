//! Trace container and its on-disk layout.
//!
//! A trace is written as two files sharing a stem:
//!
//! * `<stem>.bin`: 8-byte magic `SPTRACE\0`, `u32` version, `u32`
//!   component count, `u64` mode count, `u64` snapshot count (32-byte
//!   header), then per snapshot an `f64` time followed by the coefficients
//!   as `(re, im)` `f64` pairs, component-major. All little-endian.
//! * `<stem>.json`: the index (format tag, version, grid parameters, system,
//!   times, byte offsets, per-snapshot L2 norms and step diagnostics).
//!
//! Mode order is the grid's: lattice vectors `m` with each `m_i` running
//! from `-M` to `M`, axis 0 slowest, restricted to the retained ball.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SystemSpec;
use crate::spectral::{Grid, GridParams, SpectralField};

pub const TRACE_MAGIC: &[u8; 8] = b"SPTRACE\0";
pub const TRACE_VERSION: u32 = 1;
const HEADER_BYTES: u64 = 32;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub steps: usize,
    pub rejected: usize,
    pub nonlinear_evals: usize,
    pub dts: Vec<f64>,
}

/// Time-stamped snapshots of one run. `times[0] = 0` holds the initial data.
#[derive(Clone, Debug)]
pub struct Trace {
    pub spec: SystemSpec,
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    pub diagnostics: StepDiagnostics,
}

impl Trace {
    pub fn grid(&self) -> &Arc<Grid> {
        self.snapshots[0].grid()
    }

    pub fn initial(&self) -> &SpectralField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &SpectralField {
        self.snapshots.last().expect("trace is never empty")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("trace is never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The prefix of samples with `t <= horizon` (with a relative slack of
    /// 1e-12 so that snapshot times themselves are kept).
    pub fn until(&self, horizon: f64) -> Trace {
        let n = self
            .times
            .iter()
            .take_while(|&&t| t <= horizon * (1.0 + 1e-12))
            .count()
            .max(1);
        Trace {
            spec: self.spec.clone(),
            times: self.times[..n].to_vec(),
            snapshots: self.snapshots[..n].to_vec(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceIndex {
    pub format: String,
    pub version: u32,
    pub binary: String,
    pub grid: GridParams,
    pub spec: SystemSpec,
    pub components: usize,
    pub modes: usize,
    pub header_bytes: u64,
    pub snapshot_bytes: u64,
    pub times: Vec<f64>,
    pub l2_norms: Vec<f64>,
    pub diagnostics: StepDiagnostics,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Write `<stem>.bin` and `<stem>.json`.
pub fn write_trace(trace: &Trace, stem: &Path) -> Result<()> {
    if let Some(parent) = stem.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let grid = trace.grid();
    let components = trace.snapshots[0].components();
    let modes = grid.len();
    let bin_path = with_ext(stem, "bin");
    let mut w = BufWriter::new(fs::File::create(&bin_path)?);
    w.write_all(TRACE_MAGIC)?;
    w.write_all(&TRACE_VERSION.to_le_bytes())?;
    w.write_all(&(components as u32).to_le_bytes())?;
    w.write_all(&(modes as u64).to_le_bytes())?;
    w.write_all(&(trace.len() as u64).to_le_bytes())?;
    for (t, u) in trace.times.iter().zip(&trace.snapshots) {
        w.write_all(&t.to_le_bytes())?;
        for comp in u.data() {
            for c in comp {
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;

    let index = TraceIndex {
        format: "sp-trace".into(),
        version: TRACE_VERSION,
        binary: bin_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        grid: grid.params().clone(),
        spec: trace.spec.clone(),
        components,
        modes,
        header_bytes: HEADER_BYTES,
        snapshot_bytes: 8 + 16 * (components * modes) as u64,
        times: trace.times.clone(),
        l2_norms: trace.snapshots.iter().map(|u| u.l2()).collect(),
        diagnostics: trace.diagnostics.clone(),
    };
    fs::write(with_ext(stem, "json"), serde_json::to_string_pretty(&index)?)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Read a trace written by [`write_trace`].
pub fn read_trace(stem: &Path) -> Result<Trace> {
    let index: TraceIndex = serde_json::from_str(&fs::read_to_string(with_ext(stem, "json"))?)?;
    if index.format != "sp-trace" || index.version != TRACE_VERSION {
        return Err(Error::TraceFormat(format!(
            "unsupported index {} v{}",
            index.format, index.version
        )));
    }
    let grid = Arc::new(Grid::new(index.grid.clone())?);
    if grid.len() != index.modes {
        return Err(Error::TraceFormat("mode count does not match grid".into()));
    }
    let bytes = fs::read(with_ext(stem, "bin"))?;
    let mut r = bytes.as_slice();
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TRACE_MAGIC {
        return Err(Error::TraceFormat("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    let components = read_u32(&mut r)? as usize;
    let modes = read_u64(&mut r)? as usize;
    let count = read_u64(&mut r)? as usize;
    if version != TRACE_VERSION || components != index.components || modes != index.modes || count != index.times.len()
    {
        return Err(Error::TraceFormat("binary header disagrees with index".into()));
    }
    let mut times = Vec::with_capacity(count);
    let mut snapshots = Vec::with_capacity(count);
    for _ in 0..count {
        times.push(read_f64(&mut r)?);
        let mut data = Vec::with_capacity(components);
        for _ in 0..components {
            let mut comp = Vec::with_capacity(modes);
            for _ in 0..modes {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                comp.push(Complex64::new(re, im));
            }
            data.push(comp);
        }
        snapshots.push(SpectralField::from_components(grid.clone(), data)?);
    }
    Ok(Trace {
        spec: index.spec,
        times,
        snapshots,
        diagnostics: index.diagnostics,
    })
}
