//! Energy-counter backends and the paired energy/startup read protocol.
//!
//! A counter exposes two values: accumulated energy since the current
//! *startup epoch*, and a startup token marking that epoch. Two energy
//! readings are only comparable when their tokens match; a token change
//! between them invalidates the measurement.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod pm_dir;
mod powercap;
mod synthetic;

pub use pm_dir::PmDirBackend;
pub use powercap::PowercapBackend;
pub use synthetic::{PowerSegment, SyntheticBackend, SyntheticScript};

/// One atomic reading from a counter backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterSample {
    /// Accumulated energy in joules since `startup_token` was last set.
    pub energy_joules: f64,
    /// Opaque epoch marker; energy values are only comparable within one token.
    pub startup_token: u64,
    /// Monotonic seconds relative to the backend handle's creation.
    pub read_at: f64,
}

/// Which kind of counter a [`BackendDescriptor`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// Directory with `energy` (joules) and `startup` (token) files.
    PmDir,
    /// Directory with `energy_uj` and optionally `max_energy_range_uj` files.
    Powercap,
    /// Script-driven backend for tests and dry runs.
    Synthetic,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::PmDir => write!(f, "pm-dir"),
            BackendKind::Powercap => write!(f, "powercap"),
            BackendKind::Synthetic => write!(f, "synthetic"),
        }
    }
}

/// Declarative description of a counter backend, resolvable to a handle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    /// Counter directory (pm-dir, powercap) or script file (synthetic).
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Counter modulus in microjoules (powercap only).
    #[serde(default)]
    pub wrap_range_uj: Option<u64>,
    /// Counter refresh rate; energy values lag true consumption by up to
    /// one update interval.
    #[serde(default = "default_update_hz")]
    pub update_hz: f64,
}

fn default_update_hz() -> f64 {
    10.0
}

impl BackendDescriptor {
    pub fn pm_dir(path: impl Into<PathBuf>) -> Self {
        BackendDescriptor {
            kind: BackendKind::PmDir,
            path: Some(path.into()),
            wrap_range_uj: None,
            update_hz: default_update_hz(),
        }
    }

    pub fn powercap(path: impl Into<PathBuf>) -> Self {
        BackendDescriptor {
            kind: BackendKind::Powercap,
            path: Some(path.into()),
            wrap_range_uj: None,
            update_hz: default_update_hz(),
        }
    }

    pub fn synthetic(script_path: impl Into<PathBuf>) -> Self {
        BackendDescriptor {
            kind: BackendKind::Synthetic,
            path: Some(script_path.into()),
            wrap_range_uj: None,
            update_hz: default_update_hz(),
        }
    }

    /// Open a live handle for this descriptor.
    ///
    /// Synthetic descriptors open in real-time mode (the virtual clock
    /// follows the wall clock), which is what command wrapping needs.
    pub fn open(&self) -> Result<Box<dyn EnergyBackend>, CounterError> {
        let path = self.path.as_deref();
        match self.kind {
            BackendKind::PmDir => {
                let dir = require_path(path, self.kind)?;
                Ok(Box::new(PmDirBackend::open(dir)?))
            }
            BackendKind::Powercap => {
                let dir = require_path(path, self.kind)?;
                Ok(Box::new(PowercapBackend::open(dir, self.wrap_range_uj)?))
            }
            BackendKind::Synthetic => {
                let file = require_path(path, self.kind)?;
                let script = SyntheticScript::from_json_file(file)?;
                Ok(Box::new(SyntheticBackend::realtime(script)))
            }
        }
    }
}

fn require_path(path: Option<&Path>, kind: BackendKind) -> Result<&Path, CounterError> {
    path.ok_or_else(|| CounterError::InvalidDescriptor {
        reason: format!("backend kind {kind} requires a path"),
    })
}

/// A counter that can be sampled.
///
/// Reads on one handle are serialized through `&mut self`; samples are plain
/// values and may cross threads freely. Distinct handles are independent.
pub trait EnergyBackend: Send {
    /// Take one logical sample (energy + startup token, read as a pair).
    fn read_sample(&mut self) -> Result<CounterSample, CounterError>;

    /// Stable identifier used in per-backend reports.
    fn id(&self) -> &str;

    /// Counter modulus in microjoules, when the counter wraps.
    fn wrap_range_uj(&self) -> Option<u64> {
        None
    }
}

#[derive(Debug, Error)]
pub enum CounterError {
    #[error("cannot read counter file {path}: {source}")]
    IoUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("counter file {path} holds non-numeric content")]
    Corrupt { path: PathBuf },
    #[error("startup token changed during paired read ({retries} retries exhausted)")]
    TornRead { retries: u32 },
    #[error("startup token changed between samples ({before} -> {after}); measurement is invalid and must be redone")]
    StartupChanged { before: u64, after: u64 },
    #[error("counter went backwards ({before_j} J -> {after_j} J) with no wrap range")]
    NegativeDelta { before_j: f64, after_j: f64 },
    #[error("invalid backend descriptor: {reason}")]
    InvalidDescriptor { reason: String },
    #[error("invalid synthetic script: {reason}")]
    InvalidScript { reason: String },
}

/// Energy consumed between two samples of the same backend, in joules.
///
/// Tokens must match; a mismatch means the counter restarted mid-window and
/// the run has to be redone. A negative difference is resolved modulo
/// `wrap_range_uj` when given (the counter wrapped), and is an error
/// otherwise.
pub fn energy_delta(
    before: &CounterSample,
    after: &CounterSample,
    wrap_range_uj: Option<u64>,
) -> Result<f64, CounterError> {
    if before.startup_token != after.startup_token {
        return Err(CounterError::StartupChanged {
            before: before.startup_token,
            after: after.startup_token,
        });
    }
    let delta = after.energy_joules - before.energy_joules;
    if delta >= 0.0 {
        return Ok(delta);
    }
    match wrap_range_uj {
        Some(range) if range > 0 => {
            // Modular difference on the microjoule ring of size `range`.
            let before_uj = (before.energy_joules * 1e6).round() as i128;
            let after_uj = (after.energy_joules * 1e6).round() as i128;
            let delta_uj = (after_uj - before_uj).rem_euclid(range as i128);
            Ok(delta_uj as f64 * 1e-6)
        }
        _ => Err(CounterError::NegativeDelta {
            before_j: before.energy_joules,
            after_j: after.energy_joules,
        }),
    }
}

pub(crate) fn read_integer_file(path: &Path) -> Result<u64, CounterError> {
    let raw = std::fs::read_to_string(path).map_err(|source| CounterError::IoUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    raw.trim()
        .parse::<u64>()
        .map_err(|_| CounterError::Corrupt {
            path: path.to_path_buf(),
        })
}
