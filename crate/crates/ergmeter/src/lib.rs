//! Energy measurement and analysis toolkit.
//!
//! The crate is organised around node-level accumulated-energy counters
//! exposed as files (an `energy` value paired with a `startup` epoch token).
//! On top of the raw counters it provides:
//!
//! - [`counters`]: pluggable backends (pm-dir, powercap, synthetic) and the
//!   paired energy/startup read protocol,
//! - [`harness`]: wrapping arbitrary commands with before/after samples,
//!   idle baselines and repeat aggregation,
//! - [`scaling`]: scaling-study ingestion, U-curve minima, time/power model
//!   fitting and energy-curve prediction over core counts,
//! - [`attribution`]: per-component energy estimates from power references
//!   and walltime shares,
//! - [`roofline`]: the time roofline and the energy arch-line, balance
//!   points and boundedness classification,
//! - [`optics`]: time/energy estimates for an optical Fourier coprocessor,
//! - [`report`]: plot-ready CSV/JSON/SVG export of the analyses.

pub mod attribution;
pub mod counters;
pub mod harness;
pub mod optics;
pub mod report;
pub mod roofline;
pub mod scaling;

pub use counters::{BackendDescriptor, BackendKind, CounterSample, EnergyBackend};
