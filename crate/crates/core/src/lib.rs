//! Throughput of buffer-aided half-duplex multi-relay networks under
//! Rayleigh block fading.
//!
//! * [`channel`]: fading model and counter-addressable random streams.
//! * [`special`]: exponential integral and the Rayleigh-sum approximation.
//! * [`analytic`]: closed-form link rates and the ADB throughput.
//! * [`sim`]: Monte Carlo estimators for CRS, SFD-MMRS, DF and ADB.
//! * [`power`]: per-scheme power budgets and the power-split search.
//! * [`experiments`]: figure sweeps and CSV output.

pub mod analytic;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod power;
pub mod quad;
pub mod selftest;
pub mod sim;
pub mod special;

pub use analytic::{adb_closed_form, ActiveCase, AdbAnalyticConfig, AdbAnalyticResult};
pub use channel::{ChannelParams, RngStream, SlotRealization};
pub use error::{Error, Result};
pub use experiments::{ExperimentKind, ExperimentSpec, ResultRow};
pub use power::{maximize, Evaluation, MaximizeOptions, PowerBudget, PowerSolution};
pub use sim::{simulate, ProtocolKind, SimConfig, ThroughputEstimate};
