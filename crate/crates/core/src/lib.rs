//! Discrete-event latency simulator for a wireless sensor-to-edge control
//! loop: IO-Link devices behind an IO-Link Wireless cell, a private 5G
//! network, and a software PLC that drives actuators back on the shop
//! floor.
//!
//! The crate computes per-segment and end-to-end latency distributions,
//! the worst-case safety function response time, and the resulting
//! minimum safety distance.
//!
//! ```
//! use sensor2edge::scenario::{run, Scenario};
//!
//! let mut scenario = Scenario::default_testbed();
//! scenario.source.sequences = 2;
//! let result = run(&scenario, 42).unwrap();
//! let stats = result.stats();
//! assert_eq!(stats.toggles, 50);
//! assert!(stats.end_to_end().max().unwrap() <= scenario.worst_case());
//! ```

pub mod error;
pub mod fiveg;
pub mod iolw;
pub mod kernel;
pub mod plc;
pub mod report;
pub mod rng;
pub mod safety;
pub mod scenario;
pub mod stats;
pub mod time;

pub use error::{ConfigError, Diagnostic, DiagnosticKind, KernelError, LoadError, StatsError};
pub use scenario::{load_scenario, run, sweep, RunResult, RunStats, Scenario, SweepResult};
pub use stats::LatencyStats;
pub use time::{SimDuration, SimTime};
