//! Software PLC timing.
//!
//! Inputs are sampled at task-cycle starts and outputs publish at the end
//! of the cycle that processed them. The PLC reads the W-Master process
//! image once per query cycle.

use serde::Serialize;

use crate::error::ConfigError;
use crate::fiveg::LatencyModel;
use crate::rng::RngStream;
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlcConfig {
    pub task_cycle: SimDuration,
    pub query_cycle: SimDuration,
    pub processing_jitter: LatencyModel,
    /// Start of the first task cycle and the first poll.
    pub phase: SimTime,
}

impl Default for PlcConfig {
    fn default() -> Self {
        PlcConfig {
            task_cycle: SimDuration::from_millis(5),
            query_cycle: SimDuration::from_millis(10),
            processing_jitter: LatencyModel::constant_us(0),
            phase: SimTime::ZERO,
        }
    }
}

impl PlcConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.task_cycle.0 == 0 {
            return Err(ConfigError::InvalidPlc(
                "task_cycle must be positive".into(),
            ));
        }
        if self.query_cycle.0 == 0 {
            return Err(ConfigError::InvalidPlc(
                "query_cycle must be positive".into(),
            ));
        }
        if !self.query_cycle.0.is_multiple_of(self.task_cycle.0) {
            return Err(ConfigError::InvalidPlc(format!(
                "query_cycle {} is not a multiple of task_cycle {}",
                self.query_cycle, self.task_cycle
            )));
        }
        self.processing_jitter.validate()
    }

    /// Upper bound on poll wait plus alignment.
    pub fn worst_case(&self) -> SimDuration {
        SimDuration(self.query_cycle.0 - 1 + 2 * self.task_cycle.0)
            + self.processing_jitter.support().1
    }
}

/// Greatest grid point `phase + k * period <= t`, or the phase itself for
/// instants before it.
fn grid_floor(t: SimTime, phase: SimTime, period: SimDuration) -> SimTime {
    if t < phase {
        return phase;
    }
    let k = (t.0 - phase.0) / period.0;
    SimTime(phase.0 + k * period.0)
}

/// Output publication time without jitter.
pub fn aligned_completion(arrival: SimTime, cfg: &PlcConfig) -> SimTime {
    if arrival < cfg.phase {
        // Before the first cycle: it samples the input at its start.
        return cfg.phase + cfg.task_cycle;
    }
    let b = grid_floor(arrival, cfg.phase, cfg.task_cycle);
    if arrival == b {
        b + cfg.task_cycle
    } else {
        b + SimDuration(2 * cfg.task_cycle.0)
    }
}

/// Time at which an input arriving at `arrival` shows up on the outputs.
pub fn align_to_task_cycle(arrival: SimTime, cfg: &PlcConfig, rng: &mut RngStream) -> SimTime {
    aligned_completion(arrival, cfg) + cfg.processing_jitter.sample(rng)
}

/// First poll at or after `available`.
pub fn poll_pickup(available: SimTime, cfg: &PlcConfig) -> SimTime {
    if available <= cfg.phase {
        return cfg.phase;
    }
    let q = cfg.query_cycle.0;
    let k = (available.0 - cfg.phase.0).div_ceil(q);
    SimTime(cfg.phase.0 + k * q)
}

/// All poll instants up to and including `t_end`.
pub fn poll_schedule(cfg: &PlcConfig, t_end: SimTime) -> Vec<SimTime> {
    if t_end < cfg.phase {
        return Vec::new();
    }
    (cfg.phase.0..=t_end.0)
        .step_by(cfg.query_cycle.0 as usize)
        .map(SimTime)
        .collect()
}
