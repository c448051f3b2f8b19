//! IO-Link Wireless cell model.
//!
//! A W-Master cycle is split into sub-cycles placed contiguously from the
//! cycle start (3 × 1664 µs inside a 5000 µs cycle leaves 8 µs of slack
//! before the next cycle). A process-data change goes out with the next
//! sub-cycle boundary; failed attempts retry on the following boundaries,
//! crossing into the next cycle if needed, up to `max_attempts`.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::ConfigError;
use crate::rng::RngStream;
use crate::time::{SimDuration, SimTime};

pub const MAX_MASTERS: u32 = 3;
pub const MAX_TRACKS_PER_MASTER: u32 = 5;
pub const MAX_SLOTS_PER_TRACK: u32 = 8;
pub const MAX_DEVICES: u32 = 120;

/// Default channel grid: 40 channels of 2 MHz in the 2.4 GHz ISM band.
pub const DEFAULT_CHANNELS: u32 = 40;
/// Default minimum hop distance in channels (about 24 MHz).
pub const DEFAULT_MIN_HOP_DISTANCE: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IolwCellConfig {
    pub masters: u32,
    pub tracks_per_master: u32,
    pub slots_per_track: u32,
    pub cycle: SimDuration,
    pub subcycles_per_cycle: u32,
    pub subcycle: SimDuration,
}

impl Default for IolwCellConfig {
    fn default() -> Self {
        IolwCellConfig {
            masters: 1,
            tracks_per_master: 2,
            slots_per_track: 8,
            cycle: SimDuration::from_micros(5000),
            subcycles_per_cycle: 3,
            subcycle: SimDuration::from_micros(1664),
        }
    }
}

impl IolwCellConfig {
    pub fn device_capacity(&self) -> u64 {
        self.masters as u64 * self.tracks_per_master as u64 * self.slots_per_track as u64
    }

    /// Cheap structural check used before timing arithmetic.
    pub fn timing_is_valid(&self) -> bool {
        self.cycle.0 > 0
            && self.subcycle.0 > 0
            && self.subcycles_per_cycle > 0
            && self.subcycles_per_cycle as u64 * self.subcycle.0 <= self.cycle.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellViolation {
    Masters(u32),
    TracksPerMaster(u32),
    SlotsPerTrack(u32),
    TotalDevices(u64),
    Timing {
        subcycles: u32,
        subcycle: SimDuration,
        cycle: SimDuration,
    },
}

impl fmt::Display for CellViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellViolation::Masters(n) => {
                write!(f, "masters = {n}, must be 1..={MAX_MASTERS}")
            }
            CellViolation::TracksPerMaster(n) => {
                write!(
                    f,
                    "tracks_per_master = {n}, must be 1..={MAX_TRACKS_PER_MASTER}"
                )
            }
            CellViolation::SlotsPerTrack(n) => {
                write!(
                    f,
                    "slots_per_track = {n}, must be 1..={MAX_SLOTS_PER_TRACK}"
                )
            }
            CellViolation::TotalDevices(n) => {
                write!(f, "{n} devices exceed the cell limit of {MAX_DEVICES}")
            }
            CellViolation::Timing {
                subcycles,
                subcycle,
                cycle,
            } => write!(
                f,
                "{subcycles} sub-cycles of {subcycle} do not fit a cycle of {cycle}"
            ),
        }
    }
}

/// Checks every capacity and timing constraint of a cell. On success
/// returns the device capacity.
pub fn validate_cell(cfg: &IolwCellConfig) -> Result<u64, Vec<CellViolation>> {
    let mut v = Vec::new();
    if !(1..=MAX_MASTERS).contains(&cfg.masters) {
        v.push(CellViolation::Masters(cfg.masters));
    }
    if !(1..=MAX_TRACKS_PER_MASTER).contains(&cfg.tracks_per_master) {
        v.push(CellViolation::TracksPerMaster(cfg.tracks_per_master));
    }
    if !(1..=MAX_SLOTS_PER_TRACK).contains(&cfg.slots_per_track) {
        v.push(CellViolation::SlotsPerTrack(cfg.slots_per_track));
    }
    let devices = cfg.device_capacity();
    if devices > MAX_DEVICES as u64 {
        v.push(CellViolation::TotalDevices(devices));
    }
    if !cfg.timing_is_valid() {
        v.push(CellViolation::Timing {
            subcycles: cfg.subcycles_per_cycle,
            subcycle: cfg.subcycle,
            cycle: cfg.cycle,
        });
    }
    if v.is_empty() {
        Ok(devices)
    } else {
        Err(v)
    }
}

/// First sub-cycle boundary at or after `t`.
pub fn next_subcycle_start(t: SimTime, cfg: &IolwCellConfig) -> SimTime {
    let cycle = cfg.cycle.0;
    let sub = cfg.subcycle.0;
    let cycle_start = t.0 - t.0 % cycle;
    let offset = t.0 - cycle_start;
    let j = offset.div_ceil(sub);
    if j < cfg.subcycles_per_cycle as u64 {
        SimTime(cycle_start + j * sub)
    } else {
        SimTime(cycle_start + cycle)
    }
}

/// The `k`-th (1-based) sub-cycle boundary at or after `t`.
pub fn nth_subcycle_start(t: SimTime, k: u32, cfg: &IolwCellConfig) -> SimTime {
    assert!(k >= 1, "attempt numbers are 1-based");
    let mut b = next_subcycle_start(t, cfg);
    for _ in 1..k {
        b = next_subcycle_start(SimTime(b.0 + 1), cfg);
    }
    b
}

/// Mean wait from a uniformly placed integer instant in one cycle to the
/// next boundary. A sub-cycle window of length L contributes waits
/// 0, L-1, ..., 1, i.e. L(L-1)/2.
pub fn mean_boundary_wait(cfg: &IolwCellConfig) -> f64 {
    let sub = cfg.subcycle.0;
    let n = cfg.subcycles_per_cycle as u64;
    let last = cfg.cycle.0 - (n - 1) * sub;
    let total = (n - 1) * sub * (sub - 1) / 2 + last * (last - 1) / 2;
    total as f64 / cfg.cycle.0 as f64
}

/// Completion offset that makes the mean error-free transfer latency equal
/// `target_mean` under uniform change instants.
pub fn calibrated_completion_offset(cfg: &IolwCellConfig, target_mean: SimDuration) -> SimDuration {
    let offset = target_mean.0 as f64 - mean_boundary_wait(cfg);
    SimDuration(offset.round().max(0.0) as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IolwTransferModel {
    pub completion_offset: SimDuration,
    pub per_subcycle_error_prob: f64,
    pub max_attempts: u32,
}

impl Default for IolwTransferModel {
    /// Calibrated for the default 5 ms / 3 × 1664 µs cell: 1500 µs mean
    /// minus the 833 µs mean boundary wait.
    fn default() -> Self {
        IolwTransferModel {
            completion_offset: SimDuration(667),
            per_subcycle_error_prob: 1e-3,
            max_attempts: 3,
        }
    }
}

impl IolwTransferModel {
    pub fn validate(&self, cell: &IolwCellConfig) -> Result<(), ConfigError> {
        if self.completion_offset >= cell.subcycle {
            return Err(ConfigError::InvalidTransferModel(format!(
                "completion_offset {} must be below the sub-cycle {}",
                self.completion_offset, cell.subcycle
            )));
        }
        if !(0.0..=1.0).contains(&self.per_subcycle_error_prob) {
            return Err(ConfigError::InvalidTransferModel(format!(
                "error probability {} outside [0, 1]",
                self.per_subcycle_error_prob
            )));
        }
        if self.max_attempts == 0 {
            return Err(ConfigError::InvalidTransferModel(
                "max_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Largest latency any delivered transfer can have.
    pub fn worst_case(&self, cell: &IolwCellConfig) -> SimDuration {
        // Boundary pattern repeats every cycle, so one cycle of start
        // instants covers every case.
        (0..cell.cycle.0)
            .map(|t| nth_subcycle_start(SimTime(t), self.max_attempts, cell).0 - t)
            .max()
            .map(|w| SimDuration(w) + self.completion_offset)
            .unwrap_or(self.completion_offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferOutcome {
    Delivered { latency: SimDuration, attempts: u32 },
    Lost,
}

impl TransferOutcome {
    pub fn latency(self) -> Option<SimDuration> {
        match self {
            TransferOutcome::Delivered { latency, .. } => Some(latency),
            TransferOutcome::Lost => None,
        }
    }
}

/// Samples the latency of one process-data change raised at `t_change`.
pub fn transfer_latency(
    t_change: SimTime,
    cell: &IolwCellConfig,
    model: &IolwTransferModel,
    rng: &mut RngStream,
) -> TransferOutcome {
    let mut boundary = next_subcycle_start(t_change, cell);
    for attempt in 1..=model.max_attempts {
        if attempt > 1 {
            boundary = next_subcycle_start(SimTime(boundary.0 + 1), cell);
        }
        if !rng.chance(model.per_subcycle_error_prob) {
            return TransferOutcome::Delivered {
                latency: (boundary - t_change) + model.completion_offset,
                attempts: attempt,
            };
        }
    }
    TransferOutcome::Lost
}

/// Probability that all `max_attempts` independent attempts fail.
pub fn residual_error_prob(per_subcycle_error_prob: f64, max_attempts: u32) -> f64 {
    per_subcycle_error_prob.powi(max_attempts as i32)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HopPlan {
    pub track_id: u32,
    pub channels: Vec<u32>,
    pub blocklist: BTreeSet<u32>,
    pub min_hop_distance: u32,
}

impl HopPlan {
    /// Returns true if no planned channel is block-listed and every
    /// consecutive pair is at least `min_hop_distance` apart.
    pub fn satisfies_constraints(&self) -> bool {
        let gap = self.min_hop_distance.max(1);
        self.channels.iter().all(|c| !self.blocklist.contains(c))
            && self.channels.windows(2).all(|w| w[0].abs_diff(w[1]) >= gap)
    }
}

const HOP_STREAM_BASE: u64 = 0x4850_0000_0000_0000;

/// Generates a hop sequence over a grid of `channels` channels.
///
/// Consecutive channels always differ (a hop distance of 0 is treated as
/// 1). Only channels that have at least one allowed partner far enough
/// away can be visited; if none exist the plan is infeasible.
pub fn generate_hop_plan(
    length: usize,
    channels: u32,
    blocklist: &BTreeSet<u32>,
    min_hop_distance: u32,
    seed: u64,
    track_id: u32,
) -> Result<HopPlan, ConfigError> {
    let gap = min_hop_distance.max(1);
    let allowed: Vec<u32> = (0..channels).filter(|c| !blocklist.contains(c)).collect();
    let partners: Vec<Vec<u32>> = allowed
        .iter()
        .map(|&c| {
            allowed
                .iter()
                .copied()
                .filter(|&o| o.abs_diff(c) >= gap)
                .collect()
        })
        .collect();
    let starts: Vec<usize> = (0..allowed.len())
        .filter(|&i| !partners[i].is_empty())
        .collect();
    if starts.is_empty() {
        return Err(ConfigError::InfeasibleHopPlan(format!(
            "{} allowed channel(s) out of {channels}, none with a partner at distance >= {gap}",
            allowed.len()
        )));
    }

    let mut rng = RngStream::new(seed, HOP_STREAM_BASE | track_id as u64);
    let mut plan = Vec::with_capacity(length);
    if length > 0 {
        let mut idx = starts[rng.below(starts.len() as u64) as usize];
        plan.push(allowed[idx]);
        for _ in 1..length {
            let options = &partners[idx];
            let next = options[rng.below(options.len() as u64) as usize];
            idx = allowed.binary_search(&next).expect("partner is allowed");
            plan.push(next);
        }
    }
    Ok(HopPlan {
        track_id,
        channels: plan,
        blocklist: blocklist.clone(),
        min_hop_distance,
    })
}
