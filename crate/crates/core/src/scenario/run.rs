//! Scenario execution on the event kernel.
//!
//! Every toggle of the signal source travels hop by hop along the forward
//! path and then the return path. Each hop arrival is a kernel event; the
//! hop's model decides the delay until the next arrival. The PLC's poll
//! wait happens at the W-Master (right after the last forward wireless
//! hop) but is booked to the PLC hop, so a sample's hop contributions
//! always sum to its end-to-end latency.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::{Leg, PhaseSpec, Scenario, SegmentKind, SegmentModel};
use crate::error::{Diagnostic, KernelError};
use crate::iolw::{transfer_latency, TransferOutcome};
use crate::kernel::Kernel;
use crate::plc::{align_to_task_cycle, poll_pickup, PlcConfig};
use crate::rng::RngStream;
use crate::stats::LatencyStats;
use crate::time::{SimDuration, SimTime};

const STREAM_PHASE: u64 = 1;
const STREAM_SOURCE: u64 = 2;
const STREAM_HOP_BASE: u64 = 0x100;

/// Histogram panels: wired IO-Link, wireless, W-Master to PLC output,
/// end to end.
pub const PANEL_NAMES: [&str; 4] = ["a_iol", "b_iolw", "c_network_plc", "d_end_to_end"];

#[derive(Debug, Error)]
pub enum RunError {
    #[error("scenario is invalid ({} problem(s))", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("a sweep needs at least one seed")]
    NoSeeds,
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Action {
    SourceToggle { toggle: u32 },
    SegmentArrival { toggle: u32, hop: u16 },
}

/// One completed toggle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToggleSample {
    pub toggle: u32,
    /// Bit level after the toggle.
    pub level: bool,
    pub start: SimTime,
    /// Delay booked to each hop, in hop order.
    pub contributions: Vec<SimDuration>,
}

impl ToggleSample {
    pub fn end_to_end(&self) -> SimDuration {
        self.contributions.iter().copied().sum()
    }

    /// End-to-end latency with the given hops left out.
    pub fn end_to_end_excluding(&self, hops: &[usize]) -> SimDuration {
        self.contributions
            .iter()
            .enumerate()
            .filter(|(i, _)| !hops.contains(i))
            .map(|(_, d)| *d)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub hop_labels: Vec<String>,
    /// Hop indices feeding panels a, b and c.
    pub panel_hops: [Vec<usize>; 3],
    pub plc_hop: usize,
    pub samples: Vec<ToggleSample>,
    pub toggles: u64,
    pub losses: u64,
    pub losses_by_hop: Vec<u64>,
    pub clamped_draws: u64,
    pub plc_phase: SimTime,
    pub dispatched_events: u64,
    pub trace_digest: u64,
    pub config: Scenario,
}

/// Mergeable statistics of one or more runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub hop_labels: Vec<String>,
    pub hops: Vec<LatencyStats>,
    pub panels: Vec<(String, LatencyStats)>,
    pub toggles: u64,
    pub losses: u64,
    pub clamped_draws: u64,
}

impl RunStats {
    pub fn end_to_end(&self) -> &LatencyStats {
        &self.panels[3].1
    }

    pub fn panel(&self, name: &str) -> Option<&LatencyStats> {
        self.panels.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn samples(&self) -> u64 {
        self.end_to_end().count()
    }

    /// Sum of the observed per-hop maxima.
    pub fn sum_of_hop_maxima(&self) -> SimDuration {
        self.hops.iter().filter_map(|s| s.max()).sum()
    }

    pub fn merge(&mut self, other: &RunStats) {
        assert_eq!(
            self.hop_labels, other.hop_labels,
            "merging runs of different scenarios"
        );
        for (a, b) in self.hops.iter_mut().zip(&other.hops) {
            a.merge(b);
        }
        for ((_, a), (_, b)) in self.panels.iter_mut().zip(&other.panels) {
            a.merge(b);
        }
        self.toggles += other.toggles;
        self.losses += other.losses;
        self.clamped_draws += other.clamped_draws;
    }

    pub fn merged(mut self, other: &RunStats) -> RunStats {
        self.merge(other);
        self
    }
}

impl RunResult {
    pub fn stats(&self) -> RunStats {
        let mut hops: Vec<LatencyStats> = self
            .hop_labels
            .iter()
            .map(|_| LatencyStats::default())
            .collect();
        let mut panels: Vec<(String, LatencyStats)> = PANEL_NAMES
            .iter()
            .map(|n| (n.to_string(), LatencyStats::default()))
            .collect();
        for s in &self.samples {
            for (stat, d) in hops.iter_mut().zip(&s.contributions) {
                stat.record(*d);
            }
            for (p, members) in self.panel_hops.iter().enumerate() {
                if !members.is_empty() {
                    panels[p]
                        .1
                        .record(members.iter().map(|&h| s.contributions[h]).sum());
                }
            }
            panels[3].1.record(s.end_to_end());
        }
        for (stat, &n) in hops.iter_mut().zip(&self.losses_by_hop) {
            for _ in 0..n {
                stat.record_loss();
            }
        }
        for _ in 0..self.losses {
            panels[3].1.record_loss();
        }
        RunStats {
            hop_labels: self.hop_labels.clone(),
            hops,
            panels,
            toggles: self.toggles,
            losses: self.losses,
            clamped_draws: self.clamped_draws,
        }
    }

    pub fn hop_index(&self, label: &str) -> Option<usize> {
        self.hop_labels.iter().position(|l| l == label)
    }
}

struct Flight {
    start: SimTime,
    contributions: Vec<SimDuration>,
    poll_wait: SimDuration,
}

/// Executes every sequence of the scenario with the given seed.
pub fn run(scenario: &Scenario, seed: u64) -> Result<RunResult, RunError> {
    scenario.validate().map_err(RunError::Invalid)?;
    let hops = scenario.hops();
    let n_hops = hops.len();
    let fwd_len = hops.iter().filter(|h| h.leg == Leg::Forward).count();
    let plc_hop = fwd_len - 1;
    let kind_of = |i: usize| scenario.segments[hops[i].segment].kind();
    // Values reach the W-Master's process image after the last forward
    // wireless hop; without one, at the source itself.
    let handoff = (0..fwd_len)
        .rev()
        .find(|&i| kind_of(i) == SegmentKind::IolwAir);

    let a_iol: Vec<usize> = (0..handoff.unwrap_or(0))
        .filter(|&i| kind_of(i) == SegmentKind::IolWire)
        .collect();
    let b_iolw: Vec<usize> = (0..fwd_len)
        .filter(|&i| kind_of(i) == SegmentKind::IolwAir)
        .collect();
    let c_net: Vec<usize> = (handoff.map_or(0, |h| h + 1)..fwd_len).collect();

    let mut phase_rng = RngStream::new(seed, STREAM_PHASE);
    let plc = PlcConfig {
        phase: match scenario.plc_phase {
            PhaseSpec::Random => SimTime(phase_rng.below(scenario.plc.query_cycle.0)),
            PhaseSpec::Fixed(p) => p,
        },
        ..scenario.plc.clone()
    };

    let mut kernel: Kernel<Action> = Kernel::new();
    kernel.enable_trace();
    let src = &scenario.source;
    let per_seq = src.toggles_per_sequence();
    let mut source_rng = RngStream::new(seed, STREAM_SOURCE);
    let mut toggle: u32 = 0;
    for s in 0..src.sequences as u64 {
        // Captures start at an arbitrary offset within one toggle period.
        let begin = s * src.sequence_length.0 + source_rng.below(src.toggle_period.0);
        for i in 0..per_seq {
            kernel.schedule(
                SimTime(begin + i * src.toggle_period.0),
                Action::SourceToggle { toggle },
            )?;
            toggle += 1;
        }
    }
    let toggles = toggle as u64;

    let mut hop_rngs: Vec<RngStream> = (0..n_hops)
        .map(|i| RngStream::new(seed, STREAM_HOP_BASE + i as u64))
        .collect();
    let mut flights: Vec<Option<Flight>> = (0..toggles).map(|_| None).collect();
    let mut samples = Vec::with_capacity(toggles as usize);
    let mut losses_by_hop = vec![0u64; n_hops];
    let mut clamped_draws = 0u64;
    let cell = &scenario.cell.config;

    kernel.run_to_completion(|k, ev| {
        let now = ev.due;
        match ev.payload {
            Action::SourceToggle { toggle } => {
                let mut flight = Flight {
                    start: now,
                    contributions: vec![SimDuration::ZERO; n_hops],
                    poll_wait: SimDuration::ZERO,
                };
                let mut next = now;
                if handoff.is_none() {
                    next = poll_pickup(now, &plc);
                    flight.poll_wait = next - now;
                }
                flights[toggle as usize] = Some(flight);
                k.schedule(next, Action::SegmentArrival { toggle, hop: 0 })?;
            }
            Action::SegmentArrival { toggle, hop } => {
                let hop = hop as usize;
                let slot = &mut flights[toggle as usize];
                if hop == n_hops {
                    let f = slot.take().expect("flight in progress");
                    debug_assert_eq!(
                        f.contributions.iter().copied().sum::<SimDuration>(),
                        now - f.start
                    );
                    samples.push(ToggleSample {
                        toggle,
                        level: toggle % 2 == 0,
                        start: f.start,
                        contributions: f.contributions,
                    });
                    return Ok(());
                }
                let rng = &mut hop_rngs[hop];
                let delay = match &scenario.segments[hops[hop].segment].model {
                    SegmentModel::IolwAir { transfer } => {
                        match transfer_latency(now, cell, transfer, rng) {
                            TransferOutcome::Delivered { latency, .. } => latency,
                            TransferOutcome::Lost => {
                                losses_by_hop[hop] += 1;
                                *slot = None;
                                return Ok(());
                            }
                        }
                    }
                    SegmentModel::Plc => align_to_task_cycle(now, &plc, rng) - now,
                    m => {
                        let d = m.latency_model().expect("latency-backed kind").draw(rng);
                        clamped_draws += d.clamped as u64;
                        d.value
                    }
                };
                let f = slot.as_mut().expect("flight in progress");
                let mut next = now + delay;
                if Some(hop) == handoff {
                    let pickup = poll_pickup(next, &plc);
                    f.poll_wait = pickup - next;
                    next = pickup;
                }
                f.contributions[hop] = if hop == plc_hop {
                    delay + f.poll_wait
                } else {
                    delay
                };
                k.schedule(
                    next,
                    Action::SegmentArrival {
                        toggle,
                        hop: hop as u16 + 1,
                    },
                )?;
            }
        }
        Ok(())
    })?;

    let mut h = DefaultHasher::new();
    kernel.trace().unwrap_or_default().hash(&mut h);

    Ok(RunResult {
        seed,
        hop_labels: hops.into_iter().map(|h| h.label).collect(),
        panel_hops: [a_iol, b_iolw, c_net],
        plc_hop,
        samples,
        toggles,
        losses: losses_by_hop.iter().sum(),
        losses_by_hop,
        clamped_draws,
        plc_phase: plc.phase,
        dispatched_events: kernel.dispatched(),
        trace_digest: h.finish(),
        config: scenario.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Per-seed results in the order the seeds were given.
    pub runs: Vec<RunResult>,
    pub merged: RunStats,
}

/// Runs one simulation per seed, `parallelism` at a time, and merges the
/// statistics. The merge is exact, so the result does not depend on the
/// parallelism or on the seed order.
pub fn sweep(
    scenario: &Scenario,
    seeds: &[u64],
    parallelism: usize,
) -> Result<SweepResult, RunError> {
    if seeds.is_empty() {
        return Err(RunError::NoSeeds);
    }
    let runs: Vec<RunResult> = if parallelism <= 1 {
        seeds
            .iter()
            .map(|&s| run(scenario, s))
            .collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| RunError::Pool(e.to_string()))?;
        pool.install(|| {
            seeds
                .par_iter()
                .map(|&s| run(scenario, s))
                .collect::<Result<_, _>>()
        })?
    };
    let merged = runs
        .iter()
        .map(RunResult::stats)
        .reduce(|a, b| a.merged(&b))
        .expect("at least one run");
    Ok(SweepResult { runs, merged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn small() -> Scenario {
        let mut s = Scenario::default_testbed();
        s.source.sequences = 4;
        s
    }

    #[test]
    fn counts_one_sequence() {
        let mut s = small();
        s.source.sequences = 1;
        for seg in &mut s.segments {
            if let SegmentModel::IolwAir { transfer } = &mut seg.model {
                transfer.per_subcycle_error_prob = 0.0;
            }
        }
        let r = run(&s, 1).unwrap();
        assert_eq!(r.toggles, 25);
        assert_eq!(r.samples.len(), 25);
        assert_eq!(r.losses, 0);
    }

    #[test]
    fn contributions_sum_exactly() {
        let r = run(&small(), 9).unwrap();
        for s in &r.samples {
            assert_eq!(s.end_to_end(), s.contributions.iter().copied().sum());
            assert_eq!(s.contributions.len(), r.hop_labels.len());
        }
        assert_eq!(r.samples.len() as u64, r.toggles - r.losses);
    }

    #[test]
    fn replay_is_identical() {
        let a = run(&small(), 77).unwrap();
        let b = run(&small(), 77).unwrap();
        assert_eq!(a, b);
        let c = run(&small(), 78).unwrap();
        assert_ne!(a.trace_digest, c.trace_digest);
    }

    #[test]
    fn plc_hop_includes_poll_and_alignment() {
        let r = run(&small(), 3).unwrap();
        let task = r.config.plc.task_cycle;
        let query = r.config.plc.query_cycle;
        for s in &r.samples {
            let plc = s.contributions[r.plc_hop];
            assert!(plc >= task && plc.0 < query.0 + 2 * task.0, "{plc}");
        }
    }

    #[test]
    fn certain_loss_yields_no_samples() {
        let mut s = small();
        for seg in &mut s.segments {
            if let SegmentModel::IolwAir { transfer } = &mut seg.model {
                transfer.per_subcycle_error_prob = 1.0;
            }
        }
        let r = run(&s, 1).unwrap();
        assert!(r.samples.is_empty());
        assert_eq!(r.losses, r.toggles);
        let st = r.stats();
        assert_eq!(st.end_to_end().losses(), r.toggles);
        assert_eq!(
            st.hops[r.hop_index("fwd.iolw").unwrap()].losses(),
            r.toggles
        );
    }

    #[test]
    fn invalid_scenario_is_rejected() {
        let mut s = small();
        s.path.forward.pop();
        assert!(matches!(run(&s, 1), Err(RunError::Invalid(_))));
    }

    #[test]
    fn sweep_needs_seeds() {
        assert!(matches!(sweep(&small(), &[], 1), Err(RunError::NoSeeds)));
    }

    #[test]
    fn sweep_of_one_is_run() {
        let s = small();
        let r = run(&s, 5).unwrap();
        let w = sweep(&s, &[5], 1).unwrap();
        assert_eq!(w.runs[0], r);
        assert_eq!(w.merged, r.stats());
    }

    #[test]
    fn panels_partition_forward_path() {
        let r = run(&small(), 2).unwrap();
        let label = |i: &usize| r.hop_labels[*i].as_str();
        assert_eq!(
            r.panel_hops[0].iter().map(label).collect::<Vec<_>>(),
            ["fwd.iol_estop"]
        );
        assert_eq!(
            r.panel_hops[1].iter().map(label).collect::<Vec<_>>(),
            ["fwd.iolw"]
        );
        assert_eq!(
            r.panel_hops[2].iter().map(label).collect::<Vec<_>>(),
            [
                "fwd.eth_shop",
                "fwd.fiveg_shop",
                "fwd.fiveg_plc",
                "fwd.eth_plc",
                "fwd.plc"
            ]
        );
    }
}
