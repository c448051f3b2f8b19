//! Testbed topology and experiment description.
//!
//! A scenario names its link segments, chains them into a forward path
//! (sensor to PLC) and a return path (PLC to actuator), and describes the
//! toggling signal source. [`load_scenario`] parses the text format;
//! [`run`] and [`sweep`] execute it on the event kernel.

mod config;
mod run;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

pub use config::load_scenario;
pub use run::{run, sweep, RunError, RunResult, RunStats, SweepResult, ToggleSample, PANEL_NAMES};

use crate::error::{Diagnostic, DiagnosticKind};
use crate::fiveg::{LatencyModel, LinkBudgetMeta, NumerologyConfig};
use crate::iolw::{self, IolwCellConfig, IolwTransferModel};
use crate::plc::PlcConfig;
use crate::safety::{SafetyParams, DEFAULT_APPROACH_SPEED};
use crate::time::{SimDuration, SimTime};

/// Text of the shipped testbed scenario.
pub const DEFAULT_SCENARIO: &str = include_str!("../../scenarios/default.scenario");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    IolWire,
    IolwAir,
    Ethernet,
    Fiveg,
    Plc,
}

impl SegmentKind {
    pub const ALL: [SegmentKind; 5] = [
        SegmentKind::IolWire,
        SegmentKind::IolwAir,
        SegmentKind::Ethernet,
        SegmentKind::Fiveg,
        SegmentKind::Plc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::IolWire => "iol-wire",
            SegmentKind::IolwAir => "iolw-air",
            SegmentKind::Ethernet => "ethernet",
            SegmentKind::Fiveg => "fiveg",
            SegmentKind::Plc => "plc",
        }
    }

    pub fn parse(s: &str) -> Option<SegmentKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Return,
    Both,
}

impl Direction {
    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "forward" => Some(Direction::Forward),
            "return" => Some(Direction::Return),
            "both" => Some(Direction::Both),
            _ => None,
        }
    }

    fn allows(self, leg: Leg) -> bool {
        matches!(
            (self, leg),
            (Direction::Both, _)
                | (Direction::Forward, Leg::Forward)
                | (Direction::Return, Leg::Return)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SegmentModel {
    IolWire {
        latency: LatencyModel,
    },
    IolwAir {
        transfer: IolwTransferModel,
    },
    Ethernet {
        latency: LatencyModel,
    },
    Fiveg {
        latency: LatencyModel,
        numerology: Option<NumerologyConfig>,
        meta: LinkBudgetMeta,
    },
    /// Timing comes from the scenario's PLC configuration.
    Plc,
}

impl SegmentModel {
    pub fn kind(&self) -> SegmentKind {
        match self {
            SegmentModel::IolWire { .. } => SegmentKind::IolWire,
            SegmentModel::IolwAir { .. } => SegmentKind::IolwAir,
            SegmentModel::Ethernet { .. } => SegmentKind::Ethernet,
            SegmentModel::Fiveg { .. } => SegmentKind::Fiveg,
            SegmentModel::Plc => SegmentKind::Plc,
        }
    }

    pub fn latency_model(&self) -> Option<&LatencyModel> {
        match self {
            SegmentModel::IolWire { latency }
            | SegmentModel::Ethernet { latency }
            | SegmentModel::Fiveg { latency, .. } => Some(latency),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentSpec {
    pub id: String,
    pub model: SegmentModel,
    pub direction: Direction,
    /// Configured maximum delay of one traversal, used for the worst case.
    pub budget: SimDuration,
}

impl SegmentSpec {
    pub fn kind(&self) -> SegmentKind {
        self.model.kind()
    }

    /// Largest delay a single traversal can produce.
    pub fn support_max(&self, cell: &IolwCellConfig, plc: &PlcConfig) -> SimDuration {
        match &self.model {
            SegmentModel::IolwAir { transfer } => transfer.worst_case(cell),
            SegmentModel::Plc => plc.worst_case(),
            m => m.latency_model().expect("latency-backed kind").support().1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PathSpec {
    pub forward: Vec<String>,
    #[serde(rename = "return")]
    pub ret: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignalSource {
    pub toggle_period: SimDuration,
    pub sequences: u32,
    pub sequence_length: SimDuration,
    pub device: Option<String>,
}

impl Default for SignalSource {
    fn default() -> Self {
        SignalSource {
            toggle_period: SimDuration::from_millis(200),
            sequences: 540,
            sequence_length: SimDuration::from_millis(5000),
            device: None,
        }
    }
}

impl SignalSource {
    pub fn toggles_per_sequence(&self) -> u64 {
        self.sequence_length.0.div_ceil(self.toggle_period.0)
    }

    pub fn total_toggles(&self) -> u64 {
        self.sequences as u64 * self.toggles_per_sequence()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseSpec {
    /// Uniform over one query cycle, drawn per run.
    Random,
    Fixed(SimTime),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellSpec {
    pub config: IolwCellConfig,
    /// Track number (1-based) and the devices occupying its slots.
    pub tracks: Vec<(u32, Vec<String>)>,
    pub channels: u32,
    pub blocklist: BTreeSet<u32>,
    pub min_hop_distance: u32,
}

impl Default for CellSpec {
    fn default() -> Self {
        CellSpec {
            config: IolwCellConfig::default(),
            tracks: Vec::new(),
            channels: iolw::DEFAULT_CHANNELS,
            blocklist: BTreeSet::new(),
            min_hop_distance: iolw::DEFAULT_MIN_HOP_DISTANCE,
        }
    }
}

impl CellSpec {
    pub fn device_count(&self) -> usize {
        self.tracks.iter().map(|(_, d)| d.len()).sum()
    }

    pub fn has_device(&self, name: &str) -> bool {
        self.tracks.iter().any(|(_, d)| d.iter().any(|x| x == name))
    }

    /// Hop plans of every configured track, `length` hops each.
    pub fn hop_plans(
        &self,
        seed: u64,
        length: usize,
    ) -> Result<Vec<iolw::HopPlan>, crate::error::ConfigError> {
        self.tracks
            .iter()
            .map(|(n, _)| {
                iolw::generate_hop_plan(
                    length,
                    self.channels,
                    &self.blocklist,
                    self.min_hop_distance,
                    seed,
                    *n,
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub cell: CellSpec,
    pub segments: Vec<SegmentSpec>,
    pub path: PathSpec,
    pub actuator: Option<String>,
    pub source: SignalSource,
    pub plc: PlcConfig,
    pub plc_phase: PhaseSpec,
    pub approach_speed: f64,
    /// Declared worst case; when present it must equal the budget sum.
    pub declared_worst_case: Option<SimDuration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Forward,
    Return,
}

/// One traversal of a segment along the forward or return path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hop {
    pub label: String,
    pub segment: usize,
    pub leg: Leg,
}

/// Where a semantic problem sits, resolved to line and column by the loader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Loc {
    Section(String),
    Key(String, &'static str),
    Item(String, &'static str, usize),
}

impl Loc {
    fn key(section: impl Into<String>, key: &'static str) -> Loc {
        Loc::Key(section.into(), key)
    }

    fn segment(id: &str, key: &'static str) -> Loc {
        Loc::Key(format!("segment.{id}"), key)
    }
}

impl Scenario {
    pub fn default_testbed() -> Scenario {
        load_scenario(DEFAULT_SCENARIO).expect("shipped scenario is valid")
    }

    pub fn segment(&self, id: &str) -> Option<&SegmentSpec> {
        self.segments.iter().find(|s| s.id == id)
    }

    fn segment_index(&self, id: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.id == id)
    }

    /// Resolved traversals, forward then return. Labels are
    /// `fwd.<id>` / `ret.<id>`, with `#n` appended on repeat visits.
    pub fn hops(&self) -> Vec<Hop> {
        let mut hops = Vec::new();
        for (leg, ids, prefix) in [
            (Leg::Forward, &self.path.forward, "fwd"),
            (Leg::Return, &self.path.ret, "ret"),
        ] {
            let mut seen: Vec<&str> = Vec::new();
            for id in ids {
                let Some(segment) = self.segment_index(id) else {
                    continue;
                };
                let n = seen.iter().filter(|s| **s == id.as_str()).count();
                seen.push(id);
                let label = if n == 0 {
                    format!("{prefix}.{id}")
                } else {
                    format!("{prefix}.{id}#{}", n + 1)
                };
                hops.push(Hop {
                    label,
                    segment,
                    leg,
                });
            }
        }
        hops
    }

    pub fn safety_params(&self) -> SafetyParams {
        SafetyParams {
            approach_speed: self.approach_speed,
            segment_maxima: self
                .hops()
                .into_iter()
                .map(|h| (h.label, self.segments[h.segment].budget))
                .collect(),
        }
    }

    pub fn worst_case(&self) -> SimDuration {
        crate::safety::worst_case_sfrt(&self.safety_params())
    }

    /// Semantic validation without source locations.
    pub fn validate(&self) -> Result<(), Vec<Diagnostic>> {
        let d = self.check(&|_| (0, 0));
        if d.is_empty() {
            Ok(())
        } else {
            Err(d)
        }
    }

    pub(crate) fn check(&self, locate: &dyn Fn(&Loc) -> (usize, usize)) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut push = |loc: Loc, kind: DiagnosticKind, msg: String| {
            let (line, col) = locate(&loc);
            out.push(Diagnostic::new(line, col, kind, msg));
        };

        // Cell capacity and timing.
        let cell = &self.cell.config;
        let timing_ok = cell.timing_is_valid();
        if let Err(violations) = iolw::validate_cell(cell) {
            for v in violations {
                let loc = match v {
                    iolw::CellViolation::Masters(_) => Loc::key("cell", "masters"),
                    iolw::CellViolation::TracksPerMaster(_) => {
                        Loc::key("cell", "tracks_per_master")
                    }
                    iolw::CellViolation::SlotsPerTrack(_) => Loc::key("cell", "slots_per_track"),
                    iolw::CellViolation::TotalDevices(_) => Loc::Section("cell".into()),
                    iolw::CellViolation::Timing { .. } => Loc::key("cell", "subcycle"),
                };
                push(loc, DiagnosticKind::Capacity, v.to_string());
            }
        }
        let track_limit = cell.masters * cell.tracks_per_master;
        let mut devices = HashSet::new();
        for (n, names) in &self.cell.tracks {
            let loc = || Loc::Section(format!("cell.track.{n}"));
            if *n == 0 || *n > track_limit {
                push(
                    loc(),
                    DiagnosticKind::Capacity,
                    format!("track {n} outside 1..={track_limit} for this cell"),
                );
            }
            if names.len() > cell.slots_per_track as usize {
                push(
                    loc(),
                    DiagnosticKind::Capacity,
                    format!(
                        "track {n} has {} devices but only {} slots",
                        names.len(),
                        cell.slots_per_track
                    ),
                );
            }
            for d in names {
                if !devices.insert(d.as_str()) {
                    push(
                        loc(),
                        DiagnosticKind::InvalidValue,
                        format!("device `{d}` listed twice"),
                    );
                }
            }
        }
        if let Some(&b) = self
            .cell
            .blocklist
            .iter()
            .find(|&&b| b >= self.cell.channels)
        {
            push(
                Loc::key("cell", "blocklist"),
                DiagnosticKind::InvalidValue,
                format!(
                    "blocked channel {b} outside the {}-channel grid",
                    self.cell.channels
                ),
            );
        }
        if let Err(e) = iolw::generate_hop_plan(
            2,
            self.cell.channels,
            &self.cell.blocklist,
            self.cell.min_hop_distance,
            0,
            0,
        ) {
            push(
                Loc::key("cell", "min_hop_distance"),
                DiagnosticKind::InvalidValue,
                e.to_string(),
            );
        }

        // PLC.
        if let Err(e) = self.plc.validate() {
            push(
                Loc::Section("plc".into()),
                DiagnosticKind::InvalidValue,
                e.to_string(),
            );
        }
        if let PhaseSpec::Fixed(p) = self.plc_phase {
            if self.plc.query_cycle.0 > 0 && p.0 >= self.plc.query_cycle.0 {
                push(
                    Loc::key("plc", "phase"),
                    DiagnosticKind::InvalidValue,
                    format!("phase {}us must be below the query cycle", p.0),
                );
            }
        }

        // Segments.
        let mut ids = HashSet::new();
        for s in &self.segments {
            if !ids.insert(s.id.as_str()) {
                push(
                    Loc::Section(format!("segment.{}", s.id)),
                    DiagnosticKind::DuplicateKey,
                    format!("segment id `{}` defined twice", s.id),
                );
            }
            let model_err = match &s.model {
                SegmentModel::IolwAir { transfer } if timing_ok => transfer.validate(cell).err(),
                SegmentModel::IolwAir { .. } | SegmentModel::Plc => None,
                SegmentModel::Fiveg {
                    latency,
                    numerology,
                    meta,
                } => latency
                    .validate()
                    .err()
                    .or_else(|| numerology.and_then(|n| n.validate().err()))
                    .or_else(|| meta.validate().err()),
                m => m.latency_model().and_then(|l| l.validate().err()),
            };
            let key = match s.kind() {
                SegmentKind::IolwAir => "error_prob",
                _ => "latency",
            };
            let model_ok = model_err.is_none();
            if let Some(e) = model_err {
                push(
                    Loc::segment(&s.id, key),
                    DiagnosticKind::InvalidValue,
                    e.to_string(),
                );
            }
            let plc_ok = self.plc.validate().is_ok();
            if model_ok && timing_ok && plc_ok {
                let max = s.support_max(cell, &self.plc);
                if s.budget < max {
                    push(
                        Loc::segment(&s.id, "budget"),
                        DiagnosticKind::Budget,
                        format!(
                            "budget {}us of `{}` is below its largest possible delay {}us",
                            s.budget.0, s.id, max.0
                        ),
                    );
                }
            }
        }

        // Paths.
        for (leg, ids, key) in [
            (Leg::Forward, &self.path.forward, "forward"),
            (Leg::Return, &self.path.ret, "return"),
        ] {
            for (i, id) in ids.iter().enumerate() {
                let Some(seg) = self.segment(id) else {
                    push(
                        Loc::Item("path".into(), key, i),
                        DiagnosticKind::UnresolvedId,
                        format!("segment `{id}` is not defined"),
                    );
                    continue;
                };
                if !seg.direction.allows(leg) {
                    push(
                        Loc::Item("path".into(), key, i),
                        DiagnosticKind::Path,
                        format!("segment `{id}` is not usable on the {key} path"),
                    );
                }
                let is_plc = seg.kind() == SegmentKind::Plc;
                if is_plc && (leg == Leg::Return || i + 1 != ids.len()) {
                    push(
                        Loc::Item("path".into(), key, i),
                        DiagnosticKind::Path,
                        format!("plc segment `{id}` may only end the forward path"),
                    );
                }
            }
        }
        let ends_in_plc = self
            .path
            .forward
            .last()
            .and_then(|id| self.segment(id))
            .is_some_and(|s| s.kind() == SegmentKind::Plc);
        if !ends_in_plc {
            push(
                Loc::key("path", "forward"),
                DiagnosticKind::Path,
                "forward path must end in a plc segment".into(),
            );
        }

        // Source and actuator.
        let src = &self.source;
        if src.toggle_period.0 == 0 {
            push(
                Loc::key("source", "toggle_period"),
                DiagnosticKind::InvalidValue,
                "toggle_period must be positive".into(),
            );
        }
        if src.sequences == 0 {
            push(
                Loc::key("source", "sequences"),
                DiagnosticKind::InvalidValue,
                "at least one sequence is required".into(),
            );
        }
        if src.sequence_length.0 == 0 {
            push(
                Loc::key("source", "sequence_length"),
                DiagnosticKind::InvalidValue,
                "sequence_length must be positive".into(),
            );
        }
        if let Some(d) = &src.device {
            if !self.cell.has_device(d) {
                push(
                    Loc::key("source", "device"),
                    DiagnosticKind::UnresolvedId,
                    format!("device `{d}` is not on any track"),
                );
            }
        }
        if let Some(d) = &self.actuator {
            if !self.cell.has_device(d) {
                push(
                    Loc::key("path", "actuator"),
                    DiagnosticKind::UnresolvedId,
                    format!("device `{d}` is not on any track"),
                );
            }
        }

        // Safety.
        if !(self.approach_speed.is_finite() && self.approach_speed > 0.0) {
            push(
                Loc::key("safety", "approach_speed"),
                DiagnosticKind::InvalidValue,
                format!("approach speed {} must be positive", self.approach_speed),
            );
        }
        if let Some(declared) = self.declared_worst_case {
            let sum = self.worst_case();
            if declared != sum {
                push(
                    Loc::key("safety", "worst_case"),
                    DiagnosticKind::Budget,
                    format!(
                        "declared worst case {}us differs from the budget sum {}us",
                        declared.0, sum.0
                    ),
                );
            }
        }
        out
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            cell: CellSpec::default(),
            segments: Vec::new(),
            path: PathSpec::default(),
            actuator: None,
            source: SignalSource::default(),
            plc: PlcConfig::default(),
            plc_phase: PhaseSpec::Random,
            approach_speed: DEFAULT_APPROACH_SPEED,
            declared_worst_case: None,
        }
    }
}
