//! Scenario file parser.
//!
//! Line-oriented sections of `key = value` pairs. `#` starts a comment.
//! Durations carry a `us`, `ms` or `s` suffix and may be decimal as long
//! as they resolve to whole microseconds. Unknown sections and keys are
//! errors. All problems are collected and returned together, each with a
//! 1-based line and column.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{
    CellSpec, Direction, Loc, PathSpec, PhaseSpec, Scenario, SegmentKind, SegmentModel,
    SegmentSpec, SignalSource,
};
use crate::error::{Diagnostic, DiagnosticKind, LoadError};
use crate::fiveg::{LatencyModel, LinkBudgetMeta, NumerologyConfig};
use crate::iolw::{self, IolwCellConfig, IolwTransferModel};
use crate::plc::PlcConfig;
use crate::safety::DEFAULT_APPROACH_SPEED;
use crate::time::{SimDuration, SimTime};

const SECTIONS: [&str; 6] = ["cell", "segment", "path", "source", "plc", "safety"];

#[derive(Debug)]
struct RawEntry {
    key: String,
    value: String,
    line: usize,
    key_col: usize,
    value_col: usize,
}

#[derive(Debug)]
struct RawSection {
    name: String,
    line: usize,
    col: usize,
    entries: Vec<RawEntry>,
}

#[derive(Debug, Default)]
struct Spans {
    sections: HashMap<String, (usize, usize)>,
    keys: HashMap<(String, String), (usize, usize)>,
    items: HashMap<(String, String), Vec<usize>>,
}

impl Spans {
    fn resolve(&self, loc: &Loc) -> (usize, usize) {
        let section = |s: &str| self.sections.get(s).copied().unwrap_or((1, 1));
        match loc {
            Loc::Section(s) => section(s),
            Loc::Key(s, k) => self
                .keys
                .get(&(s.clone(), k.to_string()))
                .copied()
                .unwrap_or_else(|| section(s)),
            Loc::Item(s, k, i) => {
                let key = (s.clone(), k.to_string());
                match (
                    self.keys.get(&key),
                    self.items.get(&key).and_then(|v| v.get(*i)),
                ) {
                    (Some(&(line, _)), Some(&col)) => (line, col),
                    (Some(&pos), None) => pos,
                    _ => section(s),
                }
            }
        }
    }
}

struct Ctx {
    diags: Vec<Diagnostic>,
    spans: Spans,
}

impl Ctx {
    fn err(&mut self, line: usize, col: usize, kind: DiagnosticKind, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(line, col, kind, msg));
    }

    fn invalid(&mut self, e: &RawEntry, msg: impl std::fmt::Display) {
        self.err(
            e.line,
            e.value_col,
            DiagnosticKind::InvalidValue,
            format!("`{}`: {msg}", e.key),
        );
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn lex(text: &str, ctx: &mut Ctx) -> Vec<RawSection> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let col = content[..indent].chars().count() + 1;
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                ctx.err(
                    line,
                    col,
                    DiagnosticKind::Syntax,
                    "section header is missing `]`",
                );
                continue;
            };
            let name = name.trim();
            if name.is_empty() || !name.split('.').all(is_ident) {
                ctx.err(
                    line,
                    col + 1,
                    DiagnosticKind::Syntax,
                    format!("malformed section name `{name}`"),
                );
                continue;
            }
            sections.push(RawSection {
                name: name.to_string(),
                line,
                col,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(eq) = content.find('=') else {
            ctx.err(
                line,
                col,
                DiagnosticKind::Syntax,
                "expected `key = value` or `[section]`",
            );
            continue;
        };
        let key = content[..eq].trim();
        if key.is_empty() || !key.split('.').all(is_ident) {
            ctx.err(
                line,
                col,
                DiagnosticKind::Syntax,
                format!("malformed key `{key}`"),
            );
            continue;
        }
        let after = &content[eq + 1..];
        let value = after.trim();
        let lead = after.len() - after.trim_start().len();
        let value_col = content[..eq + 1 + lead].chars().count() + 1;
        let Some(section) = sections.last_mut() else {
            ctx.err(
                line,
                col,
                DiagnosticKind::Syntax,
                format!("key `{key}` appears before any section"),
            );
            continue;
        };
        section.entries.push(RawEntry {
            key: key.to_string(),
            value: value.to_string(),
            line,
            key_col: col,
            value_col,
        });
    }
    sections
}

/// Key access for one section; whatever is not consumed is reported as unknown.
struct Fields<'a> {
    section: &'a RawSection,
    entries: Vec<&'a RawEntry>,
    used: Vec<bool>,
}

impl<'a> Fields<'a> {
    fn new(section: &'a RawSection, ctx: &mut Ctx) -> Self {
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for e in &section.entries {
            if seen.insert(e.key.as_str()) {
                entries.push(e);
                ctx.spans
                    .keys
                    .insert((section.name.clone(), e.key.clone()), (e.line, e.value_col));
                let cols = list_items(&e.value)
                    .into_iter()
                    .map(|(_, off)| e.value_col + off)
                    .collect();
                ctx.spans
                    .items
                    .insert((section.name.clone(), e.key.clone()), cols);
            } else {
                ctx.err(
                    e.line,
                    e.key_col,
                    DiagnosticKind::DuplicateKey,
                    format!("`{}` already set in [{}]", e.key, section.name),
                );
            }
        }
        let used = vec![false; entries.len()];
        Fields {
            section,
            entries,
            used,
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a RawEntry> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(self.entries[i])
    }

    fn with_prefix(&mut self, prefix: &str) -> Vec<&'a RawEntry> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.key.starts_with(prefix) {
                self.used[i] = true;
                out.push(*e);
            }
        }
        out
    }

    fn require(&mut self, key: &str, ctx: &mut Ctx) -> Option<&'a RawEntry> {
        let e = self.get(key);
        if e.is_none() {
            ctx.err(
                self.section.line,
                self.section.col,
                DiagnosticKind::MissingKey,
                format!("[{}] requires `{key}`", self.section.name),
            );
        }
        e
    }

    fn mark_all_used(&mut self) {
        self.used.iter_mut().for_each(|u| *u = true);
    }

    fn finish(self, ctx: &mut Ctx, context: &str) {
        for (e, used) in self.entries.iter().zip(&self.used) {
            if !used {
                ctx.err(
                    e.line,
                    e.key_col,
                    DiagnosticKind::UnknownKey,
                    format!("`{}` is not a valid key {context}", e.key),
                );
            }
        }
    }

    /// Parses an optional key, falling back to `default` when absent or invalid.
    fn parse_or<T>(
        &mut self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Result<T, String>,
        ctx: &mut Ctx,
    ) -> T {
        match self.get(key) {
            None => default,
            Some(e) => parse(&e.value).unwrap_or_else(|m| {
                ctx.invalid(e, m);
                default
            }),
        }
    }

    fn parse_required<T>(
        &mut self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Result<T, String>,
        ctx: &mut Ctx,
    ) -> T {
        match self.require(key, ctx) {
            None => default,
            Some(e) => parse(&e.value).unwrap_or_else(|m| {
                ctx.invalid(e, m);
                default
            }),
        }
    }
}

/// Comma-separated items with their byte offsets into `value`.
fn list_items(value: &str) -> Vec<(&str, usize)> {
    if value.trim().is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut start = 0;
    for part in value.split(',') {
        let lead = part.len() - part.trim_start().len();
        out.push((part.trim(), value[..start + lead].chars().count()));
        start += part.len() + 1;
    }
    out
}

fn parse_u32(s: &str) -> Result<u32, String> {
    s.parse::<u32>()
        .map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("expected a number, got `{s}`"))
}

fn parse_ident(s: &str) -> Result<String, String> {
    if is_ident(s) {
        Ok(s.to_string())
    } else {
        Err(format!("expected a name, got `{s}`"))
    }
}

fn parse_ident_list(s: &str) -> Result<Vec<String>, String> {
    list_items(s)
        .into_iter()
        .map(|(item, _)| parse_ident(item))
        .collect()
}

/// Exact decimal duration: `1664us`, `1.664ms`, `5s`.
pub(crate) fn parse_duration(s: &str) -> Result<SimDuration, String> {
    let s = s.trim();
    let (num, scale) = if let Some(n) = s.strip_suffix("us") {
        (n, 1u128)
    } else if let Some(n) = s.strip_suffix("ms") {
        (n, 1000)
    } else if let Some(n) = s.strip_suffix('s') {
        (n, 1_000_000)
    } else {
        return Err(format!("duration `{s}` needs a unit (us, ms, s)"));
    };
    let num = num.trim();
    let (int, frac) = num.split_once('.').unwrap_or((num, ""));
    let digits = |d: &str| d.chars().all(|c| c.is_ascii_digit());
    if (int.is_empty() && frac.is_empty()) || !digits(int) || !digits(frac) || frac.len() > 12 {
        return Err(format!("malformed duration `{s}`"));
    }
    let int_v: u128 = if int.is_empty() {
        0
    } else {
        int.parse()
            .map_err(|_| format!("duration `{s}` too large"))?
    };
    let frac_v: u128 = if frac.is_empty() {
        0
    } else {
        frac.parse().expect("digits")
    };
    let denom = 10u128.pow(frac.len() as u32);
    let frac_us = frac_v * scale;
    if !frac_us.is_multiple_of(denom) {
        return Err(format!("duration `{s}` is finer than 1us"));
    }
    let total = int_v * scale + frac_us / denom;
    u64::try_from(total)
        .map(SimDuration)
        .map_err(|_| format!("duration `{s}` too large"))
}

/// `constant(d)`, `uniform(lo, hi)`, `truncnormal(mean, sd, lo, hi)`,
/// `empirical(d:w, ...)`.
pub(crate) fn parse_latency(s: &str) -> Result<LatencyModel, String> {
    let s = s.trim();
    let (name, rest) = s
        .split_once('(')
        .ok_or_else(|| format!("expected a distribution like `constant(1ms)`, got `{s}`"))?;
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| format!("distribution `{s}` is missing `)`"))?;
    let args: Vec<&str> = list_items(args).into_iter().map(|(a, _)| a).collect();
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!(
                "`{}` takes {n} argument(s), got {}",
                name.trim(),
                args.len()
            ))
        }
    };
    let model = match name.trim() {
        "constant" => {
            arity(1)?;
            LatencyModel::Constant {
                value: parse_duration(args[0])?,
            }
        }
        "uniform" => {
            arity(2)?;
            LatencyModel::Uniform {
                lo: parse_duration(args[0])?,
                hi: parse_duration(args[1])?,
            }
        }
        "truncnormal" => {
            arity(4)?;
            LatencyModel::TruncatedNormal {
                mean: parse_duration(args[0])?,
                stddev: parse_duration(args[1])?,
                lo: parse_duration(args[2])?,
                hi: parse_duration(args[3])?,
            }
        }
        "empirical" => {
            let bins = args
                .iter()
                .map(|a| {
                    let (v, w) = a
                        .split_once(':')
                        .ok_or_else(|| format!("empirical bin `{a}` must be `duration:weight`"))?;
                    Ok((parse_duration(v)?, parse_f64(w.trim())?))
                })
                .collect::<Result<Vec<_>, String>>()?;
            LatencyModel::Empirical { bins }
        }
        other => {
            return Err(format!(
                "unknown distribution `{other}` (constant, uniform, truncnormal, empirical)"
            ))
        }
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

fn parse_phase(s: &str) -> Result<PhaseSpec, String> {
    if s == "random" {
        Ok(PhaseSpec::Random)
    } else {
        parse_duration(s).map(|d| PhaseSpec::Fixed(SimTime(d.0)))
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let p = parse_f64(s)?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("probability {p} outside [0, 1]"))
    }
}

fn parse_cell(fields: &mut Fields, ctx: &mut Ctx) -> CellSpec {
    let d = IolwCellConfig::default();
    let config = IolwCellConfig {
        masters: fields.parse_required("masters", d.masters, parse_u32, ctx),
        tracks_per_master: fields.parse_required(
            "tracks_per_master",
            d.tracks_per_master,
            parse_u32,
            ctx,
        ),
        slots_per_track: fields.parse_required(
            "slots_per_track",
            d.slots_per_track,
            parse_u32,
            ctx,
        ),
        cycle: fields.parse_or("cycle", d.cycle, parse_duration, ctx),
        subcycles_per_cycle: fields.parse_or(
            "subcycles_per_cycle",
            d.subcycles_per_cycle,
            parse_u32,
            ctx,
        ),
        subcycle: fields.parse_or("subcycle", d.subcycle, parse_duration, ctx),
    };
    let channels = fields.parse_or("channels", iolw::DEFAULT_CHANNELS, parse_u32, ctx);
    let blocklist = fields.parse_or(
        "blocklist",
        BTreeSet::new(),
        |s| {
            list_items(s)
                .into_iter()
                .map(|(c, _)| parse_u32(c))
                .collect()
        },
        ctx,
    );
    let min_hop_distance = fields.parse_or(
        "min_hop_distance",
        iolw::DEFAULT_MIN_HOP_DISTANCE,
        parse_u32,
        ctx,
    );

    let mut tracks = Vec::new();
    for e in fields.with_prefix("track.") {
        let n = &e.key["track.".len()..];
        let Ok(n) = n.parse::<u32>() else {
            ctx.err(
                e.line,
                e.key_col,
                DiagnosticKind::UnknownKey,
                format!("`{}` is not a valid track key", e.key),
            );
            continue;
        };
        ctx.spans
            .sections
            .insert(format!("cell.track.{n}"), (e.line, e.key_col));
        match parse_ident_list(&e.value) {
            Ok(devices) => tracks.push((n, devices)),
            Err(m) => ctx.invalid(e, m),
        }
    }
    tracks.sort_by_key(|(n, _)| *n);
    CellSpec {
        config,
        tracks,
        channels,
        blocklist,
        min_hop_distance,
    }
}

fn parse_segment(
    id: &str,
    fields: &mut Fields,
    cell: &IolwCellConfig,
    ctx: &mut Ctx,
) -> Option<SegmentSpec> {
    let kind_entry = fields.require("kind", ctx);
    let kind = match kind_entry {
        None => None,
        Some(e) => {
            let k = SegmentKind::parse(&e.value);
            if k.is_none() {
                ctx.err(
                    e.line,
                    e.value_col,
                    DiagnosticKind::UnknownSegmentKind,
                    format!(
                        "unknown segment kind `{}` (iol-wire, iolw-air, ethernet, fiveg, plc)",
                        e.value
                    ),
                );
            }
            k
        }
    };
    let direction = fields.parse_or(
        "direction",
        Direction::Both,
        |s| {
            Direction::parse(s)
                .ok_or_else(|| format!("direction must be forward, return or both, got `{s}`"))
        },
        ctx,
    );
    let budget = fields.parse_required("budget", SimDuration::ZERO, parse_duration, ctx);
    let Some(kind) = kind else {
        fields.mark_all_used();
        return None;
    };
    let latency = |fields: &mut Fields, ctx: &mut Ctx| {
        fields
            .require("latency", ctx)
            .and_then(|e| parse_latency(&e.value).map_err(|m| ctx.invalid(e, m)).ok())
    };
    let model = match kind {
        SegmentKind::IolWire => SegmentModel::IolWire {
            latency: latency(fields, ctx)?,
        },
        SegmentKind::Ethernet => SegmentModel::Ethernet {
            latency: latency(fields, ctx)?,
        },
        SegmentKind::Fiveg => {
            let numerology = fields.get("scs_khz").and_then(|e| {
                parse_u32(&e.value)
                    .and_then(|s| NumerologyConfig::new(s).map_err(|x| x.to_string()))
                    .map_err(|m| ctx.invalid(e, m))
                    .ok()
            });
            let meta = LinkBudgetMeta {
                downlink_mbps: fields.parse_or(
                    "downlink_mbps",
                    None,
                    |s| parse_f64(s).map(Some),
                    ctx,
                ),
                uplink_mbps: fields.parse_or("uplink_mbps", None, |s| parse_f64(s).map(Some), ctx),
                rssi_floor_dbm: fields.parse_or(
                    "rssi_floor_dbm",
                    None,
                    |s| parse_f64(s).map(Some),
                    ctx,
                ),
            };
            let latency = latency(fields, ctx);
            SegmentModel::Fiveg {
                latency: latency?,
                numerology,
                meta,
            }
        }
        SegmentKind::IolwAir => {
            let timing_ok = cell.timing_is_valid();
            let default_offset = if timing_ok {
                iolw::calibrated_completion_offset(cell, SimDuration(1500))
            } else {
                SimDuration::ZERO
            };
            SegmentModel::IolwAir {
                transfer: IolwTransferModel {
                    completion_offset: fields.parse_or(
                        "completion_offset",
                        default_offset,
                        parse_duration,
                        ctx,
                    ),
                    per_subcycle_error_prob: fields.parse_or(
                        "error_prob",
                        0.0,
                        parse_probability,
                        ctx,
                    ),
                    max_attempts: fields.parse_or(
                        "max_attempts",
                        cell.subcycles_per_cycle,
                        parse_u32,
                        ctx,
                    ),
                },
            }
        }
        SegmentKind::Plc => SegmentModel::Plc,
    };
    Some(SegmentSpec {
        id: id.to_string(),
        model,
        direction,
        budget,
    })
}

/// Parses and validates a scenario file.
pub fn load_scenario(text: &str) -> Result<Scenario, LoadError> {
    let mut ctx = Ctx {
        diags: Vec::new(),
        spans: Spans::default(),
    };
    let sections = lex(text, &mut ctx);

    let mut by_name: HashMap<&str, &RawSection> = HashMap::new();
    let mut segment_sections = Vec::new();
    for s in &sections {
        let (top, sub) = match s.name.split_once('.') {
            Some((t, r)) => (t, Some(r)),
            None => (s.name.as_str(), None),
        };
        if !SECTIONS.contains(&top) {
            ctx.err(
                s.line,
                s.col,
                DiagnosticKind::UnknownSection,
                format!("unknown section [{}]", s.name),
            );
            continue;
        }
        let well_formed = match (top, sub) {
            ("segment", Some(id)) => is_ident(id),
            ("segment", None) => false,
            (_, sub) => sub.is_none(),
        };
        if !well_formed {
            ctx.err(
                s.line,
                s.col,
                DiagnosticKind::UnknownSection,
                format!("malformed section [{}]", s.name),
            );
            continue;
        }
        if by_name.insert(s.name.as_str(), s).is_some() {
            ctx.err(
                s.line,
                s.col,
                DiagnosticKind::DuplicateKey,
                format!("section [{}] appears twice", s.name),
            );
            continue;
        }
        ctx.spans.sections.insert(s.name.clone(), (s.line, s.col));
        if top == "segment" {
            segment_sections.push(s);
        }
    }
    for required in ["cell", "path"] {
        if !by_name.contains_key(required) {
            ctx.err(
                1,
                1,
                DiagnosticKind::MissingKey,
                format!("missing section [{required}]"),
            );
        }
    }
    if segment_sections.is_empty() {
        ctx.err(
            1,
            1,
            DiagnosticKind::MissingKey,
            "no [segment.<id>] sections",
        );
    }

    let mut scenario = Scenario::default();

    if let Some(s) = by_name.get("cell") {
        let mut f = Fields::new(s, &mut ctx);
        scenario.cell = parse_cell(&mut f, &mut ctx);
        f.finish(&mut ctx, "in [cell]");
    }

    let mut broken = HashSet::new();
    for s in &segment_sections {
        let id = &s.name["segment.".len()..];
        let mut f = Fields::new(s, &mut ctx);
        match parse_segment(id, &mut f, &scenario.cell.config, &mut ctx) {
            Some(seg) => {
                let kind = seg.kind();
                scenario.segments.push(seg);
                f.finish(&mut ctx, &format!("for a {kind} segment"));
            }
            None => {
                broken.insert(id.to_string());
                f.mark_all_used();
                f.finish(&mut ctx, "");
            }
        }
    }

    if let Some(s) = by_name.get("path") {
        let mut f = Fields::new(s, &mut ctx);
        scenario.path = PathSpec {
            forward: f.parse_required("forward", Vec::new(), parse_ident_list, &mut ctx),
            ret: f.parse_or("return", Vec::new(), parse_ident_list, &mut ctx),
        };
        scenario.actuator = f.parse_or("actuator", None, |v| parse_ident(v).map(Some), &mut ctx);
        f.finish(&mut ctx, "in [path]");
    }

    if let Some(s) = by_name.get("source") {
        let mut f = Fields::new(s, &mut ctx);
        let d = SignalSource::default();
        scenario.source = SignalSource {
            toggle_period: f.parse_or("toggle_period", d.toggle_period, parse_duration, &mut ctx),
            sequences: f.parse_or("sequences", d.sequences, parse_u32, &mut ctx),
            sequence_length: f.parse_or(
                "sequence_length",
                d.sequence_length,
                parse_duration,
                &mut ctx,
            ),
            device: f.parse_or("device", None, |v| parse_ident(v).map(Some), &mut ctx),
        };
        f.finish(&mut ctx, "in [source]");
    }

    if let Some(s) = by_name.get("plc") {
        let mut f = Fields::new(s, &mut ctx);
        let d = PlcConfig::default();
        scenario.plc = PlcConfig {
            task_cycle: f.parse_or("task_cycle", d.task_cycle, parse_duration, &mut ctx),
            query_cycle: f.parse_or("query_cycle", d.query_cycle, parse_duration, &mut ctx),
            processing_jitter: f.parse_or("jitter", d.processing_jitter, parse_latency, &mut ctx),
            phase: SimTime::ZERO,
        };
        scenario.plc_phase = f.parse_or("phase", PhaseSpec::Random, parse_phase, &mut ctx);
        f.finish(&mut ctx, "in [plc]");
    }

    if let Some(s) = by_name.get("safety") {
        let mut f = Fields::new(s, &mut ctx);
        scenario.approach_speed = f.parse_or(
            "approach_speed",
            DEFAULT_APPROACH_SPEED,
            parse_f64,
            &mut ctx,
        );
        scenario.declared_worst_case = f.parse_or(
            "worst_case",
            None,
            |v| parse_duration(v).map(Some),
            &mut ctx,
        );
        f.finish(&mut ctx, "in [safety]");
    }

    let semantic = scenario.check(&|loc| ctx.spans.resolve(loc));
    ctx.diags.extend(semantic.into_iter().filter(|d| {
        !(d.kind == DiagnosticKind::UnresolvedId
            && broken
                .iter()
                .any(|id| d.message == format!("segment `{id}` is not defined")))
    }));

    if ctx.diags.is_empty() {
        Ok(scenario)
    } else {
        let mut diagnostics = ctx.diags;
        diagnostics.sort_by_key(|d| (d.line, d.column));
        Err(LoadError { diagnostics })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::DEFAULT_SCENARIO;

    fn load_err(text: &str) -> LoadError {
        load_scenario(text).expect_err("should fail")
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("1664us"), Ok(SimDuration(1664)));
        assert_eq!(parse_duration("1.664ms"), Ok(SimDuration(1664)));
        assert_eq!(parse_duration("5s"), Ok(SimDuration(5_000_000)));
        assert_eq!(parse_duration("27.55ms"), Ok(SimDuration(27_550)));
        assert_eq!(parse_duration(".5ms"), Ok(SimDuration(500)));
        assert_eq!(parse_duration("0us"), Ok(SimDuration(0)));
        assert!(parse_duration("5").is_err());
        assert!(parse_duration("1.0001ms").is_err());
        assert!(parse_duration("-1ms").is_err());
        assert!(parse_duration("ms").is_err());
        assert!(parse_duration("1.2.3ms").is_err());
    }

    #[test]
    fn distributions() {
        assert_eq!(
            parse_latency("constant(1.2ms)"),
            Ok(LatencyModel::constant_us(1200))
        );
        assert_eq!(
            parse_latency("uniform(1ms, 1.4ms)"),
            Ok(LatencyModel::Uniform {
                lo: SimDuration(1000),
                hi: SimDuration(1400)
            })
        );
        assert!(matches!(
            parse_latency("empirical(9ms:1, 10.2ms:3)"),
            Ok(LatencyModel::Empirical { bins }) if bins.len() == 2
        ));
        assert!(parse_latency("uniform(2ms, 1ms)").is_err());
        assert!(parse_latency("gamma(1ms)").is_err());
        assert!(parse_latency("truncnormal(1ms, 2ms)").is_err());
        assert!(parse_latency("constant(1ms").is_err());
    }

    #[test]
    fn list_offsets() {
        assert_eq!(list_items("a, bb,c"), vec![("a", 0), ("bb", 3), ("c", 6)]);
        assert!(list_items("  ").is_empty());
    }

    #[test]
    fn shipped_default_loads() {
        let s = load_scenario(DEFAULT_SCENARIO).unwrap();
        assert_eq!(s.cell.device_count(), 8);
        assert_eq!(s.cell.tracks.len(), 2);
        assert_eq!(s.cell.config.tracks_per_master, 2);
        assert_eq!(s.plc.task_cycle, SimDuration(5000));
        assert_eq!(s.plc.query_cycle, SimDuration(10_000));
        assert_eq!(s.source.toggle_period, SimDuration(200_000));
        assert_eq!(s.source.sequences, 540);
        let iolw = s.segment("iolw").unwrap();
        assert!(matches!(
            &iolw.model,
            SegmentModel::IolwAir { transfer } if transfer.completion_offset == SimDuration(667)
        ));
    }

    #[test]
    fn unresolved_segment() {
        let text = DEFAULT_SCENARIO.replace(
            "forward = iol_estop, iolw, eth_shop",
            "forward = iol_estop, iolw, ether9",
        );
        let err = load_err(&text);
        let d = err
            .diagnostics
            .iter()
            .find(|d| d.kind == DiagnosticKind::UnresolvedId)
            .unwrap();
        assert!(d.message.contains("ether9"));
        let line = text.lines().nth(d.line - 1).unwrap();
        assert_eq!(&line[d.column - 1..d.column - 1 + 6], "ether9");
    }

    #[test]
    fn six_tracks_is_capacity_violation() {
        let text = DEFAULT_SCENARIO.replace("tracks_per_master = 2", "tracks_per_master = 6");
        let err = load_err(&text);
        assert!(err.has(DiagnosticKind::Capacity));
        let d = &err.diagnostics[0];
        assert!(text
            .lines()
            .nth(d.line - 1)
            .unwrap()
            .contains("tracks_per_master"));
    }

    #[test]
    fn unknown_key_and_section() {
        let text = format!("{DEFAULT_SCENARIO}\n[plc]\n");
        assert!(load_err(&text).has(DiagnosticKind::DuplicateKey));
        let text = DEFAULT_SCENARIO.replace("task_cycle = 5ms", "task_cycel = 5ms");
        let err = load_err(&text);
        assert!(err.has(DiagnosticKind::UnknownKey));
        let text = format!("{DEFAULT_SCENARIO}\n[plcc]\nx = 1\n");
        assert!(load_err(&text).has(DiagnosticKind::UnknownSection));
    }

    #[test]
    fn key_not_valid_for_kind() {
        let text = DEFAULT_SCENARIO.replace("kind = plc", "kind = plc\nlatency = constant(1ms)");
        let err = load_err(&text);
        assert!(err
            .diagnostics
            .iter()
            .any(|d| d.kind == DiagnosticKind::UnknownKey && d.message.contains("latency")));
    }

    #[test]
    fn unknown_kind_does_not_cascade() {
        let text = DEFAULT_SCENARIO.replace("kind = ethernet", "kind = ethernt");
        let err = load_err(&text);
        assert!(err.has(DiagnosticKind::UnknownSegmentKind));
        assert!(!err.has(DiagnosticKind::UnresolvedId));
        assert!(!err.has(DiagnosticKind::UnknownKey));
    }

    #[test]
    fn multiple_errors_reported_together() {
        let text = DEFAULT_SCENARIO
            .replace("masters = 1", "masters = 4")
            .replace("toggle_period = 200ms", "toggle_period = 200")
            .replace("task_cycle = 5ms", "task_cycle = 5ms\nbogus = 1");
        let err = load_err(&text);
        assert!(err.has(DiagnosticKind::Capacity));
        assert!(err.has(DiagnosticKind::InvalidValue));
        assert!(err.has(DiagnosticKind::UnknownKey));
        assert!(err.diagnostics.windows(2).all(|w| w[0].line <= w[1].line));
    }

    #[test]
    fn syntax_errors() {
        let err = load_err("[cell\nmasters = 1\n");
        assert!(err.has(DiagnosticKind::Syntax));
        let err = load_err("masters = 1\n");
        let d = err
            .diagnostics
            .iter()
            .find(|d| d.kind == DiagnosticKind::Syntax)
            .unwrap();
        assert_eq!((d.line, d.column), (1, 1));
        let err = load_err("[cell]\n  just words\n");
        let d = err
            .diagnostics
            .iter()
            .find(|d| d.kind == DiagnosticKind::Syntax)
            .unwrap();
        assert_eq!((d.line, d.column), (2, 3));
    }

    #[test]
    fn declared_worst_case_must_match() {
        let text = DEFAULT_SCENARIO.replace("worst_case = 149.6ms", "worst_case = 150ms");
        assert!(load_err(&text).has(DiagnosticKind::Budget));
    }

    #[test]
    fn unknown_source_device() {
        let text = DEFAULT_SCENARIO.replace("device = estop", "device = e_stop");
        assert!(load_err(&text).has(DiagnosticKind::UnresolvedId));
    }

    #[test]
    fn too_many_devices_on_track() {
        let text = DEFAULT_SCENARIO.replace("slots_per_track = 8", "slots_per_track = 4");
        assert!(load_err(&text).has(DiagnosticKind::Capacity));
    }

    #[test]
    fn infeasible_hopping() {
        let text = DEFAULT_SCENARIO.replace("min_hop_distance = 12", "min_hop_distance = 40");
        assert!(load_err(&text).has(DiagnosticKind::InvalidValue));
    }
}
