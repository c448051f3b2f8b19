//! Report bundles: a JSON document and a set of plot-ready CSV tables.
//!
//! Durations are integer microseconds throughout. The input configuration
//! is echoed verbatim, together with its SHA-256, so a report can be
//! regenerated from itself.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::fiveg::symbol_bandwidth;
use crate::safety::safety_distance;
use crate::scenario::{Leg, RunResult, RunStats, SegmentModel, PANEL_NAMES};
use crate::stats::LatencyStats;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const NOTES: &[&str] = &[
    "5G segment delay shape is a calibration choice fitted to the measured aggregates",
    "per-segment budgets are a calibrated breakdown of the worst case, not measurements",
    "the PLC samples its inputs at task-cycle start",
    "link throughput and RSSI are descriptive metadata and are not simulated",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Run,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatSummary {
    pub count: u64,
    pub losses: u64,
    pub min_us: Option<u64>,
    pub max_us: Option<u64>,
    pub mean_us: Option<f64>,
    pub p50_us: Option<u64>,
    pub p99_us: Option<u64>,
}

impl StatSummary {
    pub fn of(s: &LatencyStats) -> StatSummary {
        StatSummary {
            count: s.count(),
            losses: s.losses(),
            min_us: s.min().map(|d| d.0),
            max_us: s.max().map(|d| d.0),
            mean_us: s.mean(),
            p50_us: s.percentile(50.0).ok().map(|d| d.0),
            p99_us: s.percentile(99.0).ok().map(|d| d.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub toggles: u64,
    pub samples: u64,
    pub losses: u64,
    pub clamped_draws: u64,
    pub end_to_end: StatSummary,
    /// End to end with the PLC hop's share left out.
    pub end_to_end_without_plc: StatSummary,
    pub sum_of_segment_maxima_us: u64,
    pub worst_case_us: u64,
    pub approach_speed_m_s: f64,
    pub safety_distance_m: f64,
    pub safety_distance_presented_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub hop: String,
    pub segment: String,
    pub kind: &'static str,
    pub leg: Leg,
    pub budget_us: u64,
    pub stats: StatSummary,
    pub histogram: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelReport {
    pub name: &'static str,
    pub hops: Vec<String>,
    pub stats: StatSummary,
    pub histogram: Vec<(u64, u64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cdf: Option<Vec<(u64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkMeta {
    pub segment: String,
    pub scs_khz: Option<u32>,
    pub symbol_bandwidth_khz: Option<u32>,
    pub downlink_mbps: Option<f64>,
    pub uplink_mbps: Option<f64>,
    pub rssi_floor_dbm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub plc_phase_us: u64,
    pub toggles: u64,
    pub losses: u64,
    pub dispatched_events: u64,
    pub trace_digest: String,
    pub end_to_end: StatSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub tool: Tool,
    pub generated_at_unix: u64,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub config_sha256: String,
    pub config_text: String,
    pub summary: Summary,
    pub segments: Vec<SegmentReport>,
    pub panels: Vec<PanelReport>,
    pub link_meta: Vec<LinkMeta>,
    pub per_seed: Vec<SeedSummary>,
    pub notes: Vec<&'static str>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn histogram(s: &LatencyStats) -> Vec<(u64, u64)> {
    s.histogram().into_iter().map(|(t, n)| (t.0, n)).collect()
}

impl ReportBundle {
    /// Builds a report from per-seed results and their merged statistics.
    /// `runs` must be non-empty and share one scenario.
    pub fn build(
        config_text: &str,
        runs: &[RunResult],
        merged: &RunStats,
        mode: Mode,
        generated_at_unix: u64,
    ) -> ReportBundle {
        let first = runs.first().expect("at least one run");
        let scenario = &first.config;
        let hops = scenario.hops();

        let mut without_plc = LatencyStats::default();
        for r in runs {
            for s in &r.samples {
                without_plc.record(s.end_to_end_excluding(&[r.plc_hop]));
            }
        }

        let worst = scenario.worst_case();
        let distance = safety_distance(worst, scenario.approach_speed);
        let summary = Summary {
            toggles: merged.toggles,
            samples: merged.samples(),
            losses: merged.losses,
            clamped_draws: merged.clamped_draws,
            end_to_end: StatSummary::of(merged.end_to_end()),
            end_to_end_without_plc: StatSummary::of(&without_plc),
            sum_of_segment_maxima_us: merged.sum_of_hop_maxima().0,
            worst_case_us: worst.0,
            approach_speed_m_s: scenario.approach_speed,
            safety_distance_m: distance.meters,
            safety_distance_presented_m: distance.presented_m,
        };

        let segments = hops
            .iter()
            .zip(&merged.hops)
            .map(|(h, s)| {
                let seg = &scenario.segments[h.segment];
                SegmentReport {
                    hop: h.label.clone(),
                    segment: seg.id.clone(),
                    kind: seg.kind().name(),
                    leg: h.leg,
                    budget_us: seg.budget.0,
                    stats: StatSummary::of(s),
                    histogram: histogram(s),
                }
            })
            .collect();

        let panels = merged
            .panels
            .iter()
            .enumerate()
            .map(|(i, (_, s))| PanelReport {
                name: PANEL_NAMES[i],
                hops: match first.panel_hops.get(i) {
                    Some(members) => members
                        .iter()
                        .map(|&h| first.hop_labels[h].clone())
                        .collect(),
                    None => first.hop_labels.clone(),
                },
                stats: StatSummary::of(s),
                histogram: histogram(s),
                cdf: (i == 3).then(|| {
                    s.cdf()
                        .map(|c| c.into_iter().map(|(t, p)| (t.0, p)).collect())
                        .unwrap_or_default()
                }),
            })
            .collect();

        let link_meta = scenario
            .segments
            .iter()
            .filter_map(|seg| match &seg.model {
                SegmentModel::Fiveg {
                    numerology, meta, ..
                } => Some(LinkMeta {
                    segment: seg.id.clone(),
                    scs_khz: numerology.as_ref().map(|n| n.scs_khz),
                    symbol_bandwidth_khz: numerology
                        .as_ref()
                        .and_then(|n| symbol_bandwidth(n).ok()),
                    downlink_mbps: meta.downlink_mbps,
                    uplink_mbps: meta.uplink_mbps,
                    rssi_floor_dbm: meta.rssi_floor_dbm,
                }),
                _ => None,
            })
            .collect();

        let per_seed = runs
            .iter()
            .map(|r| {
                let st = r.stats();
                SeedSummary {
                    seed: r.seed,
                    plc_phase_us: r.plc_phase.0,
                    toggles: r.toggles,
                    losses: r.losses,
                    dispatched_events: r.dispatched_events,
                    trace_digest: format!("{:016x}", r.trace_digest),
                    end_to_end: StatSummary::of(st.end_to_end()),
                }
            })
            .collect();

        ReportBundle {
            schema_version: SCHEMA_VERSION,
            tool: Tool {
                name: TOOL_NAME,
                version: TOOL_VERSION,
            },
            generated_at_unix,
            mode,
            seeds: runs.iter().map(|r| r.seed).collect(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            config_text: config_text.to_string(),
            summary,
            segments,
            panels,
            link_meta,
            per_seed,
            notes: NOTES.to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `report.json` and the config echo. Returns the written paths.
    pub fn write_json(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        put(dir, "report.json", &self.to_json(), &mut out)?;
        put(dir, "config.scenario", &self.config_text, &mut out)?;
        Ok(out)
    }

    /// Writes one CSV per panel and per hop, the summary tables and the
    /// config echo. Returns the written paths.
    pub fn write_csv(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for p in &self.panels {
            let body = match &p.cdf {
                Some(cdf) => histogram_cdf_csv(&p.histogram, cdf),
                None => histogram_csv(&p.histogram),
            };
            put(dir, &format!("panel_{}.csv", p.name), &body, &mut out)?;
        }
        for s in &self.segments {
            let name = format!("segment_{}.csv", s.hop.replace('#', "-"));
            put(dir, &name, &histogram_csv(&s.histogram), &mut out)?;
        }
        put(dir, "summary.csv", &self.summary_csv(), &mut out)?;
        put(dir, "per_seed.csv", &self.per_seed_csv(), &mut out)?;
        put(dir, "config.scenario", &self.config_text, &mut out)?;
        Ok(out)
    }

    fn summary_csv(&self) -> String {
        let mut s =
            String::from("scope,count,losses,min_us,max_us,mean_us,p50_us,p99_us,budget_us\n");
        let row = |s: &mut String, scope: &str, st: &StatSummary, budget: Option<u64>| {
            let _ = writeln!(
                s,
                "{scope},{},{},{},{},{},{},{},{}",
                st.count,
                st.losses,
                opt(st.min_us),
                opt(st.max_us),
                st.mean_us.map(|m| format!("{m:.3}")).unwrap_or_default(),
                opt(st.p50_us),
                opt(st.p99_us),
                opt(budget),
            );
        };
        for seg in &self.segments {
            row(&mut s, &seg.hop, &seg.stats, Some(seg.budget_us));
        }
        for p in &self.panels {
            row(&mut s, &format!("panel_{}", p.name), &p.stats, None);
        }
        row(
            &mut s,
            "end_to_end_without_plc",
            &self.summary.end_to_end_without_plc,
            None,
        );
        let _ = writeln!(s, "worst_case,,,,,,,,{}", self.summary.worst_case_us);
        s.push_str("\nquantity,value\n");
        let _ = writeln!(s, "toggles,{}", self.summary.toggles);
        let _ = writeln!(s, "samples,{}", self.summary.samples);
        let _ = writeln!(s, "losses,{}", self.summary.losses);
        let _ = writeln!(
            s,
            "sum_of_segment_maxima_us,{}",
            self.summary.sum_of_segment_maxima_us
        );
        let _ = writeln!(s, "worst_case_us,{}", self.summary.worst_case_us);
        let _ = writeln!(s, "safety_distance_m,{:.4}", self.summary.safety_distance_m);
        let _ = writeln!(
            s,
            "safety_distance_presented_m,{:.1}",
            self.summary.safety_distance_presented_m
        );
        s
    }

    fn per_seed_csv(&self) -> String {
        let mut s = String::from(
            "seed,plc_phase_us,toggles,losses,samples,mean_us,max_us,p99_us,trace_digest\n",
        );
        for r in &self.per_seed {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.seed,
                r.plc_phase_us,
                r.toggles,
                r.losses,
                r.end_to_end.count,
                r.end_to_end
                    .mean_us
                    .map(|m| format!("{m:.3}"))
                    .unwrap_or_default(),
                opt(r.end_to_end.max_us),
                opt(r.end_to_end.p99_us),
                r.trace_digest,
            );
        }
        s
    }
}

fn opt(v: Option<u64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn histogram_csv(rows: &[(u64, u64)]) -> String {
    let mut s = String::from("time_us,frequency\n");
    for (t, n) in rows {
        let _ = writeln!(s, "{t},{n}");
    }
    s
}

fn histogram_cdf_csv(rows: &[(u64, u64)], cdf: &[(u64, f64)]) -> String {
    let mut s = String::from("time_us,frequency,cdf\n");
    let mut c = cdf.iter().peekable();
    let mut last = 0.0;
    for (t, n) in rows {
        while let Some((ct, p)) = c.peek() {
            if ct > t {
                break;
            }
            last = *p;
            c.next();
        }
        let _ = writeln!(s, "{t},{n},{last:.6}");
    }
    s
}

fn put(dir: &Path, name: &str, body: &str, out: &mut Vec<PathBuf>) -> io::Result<()> {
    let p = dir.join(name);
    fs::write(&p, body)?;
    out.push(p);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{run, Scenario, DEFAULT_SCENARIO};

    fn bundle() -> ReportBundle {
        let mut s = Scenario::default_testbed();
        s.source.sequences = 3;
        let r = run(&s, 11).unwrap();
        let st = r.stats();
        ReportBundle::build(DEFAULT_SCENARIO, &[r], &st, Mode::Run, 0)
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn hash_matches_echo() {
        let b = bundle();
        assert_eq!(b.config_sha256, sha256_hex(b.config_text.as_bytes()));
        assert_eq!(b.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn numbers_trace_to_stats() {
        let b = bundle();
        assert_eq!(b.summary.worst_case_us, 149_600);
        assert_eq!(b.summary.safety_distance_presented_m, 0.3);
        let e2e = &b.panels[3];
        assert_eq!(e2e.stats, b.summary.end_to_end);
        let total: u64 = e2e.histogram.iter().map(|(_, n)| n).sum();
        assert_eq!(total, b.summary.samples);
        assert!(b.summary.end_to_end_without_plc.mean_us < b.summary.end_to_end.mean_us);
        assert_eq!(b.link_meta.len(), 2);
        assert_eq!(b.link_meta[0].symbol_bandwidth_khz, Some(360));
    }

    #[test]
    fn cdf_column_ends_at_one() {
        let b = bundle();
        let p = &b.panels[3];
        let csv = histogram_cdf_csv(&p.histogram, p.cdf.as_ref().unwrap());
        let last = csv.lines().last().unwrap();
        assert!(last.ends_with(",1.000000"), "{last}");
        assert!(csv.starts_with("time_us,frequency,cdf\n"));
    }
}
