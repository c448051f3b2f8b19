//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;

use sensor2edge::fiveg::{symbol_bandwidth, LatencyModel, NumerologyConfig};
use sensor2edge::iolw::{
    residual_error_prob, transfer_latency, validate_cell, CellViolation, IolwCellConfig,
    IolwTransferModel, TransferOutcome,
};
use sensor2edge::plc::{align_to_task_cycle, PlcConfig};
use sensor2edge::rng::RngStream;
use sensor2edge::safety::safety_distance;
use sensor2edge::scenario::{run, sweep, PhaseSpec, RunError, Scenario, SegmentModel};
use sensor2edge::stats::LatencyStats;
use sensor2edge::time::{SimDuration, SimTime};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn shipped_iolw() -> IolwTransferModel {
    let s = Scenario::default_testbed();
    match &s.segment("iolw").expect("shipped iolw segment").model {
        SegmentModel::IolwAir { transfer } => transfer.clone(),
        _ => unreachable!(),
    }
}

fn c1_numerology() -> Outcome {
    let expected = [(15, 180), (30, 360), (60, 720), (120, 1440), (240, 2880)];
    for (scs, bw) in expected {
        let got = symbol_bandwidth(&NumerologyConfig::new(scs).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        if got != bw {
            return Err(format!("{scs} kHz -> {got} kHz, expected {bw}"));
        }
    }
    Ok("180/360/720/1440/2880 kHz".into())
}

fn c2_iolw_mean() -> Outcome {
    let cell = IolwCellConfig::default();
    let model = IolwTransferModel {
        per_subcycle_error_prob: 0.0,
        ..shipped_iolw()
    };
    let mut arrivals = RngStream::new(2, 0);
    let mut rng = RngStream::new(2, 1);
    let n = 100_000u64;
    let mut total = 0u64;
    for _ in 0..n {
        let t = SimTime(arrivals.below(1_000 * cell.cycle.0));
        match transfer_latency(t, &cell, &model, &mut rng) {
            TransferOutcome::Delivered { latency, .. } => total += latency.0,
            TransferOutcome::Lost => return Err("loss with zero error probability".into()),
        }
    }
    let mean = total as f64 / n as f64;
    ensure(
        (mean - 1500.0).abs() <= 50.0,
        format!("mean {:.4} ms (1.5 ± 0.05)", mean / 1000.0),
    )
}

fn c3_plc_alignment() -> Outcome {
    let cfg = PlcConfig::default();
    let t = cfg.task_cycle.0;
    let mut rng = RngStream::new(3, 0);
    let mut jitter_rng = RngStream::new(3, 1);
    let n = 100_000u64;
    let mut total = 0u64;
    for _ in 0..n {
        let arrival = SimTime(rng.below(10_000 * t));
        let added = align_to_task_cycle(arrival, &cfg, &mut jitter_rng) - arrival;
        if arrival.0.is_multiple_of(t) {
            if added.0 != t {
                return Err(format!("boundary arrival {arrival} took {added}"));
            }
        } else if !(added.0 > t && added.0 <= 2 * t) {
            return Err(format!("off-boundary arrival {arrival} took {added}"));
        }
        total += added.0;
    }
    for k in [0u64, 1, 7, 1000] {
        let arrival = SimTime(k * t);
        let added = align_to_task_cycle(arrival, &cfg, &mut jitter_rng) - arrival;
        if added.0 != t {
            return Err(format!("boundary arrival {arrival} took {added}"));
        }
    }
    let mean = total as f64 / n as f64;
    ensure(
        (mean - 7500.0).abs() <= 100.0,
        format!("mean added delay {:.4} ms (7.5 ± 0.1)", mean / 1000.0),
    )
}

fn c4_end_to_end() -> Outcome {
    let s = Scenario::default_testbed();
    let started = Instant::now();
    let r = run(&s, 1).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let st = r.stats();
    let e2e = st.end_to_end();
    let mean = e2e.mean().ok_or("no samples")?;
    let p99 = e2e.percentile(99.0).map_err(|e| e.to_string())?;
    let max = e2e.max().ok_or("no samples")?;
    let detail = format!(
        "{} toggles, mean {:.2} ms, p99 {}, max {}, worst case {}, {:.2?}",
        r.toggles,
        mean / 1000.0,
        p99,
        SimDuration(max.0),
        s.worst_case(),
        elapsed
    );
    ensure(
        r.toggles == 540 * 25
            && (mean - 66_800.0).abs() <= 6_680.0
            && p99 <= SimDuration::from_millis(99)
            && max <= s.worst_case()
            && elapsed < Duration::from_secs(30),
        detail,
    )
}

fn c5_worst_case() -> Outcome {
    let s = Scenario::default_testbed();
    let wc = s.worst_case();
    let d = safety_distance(wc, 2.0);
    ensure(
        wc == SimDuration(149_600) && (d.meters - 0.2992).abs() < 1e-12 && d.presented_m == 0.3,
        format!("{wc}, {:.4} m, presented {:.1} m", d.meters, d.presented_m),
    )
}

fn random_latency(rng: &mut RngStream) -> LatencyModel {
    let lo = rng.uniform_inclusive(0, 3_000);
    let hi = lo + rng.uniform_inclusive(1, 20_000);
    match rng.below(4) {
        0 => LatencyModel::Constant {
            value: SimDuration(lo),
        },
        1 => LatencyModel::Uniform {
            lo: SimDuration(lo),
            hi: SimDuration(hi),
        },
        2 => LatencyModel::TruncatedNormal {
            mean: SimDuration(rng.uniform_inclusive(lo, hi)),
            stddev: SimDuration(rng.uniform_inclusive(1, hi - lo + 1)),
            lo: SimDuration(lo),
            hi: SimDuration(hi),
        },
        _ => LatencyModel::Empirical {
            bins: (0..rng.uniform_inclusive(1, 5))
                .map(|_| (SimDuration(rng.uniform_inclusive(lo, hi)), 0.1 + rng.unit()))
                .collect(),
        },
    }
}

fn random_scenario(rng: &mut RngStream) -> Scenario {
    let mut s = Scenario::default_testbed();
    let task = [1u64, 2, 5, 10][rng.below(4) as usize] * 1000;
    s.plc = PlcConfig {
        task_cycle: SimDuration(task),
        query_cycle: SimDuration(task * rng.uniform_inclusive(1, 3)),
        processing_jitter: LatencyModel::Uniform {
            lo: SimDuration(0),
            hi: SimDuration(rng.below(2_000)),
        },
        phase: SimTime::ZERO,
    };
    let cell = s.cell.config.clone();
    s.plc_phase = if rng.chance(0.5) {
        PhaseSpec::Random
    } else {
        PhaseSpec::Fixed(SimTime(rng.below(task)))
    };
    for seg in &mut s.segments {
        match &mut seg.model {
            SegmentModel::IolWire { latency }
            | SegmentModel::Ethernet { latency }
            | SegmentModel::Fiveg { latency, .. } => {
                *latency = random_latency(rng);
            }
            SegmentModel::IolwAir { transfer } => {
                transfer.completion_offset = SimDuration(rng.below(cell.subcycle.0));
                transfer.per_subcycle_error_prob = rng.unit() * 0.5;
                transfer.max_attempts = rng.uniform_inclusive(1, 3) as u32;
            }
            SegmentModel::Plc => {}
        }
    }
    for seg in &mut s.segments {
        seg.budget = seg.support_max(&cell, &s.plc);
    }
    s.declared_worst_case = None;
    s.source.sequences = rng.uniform_inclusive(2, 12) as u32;
    s.source.toggle_period = SimDuration::from_millis(rng.uniform_inclusive(50, 400));
    s
}

fn c6_dominance() -> Outcome {
    let mut rng = RngStream::new(6, 0);
    let mut samples = 0u64;
    for i in 0..100 {
        let s = random_scenario(&mut rng);
        let r = run(&s, 1_000 + i).map_err(|e| match e {
            RunError::Invalid(d) => format!("scenario {i}: {}", d[0]),
            e => format!("scenario {i}: {e}"),
        })?;
        let st = r.stats();
        let Some(max) = st.end_to_end().max() else {
            continue;
        };
        samples += st.samples();
        let sum_of_max = st.sum_of_hop_maxima();
        if sum_of_max < max || s.worst_case() < max {
            return Err(format!(
                "scenario {i}: max {max} > sum of maxima {sum_of_max} / budget {}",
                s.worst_case()
            ));
        }
    }
    Ok(format!("100 scenarios, {samples} samples"))
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .expect("report dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).expect("report file"),
            )
        })
        .collect();
    v.sort();
    v
}

fn c7_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_sensor2edge");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/default.scenario");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (i, format) in ["json", "json", "csv", "csv"].iter().enumerate() {
        let out = tmp.path().join(format!("r{i}"));
        let status = Command::new(exe)
            .args([
                "run",
                config,
                "--seed",
                "7",
                "--deterministic",
                "--format",
                format,
                "--out",
            ])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("run exited with {}", status.status));
        }
        outputs.push(read_dir_sorted(&out));
    }
    if outputs[0] != outputs[1] || outputs[2] != outputs[3] {
        return Err("repeated --deterministic runs differ".into());
    }

    let mut s = Scenario::default_testbed();
    s.source.sequences = 60;
    let mut seeds: Vec<u64> = (1..=8).collect();
    let reference = sweep(&s, &seeds, 1).map_err(|e| e.to_string())?.merged;
    let mut shuffler = RngStream::new(7, 0);
    for (i, par) in [1usize, 3, 8].into_iter().enumerate() {
        seeds.shuffle(&mut shuffler);
        let merged = sweep(&s, &seeds, par).map_err(|e| e.to_string())?.merged;
        if merged != reference {
            return Err(format!(
                "shuffle {i} ({seeds:?}, parallel {par}) merged differently"
            ));
        }
    }
    Ok(format!(
        "json and csv reports byte-identical; merge equal across 3 shufflings ({} samples)",
        reference.samples()
    ))
}

fn c8_residual() -> Outcome {
    let r = residual_error_prob(1e-3, 3);
    let ulps = (r.to_bits() as i64 - 1e-9f64.to_bits() as i64).abs();
    if ulps > 1 {
        return Err(format!("residual {r:e} is {ulps} ulp from 1e-9"));
    }
    let cell = IolwCellConfig::default();
    let model = IolwTransferModel {
        per_subcycle_error_prob: 0.3,
        max_attempts: 3,
        ..shipped_iolw()
    };
    let mut arrivals = RngStream::new(8, 0);
    let mut rng = RngStream::new(8, 1);
    let n = 1_000_000u64;
    let mut lost = 0u64;
    for _ in 0..n {
        let t = SimTime(arrivals.below(cell.cycle.0 * 100));
        if transfer_latency(t, &cell, &model, &mut rng) == TransferOutcome::Lost {
            lost += 1;
        }
    }
    let p = 0.3f64.powi(3);
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let observed = lost as f64 / n as f64;
    ensure(
        (observed - p).abs() <= 3.0 * sigma,
        format!(
            "residual {r:e} ({ulps} ulp); MC {observed:.5} vs {p:.3} ± {:.5}",
            3.0 * sigma
        ),
    )
}

fn c9_capacity() -> Outcome {
    let base = IolwCellConfig::default();
    let cases: [(&str, IolwCellConfig, bool); 6] = [
        (
            "masters 3",
            IolwCellConfig {
                masters: 3,
                ..base.clone()
            },
            true,
        ),
        (
            "masters 4",
            IolwCellConfig {
                masters: 4,
                ..base.clone()
            },
            false,
        ),
        (
            "tracks 5",
            IolwCellConfig {
                tracks_per_master: 5,
                ..base.clone()
            },
            true,
        ),
        (
            "tracks 6",
            IolwCellConfig {
                tracks_per_master: 6,
                ..base.clone()
            },
            false,
        ),
        (
            "slots 8",
            IolwCellConfig {
                masters: 3,
                tracks_per_master: 5,
                slots_per_track: 8,
                ..base.clone()
            },
            true,
        ),
        (
            "slots 9",
            IolwCellConfig {
                slots_per_track: 9,
                ..base.clone()
            },
            false,
        ),
    ];
    for (name, cfg, accept) in &cases {
        match (validate_cell(cfg), accept) {
            (Ok(_), true) => {}
            (Err(v), false) => {
                let right_reason = v.iter().any(|x| {
                    matches!(
                        (name.split(' ').next().unwrap(), x),
                        ("masters", CellViolation::Masters(4))
                            | ("tracks", CellViolation::TracksPerMaster(6))
                            | ("slots", CellViolation::SlotsPerTrack(9))
                    )
                });
                if !right_reason {
                    return Err(format!("{name}: rejected for the wrong reason {v:?}"));
                }
            }
            (got, _) => return Err(format!("{name}: {got:?}")),
        }
    }
    let full = validate_cell(&cases[4].1).map_err(|v| format!("{v:?}"))?;
    ensure(
        full == 120,
        format!("6 configs as expected, full cell holds {full} devices"),
    )
}

fn c10_merge() -> Outcome {
    let mut rng = RngStream::new(10, 0);
    for round in 0..20 {
        let n = rng.uniform_inclusive(1, 20_000) as usize;
        let spread = rng.uniform_inclusive(1, 200_000);
        let samples: Vec<SimDuration> =
            (0..n).map(|_| SimDuration(rng.below(spread + 1))).collect();
        let whole = LatencyStats::from_samples(samples.iter().copied());
        let mut parts: Vec<LatencyStats> = (0..10).map(|_| LatencyStats::default()).collect();
        for &v in &samples {
            parts[rng.below(10) as usize].record(v);
        }
        parts.shuffle(&mut rng);
        let merged = parts
            .iter()
            .fold(LatencyStats::default(), |acc, p| acc.merged(p));
        let exact = merged.count() == whole.count()
            && merged.min() == whole.min()
            && merged.max() == whole.max()
            && merged.histogram() == whole.histogram();
        let naive = samples.iter().map(|d| d.0 as f64).sum::<f64>() / n as f64;
        let mean_ok = (merged.mean().unwrap() - naive).abs() <= 1.0;
        if !(exact && mean_ok && merged == whole) {
            return Err(format!(
                "round {round}: merged stats differ from whole-set stats"
            ));
        }
    }
    Ok("20 sample sets, 10-way partitions merge exactly".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("numerology exactness", c1_numerology),
        ("IOLW calibration", c2_iolw_mean),
        ("PLC alignment", c3_plc_alignment),
        ("end-to-end reproduction", c4_end_to_end),
        ("worst-case calculus", c5_worst_case),
        ("dominance", c6_dominance),
        ("determinism", c7_determinism),
        ("residual error", c8_residual),
        ("capacity gate", c9_capacity),
        ("statistics merge", c10_merge),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = started.elapsed();
        match outcome {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name}: {detail} [{elapsed:.2?}]",
                i + 1
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {:>2} FAIL  {name}: {detail} [{elapsed:.2?}]",
                    i + 1
                );
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
