use proptest::prelude::*;

use sensor2edge::fiveg::LatencyModel;
use sensor2edge::scenario::{
    load_scenario, run, sweep, PhaseSpec, Scenario, SegmentModel, DEFAULT_SCENARIO,
};
use sensor2edge::time::{SimDuration, SimTime};

fn lossless(mut s: Scenario) -> Scenario {
    for seg in &mut s.segments {
        if let SegmentModel::IolwAir { transfer } = &mut seg.model {
            transfer.per_subcycle_error_prob = 0.0;
        }
    }
    s
}

fn with_sequences(n: u32) -> Scenario {
    let mut s = Scenario::default_testbed();
    s.source.sequences = n;
    s
}

#[test]
fn default_protocol_counts() {
    let s = Scenario::default_testbed();
    assert_eq!(s.source.toggles_per_sequence(), 25);
    assert_eq!(s.source.total_toggles(), 13_500);
    assert_eq!(s.hops().len(), 13);
}

#[test]
fn loaded_default_matches_builtin() {
    assert_eq!(
        load_scenario(DEFAULT_SCENARIO).unwrap(),
        Scenario::default_testbed()
    );
}

#[test]
fn every_toggle_is_accounted_for() {
    let r = run(&with_sequences(40), 21).unwrap();
    assert_eq!(r.toggles, 1_000);
    assert_eq!(r.samples.len() as u64 + r.losses, r.toggles);
    let mut seen: Vec<u32> = r.samples.iter().map(|s| s.toggle).collect();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), r.samples.len());
}

#[test]
fn toggles_alternate_level_and_period() {
    let r = run(&lossless(with_sequences(3)), 4).unwrap();
    let mut samples = r.samples.clone();
    samples.sort_by_key(|s| s.toggle);
    for w in samples.windows(2) {
        assert_ne!(w[0].level, w[1].level);
        if w[0].toggle / 25 == w[1].toggle / 25 {
            assert_eq!(w[1].start - w[0].start, SimDuration::from_millis(200));
        }
    }
    for s in &samples {
        let seq = s.toggle as u64 / 25;
        assert!(s.start.0 >= seq * 5_000_000);
    }
}

#[test]
fn sweep_135_sequences_times_4_seeds() {
    let s = with_sequences(135);
    let w = sweep(&s, &[1, 2, 3, 4], 4).unwrap();
    assert_eq!(w.merged.toggles, 13_500);
    assert_eq!(w.merged.samples() + w.merged.losses, 13_500);
}

#[test]
fn sweep_is_commutative() {
    let s = with_sequences(10);
    let ab = sweep(&s, &[11, 12], 2).unwrap();
    let ba = sweep(&s, &[12, 11], 1).unwrap();
    assert_eq!(ab.merged, ba.merged);
    assert_eq!(ab.runs[0], ba.runs[1]);
}

#[test]
fn latency_backed_hops_converge_to_model_means() {
    let s = lossless(with_sequences(200));
    let r = run(&s, 8).unwrap();
    let st = r.stats();
    for (i, h) in s.hops().iter().enumerate() {
        let seg = &s.segments[h.segment];
        let Some(model) = seg.model.latency_model() else {
            continue;
        };
        let observed = st.hops[i].mean().unwrap();
        let expected = match model {
            LatencyModel::Uniform { lo, hi } => (lo.0 + hi.0) as f64 / 2.0,
            // Truncated normal: compare against a large direct draw.
            m => {
                let mut rng = sensor2edge::rng::RngStream::new(99, i as u64);
                (0..200_000)
                    .map(|_| m.sample(&mut rng).0 as f64)
                    .sum::<f64>()
                    / 200_000.0
            }
        };
        assert!(
            (observed - expected).abs() / expected < 0.03,
            "{}: {observed} vs {expected}",
            h.label
        );
    }
}

#[test]
fn excluding_plc_removes_its_share_exactly() {
    let r = run(&with_sequences(5), 2).unwrap();
    for s in &r.samples {
        assert_eq!(
            s.end_to_end_excluding(&[r.plc_hop]) + s.contributions[r.plc_hop],
            s.end_to_end()
        );
    }
}

#[test]
fn fixed_phase_is_used_verbatim() {
    let mut s = with_sequences(2);
    s.plc_phase = PhaseSpec::Fixed(SimTime(3_000));
    assert_eq!(run(&s, 1).unwrap().plc_phase, SimTime(3_000));
    s.plc_phase = PhaseSpec::Random;
    let phases: Vec<_> = (0..20)
        .map(|seed| run(&s, seed).unwrap().plc_phase.0)
        .collect();
    assert!(phases.iter().all(|&p| p < s.plc.query_cycle.0));
    assert!(phases.iter().any(|&p| p != phases[0]));
}

#[test]
fn constant_network_gives_structural_bounds() {
    let mut s = lossless(with_sequences(4));
    for seg in &mut s.segments {
        match &mut seg.model {
            SegmentModel::IolWire { latency }
            | SegmentModel::Ethernet { latency }
            | SegmentModel::Fiveg { latency, .. } => {
                *latency = LatencyModel::constant_us(1_000);
                seg.budget = SimDuration(1_000);
            }
            _ => {}
        }
    }
    s.declared_worst_case = None;
    let r = run(&s, 6).unwrap();
    for smp in &r.samples {
        let plc = smp.contributions[r.plc_hop];
        assert!(plc > s.plc.task_cycle && plc.0 < s.plc.query_cycle.0 + 2 * s.plc.task_cycle.0);
        assert!(smp.end_to_end() <= s.worst_case());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contributions_sum_to_latency(seed in any::<u64>(), seqs in 1u32..4) {
        let r = run(&with_sequences(seqs), seed).unwrap();
        for s in &r.samples {
            prop_assert_eq!(s.contributions.iter().copied().sum::<SimDuration>(), s.end_to_end());
            prop_assert!(s.end_to_end() <= r.config.worst_case());
        }
        prop_assert_eq!(r.samples.len() as u64 + r.losses, r.toggles);
    }

    #[test]
    fn same_seed_same_trace(seed in any::<u64>()) {
        let s = with_sequences(1);
        let a = run(&s, seed).unwrap();
        let b = run(&s, seed).unwrap();
        prop_assert_eq!(a.trace_digest, b.trace_digest);
        prop_assert_eq!(a.samples, b.samples);
    }
}
