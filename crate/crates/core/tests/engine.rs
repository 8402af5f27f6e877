use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use unblock_core::config::{preset, BlockageConfig, ScenarioConfig};
use unblock_core::engine::{campaign, campaign_seeds, run, RunOutput};
use unblock_core::mobility::{BlockageEvent, BlockageTarget};
use unblock_core::protocol::BeamPair;

fn fig6(unblock: bool) -> RunOutput {
    let mut cfg = preset("fig6").unwrap();
    cfg.set_unblock(unblock);
    run(&cfg).unwrap()
}

fn events_with<'a>(
    out: &'a RunOutput,
    entity: &str,
    needle: &str,
) -> Vec<&'a unblock_core::engine::TraceEvent> {
    out.events
        .iter()
        .filter(|e| e.entity == entity && e.detail.contains(needle))
        .collect()
}

#[test]
fn null_scenario_is_quiet() {
    let mut cfg = preset("fig6").unwrap();
    cfg.blockage = BlockageConfig::None;
    cfg.duration_s = 10.0;
    let out = run(&cfg).unwrap();
    let m = &out.metrics;
    assert_eq!(m.outage_count, 0);
    assert_eq!(m.blockage_events, 0);
    assert_eq!(m.ba_entries, 0);
    assert_eq!(m.nbo_entries, 0);
    assert_eq!(m.sync_preservation_rate, 1.0);
    assert_eq!(m.total_slots, 100_000);
    assert_eq!(out.windows.len(), 100);
    let first = out.trace[0];
    assert!(out
        .trace
        .iter()
        .all(|s| s.synced && s.bs_beam == first.bs_beam && s.ms_beam == first.ms_beam));
}

#[test]
fn discovery_budget_is_exact() {
    let out = fig6(true);
    assert!(!out.windows.is_empty());
    for w in &out.windows {
        assert_eq!((w.ms_slots, w.bs_slots), (25, 25), "window {}", w.window);
    }
    let m = &out.metrics;
    assert_eq!(m.ms_sweep_slots, 25 * out.windows.len() as u64);
    assert_eq!(m.bs_sweep_slots, m.ms_sweep_slots);
    assert_abs_diff_eq!(m.discovery_airtime_fraction, 0.05, epsilon = 1e-12);
}

#[test]
fn rescan_off_spends_no_airtime() {
    let out = fig6(false);
    assert_eq!(out.metrics.sweep_slots(), 0);
    assert!(out.windows.is_empty());
}

#[test]
fn fig6_without_unblock_loses_sync() {
    let out = fig6(false);
    let m = &out.metrics;
    assert_eq!(m.outage_count, 1);
    assert_abs_diff_eq!(m.total_reacquisition_time_s, 1.0, epsilon = 1e-9);
    let trace = &out.trace;
    let at = |t: f64| trace[(t / 1e-4).round() as usize];
    assert_abs_diff_eq!(at(0.2499).rss_dbm, -58.0, epsilon = 0.01);
    // 35 ms ramp to the -72 dBm plateau
    assert_abs_diff_eq!(at(0.285).rss_dbm, -72.0, epsilon = 0.1);
    assert!(at(0.2849).rss_dbm > at(0.285).rss_dbm);
    let lost = events_with(&out, "sync", "missed");
    assert_eq!(lost.len(), 1);
    assert!(lost[0].time_s > 0.25 && lost[0].time_s < 0.285 + 0.02 + 1e-9);
    assert!(!out.blockages[0].survived);
}

#[test]
fn fig6_with_unblock_rides_the_backup() {
    let out = fig6(true);
    let m = &out.metrics;
    assert_eq!(m.outage_count, 0);
    assert_eq!(m.nbo_entries, 1);
    assert_eq!(m.recovery_failures, 0);
    let rec = out.blockages[0];
    assert!(rec.survived && rec.nbo_entered);
    let backup = rec.backup_pair.unwrap();
    let stored = rec.backup_rss_dbm.unwrap();
    assert_eq!(backup, BeamPair::new(15, 3));
    let hold: Vec<_> = out
        .trace
        .iter()
        .filter(|s| s.time_s >= 0.29 && s.time_s < 0.48)
        .collect();
    assert!(!hold.is_empty());
    for s in hold {
        assert_eq!((s.bs_beam, s.ms_beam), (backup.bs, backup.ms));
        assert!(
            (s.rss_dbm - stored).abs() <= 0.5,
            "{} vs {stored}",
            s.rss_dbm
        );
    }
    assert!(out.trace.iter().all(|s| s.synced));
    let latency = rec.recovery_latency_s.unwrap();
    assert!(latency > 0.0 && latency < 0.1);
}

#[test]
fn probe_runs_on_first_data_slot() {
    let out = fig6(true);
    let recovered: Vec<_> = out
        .events
        .iter()
        .filter(|e| e.entity == "ms" && e.state_from == "NBO" && e.state_to == "NO")
        .collect();
    assert_eq!(recovered.len(), 1);
    let slot = (recovered[0].time_s / 1e-4).round() as u64;
    assert_eq!(slot % 100, 4);
    // LoS is back once the ramp down ends
    let end = out.blockages[0].end_s.unwrap();
    assert!(recovered[0].time_s >= end - 0.035 && recovered[0].time_s <= end + 0.01 + 1e-9);
}

#[test]
fn backup_pair_refreshed_every_window() {
    let out = fig6(true);
    let stored = events_with(&out, "ms", "backup pair stored");
    assert!(stored.len() >= out.windows.len() - 2);
}

#[test]
fn missing_store_entry_is_a_recovery_failure() {
    let mut cfg = preset("fig6").unwrap();
    cfg.protocol.rescan_enabled = false;
    cfg.protocol.nbo_enabled = true;
    let out = run(&cfg).unwrap();
    assert_eq!(out.metrics.nbo_entries, 1);
    assert_eq!(out.metrics.recovery_failures, 1);
    assert!(out.blockages[0].recovery_failure);
    assert_eq!(out.metrics.outage_count, 1);
}

#[test]
fn control_message_retried_until_backup_decodes() {
    let mut cfg = preset("fig6").unwrap();
    let BlockageConfig::Scheduled { events } = &mut cfg.blockage else {
        panic!("fig6 uses scheduled blockage")
    };
    events.push(BlockageEvent {
        start_s: 0.278,
        ramp_s: 0.001,
        hold_s: 0.006,
        depth_db: 15.0,
        target: BlockageTarget::Reflection(0),
    });
    let out = run(&cfg).unwrap();
    let plain = fig6(true);
    assert!(out.metrics.control_retries > 0);
    assert_eq!(plain.metrics.control_retries, 0);
    let switched = |o: &RunOutput| events_with(o, "bs", "switched to BS beam")[0].time_s;
    assert!(switched(&out) > switched(&plain));
    // first uplink reference slot after the reflection clears at 0.286 s
    assert_abs_diff_eq!(switched(&out), 0.295, epsilon = 1e-9);
    assert_eq!(out.metrics.outage_count, 0);
}

#[test]
fn identical_seed_identical_output() {
    let mut cfg = preset("campaign-default").unwrap();
    cfg.seed = 77;
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.events, b.events);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.metrics, b.metrics);
    cfg.seed = 78;
    let c = run(&cfg).unwrap();
    assert_ne!(a.events, c.events);
}

#[test]
fn campaign_is_order_independent() {
    let mut cfg = preset("campaign-default").unwrap();
    cfg.duration_s = 2.0;
    let seeds: Vec<u64> = (0..8).map(|i| 500 + i).collect();
    let mut rev = seeds.clone();
    rev.reverse();
    let a = campaign_seeds(&cfg, &seeds).unwrap();
    let b = campaign_seeds(&cfg, &rev).unwrap();
    assert_eq!(a, b);
    assert_eq!(campaign(&cfg, 8, 500).unwrap(), a);
}

#[test]
fn unknown_material_rejected_with_field_path() {
    let mut cfg = preset("fig6").unwrap();
    cfg.surfaces[0].material = "vibranium".into();
    let err = run(&cfg).unwrap_err().to_string();
    assert!(err.contains("surfaces[0]"), "{err}");
}

fn negative_control(
    start_s: f64,
    extra_depth: f64,
    hold_s: f64,
    delay_s: f64,
) -> (ScenarioConfig, f64) {
    let mut cfg = preset("fig6").unwrap();
    cfg.set_unblock(false);
    cfg.sync.reacquisition_delay_s = delay_s;
    cfg.duration_s = start_s + 0.07 + hold_s + delay_s + 0.1;
    // RSS -58 dBm, decode level floor + 3 dB; anything deeper than the gap
    let gap = -58.0 - cfg.link.decode_level_dbm();
    cfg.blockage = BlockageConfig::Scheduled {
        events: vec![BlockageEvent {
            start_s,
            ramp_s: 0.035,
            hold_s,
            depth_db: gap + extra_depth,
            target: BlockageTarget::AllPaths,
        }],
    };
    (cfg, delay_s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deep_long_blockage_without_unblock_loses_sync(
        start in 0.05f64..0.5, extra in 0.5f64..20.0, hold in 0.021f64..0.3, delay in 0.05f64..1.0,
    ) {
        let (cfg, delay) = negative_control(start, extra, hold, delay);
        let out = run(&cfg).unwrap();
        prop_assert!(out.metrics.outage_count >= 1);
        prop_assert!(!out.blockages[0].survived);
        let lost: Vec<f64> = out.events.iter()
            .filter(|e| e.entity == "sync" && e.state_to == "lost").map(|e| e.time_s).collect();
        let back: Vec<f64> = out.events.iter()
            .filter(|e| e.entity == "sync" && e.state_to == "synced").map(|e| e.time_s).collect();
        prop_assert_eq!(lost.len(), back.len());
        for (l, b) in lost.iter().zip(&back) {
            prop_assert!((b - l - delay).abs() <= 1e-4 + 1e-9, "dead time {} vs {}", b - l, delay);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn budget_and_store_freshness_hold_for_any_seed(seed in any::<u64>()) {
        let mut cfg = preset("campaign-default").unwrap();
        cfg.seed = seed;
        cfg.duration_s = 3.0;
        let out = run(&cfg).unwrap();
        for w in &out.windows {
            prop_assert_eq!((w.ms_slots, w.bs_slots), (25, 25));
        }
        let nbo_at: Vec<f64> = out.events.iter()
            .filter(|e| e.entity == "ms" && e.state_to == "NBO" && e.state_from != "NBO")
            .map(|e| e.time_s)
            .collect();
        for t in nbo_at {
            let stored = out.events.iter()
                .filter(|e| e.entity == "store" && e.detail.contains("->") && e.time_s <= t)
                .map(|e| e.time_s)
                .fold(f64::NEG_INFINITY, f64::max);
            let failed = out.events.iter().any(|e| e.time_s == t && e.detail.starts_with("recovery failure"));
            if !failed {
                prop_assert!(t - stored <= 0.1 + 0.005 + 1e-9, "NBO at {} used a pair from {}", t, stored);
            }
        }
    }
}
