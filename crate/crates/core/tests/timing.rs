use proptest::prelude::*;

use unblock_core::channel::LinkBudgetParams;
use unblock_core::timing::{
    ref_decode, DecodeOutcome, SlotKind, SlotSchedule, SyncParams, SyncState,
};

#[test]
fn default_layout() {
    let s = SlotSchedule::default();
    assert_eq!(s.slot_kind(0), SlotKind::DlRef);
    assert_eq!(s.slot_kind(3), SlotKind::DlRef);
    assert_eq!(s.slot_kind(4), SlotKind::DlData);
    assert_eq!(s.slot_kind(50), SlotKind::UlRef);
    assert_eq!(s.slot_kind(54), SlotKind::UlData);
    assert_eq!(s.slot_kind(103), SlotKind::DlRef);
    assert_eq!(s.dl_refs_per_frame(), 4);
    assert!((s.frame_duration_s() - 0.01).abs() < 1e-12);
    assert!((SyncParams::default().horizon_s(&s) - 0.02).abs() < 1e-12);
}

#[test]
fn eight_misses_lose_sync() {
    let link = LinkBudgetParams::default();
    let params = SyncParams::default();
    let mut sync = SyncState::default();
    for k in 0..7 {
        let (next, out) = ref_decode(sync, k as f64, -100.0, &link, &params);
        assert_eq!(out, DecodeOutcome::Missed);
        sync = next;
    }
    let (sync, out) = ref_decode(sync, 7.0, -100.0, &link, &params);
    assert_eq!(out, DecodeOutcome::SyncLost);
    assert_eq!(sync.reacquisition_until_s, Some(8.0));
    assert_eq!(
        ref_decode(sync, 8.0, -50.0, &link, &params).1,
        DecodeOutcome::Idle
    );
}

proptest! {
    #[test]
    fn slot_kinds_partition_the_frame(slot in 0u64..10_000_000) {
        let s = SlotSchedule::default();
        let i = slot % 100;
        let expect = match i {
            0..=3 => SlotKind::DlRef,
            4..=49 => SlotKind::DlData,
            50..=53 => SlotKind::UlRef,
            _ => SlotKind::UlData,
        };
        prop_assert_eq!(s.slot_kind(slot), expect);
        prop_assert_eq!(s.slot_kind(slot).is_downlink(), i < 50);
    }

    #[test]
    fn decode_resets_misses(pattern in prop::collection::vec(any::<bool>(), 1..64)) {
        let link = LinkBudgetParams::default();
        let params = SyncParams::default();
        let mut sync = SyncState::default();
        let mut run = 0u32;
        for (k, ok) in pattern.into_iter().enumerate() {
            let rss = if ok { -50.0 } else { -100.0 };
            let (next, out) = ref_decode(sync, k as f64, rss, &link, &params);
            if !sync.synced {
                prop_assert_eq!(out, DecodeOutcome::Idle);
                continue;
            }
            run = if ok { 0 } else { run + 1 };
            prop_assert_eq!(next.synced, run < params.loss_threshold);
            sync = next;
        }
    }
}
