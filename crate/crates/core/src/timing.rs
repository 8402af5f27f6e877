//! TDD frame layout and reference-signal time synchronization.

use serde::{Deserialize, Serialize};

use crate::channel::LinkBudgetParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotKind {
    DlRef,
    DlData,
    UlRef,
    UlData,
}

impl SlotKind {
    pub fn is_downlink(self) -> bool {
        matches!(self, SlotKind::DlRef | SlotKind::DlData)
    }

    pub fn is_reference(self) -> bool {
        matches!(self, SlotKind::DlRef | SlotKind::UlRef)
    }
}

/// Slot layout of one frame: a downlink half followed by an uplink half,
/// each starting with its reference slots (shifted by `ref_offset`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlotSchedule {
    pub slot_duration_s: f64,
    pub slots_per_frame: u32,
    pub dl_slots: u32,
    pub ref_slots_per_half: u32,
    pub ref_offset: u32,
}

impl Default for SlotSchedule {
    fn default() -> Self {
        SlotSchedule {
            slot_duration_s: 100e-6,
            slots_per_frame: 100,
            dl_slots: 50,
            ref_slots_per_half: 4,
            ref_offset: 0,
        }
    }
}

impl SlotSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.slot_duration_s > 0.0) {
            return Err(Error::invalid("slot_duration_s", "must be > 0"));
        }
        if self.slots_per_frame == 0 {
            return Err(Error::invalid("slots_per_frame", "must be > 0"));
        }
        if self.dl_slots == 0 || self.dl_slots >= self.slots_per_frame {
            return Err(Error::invalid(
                "dl_slots",
                format!("must be in [1, {})", self.slots_per_frame),
            ));
        }
        let ul = self.slots_per_frame - self.dl_slots;
        let need = self.ref_offset + self.ref_slots_per_half;
        if self.ref_slots_per_half == 0 || need > self.dl_slots || need > ul {
            return Err(Error::invalid(
                "ref_slots_per_half",
                "reference slots (plus offset) must fit inside both halves and be non-zero",
            ));
        }
        Ok(())
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.slots_per_frame as f64 * self.slot_duration_s
    }

    pub fn ul_slots(&self) -> u32 {
        self.slots_per_frame - self.dl_slots
    }

    /// Start time of an absolute slot.
    pub fn time_of(&self, slot: u64) -> f64 {
        slot as f64 * self.slot_duration_s
    }

    /// First slot starting at or after `t`.
    pub fn slot_at_or_after(&self, t: f64) -> u64 {
        let x = t / self.slot_duration_s;
        let r = x.round();
        if (x - r).abs() < 1e-6 {
            r.max(0.0) as u64
        } else {
            x.ceil().max(0.0) as u64
        }
    }

    /// Number of whole slots covering `duration_s`.
    pub fn slots_in(&self, duration_s: f64) -> u64 {
        self.slot_at_or_after(duration_s)
    }

    pub fn index_in_frame(&self, slot: u64) -> u32 {
        (slot % self.slots_per_frame as u64) as u32
    }

    pub fn frame_of(&self, slot: u64) -> u64 {
        slot / self.slots_per_frame as u64
    }

    pub fn slot_kind(&self, slot: u64) -> SlotKind {
        let idx = self.index_in_frame(slot);
        let is_ref = |i: u32| i >= self.ref_offset && i < self.ref_offset + self.ref_slots_per_half;
        if idx < self.dl_slots {
            if is_ref(idx) {
                SlotKind::DlRef
            } else {
                SlotKind::DlData
            }
        } else if is_ref(idx - self.dl_slots) {
            SlotKind::UlRef
        } else {
            SlotKind::UlData
        }
    }

    /// Downlink reference opportunities per frame.
    pub fn dl_refs_per_frame(&self) -> u32 {
        self.ref_slots_per_half
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncParams {
    /// Consecutive missed downlink reference opportunities that drop sync.
    pub loss_threshold: u32,
    /// Dead time before the link is re-acquired after losing sync.
    pub reacquisition_delay_s: f64,
}

impl Default for SyncParams {
    fn default() -> Self {
        SyncParams {
            loss_threshold: 8,
            reacquisition_delay_s: 1.0,
        }
    }
}

impl SyncParams {
    pub fn validate(&self) -> Result<()> {
        if self.loss_threshold == 0 {
            return Err(Error::invalid("loss_threshold", "must be >= 1"));
        }
        if !(self.reacquisition_delay_s >= 0.0) {
            return Err(Error::invalid("reacquisition_delay_s", "must be >= 0"));
        }
        Ok(())
    }

    /// Time span covered by `loss_threshold` downlink reference
    /// opportunities, rounded up to whole frames.
    pub fn horizon_s(&self, schedule: &SlotSchedule) -> f64 {
        let frames = self.loss_threshold.div_ceil(schedule.dl_refs_per_frame());
        frames as f64 * schedule.frame_duration_s()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncState {
    pub synced: bool,
    pub last_ref_decode_s: Option<f64>,
    pub misses: u32,
    pub reacquisition_until_s: Option<f64>,
}

impl Default for SyncState {
    fn default() -> Self {
        SyncState::synced_at(0.0)
    }
}

impl SyncState {
    pub fn synced_at(t: f64) -> Self {
        SyncState {
            synced: true,
            last_ref_decode_s: Some(t),
            misses: 0,
            reacquisition_until_s: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeOutcome {
    Decoded,
    Missed,
    /// This miss crossed the loss threshold.
    SyncLost,
    /// The tracker was already unsynced; nothing was attempted.
    Idle,
}

/// Feed one reference-slot observation into the sync tracker. The signal
/// decodes when `rss_dbm` is at or above noise floor plus decode threshold.
pub fn ref_decode(
    sync: SyncState,
    now_s: f64,
    rss_dbm: f64,
    link: &LinkBudgetParams,
    params: &SyncParams,
) -> (SyncState, DecodeOutcome) {
    if !sync.synced {
        return (sync, DecodeOutcome::Idle);
    }
    if rss_dbm >= link.decode_level_dbm() {
        let next = SyncState {
            synced: true,
            last_ref_decode_s: Some(now_s),
            misses: 0,
            reacquisition_until_s: None,
        };
        return (next, DecodeOutcome::Decoded);
    }
    let misses = sync.misses + 1;
    if misses >= params.loss_threshold {
        let next = SyncState {
            synced: false,
            last_ref_decode_s: sync.last_ref_decode_s,
            misses,
            reacquisition_until_s: Some(now_s + params.reacquisition_delay_s),
        };
        (next, DecodeOutcome::SyncLost)
    } else {
        (SyncState { misses, ..sync }, DecodeOutcome::Missed)
    }
}
