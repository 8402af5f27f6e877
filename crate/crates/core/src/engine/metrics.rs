use serde::{Deserialize, Serialize};

use crate::protocol::{BeamPair, ProtocolState};

/// One row of the per-slot link trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    pub time_s: f64,
    pub bs_beam: usize,
    pub ms_beam: usize,
    pub rss_dbm: f64,
    pub state: ProtocolState,
    pub synced: bool,
}

/// One row of the event trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time_s: f64,
    pub entity: String,
    pub state_from: String,
    pub state_to: String,
    pub detail: String,
}

/// A maximal run of slots during which the LoS path is attenuated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockageRecord {
    pub start_s: f64,
    /// `None` if the blockage was still active when the run ended.
    pub end_s: Option<f64>,
    /// No sync loss between onset and the end plus the sync-loss horizon.
    pub survived: bool,
    pub nbo_entered: bool,
    /// The store had no pair for the active LoS beam at the trigger.
    pub recovery_failure: bool,
    pub backup_pair: Option<BeamPair>,
    pub backup_rss_dbm: Option<f64>,
    /// Onset to the BS switching onto the backup pair.
    pub recovery_latency_s: Option<f64>,
}

impl BlockageRecord {
    pub(crate) fn open(start_s: f64, synced: bool) -> Self {
        BlockageRecord {
            start_s,
            end_s: None,
            survived: synced,
            nbo_entered: false,
            recovery_failure: false,
            backup_pair: None,
            backup_rss_dbm: None,
            recovery_latency_s: None,
        }
    }
}

/// Sweep airtime spent by the discovery started in one rescan window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowAirtime {
    pub window: u64,
    pub ms_slots: u64,
    pub bs_slots: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_s: Option<f64>,
    pub min_s: Option<f64>,
    pub max_s: Option<f64>,
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return LatencyStats::default();
        }
        let sum: f64 = samples.iter().sum();
        LatencyStats {
            count: samples.len(),
            mean_s: Some(sum / samples.len() as f64),
            min_s: samples.iter().copied().reduce(f64::min),
            max_s: samples.iter().copied().reduce(f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub duration_s: f64,
    pub total_slots: u64,
    pub blockage_events: usize,
    pub events_survived: usize,
    /// Fraction of blockage events survived; 1.0 when there were none.
    pub sync_preservation_rate: f64,
    /// Number of sync-loss transitions.
    pub outage_count: usize,
    pub total_reacquisition_time_s: f64,
    pub ms_sweep_slots: u64,
    pub bs_sweep_slots: u64,
    pub discovery_airtime_fraction: f64,
    /// Beam measurements performed (sweeps, alignment, probes, acquisition).
    pub measurement_count: u64,
    pub ba_entries: usize,
    pub nbo_entries: usize,
    pub recovery_failures: usize,
    pub control_retries: usize,
    pub recovery_latency: LatencyStats,
    pub sync_loss_threshold: u32,
    pub reacquisition_delay_s: f64,
}

impl Metrics {
    pub fn sweep_slots(&self) -> u64 {
        self.ms_sweep_slots + self.bs_sweep_slots
    }
}
