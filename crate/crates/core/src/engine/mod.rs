//! Slot-resolution event loop tying channel, mobility, timing and protocol
//! together, plus the campaign and beam-coherence drivers built on it.
//!
//! Per slot: update the MS pose and (cached) paths, apply blockage, fire due
//! events (rescan timers, reacquisition), then give the slot to whatever
//! uses it. Downlink slots go to an active sweep or alignment job first;
//! unused downlink reference slots are measurement occasions that feed the
//! sync tracker and the 3/10 dB triggers; uplink reference slots carry the
//! backup-switch control message; the first free downlink data slot of each
//! frame probes the LoS pair while on the backup pair.

pub mod bct;
mod campaign;
mod metrics;
mod queue;
mod scene;
mod sim;

pub use campaign::{
    campaign, campaign_seeds, replication_seed, wilson_interval, CampaignSummary, ReplicationResult,
};
pub use metrics::{BlockageRecord, LatencyStats, LinkSample, Metrics, TraceEvent, WindowAirtime};
pub use queue::{EventQueue, SimEvent, SimEventKind};
pub use scene::{stream_rng, BlockageDriver, Scene, Stream};
pub use sim::{run, run_scene, RunOutput};
