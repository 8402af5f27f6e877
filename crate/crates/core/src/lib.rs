//! Slot-level simulator of transient-blockage recovery on a 60 GHz
//! beamformed link: geometric channel, TDD timing with reference-signal
//! synchronization, mobility and blockage, the five-state recovery protocol
//! at both endpoints, and a 5G NR resource calculator.

// `!(x > 0.0)` style checks are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
pub mod config;
pub mod engine;
pub mod error;
pub mod export;
pub mod mobility;
pub mod nr;
pub mod protocol;
pub mod timing;

pub use channel::{
    compute_paths, fspl_db, noise_floor_dbm, rss_dbm, snr_db, LinkBudgetParams, Material,
    PathComponent, PathKind, Penetration, Surface, Vec2,
};
pub use codebook::{BeamPattern, Codebook};
pub use config::{preset, BlockageConfig, ScenarioConfig};
pub use engine::{campaign, run, CampaignSummary, Metrics, RunOutput, Scene};
pub use error::{Error, Result};
pub use mobility::{measure_bct, pose_at, BlockageEvent, MobilityModel, Pose, RssTrace};
pub use nr::{initial_scan_latency, unblock_feasibility, NrConfig};
pub use protocol::{
    transition, BeamPair, BeamPairStore, ProtocolConfig, ProtocolEvent, ProtocolState, Thresholds,
};
pub use timing::{SlotKind, SlotSchedule, SyncParams, SyncState};
