//! The blockage recovery state machine run by both endpoints, plus the
//! selection rules applied to discovery sweeps.
//!
//! The mobile normally operates on an aligned LoS beam pair (`NO`). Every
//! rescan interval it sweeps its own codebook against the current BS LoS
//! beam (`MS_NBD`), keeps the strongest beam outside the LoS main lobe that
//! is within the eligibility margin of the LoS RSS, and then listens on that
//! beam while the BS sweeps (`BS_NBD`). The resulting pair is stored under
//! the BS LoS beam. A sudden drop switches both ends to the stored pair
//! (`NBO`) until a scheduled probe finds the LoS pair healthy again. Smaller
//! drops go through beam adaptation (`BA`).

mod align;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use align::{ba_align, AlignmentOutcome, AlignmentSession, NeighborFirstAligner};
pub use store::{BackupPair, BeamPairStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolState {
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "BA")]
    Ba,
    #[serde(rename = "MS_NBD")]
    MsNbd,
    #[serde(rename = "BS_NBD")]
    BsNbd,
    #[serde(rename = "NBO")]
    Nbo,
}

impl ProtocolState {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolState::No => "NO",
            ProtocolState::Ba => "BA",
            ProtocolState::MsNbd => "MS_NBD",
            ProtocolState::BsNbd => "BS_NBD",
            ProtocolState::Nbo => "NBO",
        }
    }
}

impl fmt::Display for ProtocolState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Index pair `(bs transmit beam, ms receive beam)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeamPair {
    pub bs: usize,
    pub ms: usize,
}

impl BeamPair {
    pub const fn new(bs: usize, ms: usize) -> Self {
        BeamPair { bs, ms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Drop since the previous measurement that triggers beam adaptation.
    pub adapt_drop_db: f64,
    /// Drop that is treated as blockage.
    pub blockage_drop_db: f64,
    /// How far below the LoS RSS a beam may sit and still count as a backup.
    pub nlos_eligibility_db: f64,
    pub rescan_interval_s: f64,
    /// A probed LoS pair within this margin of its pre-blockage RSS counts
    /// as recovered; also the success criterion of beam adaptation.
    pub recovery_margin_db: f64,
    /// MS beams within this many indices of the LoS beam are treated as the
    /// LoS main lobe and never stored as backups.
    pub los_exclusion_beams: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            adapt_drop_db: 3.0,
            blockage_drop_db: 10.0,
            nlos_eligibility_db: 10.0,
            rescan_interval_s: 0.100,
            recovery_margin_db: 3.0,
            los_exclusion_beams: 3,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.adapt_drop_db > 0.0) {
            return Err(Error::invalid("adapt_drop_db", "must be > 0"));
        }
        if !(self.blockage_drop_db >= self.adapt_drop_db) {
            return Err(Error::invalid(
                "blockage_drop_db",
                format!("must be >= adapt_drop_db ({})", self.adapt_drop_db),
            ));
        }
        if !(self.nlos_eligibility_db >= 0.0) {
            return Err(Error::invalid("nlos_eligibility_db", "must be >= 0"));
        }
        if !(self.rescan_interval_s > 0.0) {
            return Err(Error::invalid("rescan_interval_s", "must be > 0"));
        }
        if !(self.recovery_margin_db >= 0.0) {
            return Err(Error::invalid("recovery_margin_db", "must be >= 0"));
        }
        Ok(())
    }
}

/// Thresholds plus the switches that turn the recovery machinery on or off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub thresholds: Thresholds,
    pub rescan_enabled: bool,
    pub nbo_enabled: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            thresholds: Thresholds::default(),
            rescan_enabled: true,
            nbo_enabled: true,
        }
    }
}

impl ProtocolConfig {
    /// Beam adaptation only: no discovery and no backup operation.
    pub fn disabled() -> Self {
        ProtocolConfig {
            rescan_enabled: false,
            nbo_enabled: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()
    }
}

/// One RSS observation on the active pair at a measurement occasion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssUpdate {
    /// RSS at the immediately preceding measurement occasion.
    pub previous_dbm: f64,
    pub current_dbm: f64,
    /// Pre-drop RSS of a degradation that beam adaptation has not resolved.
    /// While set, the blockage drop is measured against it and further
    /// adaptation is not re-triggered.
    pub episode_reference_dbm: Option<f64>,
}

impl RssUpdate {
    pub fn new(previous_dbm: f64, current_dbm: f64) -> Self {
        RssUpdate {
            previous_dbm,
            current_dbm,
            episode_reference_dbm: None,
        }
    }

    fn blockage_drop(&self) -> f64 {
        self.episode_reference_dbm.unwrap_or(self.previous_dbm) - self.current_dbm
    }

    fn adapt_drop(&self) -> f64 {
        self.previous_dbm - self.current_dbm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolEvent {
    RssUpdate(RssUpdate),
    RescanTimer,
    /// A discovery sweep finished; `candidate` is false when MS discovery
    /// found no eligible beam. The BS sweep follows either way so the
    /// discovery airtime per window is fixed.
    SweepDone {
        candidate: bool,
    },
    BlockageDetected,
    LosRecovered,
    AlignmentDone,
}

impl ProtocolEvent {
    fn name(&self) -> &'static str {
        match self {
            ProtocolEvent::RssUpdate(_) => "RssUpdate",
            ProtocolEvent::RescanTimer => "RescanTimer",
            ProtocolEvent::SweepDone { .. } => "SweepDone",
            ProtocolEvent::BlockageDetected => "BlockageDetected",
            ProtocolEvent::LosRecovered => "LoSRecovered",
            ProtocolEvent::AlignmentDone => "AlignmentDone",
        }
    }
}

/// Advance the machine. Pairs not listed in the state diagram are rejected.
///
/// A rescan firing while in `NBO` keeps the state: the sweep runs as a
/// sub-activity so the link stays on the backup pair.
pub fn transition(
    state: ProtocolState,
    event: ProtocolEvent,
    config: &ProtocolConfig,
) -> Result<ProtocolState> {
    use ProtocolEvent as E;
    use ProtocolState as S;
    let th = &config.thresholds;
    let next = match (state, event) {
        (S::No, E::RssUpdate(u)) => {
            if config.nbo_enabled && u.blockage_drop() >= th.blockage_drop_db {
                S::Nbo
            } else if u.episode_reference_dbm.is_none() && u.adapt_drop() >= th.adapt_drop_db {
                S::Ba
            } else {
                S::No
            }
        }
        (S::Ba, E::RssUpdate(u)) => {
            if config.nbo_enabled && u.blockage_drop() >= th.blockage_drop_db {
                S::Nbo
            } else {
                S::Ba
            }
        }
        (S::No | S::Ba, E::BlockageDetected) if config.nbo_enabled => S::Nbo,
        (S::Nbo, E::RssUpdate(_)) => S::Nbo,
        (S::Ba, E::AlignmentDone) => S::No,
        (S::No, E::RescanTimer) if config.rescan_enabled => S::MsNbd,
        (S::Nbo, E::RescanTimer) if config.rescan_enabled => S::Nbo,
        (S::MsNbd, E::SweepDone { .. }) => S::BsNbd,
        (S::BsNbd, E::SweepDone { .. }) => S::No,
        (S::Nbo, E::SweepDone { .. }) => S::Nbo,
        (S::Nbo, E::LosRecovered) => S::No,
        (s, e) => {
            return Err(Error::IllegalTransition {
                state: s.to_string(),
                event: e.name().to_string(),
            })
        }
    };
    Ok(next)
}

/// RSS of every MS beam, measured while the BS holds its LoS beam.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    pub los_beam: usize,
    pub los_rss_dbm: f64,
    pub beams: Vec<(usize, f64)>,
}

impl MeasurementReport {
    /// Build from a full sweep; the LoS RSS is read from the sweep itself.
    pub fn from_sweep(los_beam: usize, beams: Vec<(usize, f64)>) -> Self {
        let los_rss_dbm = beams
            .iter()
            .find(|(b, _)| *b == los_beam)
            .map(|(_, r)| *r)
            .unwrap_or(f64::NEG_INFINITY);
        MeasurementReport {
            los_beam,
            los_rss_dbm,
            beams,
        }
    }
}

/// Strongest beam outside the LoS main lobe whose RSS is within the
/// eligibility margin of the LoS RSS. Ties go to the lower index.
pub fn ms_nbd(report: &MeasurementReport, thresholds: &Thresholds) -> Option<usize> {
    let floor = report.los_rss_dbm - thresholds.nlos_eligibility_db;
    let mut best: Option<(usize, f64)> = None;
    for &(beam, rss) in &report.beams {
        if beam.abs_diff(report.los_beam) <= thresholds.los_exclusion_beams || rss < floor {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, r)) => rss > r || (rss == r && beam < b),
        };
        if better {
            best = Some((beam, rss));
        }
    }
    best.map(|(b, _)| b)
}

/// Strongest BS beam as heard on the MS backup beam (lowest index on ties).
pub fn bs_nbd(sweep: &[(usize, f64)]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &(beam, rss) in sweep {
        let better = match best {
            None => true,
            Some((b, r)) => rss > r || (rss == r && beam < b),
        };
        if better {
            best = Some((beam, rss));
        }
    }
    best
}

/// Look up the backup pair for the active BS LoS beam. `None` is a recovery
/// failure: the mobile stays on its LoS beam.
pub fn enter_nbo(store: &BeamPairStore, current_los_bs_beam: usize) -> Option<BackupPair> {
    store.get(current_los_bs_beam).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NboDecision {
    Stay,
    LosRecovered,
}

/// Decide on a scheduled probe of the pre-blockage LoS pair.
pub fn nbo_monitor(
    probe_los_rss_dbm: f64,
    pre_blockage_rss_dbm: f64,
    thresholds: &Thresholds,
) -> NboDecision {
    if probe_los_rss_dbm >= pre_blockage_rss_dbm - thresholds.recovery_margin_db {
        NboDecision::LosRecovered
    } else {
        NboDecision::Stay
    }
}
