use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::metrics::{
    BlockageRecord, LatencyStats, LinkSample, Metrics, TraceEvent, WindowAirtime,
};
use super::queue::{EventQueue, SimEventKind};
use super::scene::{stream_rng, Scene, Stream};
use crate::channel::PathComponent;
use crate::codebook::angular_distance_deg;
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::mobility::RssTrace;
use crate::protocol::{
    bs_nbd, enter_nbo, ms_nbd, nbo_monitor, transition, AlignmentSession, BackupPair, BeamPair,
    BeamPairStore, MeasurementReport, NboDecision, NeighborFirstAligner, ProtocolEvent,
    ProtocolState, RssUpdate, Thresholds,
};
use crate::timing::{ref_decode, DecodeOutcome, SlotKind, SyncState};

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<LinkSample>,
    pub events: Vec<TraceEvent>,
    pub metrics: Metrics,
    pub blockages: Vec<BlockageRecord>,
    pub windows: Vec<WindowAirtime>,
}

impl RunOutput {
    /// The active-pair RSS as a trace of (time, RSS) samples.
    pub fn rss_trace(&self) -> RssTrace {
        RssTrace::new(
            self.trace
                .iter()
                .map(|s| crate::mobility::RssSample {
                    time_s: s.time_s,
                    rss_dbm: s.rss_dbm,
                })
                .collect(),
        )
        .expect("slot times increase")
    }
}

/// Run one scenario with its own seed.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    let scene = Scene::build(config)?;
    run_scene(&scene)
}

pub fn run_scene(scene: &Scene) -> Result<RunOutput> {
    let mut sim = Sim::new(scene)?;
    sim.execute()?;
    Ok(sim.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SweepPhase {
    Ms,
    Bs,
}

#[derive(Debug)]
struct Sweep {
    phase: SweepPhase,
    window: usize,
    /// BS beam the MS sweep is anchored on; the store key.
    los_bs: usize,
    los_ms: usize,
    /// The MS sweep found an eligible beam; without one the BS sweep still
    /// runs but nothing is stored.
    candidate: bool,
    pairs: Vec<BeamPair>,
    results: Vec<f64>,
}

struct Align {
    session: NeighborFirstAligner,
    batch: Vec<BeamPair>,
    results: Vec<f64>,
}

enum Job {
    Sweep(Sweep),
    Align(Align),
}

impl Job {
    fn uses(&self, kind: SlotKind) -> bool {
        match self {
            Job::Sweep(_) => kind.is_downlink(),
            Job::Align(_) => kind == SlotKind::DlData,
        }
    }
}

/// A drop that beam adaptation did not repair.
#[derive(Debug, Clone, Copy)]
struct Episode {
    reference_dbm: f64,
    started_s: f64,
    pair_before: BeamPair,
}

#[derive(Debug, Clone, Copy)]
struct Nbo {
    probe_pair: BeamPair,
    pre_blockage_dbm: f64,
    backup: Option<BackupPair>,
    bs_switched: bool,
    last_probe_frame: Option<u64>,
}

struct Sim<'a> {
    scene: &'a Scene,
    cfg: &'a ScenarioConfig,
    n_slots: u64,
    rescan_slots: u64,
    queue: EventQueue,

    // channel cache
    cached_pos: crate::channel::Vec2,
    cached_facing: f64,
    paths: Vec<PathComponent>,
    blockage: Vec<f64>,
    att: Vec<f64>,
    shadowing: Option<(ChaCha8Rng, Normal<f64>)>,

    // link and protocol
    active: BeamPair,
    ms_state: ProtocolState,
    bs_state: ProtocolState,
    sync: SyncState,
    lost_at: Option<f64>,
    prev_occasion: Option<f64>,
    episode: Option<Episode>,
    job: Option<Job>,
    rescan_pending: Option<usize>,
    nbo: Option<Nbo>,
    store: BeamPairStore,

    // outputs
    trace: Vec<LinkSample>,
    events: Vec<TraceEvent>,
    blockages: Vec<BlockageRecord>,
    los_blocked: bool,
    windows: Vec<WindowAirtime>,
    outage_count: usize,
    reacquisition_time_s: f64,
    measurement_count: u64,
    ba_entries: usize,
    nbo_entries: usize,
    recovery_failures: usize,
    control_retries: usize,
    latencies: Vec<f64>,
}

impl<'a> Sim<'a> {
    fn new(scene: &'a Scene) -> Result<Self> {
        let cfg = &scene.config;
        let sched = &cfg.schedule;
        let n_slots = sched.slots_in(cfg.duration_s);
        let rescan_slots = sched
            .slots_in(cfg.protocol.thresholds.rescan_interval_s)
            .max(1);
        let sigma = cfg.link.shadowing_sigma_db;
        let shadowing = (sigma > 0.0).then(|| {
            (
                stream_rng(cfg.seed, Stream::Shadowing),
                Normal::new(0.0, sigma).expect("sigma validated"),
            )
        });
        let pose = scene.ms_pose_at(0.0);
        let mut sim = Sim {
            scene,
            cfg,
            n_slots,
            rescan_slots,
            queue: EventQueue::new(),
            cached_pos: pose.position_m,
            cached_facing: pose.facing_deg,
            paths: scene.paths_for(pose.position_m)?,
            blockage: Vec::new(),
            att: Vec::new(),
            shadowing,
            active: BeamPair::new(0, 0),
            ms_state: ProtocolState::No,
            bs_state: ProtocolState::No,
            sync: SyncState::synced_at(0.0),
            lost_at: None,
            prev_occasion: None,
            episode: None,
            job: None,
            rescan_pending: None,
            nbo: None,
            store: BeamPairStore::default(),
            trace: Vec::new(),
            events: Vec::new(),
            blockages: Vec::new(),
            los_blocked: false,
            windows: Vec::new(),
            outage_count: 0,
            reacquisition_time_s: 0.0,
            measurement_count: 0,
            ba_entries: 0,
            nbo_entries: 0,
            recovery_failures: 0,
            control_retries: 0,
            latencies: Vec::new(),
        };
        if cfg.protocol.rescan_enabled {
            sim.queue.push(0, SimEventKind::RescanTimer);
        }
        for e in scene.events() {
            sim.queue.push(
                sched.slot_at_or_after(e.start_s),
                SimEventKind::BlockageStart,
            );
            sim.queue
                .push(sched.slot_at_or_after(e.end_s()), SimEventKind::BlockageEnd);
        }
        Ok(sim)
    }

    fn time(&self, slot: u64) -> f64 {
        self.cfg.schedule.time_of(slot)
    }

    fn log(
        &mut self,
        t: f64,
        entity: &str,
        from: impl ToString,
        to: impl ToString,
        detail: impl Into<String>,
    ) {
        self.events.push(TraceEvent {
            time_s: t,
            entity: entity.to_string(),
            state_from: from.to_string(),
            state_to: to.to_string(),
            detail: detail.into(),
        });
    }

    fn execute(&mut self) -> Result<()> {
        for slot in 0..self.n_slots {
            let t = self.time(slot);
            self.update_channel(t)?;
            if slot == 0 {
                self.acquire(t, "initial acquisition");
            }
            self.track_blockage(t);
            while let Some(ev) = self.queue.pop_due(slot) {
                self.handle_event(ev.kind, slot, t);
            }
            if self.sync.synced {
                self.start_pending_rescan(t);
                self.run_slot(slot, t);
            }
            if self.cfg.engine.record_trace {
                let rss = self.rss(self.active);
                self.trace.push(LinkSample {
                    time_s: t,
                    bs_beam: self.active.bs,
                    ms_beam: self.active.ms,
                    rss_dbm: rss,
                    state: self.ms_state,
                    synced: self.sync.synced,
                });
            }
        }
        Ok(())
    }

    // ---- channel ----

    fn update_channel(&mut self, t: f64) -> Result<()> {
        let eps = &self.cfg.engine;
        let pose = self.scene.ms_pose_at(t);
        if pose.position_m.distance(self.cached_pos) > eps.position_epsilon_m {
            self.cached_pos = pose.position_m;
            self.paths = self.scene.paths_for(pose.position_m)?;
        }
        if angular_distance_deg(pose.facing_deg, self.cached_facing) > eps.facing_epsilon_deg {
            self.cached_facing = pose.facing_deg;
        }
        self.blockage.clear();
        self.blockage
            .extend(self.paths.iter().map(|p| self.scene.blockage_db(p, t)));
        self.att.clear();
        self.att.extend_from_slice(&self.blockage);
        if let Some((rng, normal)) = &mut self.shadowing {
            for a in &mut self.att {
                *a += normal.sample(rng);
            }
        }
        Ok(())
    }

    fn rss(&self, pair: BeamPair) -> f64 {
        self.scene
            .pair_rss(pair, &self.paths, &self.att, self.cached_facing)
    }

    fn measure(&mut self, pair: BeamPair) -> f64 {
        self.measurement_count += 1;
        self.rss(pair)
    }

    // ---- blockage bookkeeping ----

    fn track_blockage(&mut self, t: f64) {
        let blocked = self
            .paths
            .iter()
            .zip(&self.blockage)
            .any(|(p, &a)| p.is_los() && a > 0.0);
        if blocked && !self.los_blocked {
            self.blockages
                .push(BlockageRecord::open(t, self.sync.synced));
        } else if !blocked && self.los_blocked {
            if let Some(r) = self.blockages.last_mut() {
                r.end_s = Some(t);
            }
        }
        self.los_blocked = blocked;
    }

    fn open_blockage(&mut self) -> Option<&mut BlockageRecord> {
        self.blockages.last_mut().filter(|r| r.end_s.is_none())
    }

    // ---- scheduled events ----

    fn handle_event(&mut self, kind: SimEventKind, slot: u64, t: f64) {
        match kind {
            SimEventKind::RescanTimer => {
                let window = (slot / self.rescan_slots) as usize;
                self.queue
                    .push(slot + self.rescan_slots, SimEventKind::RescanTimer);
                self.on_rescan_timer(window, t);
            }
            SimEventKind::Reacquire => self.acquire(t, "reacquired after dead time"),
            SimEventKind::BlockageStart => {
                self.log(t, "blockage", "", "", "scheduled blocker onset")
            }
            SimEventKind::BlockageEnd => {
                self.log(t, "blockage", "", "", "scheduled blocker cleared")
            }
            SimEventKind::SlotBoundary | SimEventKind::Custom(_) => {}
        }
    }

    fn acquire(&mut self, t: f64, why: &str) {
        let (pair, rss) = self
            .scene
            .best_pair(&self.paths, &self.att, self.cached_facing);
        self.measurement_count +=
            (self.scene.bs_codebook.len() * self.scene.ms_codebook.len()) as u64;
        if let Some(lost) = self.lost_at.take() {
            self.reacquisition_time_s += t - lost;
            self.log(t, "sync", "lost", "synced", why);
        }
        self.sync = SyncState::synced_at(t);
        self.active = pair;
        self.ms_state = ProtocolState::No;
        self.bs_state = ProtocolState::No;
        self.prev_occasion = None;
        self.episode = None;
        self.job = None;
        self.nbo = None;
        self.rescan_pending = None;
        self.store.clear();
        self.log(
            t,
            "link",
            "",
            "NO",
            format!("{why}: pair ({}, {}) at {rss:.2} dBm", pair.bs, pair.ms),
        );
    }

    fn lose_sync(&mut self, t: f64) {
        self.outage_count += 1;
        self.lost_at = Some(t);
        let horizon = self.cfg.sync.horizon_s(&self.cfg.schedule);
        for r in &mut self.blockages {
            if r.end_s.is_none_or(|end| t <= end + horizon) {
                r.survived = false;
            }
        }
        let from = self.ms_state;
        self.log(
            t,
            "sync",
            "synced",
            "lost",
            format!("{} reference opportunities missed", self.sync.misses),
        );
        self.log(t, "ms", from, "NO", "protocol halted until reacquisition");
        self.ms_state = ProtocolState::No;
        self.bs_state = ProtocolState::No;
        self.job = None;
        self.nbo = None;
        self.episode = None;
        self.rescan_pending = None;
        let until = self.sync.reacquisition_until_s.unwrap_or(t);
        let slot = self.cfg.schedule.slot_at_or_after(until);
        self.queue.push(slot, SimEventKind::Reacquire);
    }

    // ---- discovery ----

    fn on_rescan_timer(&mut self, window: usize, t: f64) {
        if !self.sync.synced {
            self.log(
                t,
                "ms",
                self.ms_state,
                self.ms_state,
                "rescan skipped: not synchronized",
            );
            return;
        }
        let idle = self.job.is_none();
        match self.ms_state {
            ProtocolState::No | ProtocolState::Nbo if idle => self.start_discovery(window, t),
            _ => self.rescan_pending = Some(window),
        }
    }

    fn start_pending_rescan(&mut self, t: f64) {
        if self.job.is_some() || !matches!(self.ms_state, ProtocolState::No | ProtocolState::Nbo) {
            return;
        }
        if let Some(window) = self.rescan_pending.take() {
            self.start_discovery(window, t);
        }
    }

    fn start_discovery(&mut self, window: usize, t: f64) {
        let next = transition(
            self.ms_state,
            ProtocolEvent::RescanTimer,
            &self.cfg.protocol,
        )
        .expect("rescan legal in NO and NBO");
        let (los_bs, los_ms) = match &self.nbo {
            Some(n) => (n.probe_pair.bs, n.probe_pair.ms),
            None => (self.active.bs, self.active.ms),
        };
        if next != self.ms_state {
            self.log(t, "ms", self.ms_state, next, "rescan timer");
        } else {
            self.log(
                t,
                "ms",
                self.ms_state,
                next,
                "rescan timer: discovery during backup operation",
            );
        }
        self.ms_state = next;
        let pairs = (0..self.scene.ms_codebook.len())
            .map(|ms| BeamPair::new(los_bs, ms))
            .collect();
        self.job = Some(Job::Sweep(Sweep {
            phase: SweepPhase::Ms,
            window,
            los_bs,
            los_ms,
            candidate: false,
            pairs,
            results: Vec::new(),
        }));
    }

    fn count_sweep_slot(&mut self, window: usize, phase: SweepPhase) {
        let w = window as u64;
        if self.windows.last().is_none_or(|a| a.window != w) {
            self.windows.push(WindowAirtime {
                window: w,
                ms_slots: 0,
                bs_slots: 0,
            });
        }
        let a = self.windows.last_mut().expect("just pushed");
        match phase {
            SweepPhase::Ms => a.ms_slots += 1,
            SweepPhase::Bs => a.bs_slots += 1,
        }
    }

    fn sweep_done(&mut self, sweep: Sweep, t: f64) {
        let in_nbo = self.nbo.is_some();
        match sweep.phase {
            SweepPhase::Ms => {
                let beams = sweep
                    .pairs
                    .iter()
                    .map(|p| p.ms)
                    .zip(sweep.results)
                    .collect();
                let report = MeasurementReport::from_sweep(sweep.los_ms, beams);
                let candidate = ms_nbd(&report, &self.cfg.protocol.thresholds);
                let next = transition(
                    self.ms_state,
                    ProtocolEvent::SweepDone {
                        candidate: candidate.is_some(),
                    },
                    &self.cfg.protocol,
                )
                .expect("sweep completion legal");
                let listen = match candidate {
                    Some(ms) => {
                        self.log(t, "ms", self.ms_state, next, format!("MS NLoS beam {ms}"));
                        ms
                    }
                    None => {
                        // listen on the strongest beam outside the main lobe anyway
                        let any = Thresholds {
                            nlos_eligibility_db: f64::INFINITY,
                            ..self.cfg.protocol.thresholds
                        };
                        let ms = ms_nbd(&report, &any).unwrap_or(sweep.los_ms);
                        self.log(
                            t,
                            "ms",
                            self.ms_state,
                            next,
                            format!("no eligible NLoS beam; listening on {ms}"),
                        );
                        ms
                    }
                };
                self.ms_state = next;
                if !in_nbo {
                    self.log(
                        t,
                        "bs",
                        self.bs_state,
                        ProtocolState::BsNbd,
                        "BS beam sweep",
                    );
                    self.bs_state = ProtocolState::BsNbd;
                }
                let pairs = (0..self.scene.bs_codebook.len())
                    .map(|bs| BeamPair::new(bs, listen))
                    .collect();
                self.job = Some(Job::Sweep(Sweep {
                    phase: SweepPhase::Bs,
                    candidate: candidate.is_some(),
                    pairs,
                    results: Vec::new(),
                    ..sweep
                }));
            }
            SweepPhase::Bs => {
                let table: Vec<(usize, f64)> = sweep
                    .pairs
                    .iter()
                    .map(|p| p.bs)
                    .zip(sweep.results)
                    .collect();
                let next = transition(
                    self.ms_state,
                    ProtocolEvent::SweepDone {
                        candidate: sweep.candidate,
                    },
                    &self.cfg.protocol,
                )
                .expect("sweep completion legal");
                let backup = if sweep.candidate {
                    let (bs, rss) = bs_nbd(&table).expect("non-empty codebook");
                    let ms = sweep.pairs[0].ms;
                    let backup = BackupPair::new(BeamPair::new(bs, ms), rss, t);
                    self.store.record(sweep.los_bs, backup);
                    self.log(
                        t,
                        "store",
                        "",
                        "",
                        format!(
                            "LoS beam {} -> pair ({bs}, {ms}) at {rss:.2} dBm",
                            sweep.los_bs
                        ),
                    );
                    self.log(t, "ms", self.ms_state, next, "backup pair stored");
                    Some(backup)
                } else {
                    if !in_nbo && self.store.remove(sweep.los_bs).is_some() {
                        self.log(
                            t,
                            "store",
                            "",
                            "",
                            format!("entry for LoS beam {} dropped", sweep.los_bs),
                        );
                    }
                    self.log(t, "ms", self.ms_state, next, "no backup pair this window");
                    None
                };
                self.ms_state = next;
                if !in_nbo {
                    self.log(t, "bs", self.bs_state, ProtocolState::No, "report received");
                    self.bs_state = ProtocolState::No;
                } else if let Some(b) = backup {
                    self.maybe_switch_backup(b, t);
                }
            }
        }
    }

    /// A rescan during backup operation found a pair; move to it if it beats
    /// the one in use.
    fn maybe_switch_backup(&mut self, backup: BackupPair, t: f64) {
        let Some(nbo) = self.nbo.as_mut() else { return };
        if !nbo.bs_switched || backup.pair == self.active {
            nbo.backup = Some(backup);
            return;
        }
        let current = self
            .scene
            .pair_rss(self.active, &self.paths, &self.att, self.cached_facing);
        if backup.rss_dbm > current {
            nbo.backup = Some(backup);
            let from = self.active;
            self.active = backup.pair;
            self.log(
                t,
                "link",
                format!("({}, {})", from.bs, from.ms),
                format!("({}, {})", backup.pair.bs, backup.pair.ms),
                "better backup pair found during backup operation",
            );
        }
    }

    // ---- per-slot protocol ----

    fn run_slot(&mut self, slot: u64, t: f64) {
        let kind = self.cfg.schedule.slot_kind(slot);
        if self.job.as_ref().is_some_and(|j| j.uses(kind)) {
            self.job_slot(t);
            return;
        }
        match kind {
            SlotKind::DlRef => self.occasion(t),
            SlotKind::UlRef => self.control_slot(t),
            SlotKind::DlData => self.probe_slot(slot, t),
            SlotKind::UlData => {}
        }
    }

    fn job_slot(&mut self, t: f64) {
        let Some(job) = self.job.take() else { return };
        match job {
            Job::Sweep(mut sweep) => {
                let pair = sweep.pairs[sweep.results.len()];
                let rss = self.measure(pair);
                sweep.results.push(rss);
                self.count_sweep_slot(sweep.window, sweep.phase);
                if sweep.results.len() == sweep.pairs.len() {
                    self.sweep_done(sweep, t);
                } else {
                    self.job = Some(Job::Sweep(sweep));
                }
            }
            Job::Align(mut a) => {
                let pair = a.batch[a.results.len()];
                let rss = self.measure(pair);
                a.results.push(rss);
                if a.results.len() < a.batch.len() {
                    self.job = Some(Job::Align(a));
                    return;
                }
                match a.session.feed(&a.results) {
                    Some(outcome) => {
                        let from = self.active;
                        self.active = outcome.pair;
                        self.prev_occasion = Some(outcome.rss_dbm);
                        if outcome.restored {
                            self.episode = None;
                        }
                        let next = transition(
                            self.ms_state,
                            ProtocolEvent::AlignmentDone,
                            &self.cfg.protocol,
                        )
                        .expect("alignment completion legal in BA");
                        self.log(
                            t,
                            "ms",
                            self.ms_state,
                            next,
                            format!(
                                "aligned ({}, {}) -> ({}, {}) at {:.2} dBm after {} measurements{}",
                                from.bs,
                                from.ms,
                                outcome.pair.bs,
                                outcome.pair.ms,
                                outcome.rss_dbm,
                                outcome.measurements,
                                if outcome.restored {
                                    ""
                                } else {
                                    ", not restored"
                                }
                            ),
                        );
                        self.ms_state = next;
                    }
                    None => {
                        a.batch = a
                            .session
                            .pending()
                            .map(<[BeamPair]>::to_vec)
                            .unwrap_or_default();
                        a.results.clear();
                        self.job = Some(Job::Align(a));
                    }
                }
            }
        }
    }

    fn occasion(&mut self, t: f64) {
        let rss = self.rss(self.active);
        let (sync, outcome) = ref_decode(self.sync, t, rss, &self.cfg.link, &self.cfg.sync);
        self.sync = sync;
        if outcome == DecodeOutcome::SyncLost {
            self.lose_sync(t);
            return;
        }
        if !matches!(self.ms_state, ProtocolState::No | ProtocolState::Ba) {
            return;
        }
        let Some(prev) = self.prev_occasion.replace(rss) else {
            return;
        };
        let update = RssUpdate {
            previous_dbm: prev,
            current_dbm: rss,
            episode_reference_dbm: self.episode.map(|e| e.reference_dbm),
        };
        let next = transition(
            self.ms_state,
            ProtocolEvent::RssUpdate(update),
            &self.cfg.protocol,
        )
        .expect("RSS updates legal in NO and BA");
        match (self.ms_state, next) {
            (ProtocolState::No, ProtocolState::Ba) => self.start_alignment(prev, rss, t),
            (_, ProtocolState::Nbo) => self.enter_backup(prev, rss, t),
            (ProtocolState::No, ProtocolState::No) => {
                if let Some(ep) = self.episode {
                    let margin = self.cfg.protocol.thresholds.recovery_margin_db;
                    let interval = self.cfg.protocol.thresholds.rescan_interval_s;
                    if rss >= ep.reference_dbm - margin || t - ep.started_s >= interval - 1e-9 {
                        self.episode = None;
                    }
                }
            }
            _ => {}
        }
    }

    fn start_alignment(&mut self, prev: f64, rss: f64, t: f64) {
        self.ba_entries += 1;
        self.log(
            t,
            "ms",
            self.ms_state,
            ProtocolState::Ba,
            format!("RSS {prev:.2} -> {rss:.2} dBm"),
        );
        self.ms_state = ProtocolState::Ba;
        self.episode = Some(Episode {
            reference_dbm: prev,
            started_s: t,
            pair_before: self.active,
        });
        let margin = self.cfg.protocol.thresholds.recovery_margin_db;
        let session = NeighborFirstAligner::new(
            self.active,
            rss,
            prev,
            margin,
            self.scene.bs_codebook.len(),
            self.scene.ms_codebook.len(),
        );
        let batch = session
            .pending()
            .map(<[BeamPair]>::to_vec)
            .unwrap_or_default();
        self.job = Some(Job::Align(Align {
            session,
            batch,
            results: Vec::new(),
        }));
    }

    fn enter_backup(&mut self, prev: f64, rss: f64, t: f64) {
        self.nbo_entries += 1;
        self.job = None;
        let (pre, probe_pair) = match self.episode.take() {
            Some(ep) => (ep.reference_dbm, ep.pair_before),
            None => (prev, self.active),
        };
        let los_bs = self.active.bs;
        self.log(
            t,
            "ms",
            self.ms_state,
            ProtocolState::Nbo,
            format!("RSS {rss:.2} dBm, {:.2} dB below {pre:.2} dBm", pre - rss),
        );
        self.ms_state = ProtocolState::Nbo;
        let backup = enter_nbo(&self.store, los_bs);
        match backup {
            Some(bp) => {
                self.active.ms = bp.pair.ms;
                self.log(
                    t,
                    "ms",
                    "",
                    "",
                    format!(
                        "switched to MS beam {}; control message for BS beam {}",
                        bp.pair.ms, bp.pair.bs
                    ),
                );
            }
            None => {
                self.recovery_failures += 1;
                self.log(
                    t,
                    "ms",
                    "",
                    "",
                    format!("recovery failure: no backup for LoS beam {los_bs}"),
                );
            }
        }
        if let Some(r) = self.open_blockage() {
            r.nbo_entered = true;
            r.recovery_failure = backup.is_none();
            r.backup_pair = backup.map(|b| b.pair);
            r.backup_rss_dbm = backup.map(|b| b.rss_dbm);
        }
        self.nbo = Some(Nbo {
            probe_pair,
            pre_blockage_dbm: pre,
            backup,
            bs_switched: false,
            last_probe_frame: None,
        });
    }

    fn control_slot(&mut self, t: f64) {
        let Some(nbo) = self.nbo else { return };
        let Some(bp) = nbo.backup else { return };
        if nbo.bs_switched {
            return;
        }
        let rss = self.rss(bp.pair);
        if rss < self.cfg.link.decode_level_dbm() {
            self.control_retries += 1;
            return;
        }
        self.active = bp.pair;
        if let Some(n) = self.nbo.as_mut() {
            n.bs_switched = true;
        }
        self.log(
            t,
            "bs",
            self.bs_state,
            ProtocolState::Nbo,
            format!("switched to BS beam {}", bp.pair.bs),
        );
        self.bs_state = ProtocolState::Nbo;
        let latency = self.blockages.last_mut().and_then(|r| {
            if r.recovery_latency_s.is_none() && r.nbo_entered {
                r.recovery_latency_s = Some(t - r.start_s);
                r.recovery_latency_s
            } else {
                None
            }
        });
        if let Some(l) = latency {
            self.latencies.push(l);
        }
    }

    fn probe_slot(&mut self, slot: u64, t: f64) {
        let frame = self.cfg.schedule.frame_of(slot);
        let Some(nbo) = self.nbo else { return };
        if nbo.last_probe_frame == Some(frame) {
            return;
        }
        if let Some(n) = self.nbo.as_mut() {
            n.last_probe_frame = Some(frame);
        }
        let probe = self.measure(nbo.probe_pair);
        if nbo_monitor(probe, nbo.pre_blockage_dbm, &self.cfg.protocol.thresholds)
            == NboDecision::Stay
        {
            return;
        }
        let next = transition(
            self.ms_state,
            ProtocolEvent::LosRecovered,
            &self.cfg.protocol,
        )
        .expect("recovery legal in NBO");
        self.log(
            t,
            "ms",
            self.ms_state,
            next,
            format!("LoS probe {probe:.2} dBm"),
        );
        if self.bs_state != ProtocolState::No {
            self.log(t, "bs", self.bs_state, ProtocolState::No, "LoS restored");
        }
        self.ms_state = next;
        self.bs_state = ProtocolState::No;
        self.active = nbo.probe_pair;
        self.prev_occasion = Some(probe);
        self.nbo = None;
        self.job = None;
    }

    fn finish(self) -> RunOutput {
        let total = self.n_slots;
        let end = self.time(total);
        let mut reacq = self.reacquisition_time_s;
        if let Some(lost) = self.lost_at {
            reacq += end - lost;
        }
        let survived = self.blockages.iter().filter(|r| r.survived).count();
        let n_events = self.blockages.len();
        let ms_sweep_slots = self.windows.iter().map(|w| w.ms_slots).sum();
        let bs_sweep_slots = self.windows.iter().map(|w| w.bs_slots).sum::<u64>();
        let metrics = Metrics {
            duration_s: self.cfg.duration_s,
            total_slots: total,
            blockage_events: n_events,
            events_survived: survived,
            sync_preservation_rate: if n_events == 0 {
                1.0
            } else {
                survived as f64 / n_events as f64
            },
            outage_count: self.outage_count,
            total_reacquisition_time_s: reacq,
            ms_sweep_slots,
            bs_sweep_slots,
            discovery_airtime_fraction: if total == 0 {
                0.0
            } else {
                (ms_sweep_slots + bs_sweep_slots) as f64 / total as f64
            },
            measurement_count: self.measurement_count,
            ba_entries: self.ba_entries,
            nbo_entries: self.nbo_entries,
            recovery_failures: self.recovery_failures,
            control_retries: self.control_retries,
            recovery_latency: LatencyStats::from_samples(&self.latencies),
            sync_loss_threshold: self.cfg.sync.loss_threshold,
            reacquisition_delay_s: self.cfg.sync.reacquisition_delay_s,
        };
        RunOutput {
            trace: self.trace,
            events: self.events,
            metrics,
            blockages: self.blockages,
            windows: self.windows,
        }
    }
}
