//! MS motion, transient blockage waveforms, and beam coherence time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Uniform};
use serde::{Deserialize, Serialize};

use crate::channel::{PathComponent, PathKind, Vec2};
use crate::codebook::wrap_deg;
use crate::error::{Error, Result};

/// Position and array facing (global azimuth, degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub position_m: Vec2,
    pub facing_deg: f64,
}

impl Pose {
    pub fn new(position_m: Vec2, facing_deg: f64) -> Self {
        Pose {
            position_m,
            facing_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MobilityModel {
    #[default]
    Static,
    /// Walk at constant speed. With no waypoints the walk follows
    /// `heading_deg` forever; otherwise it visits the waypoints in order and
    /// stops at the last one. Facing is held constant.
    Translational {
        speed_mps: f64,
        #[serde(default)]
        heading_deg: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        waypoints_m: Vec<Vec2>,
    },
    /// Array spinning in place; positive speed is counter-clockwise.
    Rotational { angular_speed_rad_s: f64 },
}

impl MobilityModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            MobilityModel::Static => Ok(()),
            MobilityModel::Translational { speed_mps, .. } => {
                if !(*speed_mps >= 0.0) {
                    return Err(Error::invalid("speed_mps", "must be >= 0"));
                }
                Ok(())
            }
            MobilityModel::Rotational {
                angular_speed_rad_s,
            } => {
                if !(*angular_speed_rad_s >= 0.0) {
                    return Err(Error::invalid("angular_speed_rad_s", "must be >= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn is_static(&self) -> bool {
        match self {
            MobilityModel::Static => true,
            MobilityModel::Translational { speed_mps, .. } => *speed_mps == 0.0,
            MobilityModel::Rotational {
                angular_speed_rad_s,
            } => *angular_speed_rad_s == 0.0,
        }
    }
}

pub fn pose_at(model: &MobilityModel, initial: Pose, t: f64) -> Pose {
    let t = t.max(0.0);
    match model {
        MobilityModel::Static => initial,
        MobilityModel::Rotational {
            angular_speed_rad_s,
        } => Pose {
            position_m: initial.position_m,
            facing_deg: wrap_deg(initial.facing_deg + (angular_speed_rad_s * t).to_degrees()),
        },
        MobilityModel::Translational {
            speed_mps,
            heading_deg,
            waypoints_m,
        } => {
            let mut remaining = speed_mps * t;
            if waypoints_m.is_empty() {
                let dir = Vec2::from_azimuth_deg(*heading_deg);
                return Pose {
                    position_m: initial.position_m + dir * remaining,
                    facing_deg: initial.facing_deg,
                };
            }
            let mut from = initial.position_m;
            for &to in waypoints_m {
                let leg = from.distance(to);
                if remaining <= leg {
                    let pos = if leg == 0.0 {
                        to
                    } else {
                        from + (to - from) * (remaining / leg)
                    };
                    return Pose {
                        position_m: pos,
                        facing_deg: initial.facing_deg,
                    };
                }
                remaining -= leg;
                from = to;
            }
            Pose {
                position_m: from,
                facing_deg: initial.facing_deg,
            }
        }
    }
}

/// Which propagation paths a blockage event attenuates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockageTarget {
    #[default]
    Los,
    AllPaths,
    /// Only the reflection off the given surface index.
    Reflection(usize),
}

impl BlockageTarget {
    pub fn matches(&self, path: &PathComponent) -> bool {
        match self {
            BlockageTarget::Los => path.is_los(),
            BlockageTarget::AllPaths => true,
            BlockageTarget::Reflection(i) => path.kind == PathKind::Reflected { surface: *i },
        }
    }
}

/// A trapezoid-in-dB attenuation pulse: ramp up, hold, ramp down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockageEvent {
    pub start_s: f64,
    #[serde(default = "BlockageEvent::default_ramp")]
    pub ramp_s: f64,
    #[serde(default = "BlockageEvent::default_hold")]
    pub hold_s: f64,
    #[serde(default = "BlockageEvent::default_depth")]
    pub depth_db: f64,
    #[serde(default)]
    pub target: BlockageTarget,
}

impl BlockageEvent {
    /// Human blocker onset time.
    pub const DEFAULT_RAMP_S: f64 = 0.035;

    fn default_ramp() -> f64 {
        Self::DEFAULT_RAMP_S
    }
    fn default_hold() -> f64 {
        0.100
    }
    fn default_depth() -> f64 {
        14.0
    }

    pub fn new(start_s: f64, depth_db: f64, hold_s: f64) -> Self {
        BlockageEvent {
            start_s,
            ramp_s: Self::DEFAULT_RAMP_S,
            hold_s,
            depth_db,
            target: BlockageTarget::Los,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ramp_s > 0.0) {
            return Err(Error::invalid("ramp_s", "must be > 0"));
        }
        if !(self.hold_s >= 0.0) {
            return Err(Error::invalid("hold_s", "must be >= 0"));
        }
        if !(self.depth_db > 0.0) {
            return Err(Error::invalid("depth_db", "must be > 0"));
        }
        if !(self.start_s >= 0.0) {
            return Err(Error::invalid("start_s", "must be >= 0"));
        }
        Ok(())
    }

    pub fn end_s(&self) -> f64 {
        self.start_s + 2.0 * self.ramp_s + self.hold_s
    }

    /// Attenuation of this event at `t`, regardless of target.
    pub fn waveform_db(&self, t: f64) -> f64 {
        let dt = t - self.start_s;
        if dt <= 0.0 {
            return 0.0;
        }
        let up = self.ramp_s;
        let flat = up + self.hold_s;
        let down = flat + self.ramp_s;
        let frac = if dt < up {
            dt / self.ramp_s
        } else if dt <= flat {
            1.0
        } else if dt < down {
            (down - dt) / self.ramp_s
        } else {
            0.0
        };
        self.depth_db * frac
    }
}

/// Sum, in dB, of every event matching `path` at time `t`.
pub fn blockage_attenuation_db(events: &[BlockageEvent], path: &PathComponent, t: f64) -> f64 {
    events
        .iter()
        .filter(|e| e.target.matches(path))
        .map(|e| e.waveform_db(t))
        .sum()
}

/// A disc-shaped blocker moving in a straight line. Paths passing within
/// `radius_m` of the centre are attenuated, ramping linearly across an
/// `edge_m` wide rim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscBlocker {
    pub start_m: Vec2,
    pub velocity_mps: Vec2,
    pub radius_m: f64,
    #[serde(default = "DiscBlocker::default_depth")]
    pub depth_db: f64,
    #[serde(default = "DiscBlocker::default_edge")]
    pub edge_m: f64,
}

impl DiscBlocker {
    fn default_depth() -> f64 {
        17.0
    }
    fn default_edge() -> f64 {
        0.05
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0) {
            return Err(Error::invalid("radius_m", "must be > 0"));
        }
        if !(self.depth_db > 0.0) {
            return Err(Error::invalid("depth_db", "must be > 0"));
        }
        if !(self.edge_m > 0.0 && self.edge_m <= self.radius_m) {
            return Err(Error::invalid("edge_m", "must be in (0, radius_m]"));
        }
        Ok(())
    }

    pub fn centre_at(&self, t: f64) -> Vec2 {
        self.start_m + self.velocity_mps * t
    }

    pub fn attenuation_db(&self, path: &PathComponent, t: f64) -> f64 {
        let d = path.distance_to(self.centre_at(t));
        let inner = self.radius_m - self.edge_m;
        if d >= self.radius_m {
            0.0
        } else if d <= inner {
            self.depth_db
        } else {
            self.depth_db * (self.radius_m - d) / self.edge_m
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssSample {
    pub time_s: f64,
    pub rss_dbm: f64,
}

/// Time-ordered RSS observations of one beam pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RssTrace {
    samples: Vec<RssSample>,
}

impl RssTrace {
    pub fn new(samples: Vec<RssSample>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].time_s > w[0].time_s)) {
            return Err(Error::invalid(
                "trace",
                "sample times must be strictly increasing",
            ));
        }
        Ok(RssTrace { samples })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(time_s, rss_dbm)| RssSample { time_s, rss_dbm })
                .collect(),
        )
    }

    /// Append a sample; it must be later than every existing sample.
    pub fn push(&mut self, time_s: f64, rss_dbm: f64) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(time_s > last.time_s) {
                return Err(Error::invalid(
                    "trace",
                    "sample times must be strictly increasing",
                ));
            }
        }
        self.samples.push(RssSample { time_s, rss_dbm });
        Ok(())
    }

    pub fn samples(&self) -> &[RssSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Beam coherence time: time from the trace start until the RSS first sits
/// 3 dB below its running maximum. `Ok(None)` means the beam never expired.
pub fn measure_bct(trace: &RssTrace) -> Result<Option<f64>> {
    const COHERENCE_DROP_DB: f64 = 3.0;
    let first = trace.samples.first().ok_or(Error::EmptyTrace)?;
    let mut running_max = f64::NEG_INFINITY;
    for s in &trace.samples {
        running_max = running_max.max(s.rss_dbm);
        if s.rss_dbm <= running_max - COHERENCE_DROP_DB {
            return Ok(Some(s.time_s - first.time_s));
        }
    }
    Ok(None)
}

/// Parameters of the Poisson blocker process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockageProcess {
    pub rate_per_s: f64,
    pub depth_min_db: f64,
    pub depth_max_db: f64,
    pub hold_min_s: f64,
    pub hold_max_s: f64,
    pub ramp_s: f64,
    pub target: BlockageTarget,
}

impl Default for BlockageProcess {
    fn default() -> Self {
        BlockageProcess {
            rate_per_s: 1.0,
            depth_min_db: 14.0,
            depth_max_db: 20.0,
            hold_min_s: 0.050,
            hold_max_s: 0.200,
            ramp_s: BlockageEvent::DEFAULT_RAMP_S,
            target: BlockageTarget::Los,
        }
    }
}

impl BlockageProcess {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_per_s >= 0.0 && self.rate_per_s.is_finite()) {
            return Err(Error::invalid("rate_per_s", "must be a finite value >= 0"));
        }
        if !(self.depth_min_db > 0.0 && self.depth_max_db >= self.depth_min_db) {
            return Err(Error::invalid(
                "depth_min_db",
                "need 0 < depth_min_db <= depth_max_db",
            ));
        }
        if !(self.hold_min_s >= 0.0 && self.hold_max_s >= self.hold_min_s) {
            return Err(Error::invalid(
                "hold_min_s",
                "need 0 <= hold_min_s <= hold_max_s",
            ));
        }
        if !(self.ramp_s > 0.0) {
            return Err(Error::invalid("ramp_s", "must be > 0"));
        }
        Ok(())
    }

    /// Draw events with Poisson arrivals over `[0, duration_s)`.
    pub fn sample(&self, duration_s: f64, rng: &mut impl Rng) -> Vec<BlockageEvent> {
        let mut events = Vec::new();
        if self.rate_per_s <= 0.0 || duration_s <= 0.0 {
            return events;
        }
        let gaps = Exp::new(self.rate_per_s).expect("positive rate");
        let depth = uniform(self.depth_min_db, self.depth_max_db);
        let hold = uniform(self.hold_min_s, self.hold_max_s);
        let mut t = 0.0;
        loop {
            t += gaps.sample(rng);
            if t >= duration_s {
                break;
            }
            events.push(BlockageEvent {
                start_s: t,
                ramp_s: self.ramp_s,
                hold_s: hold.sample(rng),
                depth_db: depth.sample(rng),
                target: self.target,
            });
        }
        events
    }
}

fn uniform(lo: f64, hi: f64) -> UniformOrConst {
    if hi > lo {
        UniformOrConst::Uniform(Uniform::new(lo, hi).expect("valid range"))
    } else {
        UniformOrConst::Const(lo)
    }
}

enum UniformOrConst {
    Uniform(Uniform<f64>),
    Const(f64),
}

impl Distribution<f64> for UniformOrConst {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            UniformOrConst::Uniform(u) => u.sample(rng),
            UniformOrConst::Const(c) => *c,
        }
    }
}

/// Poisson blockage arrivals with the default human-blocker depth and hold
/// distributions. Deterministic for a given seed.
pub fn sample_blockage_process(rate_per_s: f64, duration_s: f64, seed: u64) -> Vec<BlockageEvent> {
    let process = BlockageProcess {
        rate_per_s,
        ..Default::default()
    };
    process.sample(duration_s, &mut ChaCha8Rng::seed_from_u64(seed))
}
