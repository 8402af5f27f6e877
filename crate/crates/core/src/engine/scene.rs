use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{self, compute_paths, Arrays, PathComponent, PathKind, Surface, Vec2};
use crate::codebook::Codebook;
use crate::config::{BlockageConfig, ScenarioConfig};
use crate::error::Result;
use crate::mobility::{blockage_attenuation_db, pose_at, BlockageEvent, DiscBlocker, Pose};
use crate::protocol::BeamPair;

/// Independent random streams derived from one master seed, so enabling
/// one stochastic feature does not perturb the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Geometry = 1,
    Blockage = 2,
    Shadowing = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockageDriver {
    None,
    Events(Vec<BlockageEvent>),
    Discs(Vec<DiscBlocker>),
}

/// Everything about a replication that is fixed before the first slot:
/// the drawn geometry, codebooks, and the blockage schedule.
#[derive(Debug, Clone)]
pub struct Scene {
    pub config: ScenarioConfig,
    pub surfaces: Vec<Surface>,
    /// Index into `config.surfaces` of each entry of `surfaces`.
    pub surface_ids: Vec<usize>,
    pub bs_codebook: Codebook,
    pub ms_codebook: Codebook,
    pub bs_pose: Pose,
    pub ms_initial: Pose,
    pub driver: BlockageDriver,
}

impl Scene {
    /// Validate the scenario and draw its per-replication randomness from
    /// `config.seed`.
    pub fn build(config: &ScenarioConfig) -> Result<Scene> {
        config.validate()?;
        let mut geo = stream_rng(config.seed, Stream::Geometry);
        let all = config.all_surfaces()?;
        let mut surfaces = Vec::new();
        let mut surface_ids = Vec::new();
        for (i, (surface, spec)) in all.into_iter().zip(&config.surfaces).enumerate() {
            // always draw, so presence of one surface never shifts the others
            let u: f64 = geo.random();
            if u < spec.presence_probability {
                surfaces.push(surface);
                surface_ids.push(i);
            }
        }
        let mut ms_initial = config.ms.pose();
        let j = config.ms.position_jitter_m;
        if j > 0.0 {
            let dx = geo.random_range(-j..=j);
            let dy = geo.random_range(-j..=j);
            ms_initial.position_m = ms_initial.position_m + Vec2::new(dx, dy);
        }
        let driver = match &config.blockage {
            BlockageConfig::None => BlockageDriver::None,
            BlockageConfig::Scheduled { events } => BlockageDriver::Events(events.clone()),
            BlockageConfig::Poisson { process } => {
                let mut rng = stream_rng(config.seed, Stream::Blockage);
                BlockageDriver::Events(process.sample(config.duration_s, &mut rng))
            }
            BlockageConfig::Geometric { blockers } => BlockageDriver::Discs(blockers.clone()),
        };
        Ok(Scene {
            bs_codebook: config.bs.codebook.build()?,
            ms_codebook: config.ms.codebook.build()?,
            bs_pose: Pose::new(config.bs.position_m, config.bs.facing_deg),
            ms_initial,
            surfaces,
            surface_ids,
            driver,
            config: config.clone(),
        })
    }

    pub fn ms_pose_at(&self, t: f64) -> Pose {
        pose_at(&self.config.mobility, self.ms_initial, t)
    }

    /// Paths to an MS at `ms_pos`; reflected paths carry the scenario's
    /// surface index.
    pub fn paths_for(&self, ms_pos: Vec2) -> Result<Vec<PathComponent>> {
        let mut paths = compute_paths(&self.surfaces, self.bs_pose.position_m, ms_pos)?;
        for p in &mut paths {
            if let PathKind::Reflected { surface } = p.kind {
                p.kind = PathKind::Reflected {
                    surface: self.surface_ids[surface],
                };
            }
        }
        Ok(paths)
    }

    /// Blockage attenuation of `path` at `t` from the configured driver.
    pub fn blockage_db(&self, path: &PathComponent, t: f64) -> f64 {
        match &self.driver {
            BlockageDriver::None => 0.0,
            BlockageDriver::Events(events) => blockage_attenuation_db(events, path, t),
            BlockageDriver::Discs(discs) => discs.iter().map(|d| d.attenuation_db(path, t)).sum(),
        }
    }

    pub fn events(&self) -> &[BlockageEvent] {
        match &self.driver {
            BlockageDriver::Events(e) => e,
            _ => &[],
        }
    }

    /// True when a reflected path exists at the initial MS position.
    pub fn nlos_available(&self) -> bool {
        self.paths_for(self.ms_initial.position_m)
            .map(|p| p.iter().any(|c| !c.is_los()))
            .unwrap_or(false)
    }

    pub fn arrays(&self, ms_facing_deg: f64) -> Arrays<'_> {
        Arrays {
            bs: &self.bs_codebook,
            bs_facing_deg: self.bs_pose.facing_deg,
            ms: &self.ms_codebook,
            ms_facing_deg,
        }
    }

    pub fn pair_rss(
        &self,
        pair: BeamPair,
        paths: &[PathComponent],
        att: &[f64],
        ms_facing_deg: f64,
    ) -> f64 {
        channel::rss_dbm(
            pair.bs,
            pair.ms,
            paths,
            att,
            &self.config.link,
            &self.arrays(ms_facing_deg),
        )
    }

    /// Exhaustive search over every beam pair; lowest (bs, ms) wins ties.
    pub fn best_pair(
        &self,
        paths: &[PathComponent],
        att: &[f64],
        ms_facing_deg: f64,
    ) -> (BeamPair, f64) {
        let mut best = (BeamPair::new(0, 0), f64::NEG_INFINITY);
        for bs in 0..self.bs_codebook.len() {
            for ms in 0..self.ms_codebook.len() {
                let pair = BeamPair::new(bs, ms);
                let rss = self.pair_rss(pair, paths, att, ms_facing_deg);
                if rss > best.1 {
                    best = (pair, rss);
                }
            }
        }
        best
    }

    /// RSS of every (bs, ms) pair at time `t` with blockage applied and no
    /// shadowing; rows are BS beams.
    pub fn rss_matrix(&self, t: f64) -> Result<Vec<Vec<f64>>> {
        let pose = self.ms_pose_at(t);
        let paths = self.paths_for(pose.position_m)?;
        let att: Vec<f64> = paths.iter().map(|p| self.blockage_db(p, t)).collect();
        Ok((0..self.bs_codebook.len())
            .map(|bs| {
                (0..self.ms_codebook.len())
                    .map(|ms| self.pair_rss(BeamPair::new(bs, ms), &paths, &att, pose.facing_deg))
                    .collect()
            })
            .collect())
    }
}
