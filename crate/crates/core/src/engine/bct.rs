//! Beam coherence time experiments: hold a beam pair fixed while the MS
//! moves and time how long its RSS stays within 3 dB of its running peak.

use serde::{Deserialize, Serialize};

use super::scene::Scene;
use crate::channel::{PathComponent, Vec2};
use crate::codebook::wrap_deg;
use crate::config::{ScenarioConfig, SurfaceConfig};
use crate::error::{Error, Result};
use crate::mobility::{measure_bct, MobilityModel, RssTrace};
use crate::protocol::BeamPair;

/// The reference BCT room: BS at the origin facing +x, MS `distance_m`
/// down the axis facing back, and a long drywall reflector 2 m to the side.
/// Walks head away from the reflector, perpendicular to the BS-MS line.
pub fn bct_scenario(distance_m: f64, mobility: MobilityModel) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        name: Some(format!("bct-{distance_m}m")),
        surfaces: vec![SurfaceConfig {
            start_m: Vec2::new(-50.0, 2.0),
            end_m: Vec2::new(50.0, 2.0),
            material: "drywall".to_string(),
            presence_probability: 1.0,
        }],
        mobility,
        ..Default::default()
    };
    cfg.ms.position_m = Vec2::new(distance_m, 0.0);
    cfg
}

/// Pair aligned to one path: each end on the beam closest to it.
pub fn pair_for_path(scene: &Scene, path: &PathComponent, ms_facing_deg: f64) -> BeamPair {
    let bs_local = path.aod_deg - scene.bs_pose.facing_deg;
    let ms_local = path.aoa_deg - ms_facing_deg;
    BeamPair::new(
        scene.bs_codebook.best_beam(bs_local),
        scene.ms_codebook.best_beam(ms_local),
    )
}

/// Turn both arrays so their middle beams point along the strongest
/// reflected path at the initial MS position.
pub fn aim_at_reflection(config: &ScenarioConfig) -> Result<ScenarioConfig> {
    let scene = Scene::build(config)?;
    let pose = scene.ms_pose_at(0.0);
    let paths = scene.paths_for(pose.position_m)?;
    let none = vec![0.0; paths.len()];
    let strongest = paths
        .iter()
        .filter(|p| !p.is_los())
        .map(|p| {
            let pair = pair_for_path(&scene, p, pose.facing_deg);
            (p, scene.pair_rss(pair, &paths, &none, pose.facing_deg))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p.clone())
        .ok_or_else(|| {
            Error::invalid("surfaces", "no reflected path at the initial MS position")
        })?;
    let mid_bs = scene.bs_codebook.boresight(scene.bs_codebook.len() / 2);
    let mid_ms = scene.ms_codebook.boresight(scene.ms_codebook.len() / 2);
    let mut out = config.clone();
    out.bs.facing_deg = wrap_deg(strongest.aod_deg - mid_bs);
    out.ms.facing_deg = wrap_deg(strongest.aoa_deg - mid_ms);
    Ok(out)
}

/// The pair aligned to the strongest reflected path at t = 0.
pub fn initial_nlos_pair(scene: &Scene) -> Result<BeamPair> {
    let pose = scene.ms_pose_at(0.0);
    let paths = scene.paths_for(pose.position_m)?;
    let none = vec![0.0; paths.len()];
    paths
        .iter()
        .filter(|p| !p.is_los())
        .map(|p| {
            let pair = pair_for_path(scene, p, pose.facing_deg);
            (pair, scene.pair_rss(pair, &paths, &none, pose.facing_deg))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(pair, _)| pair)
        .ok_or_else(|| Error::invalid("surfaces", "no reflected path at the initial MS position"))
}

/// RSS of a fixed pair sampled every `step_s` over `[0, duration_s]`, with
/// exact poses (no path caching) and no blockage.
pub fn bct_trace(scene: &Scene, pair: BeamPair, duration_s: f64, step_s: f64) -> Result<RssTrace> {
    if !(step_s > 0.0) || !(duration_s >= 0.0) {
        return Err(Error::invalid(
            "step_s",
            "step must be > 0 and duration >= 0",
        ));
    }
    let n = (duration_s / step_s).round() as usize;
    let mut trace = RssTrace::default();
    for k in 0..=n {
        let t = k as f64 * step_s;
        let pose = scene.ms_pose_at(t);
        let paths = scene.paths_for(pose.position_m)?;
        let none = vec![0.0; paths.len()];
        trace.push(t, scene.pair_rss(pair, &paths, &none, pose.facing_deg))?;
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BctReport {
    pub nlos_pair: BeamPair,
    /// `None` when the beam did not expire within the observation window.
    pub nlos_bct_s: Option<f64>,
    /// BS held on its NLoS beam; BCT of every MS beam.
    pub per_ms_beam: Vec<(usize, Option<f64>)>,
}

/// BCT with both arrays first aimed at the reflection, so every run starts
/// on boresight regardless of codebook quantization.
pub fn bct_report(config: &ScenarioConfig, duration_s: f64, step_s: f64) -> Result<BctReport> {
    let scene = Scene::build(&aim_at_reflection(config)?)?;
    let nlos_pair = initial_nlos_pair(&scene)?;
    let nlos_bct_s = measure_bct(&bct_trace(&scene, nlos_pair, duration_s, step_s)?)?;
    let per_ms_beam = (0..scene.ms_codebook.len())
        .map(|ms| {
            let trace = bct_trace(&scene, BeamPair::new(nlos_pair.bs, ms), duration_s, step_s)?;
            Ok((ms, measure_bct(&trace)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BctReport {
        nlos_pair,
        nlos_bct_s,
        per_ms_beam,
    })
}

/// BCT of the NLoS pair for the reference room (arrays aimed at the
/// reflection).
pub fn nlos_bct(
    distance_m: f64,
    mobility: MobilityModel,
    duration_s: f64,
    step_s: f64,
) -> Result<Option<f64>> {
    Ok(bct_report(&bct_scenario(distance_m, mobility), duration_s, step_s)?.nlos_bct_s)
}

/// Parse `rot:<rad/s>` or `walk:<m/s>`. Angular speeds accept multiples and
/// fractions of pi, e.g. `2pi/3`, `pi/9`, `1.5`.
pub fn parse_mobility(spec: &str) -> Result<MobilityModel> {
    let bad = |why: &str| Error::invalid("mobility", format!("`{spec}`: {why}"));
    let (kind, value) = spec
        .split_once(':')
        .ok_or_else(|| bad("expected rot:<speed> or walk:<speed>"))?;
    match kind {
        "rot" | "rotation" => Ok(MobilityModel::Rotational {
            angular_speed_rad_s: parse_angular_speed(value)
                .ok_or_else(|| bad("bad angular speed"))?,
        }),
        "walk" => {
            let speed: f64 = value.trim().parse().map_err(|_| bad("bad walking speed"))?;
            Ok(MobilityModel::Translational {
                speed_mps: speed,
                heading_deg: -90.0,
                waypoints_m: Vec::new(),
            })
        }
        _ => Err(bad("unknown mobility kind")),
    }
}

fn parse_angular_speed(s: &str) -> Option<f64> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let value = match num.strip_suffix("pi") {
        Some("") => std::f64::consts::PI,
        Some(k) => k.trim().trim_end_matches('*').parse::<f64>().ok()? * std::f64::consts::PI,
        None => num.parse::<f64>().ok()?,
    };
    (den != 0.0)
        .then_some(value / den)
        .filter(|v| v.is_finite() && *v >= 0.0)
}
