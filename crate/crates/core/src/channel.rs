//! Floor-plan propagation: line-of-sight and first-order specular paths
//! between the two endpoints, free-space loss, noise, and beam-pair RSS.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Thermal noise density at room temperature, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2 { x: v[0], y: v[1] }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Azimuth of this vector in degrees, counter-clockwise from +x.
    pub fn azimuth_deg(self) -> f64 {
        self.y.atan2(self.x).to_degrees()
    }

    pub fn from_azimuth_deg(deg: f64) -> Vec2 {
        let r = deg.to_radians();
        Vec2::new(r.cos(), r.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// True when the open segments `p1`-`p2` and `q1`-`q2` cross at a single
/// interior point. Touching at an endpoint does not count.
fn segments_cross(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let r = p2 - p1;
    let s = q2 - q1;
    let denom = r.cross(s);
    if denom.abs() < GEOM_EPS {
        return false;
    }
    let t = (q1 - p1).cross(s) / denom;
    let u = (q1 - p1).cross(r) / denom;
    t > GEOM_EPS && t < 1.0 - GEOM_EPS && u > GEOM_EPS && u < 1.0 - GEOM_EPS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpaqueMarker {
    #[serde(rename = "opaque")]
    Opaque,
}

/// Transmission through a material: a finite loss, or fully absorbed
/// (listed as "NF", below the noise floor, in measurement tables).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Penetration {
    LossDb(f64),
    Opaque(OpaqueMarker),
}

impl Penetration {
    pub const OPAQUE: Penetration = Penetration::Opaque(OpaqueMarker::Opaque);

    pub fn is_opaque(&self) -> bool {
        matches!(self, Penetration::Opaque(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub name: String,
    pub reflection_loss_db: f64,
    /// Upper end of the reflection loss when it is measured as a range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection_loss_max_db: Option<f64>,
    pub penetration_loss_db: Penetration,
}

impl Material {
    pub fn new(name: &str, reflection_loss_db: f64, penetration: Penetration) -> Self {
        Material {
            name: name.to_string(),
            reflection_loss_db,
            reflection_loss_max_db: None,
            penetration_loss_db: penetration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reflection_loss_db >= 0.0) {
            return Err(Error::invalid("reflection_loss_db", "must be >= 0"));
        }
        if let Some(max) = self.reflection_loss_max_db {
            if !(max >= self.reflection_loss_db) {
                return Err(Error::invalid(
                    "reflection_loss_max_db",
                    "must be >= reflection_loss_db",
                ));
            }
        }
        if let Penetration::LossDb(l) = self.penetration_loss_db {
            if !(l >= 0.0) {
                return Err(Error::invalid(
                    "penetration_loss_db",
                    "must be >= 0 or \"opaque\"",
                ));
            }
        }
        Ok(())
    }

    /// Reflection loss used for path budgets; the midpoint when a range is
    /// given.
    pub fn effective_reflection_loss_db(&self) -> f64 {
        match self.reflection_loss_max_db {
            Some(max) => 0.5 * (self.reflection_loss_db + max),
            None => self.reflection_loss_db,
        }
    }

    /// Measured indoor building materials at 60 GHz.
    pub fn builtin() -> Vec<Material> {
        let mut human = Material::new("human_body", 14.0, Penetration::OPAQUE);
        human.reflection_loss_max_db = Some(20.0);
        vec![
            Material::new("drywall", 10.0, Penetration::LossDb(8.0)),
            Material::new("double_drywall", 10.0, Penetration::LossDb(16.0)),
            Material::new("wooden_door", 11.0, Penetration::OPAQUE),
            Material::new("concrete", 13.0, Penetration::OPAQUE),
            human,
        ]
    }

    pub fn builtin_named(name: &str) -> Option<Material> {
        Self::builtin().into_iter().find(|m| m.name == name)
    }
}

/// A straight reflecting (and possibly transmitting) wall segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub start: Vec2,
    pub end: Vec2,
    pub material: Material,
}

impl Surface {
    pub fn new(start: Vec2, end: Vec2, material: Material) -> Result<Self> {
        if start.distance(end) < GEOM_EPS {
            return Err(Error::invalid("surface", "endpoints must be distinct"));
        }
        Ok(Surface {
            start,
            end,
            material,
        })
    }

    /// Mirror image of `p` across the infinite line through the surface.
    pub fn mirror(&self, p: Vec2) -> Vec2 {
        let d = self.end - self.start;
        let t = (p - self.start).dot(d) / d.dot(d);
        let foot = self.start + d * t;
        foot * 2.0 - p
    }

    fn side(&self, p: Vec2) -> f64 {
        (self.end - self.start).cross(p - self.start)
    }

    fn crossed_by(&self, a: Vec2, b: Vec2) -> bool {
        segments_cross(a, b, self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    LoS,
    Reflected { surface: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    pub kind: PathKind,
    /// Global departure azimuth at the BS.
    pub aod_deg: f64,
    /// Global azimuth at the MS pointing back along the arriving ray.
    pub aoa_deg: f64,
    pub length_m: f64,
    pub extra_loss_db: f64,
    /// Polyline from BS to MS (two points for LoS, three for a reflection).
    pub vertices: Vec<Vec2>,
}

impl PathComponent {
    pub fn is_los(&self) -> bool {
        self.kind == PathKind::LoS
    }

    /// Minimum distance from `p` to any segment of the path.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Penetration loss accumulated along `segment`, skipping the surface the
/// path reflects from. `None` if an opaque surface is crossed.
fn transmission_loss(surfaces: &[Surface], a: Vec2, b: Vec2, skip: Option<usize>) -> Option<f64> {
    let mut loss = 0.0;
    for (i, s) in surfaces.iter().enumerate() {
        if Some(i) == skip || !s.crossed_by(a, b) {
            continue;
        }
        match s.material.penetration_loss_db {
            Penetration::LossDb(l) => loss += l,
            Penetration::Opaque(_) => return None,
        }
    }
    Some(loss)
}

/// LoS plus one first-order specular reflection per surface whose mirror
/// construction lands on the segment. Paths through opaque walls are
/// dropped; finite penetration losses are added to `extra_loss_db`.
pub fn compute_paths(surfaces: &[Surface], bs: Vec2, ms: Vec2) -> Result<Vec<PathComponent>> {
    if bs.distance(ms) < GEOM_EPS {
        return Err(Error::invalid(
            "ms.position_m",
            "BS and MS must not coincide",
        ));
    }
    let mut paths = Vec::with_capacity(surfaces.len() + 1);
    if let Some(loss) = transmission_loss(surfaces, bs, ms, None) {
        paths.push(PathComponent {
            kind: PathKind::LoS,
            aod_deg: (ms - bs).azimuth_deg(),
            aoa_deg: (bs - ms).azimuth_deg(),
            length_m: bs.distance(ms),
            extra_loss_db: loss,
            vertices: vec![bs, ms],
        });
    }
    for (i, s) in surfaces.iter().enumerate() {
        let (sb, sm) = (s.side(bs), s.side(ms));
        // both endpoints strictly on the same side of the reflector line
        if sb * sm <= 0.0 || sb.abs() < GEOM_EPS || sm.abs() < GEOM_EPS {
            continue;
        }
        let image = s.mirror(bs);
        let d = s.end - s.start;
        let r = ms - image;
        let denom = r.cross(d);
        if denom.abs() < GEOM_EPS {
            continue;
        }
        let u = (s.start - image).cross(r) / denom;
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let point = s.start + d * u;
        let Some(leg1) = transmission_loss(surfaces, bs, point, Some(i)) else {
            continue;
        };
        let Some(leg2) = transmission_loss(surfaces, point, ms, Some(i)) else {
            continue;
        };
        paths.push(PathComponent {
            kind: PathKind::Reflected { surface: i },
            aod_deg: (point - bs).azimuth_deg(),
            aoa_deg: (point - ms).azimuth_deg(),
            length_m: image.distance(ms),
            extra_loss_db: s.material.effective_reflection_loss_db() + leg1 + leg2,
            vertices: vec![bs, point, ms],
        });
    }
    Ok(paths)
}

/// Free-space path loss `20 log10(4 pi d / lambda)`.
pub fn fspl_db(distance_m: f64, carrier_ghz: f64) -> f64 {
    let wavelength = SPEED_OF_LIGHT / (carrier_ghz * 1e9);
    20.0 * (4.0 * std::f64::consts::PI * distance_m / wavelength).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetParams {
    pub tx_power_dbm: f64,
    pub carrier_ghz: f64,
    pub bandwidth_ghz: f64,
    pub noise_figure_db: f64,
    /// Margin above the noise floor required to decode a reference signal.
    pub decode_threshold_db: f64,
    /// Per-path log-normal shadowing jitter.
    pub shadowing_sigma_db: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            tx_power_dbm: -6.0,
            carrier_ghz: 60.0,
            bandwidth_ghz: 2.0,
            noise_figure_db: 8.0,
            decode_threshold_db: 0.0,
            shadowing_sigma_db: 0.0,
        }
    }
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_ghz > 0.0) {
            return Err(Error::invalid("carrier_ghz", "must be > 0"));
        }
        if !(self.bandwidth_ghz > 0.0) {
            return Err(Error::invalid("bandwidth_ghz", "must be > 0"));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::invalid("shadowing_sigma_db", "must be >= 0"));
        }
        if !self.tx_power_dbm.is_finite() || !self.noise_figure_db.is_finite() {
            return Err(Error::invalid("tx_power_dbm", "must be finite"));
        }
        if !self.decode_threshold_db.is_finite() {
            return Err(Error::invalid("decode_threshold_db", "must be finite"));
        }
        Ok(())
    }

    /// RSS at or above which a reference signal decodes.
    pub fn decode_level_dbm(&self) -> f64 {
        noise_floor_dbm(self) + self.decode_threshold_db
    }
}

pub fn noise_floor_dbm(params: &LinkBudgetParams) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * (params.bandwidth_ghz * 1e9).log10() + params.noise_figure_db
}

pub fn snr_db(rss_dbm: f64, params: &LinkBudgetParams) -> f64 {
    rss_dbm - noise_floor_dbm(params)
}

/// Codebooks and facings of both arrays at one instant.
#[derive(Debug, Clone, Copy)]
pub struct Arrays<'a> {
    pub bs: &'a Codebook,
    pub bs_facing_deg: f64,
    pub ms: &'a Codebook,
    pub ms_facing_deg: f64,
}

/// Received power of a single path for the given beam pair, before any
/// per-path attenuation.
pub fn path_power_dbm(
    tx_beam: usize,
    rx_beam: usize,
    path: &PathComponent,
    params: &LinkBudgetParams,
    arrays: &Arrays<'_>,
) -> f64 {
    params.tx_power_dbm
        + arrays
            .bs
            .gain_toward(tx_beam, arrays.bs_facing_deg, path.aod_deg)
        + arrays
            .ms
            .gain_toward(rx_beam, arrays.ms_facing_deg, path.aoa_deg)
        - fspl_db(path.length_m, params.carrier_ghz)
        - path.extra_loss_db
}

/// Incoherent sum of all path powers for one beam pair. `attenuation_db`
/// is indexed like `paths`; missing entries count as zero. Returns
/// negative infinity when there are no paths.
pub fn rss_dbm(
    tx_beam: usize,
    rx_beam: usize,
    paths: &[PathComponent],
    attenuation_db: &[f64],
    params: &LinkBudgetParams,
    arrays: &Arrays<'_>,
) -> f64 {
    let total_mw: f64 = paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let att = attenuation_db.get(i).copied().unwrap_or(0.0);
            let dbm = path_power_dbm(tx_beam, rx_beam, p, params, arrays) - att;
            10f64.powf(dbm / 10.0)
        })
        .sum();
    10.0 * total_mw.log10()
}

/// Presentation form of an RSS value: numeric when detectable, "NF" below
/// the noise floor.
pub fn format_rss(rss_dbm: f64, params: &LinkBudgetParams) -> String {
    if rss_dbm < noise_floor_dbm(params) {
        "NF".to_string()
    } else {
        format!("{rss_dbm:.3}")
    }
}
