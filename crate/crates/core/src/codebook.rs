//! Discrete azimuth codebooks and the parametric beam gain model shared by
//! both link endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attenuation, in dB, at one full 3 dB beamwidth off boresight. The main
/// lobe is `peak - 12 (offset / bw)^2`, which puts the half-power point at
/// `bw / 2`.
const MAIN_LOBE_SHAPE_DB: f64 = 12.0;

/// Wrap an angle in degrees to `(-180, 180]`.
pub fn wrap_deg(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Absolute angular distance between two azimuths, in `[0, 180]`.
pub fn angular_distance_deg(a: f64, b: f64) -> f64 {
    wrap_deg(a - b).abs()
}

/// Gain-versus-angle model for a single steerable beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamPattern {
    pub peak_gain_dbi: f64,
    pub beamwidth_3db_deg: f64,
    pub sidelobe_floor_dbi: f64,
}

impl Default for BeamPattern {
    fn default() -> Self {
        Self {
            peak_gain_dbi: 15.0,
            beamwidth_3db_deg: 20.0,
            sidelobe_floor_dbi: -10.0,
        }
    }
}

impl BeamPattern {
    pub fn new(
        peak_gain_dbi: f64,
        beamwidth_3db_deg: f64,
        sidelobe_floor_dbi: f64,
    ) -> Result<Self> {
        let pattern = Self {
            peak_gain_dbi,
            beamwidth_3db_deg,
            sidelobe_floor_dbi,
        };
        pattern.validate()?;
        Ok(pattern)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beamwidth_3db_deg > 0.0 && self.beamwidth_3db_deg <= 180.0) {
            return Err(Error::invalid(
                "beamwidth_3db_deg",
                format!("must be in (0, 180], got {}", self.beamwidth_3db_deg),
            ));
        }
        if !(self.sidelobe_floor_dbi < self.peak_gain_dbi) {
            return Err(Error::invalid(
                "sidelobe_floor_dbi",
                format!(
                    "must be below peak_gain_dbi ({}), got {}",
                    self.peak_gain_dbi, self.sidelobe_floor_dbi
                ),
            ));
        }
        Ok(())
    }

    /// Gain in dBi at `offset_deg` away from boresight. Any real offset is
    /// accepted; it is folded onto `[0, 180]` first.
    pub fn gain_db(&self, offset_deg: f64) -> f64 {
        let offset = angular_distance_deg(offset_deg, 0.0);
        let ratio = offset / self.beamwidth_3db_deg;
        let main_lobe = self.peak_gain_dbi - MAIN_LOBE_SHAPE_DB * ratio * ratio;
        main_lobe.max(self.sidelobe_floor_dbi)
    }
}

/// An ordered set of beams, each described by its boresight azimuth relative
/// to the array facing direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    beams: Vec<f64>,
    pattern: BeamPattern,
    sector_deg: f64,
}

impl Default for Codebook {
    /// 25 equally spaced beams over a 120 degree sector with the default
    /// 20 degree pattern.
    fn default() -> Self {
        Self::uniform(25, 120.0, BeamPattern::default()).expect("default codebook is valid")
    }
}

impl Codebook {
    /// `count` beams equally spaced so the outermost boresights sit at
    /// `±sector_deg / 2`.
    pub fn uniform(count: usize, sector_deg: f64, pattern: BeamPattern) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("beams", "codebook needs at least one beam"));
        }
        if !(0.0..360.0).contains(&sector_deg) {
            return Err(Error::invalid(
                "sector_deg",
                format!("must be in [0, 360), got {sector_deg}"),
            ));
        }
        if count > 1 && sector_deg == 0.0 {
            return Err(Error::invalid(
                "sector_deg",
                "a multi-beam codebook needs a non-zero sector",
            ));
        }
        let beams = if count == 1 {
            vec![0.0]
        } else {
            let step = sector_deg / (count - 1) as f64;
            (0..count)
                .map(|k| -sector_deg / 2.0 + step * k as f64)
                .collect()
        };
        Self::from_boresights(beams, pattern)
    }

    /// Build from explicit boresights (degrees, relative to facing).
    pub fn from_boresights(beams: Vec<f64>, pattern: BeamPattern) -> Result<Self> {
        pattern.validate()?;
        if beams.is_empty() {
            return Err(Error::invalid("beams", "codebook needs at least one beam"));
        }
        if beams.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "beams",
                "boresights must be strictly increasing",
            ));
        }
        let sector_deg = beams[beams.len() - 1] - beams[0];
        if sector_deg >= 360.0 {
            return Err(Error::invalid(
                "beams",
                "boresights must span less than 360 degrees",
            ));
        }
        Ok(Self {
            beams,
            pattern,
            sector_deg,
        })
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn pattern(&self) -> &BeamPattern {
        &self.pattern
    }

    pub fn sector_deg(&self) -> f64 {
        self.sector_deg
    }

    pub fn boresights(&self) -> &[f64] {
        &self.beams
    }

    /// Boresight of beam `index` relative to the array facing.
    pub fn boresight(&self, index: usize) -> f64 {
        self.beams[index]
    }

    /// Spacing between adjacent boresights (zero for a single-beam codebook).
    pub fn spacing_deg(&self) -> f64 {
        if self.beams.len() < 2 {
            0.0
        } else {
            self.sector_deg / (self.beams.len() - 1) as f64
        }
    }

    /// Gain of beam `index` toward a direction expressed relative to facing.
    pub fn beam_gain_db(&self, index: usize, local_angle_deg: f64) -> f64 {
        self.pattern.gain_db(local_angle_deg - self.beams[index])
    }

    /// Gain of beam `index` toward the global azimuth `global_deg` for an
    /// array facing `facing_deg`.
    pub fn gain_toward(&self, index: usize, facing_deg: f64, global_deg: f64) -> f64 {
        self.beam_gain_db(index, global_deg - facing_deg)
    }

    /// Index of the beam whose boresight is angularly closest to
    /// `target_deg` (relative to facing). Ties go to the lower index.
    pub fn best_beam(&self, target_deg: f64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (k, &b) in self.beams.iter().enumerate() {
            let d = angular_distance_deg(target_deg, b);
            if d < best_dist {
                best = k;
                best_dist = d;
            }
        }
        best
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.beams.len()
    }
}
