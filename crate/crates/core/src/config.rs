//! Scenario files: a TOML document with explicit units in key names. Every
//! omitted key takes its default, unknown keys are rejected, and validation
//! reports the dotted path of the offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{LinkBudgetParams, Material, Surface, Vec2};
use crate::codebook::{BeamPattern, Codebook};
use crate::error::{Error, Result};
use crate::mobility::{BlockageEvent, BlockageProcess, DiscBlocker, MobilityModel, Pose};
use crate::protocol::ProtocolConfig;
use crate::timing::{SlotSchedule, SyncParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookConfig {
    pub beams: usize,
    pub sector_deg: f64,
    pub peak_gain_dbi: f64,
    pub beamwidth_3db_deg: f64,
    pub sidelobe_floor_dbi: f64,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        let p = BeamPattern::default();
        CodebookConfig {
            beams: 25,
            sector_deg: 120.0,
            peak_gain_dbi: p.peak_gain_dbi,
            beamwidth_3db_deg: p.beamwidth_3db_deg,
            sidelobe_floor_dbi: p.sidelobe_floor_dbi,
        }
    }
}

impl CodebookConfig {
    pub fn build(&self) -> Result<Codebook> {
        let pattern = BeamPattern::new(
            self.peak_gain_dbi,
            self.beamwidth_3db_deg,
            self.sidelobe_floor_dbi,
        )?;
        Codebook::uniform(self.beams, self.sector_deg, pattern)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BsConfig {
    pub position_m: Vec2,
    pub facing_deg: f64,
    pub codebook: CodebookConfig,
}

impl Default for BsConfig {
    fn default() -> Self {
        BsConfig {
            position_m: Vec2::new(0.0, 0.0),
            facing_deg: 0.0,
            codebook: CodebookConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsConfig {
    pub position_m: Vec2,
    pub facing_deg: f64,
    /// Per-replication uniform jitter applied to both coordinates.
    pub position_jitter_m: f64,
    pub codebook: CodebookConfig,
}

impl Default for MsConfig {
    fn default() -> Self {
        MsConfig {
            position_m: Vec2::new(5.0, 0.0),
            facing_deg: 180.0,
            position_jitter_m: 0.0,
            codebook: CodebookConfig::default(),
        }
    }
}

impl MsConfig {
    pub fn pose(&self) -> Pose {
        Pose::new(self.position_m, self.facing_deg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub start_m: Vec2,
    pub end_m: Vec2,
    pub material: String,
    /// Probability that the surface exists in a given replication.
    #[serde(default = "one")]
    pub presence_probability: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "driver", rename_all = "snake_case", deny_unknown_fields)]
pub enum BlockageConfig {
    #[default]
    None,
    Scheduled {
        #[serde(default)]
        events: Vec<BlockageEvent>,
    },
    Poisson {
        #[serde(default)]
        process: BlockageProcess,
    },
    Geometric {
        #[serde(default)]
        blockers: Vec<DiscBlocker>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineParams {
    /// Paths are recomputed once the MS has moved this far.
    pub position_epsilon_m: f64,
    /// Facing changes below this are not applied to beam gains.
    pub facing_epsilon_deg: f64,
    /// Keep the per-slot RSS trace in memory.
    pub record_trace: bool,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            position_epsilon_m: 0.05,
            facing_epsilon_deg: 1.0,
            record_trace: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seed: u64,
    pub duration_s: f64,
    pub bs: BsConfig,
    pub ms: MsConfig,
    pub link: LinkBudgetParams,
    /// Added to (or overriding) the built-in material table.
    pub materials: Vec<Material>,
    pub surfaces: Vec<SurfaceConfig>,
    pub mobility: MobilityModel,
    pub blockage: BlockageConfig,
    pub protocol: ProtocolConfig,
    pub schedule: SlotSchedule,
    pub sync: SyncParams,
    pub engine: EngineParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: None,
            seed: 1,
            duration_s: 10.0,
            bs: BsConfig::default(),
            ms: MsConfig::default(),
            link: LinkBudgetParams::default(),
            materials: Vec::new(),
            surfaces: Vec::new(),
            mobility: MobilityModel::Static,
            blockage: BlockageConfig::None,
            protocol: ProtocolConfig::default(),
            schedule: SlotSchedule::default(),
            sync: SyncParams::default(),
            engine: EngineParams::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parse and validate a scenario document.
    pub fn parse(document: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn render(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Resolve a scenario argument: an existing file path, or the name of a
    /// shipped preset (extension optional).
    pub fn load(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.is_file() {
            return Self::from_file(path);
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
        preset(stem)
    }

    /// Built-in materials with scenario overrides applied by name.
    pub fn material_table(&self) -> Vec<Material> {
        let mut table = Material::builtin();
        for m in &self.materials {
            match table.iter_mut().find(|t| t.name == m.name) {
                Some(slot) => *slot = m.clone(),
                None => table.push(m.clone()),
            }
        }
        table
    }

    pub fn material(&self, name: &str) -> Option<Material> {
        self.material_table().into_iter().find(|m| m.name == name)
    }

    /// Surfaces with materials resolved, ignoring presence probabilities.
    pub fn all_surfaces(&self) -> Result<Vec<Surface>> {
        self.surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let material = self.material(&s.material).ok_or_else(|| {
                    Error::invalid(
                        format!("surfaces[{i}].material"),
                        format!("unknown material `{}`", s.material),
                    )
                })?;
                Surface::new(s.start_m, s.end_m, material)
                    .map_err(|e| e.within(&format!("surfaces[{i}]")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::invalid("duration_s", "must be a finite value > 0"));
        }
        self.bs
            .codebook
            .build()
            .map_err(|e| e.within("bs.codebook"))?;
        self.ms
            .codebook
            .build()
            .map_err(|e| e.within("ms.codebook"))?;
        if self.bs.position_m.distance(self.ms.position_m) < 1e-6 {
            return Err(Error::invalid(
                "ms.position_m",
                "must differ from bs.position_m",
            ));
        }
        if !(self.ms.position_jitter_m >= 0.0) {
            return Err(Error::invalid("ms.position_jitter_m", "must be >= 0"));
        }
        self.link.validate().map_err(|e| e.within("link"))?;
        for (i, m) in self.materials.iter().enumerate() {
            m.validate()
                .map_err(|e| e.within(&format!("materials[{i}]")))?;
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.presence_probability) {
                return Err(Error::invalid(
                    format!("surfaces[{i}].presence_probability"),
                    "must be in [0, 1]",
                ));
            }
        }
        self.all_surfaces()?;
        self.mobility.validate().map_err(|e| e.within("mobility"))?;
        match &self.blockage {
            BlockageConfig::None => {}
            BlockageConfig::Scheduled { events } => {
                for (i, e) in events.iter().enumerate() {
                    e.validate()
                        .map_err(|err| err.within(&format!("blockage.events[{i}]")))?;
                }
            }
            BlockageConfig::Poisson { process } => {
                process
                    .validate()
                    .map_err(|e| e.within("blockage.process"))?;
            }
            BlockageConfig::Geometric { blockers } => {
                for (i, b) in blockers.iter().enumerate() {
                    b.validate()
                        .map_err(|e| e.within(&format!("blockage.blockers[{i}]")))?;
                }
            }
        }
        self.protocol
            .validate()
            .map_err(|e| e.within("protocol.thresholds"))?;
        self.schedule.validate().map_err(|e| e.within("schedule"))?;
        self.sync.validate().map_err(|e| e.within("sync"))?;
        if !(self.engine.position_epsilon_m >= 0.0) {
            return Err(Error::invalid("engine.position_epsilon_m", "must be >= 0"));
        }
        if !(self.engine.facing_epsilon_deg >= 0.0) {
            return Err(Error::invalid("engine.facing_epsilon_deg", "must be >= 0"));
        }
        Ok(())
    }

    /// Turn discovery and backup operation on or off together.
    pub fn set_unblock(&mut self, enabled: bool) {
        self.protocol.rescan_enabled = enabled;
        self.protocol.nbo_enabled = enabled;
    }
}

const PRESETS: &[(&str, &str)] = &[
    ("fig6", include_str!("../presets/fig6.toml")),
    (
        "table1-materials",
        include_str!("../presets/table1-materials.toml"),
    ),
    ("table2-walk", include_str!("../presets/table2-walk.toml")),
    (
        "table2-rotation",
        include_str!("../presets/table2-rotation.toml"),
    ),
    (
        "campaign-default",
        include_str!("../presets/campaign-default.toml"),
    ),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let src = preset_source(name).ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    ScenarioConfig::parse(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        let cfg = ScenarioConfig::parse("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.mobility, MobilityModel::Static);
        assert_eq!(cfg.blockage, BlockageConfig::None);
        let cb = cfg.bs.codebook.build().unwrap();
        assert_eq!((cb.len(), cb.sector_deg()), (25, 120.0));
        assert_eq!(cb.pattern().beamwidth_3db_deg, 20.0);
        assert_eq!((cfg.link.carrier_ghz, cfg.link.bandwidth_ghz), (60.0, 2.0));
        assert!((crate::channel::noise_floor_dbm(&cfg.link) + 73.0).abs() < 0.1);
        let th = cfg.protocol.thresholds;
        assert_eq!(
            (th.adapt_drop_db, th.blockage_drop_db, th.rescan_interval_s),
            (3.0, 10.0, 0.1)
        );
    }

    #[test]
    fn negative_blockage_drop_names_field() {
        let err =
            ScenarioConfig::parse("[protocol.thresholds]\nblockage_drop_db = -1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("protocol.thresholds.blockage_drop_db"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ScenarioConfig::parse("durration_s = 3.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("durration_s"), "{err}");
        assert!(ScenarioConfig::parse("[link]\ntx_power = 3.0\n").is_err());
    }

    #[test]
    fn unknown_material_rejected() {
        let doc =
            "[[surfaces]]\nstart_m = [0.0, 1.0]\nend_m = [1.0, 1.0]\nmaterial = \"unobtainium\"\n";
        let msg = ScenarioConfig::parse(doc).unwrap_err().to_string();
        assert!(msg.contains("surfaces[0].material"), "{msg}");
    }

    #[test]
    fn field_paths_in_nested_sections() {
        let msg = ScenarioConfig::parse("[bs.codebook]\nbeamwidth_3db_deg = 0.0\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("bs.codebook.beamwidth_3db_deg"), "{msg}");
        let msg = ScenarioConfig::parse("duration_s = 0.0\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("duration_s"), "{msg}");
        let doc = "[blockage]\ndriver = \"scheduled\"\n[[blockage.events]]\nstart_s = 0.1\nramp_s = 0.0\n";
        let msg = ScenarioConfig::parse(doc).unwrap_err().to_string();
        assert!(msg.contains("blockage.events[0].ramp_s"), "{msg}");
    }

    #[test]
    fn material_override_by_name() {
        let doc = "[[materials]]\nname = \"drywall\"\nreflection_loss_db = 9.0\npenetration_loss_db = \"opaque\"\n";
        let cfg = ScenarioConfig::parse(doc).unwrap();
        let m = cfg.material("drywall").unwrap();
        assert_eq!(m.reflection_loss_db, 9.0);
        assert!(m.penetration_loss_db.is_opaque());
        assert!(cfg.material("concrete").is_some());
    }

    #[test]
    fn all_presets_parse() {
        for name in preset_names() {
            preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn fig6_preset_event() {
        let cfg = preset("fig6").unwrap();
        let BlockageConfig::Scheduled { events } = &cfg.blockage else {
            panic!("fig6 uses scheduled blockage");
        };
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].depth_db, 14.0);
        assert_eq!(events[0].ramp_s, 0.035);
    }

    #[test]
    fn load_resolves_preset_names_with_extension() {
        assert_eq!(
            ScenarioConfig::load("fig6.cfg").unwrap(),
            preset("fig6").unwrap()
        );
        assert_eq!(
            ScenarioConfig::load("fig6").unwrap(),
            preset("fig6").unwrap()
        );
    }

    #[test]
    fn presets_round_trip() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            let text = cfg.render().unwrap();
            assert_eq!(
                ScenarioConfig::parse(&text).unwrap(),
                cfg,
                "{name}:\n{text}"
            );
        }
    }
}
