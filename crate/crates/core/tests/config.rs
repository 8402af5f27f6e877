use proptest::prelude::*;

use unblock_core::channel::Vec2;
use unblock_core::config::{preset, preset_names, BlockageConfig, ScenarioConfig, SurfaceConfig};
use unblock_core::mobility::{BlockageEvent, MobilityModel};
use unblock_core::Error;

#[test]
fn every_preset_parses_and_round_trips() {
    for name in preset_names() {
        let cfg = preset(name).unwrap();
        let again = ScenarioConfig::parse(&cfg.render().unwrap()).unwrap();
        assert_eq!(cfg, again, "{name}");
    }
}

#[test]
fn load_resolves_preset_names_and_files() {
    assert_eq!(
        ScenarioConfig::load("fig6").unwrap(),
        preset("fig6").unwrap()
    );
    assert_eq!(
        ScenarioConfig::load("fig6.cfg").unwrap(),
        preset("fig6").unwrap()
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mine.toml");
    std::fs::write(&path, "duration_s = 3.0\n").unwrap();
    let cfg = ScenarioConfig::load(path.to_str().unwrap()).unwrap();
    assert_eq!(cfg.duration_s, 3.0);
    assert!(matches!(
        ScenarioConfig::load("nope"),
        Err(Error::UnknownPreset(_))
    ));
}

#[test]
fn validation_names_the_field() {
    let err = ScenarioConfig::parse("[protocol.thresholds]\nblockage_drop_db = 1.0\n")
        .unwrap_err()
        .to_string();
    assert!(
        err.contains("protocol.thresholds.blockage_drop_db"),
        "{err}"
    );
    let err = ScenarioConfig::parse("duration_s = -1.0\n")
        .unwrap_err()
        .to_string();
    assert!(err.contains("duration_s"), "{err}");
    let err = ScenarioConfig::parse("[sync]\nloss_threshold = 0\n")
        .unwrap_err()
        .to_string();
    assert!(err.contains("sync.loss_threshold"), "{err}");
}

#[test]
fn unknown_keys_rejected() {
    assert!(ScenarioConfig::parse("durration_s = 2.0\n").is_err());
    assert!(ScenarioConfig::parse("[link]\ntx_power = 1.0\n").is_err());
}

fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    (
        any::<u64>(),
        0.1f64..20.0,
        1.0f64..20.0,
        prop::collection::vec((-10.0f64..10.0, 0.5f64..5.0, 0.0f64..=1.0), 0..4),
        prop::collection::vec((0.0f64..5.0, 1.0f64..30.0, 0.0f64..0.5), 0..4),
        prop_oneof![
            Just(MobilityModel::Static),
            (0.0f64..5.0).prop_map(|w| MobilityModel::Rotational {
                angular_speed_rad_s: w
            }),
            (0.0f64..2.0, -180.0f64..180.0).prop_map(|(v, h)| MobilityModel::Translational {
                speed_mps: v,
                heading_deg: h,
                waypoints_m: Vec::new(),
            }),
        ],
    )
        .prop_map(|(seed, duration, x, walls, events, mobility)| {
            let mut cfg = ScenarioConfig {
                seed,
                duration_s: duration,
                mobility,
                ..Default::default()
            };
            cfg.ms.position_m = Vec2::new(x, 0.0);
            cfg.surfaces = walls
                .into_iter()
                .map(|(x0, y, p)| SurfaceConfig {
                    start_m: Vec2::new(x0, y),
                    end_m: Vec2::new(x0 + 5.0, y),
                    material: "drywall".into(),
                    presence_probability: p,
                })
                .collect();
            cfg.blockage = BlockageConfig::Scheduled {
                events: events
                    .into_iter()
                    .map(|(s, d, h)| BlockageEvent::new(s, d, h))
                    .collect(),
            };
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn render_parse_round_trip(cfg in scenario()) {
        cfg.validate().unwrap();
        let text = cfg.render().unwrap();
        prop_assert_eq!(ScenarioConfig::parse(&text).unwrap(), cfg);
    }
}
