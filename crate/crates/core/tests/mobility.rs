use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use unblock_core::channel::{PathComponent, PathKind, Vec2};
use unblock_core::engine::bct::{bct_report, bct_scenario, nlos_bct, parse_mobility};
use unblock_core::mobility::{
    blockage_attenuation_db, measure_bct, pose_at, sample_blockage_process, BlockageEvent,
    BlockageTarget, MobilityModel, Pose, RssTrace,
};

fn path(kind: PathKind) -> PathComponent {
    PathComponent {
        kind,
        aod_deg: 0.0,
        aoa_deg: 180.0,
        length_m: 5.0,
        extra_loss_db: 0.0,
        vertices: vec![Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0)],
    }
}

#[test]
fn fig6_waveform_shape() {
    let e = BlockageEvent::new(0.25, 14.0, 0.2);
    assert_eq!(e.waveform_db(0.25), 0.0);
    assert_abs_diff_eq!(e.waveform_db(0.25 + 0.0175), 7.0, epsilon = 1e-9);
    assert_abs_diff_eq!(e.waveform_db(0.285), 14.0, epsilon = 1e-9);
    assert_abs_diff_eq!(e.waveform_db(0.485), 14.0, epsilon = 1e-9);
    assert_abs_diff_eq!(e.end_s(), 0.52, epsilon = 1e-12);
    assert_eq!(e.waveform_db(0.53), 0.0);
}

#[test]
fn poisson_count_within_three_sigma() {
    let (rate, duration) = (2.0, 5000.0);
    let n = sample_blockage_process(rate, duration, 42).len() as f64;
    let mean = rate * duration;
    assert!(
        (n - mean).abs() <= 3.0 * mean.sqrt(),
        "{n} events, expected {mean}"
    );
}

#[test]
fn poisson_is_seeded() {
    assert_eq!(
        sample_blockage_process(1.0, 50.0, 9),
        sample_blockage_process(1.0, 50.0, 9)
    );
    assert_ne!(
        sample_blockage_process(1.0, 50.0, 9),
        sample_blockage_process(1.0, 50.0, 10)
    );
}

#[test]
fn bct_of_synthetic_trace() {
    let trace =
        RssTrace::from_pairs((0..100).map(|k| (k as f64 * 0.01, -58.0 + 0.5 - 0.1 * k as f64)))
            .unwrap();
    // peak -57.5 at t=0, 3 dB lower at k=30
    assert_abs_diff_eq!(measure_bct(&trace).unwrap().unwrap(), 0.30, epsilon = 1e-9);
    assert!(measure_bct(&RssTrace::default()).is_err());
    assert!(RssTrace::from_pairs([(0.0, 1.0), (0.0, 2.0)]).is_err());
}

#[test]
fn rotation_and_walk_poses() {
    let start = Pose::new(Vec2::new(5.0, 0.0), 180.0);
    let rot = MobilityModel::Rotational {
        angular_speed_rad_s: std::f64::consts::FRAC_PI_2,
    };
    assert_abs_diff_eq!(pose_at(&rot, start, 1.0).facing_deg, -90.0, epsilon = 1e-9);
    let walk = MobilityModel::Translational {
        speed_mps: 1.0,
        heading_deg: 0.0,
        waypoints_m: vec![Vec2::new(6.0, 0.0), Vec2::new(6.0, 2.0)],
    };
    let p = pose_at(&walk, start, 2.0);
    assert_abs_diff_eq!(p.position_m.x, 6.0, epsilon = 1e-9);
    assert_abs_diff_eq!(p.position_m.y, 1.0, epsilon = 1e-9);
    assert_eq!(pose_at(&walk, start, 100.0).position_m, Vec2::new(6.0, 2.0));
}

#[test]
fn rotational_bct_strictly_decreasing() {
    let speeds = ["rot:2pi/9", "rot:pi/3", "rot:2pi/3", "rot:4pi/3"];
    let bct: Vec<f64> = speeds
        .iter()
        .map(|s| {
            nlos_bct(5.0, parse_mobility(s).unwrap(), 3.0, 0.001)
                .unwrap()
                .unwrap()
        })
        .collect();
    assert!(bct.windows(2).all(|w| w[0] > w[1]), "{bct:?}");
    // same order of magnitude as the measured 101 ms at 4pi/3
    assert!(bct[3] > 0.0101 && bct[3] < 1.01, "{}", bct[3]);
}

#[test]
fn walking_bct_orderings() {
    let bct = |d: f64, v: &str| {
        nlos_bct(d, parse_mobility(v).unwrap(), 6.0, 0.001)
            .unwrap()
            .unwrap()
    };
    let (slow5, fast5) = (bct(5.0, "walk:0.8"), bct(5.0, "walk:1.4"));
    let (slow10, fast10) = (bct(10.0, "walk:0.8"), bct(10.0, "walk:1.4"));
    assert!(slow5 > fast5 && slow10 > fast10);
    assert!(slow10 >= slow5 && fast10 >= fast5);
    // 600 ms measured at 0.8 m/s and 5 m
    assert!(slow5 > 0.06 && slow5 < 6.0, "{slow5}");
}

#[test]
fn bct_report_covers_every_ms_beam() {
    let cfg = bct_scenario(5.0, parse_mobility("rot:2pi/3").unwrap());
    let r = bct_report(&cfg, 1.0, 0.001).unwrap();
    assert_eq!(r.per_ms_beam.len(), 25);
    assert_eq!(r.nlos_pair.bs, 12);
    assert_eq!(r.nlos_pair.ms, 12);
}

proptest! {
    #[test]
    fn waveform_is_continuous_and_bounded(
        start in 0.0f64..1.0, ramp in 0.001f64..0.1, hold in 0.0f64..0.5, depth in 0.1f64..40.0, t in -0.5f64..2.0,
    ) {
        let e = BlockageEvent { start_s: start, ramp_s: ramp, hold_s: hold, depth_db: depth, target: BlockageTarget::Los };
        let dt = 1e-5;
        let a = e.waveform_db(t);
        let b = e.waveform_db(t + dt);
        prop_assert!((0.0..=depth + 1e-9).contains(&a));
        prop_assert!((a - b).abs() <= depth * dt / ramp + 1e-9);
        if t <= start || t >= e.end_s() {
            prop_assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn los_blockage_leaves_reflections_alone(start in 0.0f64..1.0, depth in 1.0f64..30.0, t in 0.0f64..2.0) {
        let events = [BlockageEvent::new(start, depth, 0.1)];
        let refl = path(PathKind::Reflected { surface: 0 });
        prop_assert_eq!(blockage_attenuation_db(&events, &refl, t), 0.0);
        prop_assert_eq!(blockage_attenuation_db(&events, &path(PathKind::LoS), t), events[0].waveform_db(t));
    }

    #[test]
    fn bct_is_shift_invariant(offset in 0.0f64..10.0, slope in 0.5f64..20.0) {
        let base = RssTrace::from_pairs((0..200).map(|k| (k as f64 * 0.01, -60.0 - slope * k as f64 * 0.01))).unwrap();
        let moved = RssTrace::from_pairs((0..200).map(|k| (offset + k as f64 * 0.01, 5.0 - slope * k as f64 * 0.01))).unwrap();
        let (a, b) = (measure_bct(&base).unwrap(), measure_bct(&moved).unwrap());
        match (a, b) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            (x, y) => prop_assert_eq!(x, y),
        }
    }
}
