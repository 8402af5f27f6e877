use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use unblock_core::channel::{
    compute_paths, fspl_db, noise_floor_dbm, rss_dbm, Arrays, LinkBudgetParams, Material, PathKind,
    Penetration, Surface, Vec2,
};
use unblock_core::codebook::{angular_distance_deg, BeamPattern, Codebook};

// Independent restatement of the pattern: parabolic main lobe clipped at the floor.
fn gain_oracle(p: &BeamPattern, offset_deg: f64) -> f64 {
    let mut off = offset_deg.rem_euclid(360.0);
    if off > 180.0 {
        off = 360.0 - off;
    }
    let main = p.peak_gain_dbi - 12.0 * (off / p.beamwidth_3db_deg).powi(2);
    main.max(p.sidelobe_floor_dbi)
}

#[test]
fn default_codebook_shape() {
    let cb = Codebook::default();
    assert_eq!(cb.len(), 25);
    assert_abs_diff_eq!(cb.boresight(0), -60.0);
    assert_abs_diff_eq!(cb.boresight(12), 0.0);
    assert_abs_diff_eq!(cb.boresight(24), 60.0);
    assert_abs_diff_eq!(cb.spacing_deg(), 5.0);
    let p = cb.pattern();
    assert_abs_diff_eq!(p.gain_db(0.0), 15.0);
    assert_abs_diff_eq!(p.gain_db(10.0), 12.0);
    assert_abs_diff_eq!(p.gain_db(90.0), -10.0);
}

#[test]
fn noise_floor_constants() {
    let nf8 = LinkBudgetParams::default();
    assert_abs_diff_eq!(noise_floor_dbm(&nf8), -72.99, epsilon = 0.01);
    let nf0 = LinkBudgetParams {
        noise_figure_db: 0.0,
        ..nf8
    };
    assert_abs_diff_eq!(noise_floor_dbm(&nf0), -80.99, epsilon = 0.01);
}

#[test]
fn fspl_one_metre_at_60ghz() {
    assert_abs_diff_eq!(fspl_db(1.0, 60.0), 68.0, epsilon = 0.05);
    assert_abs_diff_eq!(
        fspl_db(10.0, 60.0) - fspl_db(1.0, 60.0),
        20.0,
        epsilon = 1e-9
    );
}

#[test]
fn builtin_materials() {
    let drywall = Material::builtin_named("drywall").unwrap();
    assert!(!drywall.penetration_loss_db.is_opaque());
    assert!(Material::builtin_named("unobtainium").is_none());
    assert!(!Material::builtin().is_empty());
}

#[test]
fn wall_reflection_geometry() {
    let wall = Surface::new(
        Vec2::new(-10.0, 2.0),
        Vec2::new(10.0, 2.0),
        Material::new("m", 3.0, Penetration::OPAQUE),
    )
    .unwrap();
    let paths = compute_paths(&[wall], Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0)).unwrap();
    assert_eq!(paths.len(), 2);
    let r = paths.iter().find(|p| !p.is_los()).unwrap();
    assert_eq!(r.kind, PathKind::Reflected { surface: 0 });
    assert_abs_diff_eq!(r.vertices[1].x, 2.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.vertices[1].y, 2.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.length_m, 32f64.sqrt(), epsilon = 1e-9);
    assert_abs_diff_eq!(r.aod_deg, 45.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.aoa_deg, 135.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.extra_loss_db, 3.0);
}

#[test]
fn opaque_wall_between_ends_drops_los() {
    let wall = Surface::new(
        Vec2::new(2.0, -1.0),
        Vec2::new(2.0, 1.0),
        Material::new("m", 3.0, Penetration::OPAQUE),
    )
    .unwrap();
    let paths = compute_paths(&[wall], Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0)).unwrap();
    assert!(paths.iter().all(|p| !p.is_los()));
}

#[test]
fn lossy_wall_adds_penetration() {
    let wall = Surface::new(
        Vec2::new(2.0, -1.0),
        Vec2::new(2.0, 1.0),
        Material::new("m", 3.0, Penetration::LossDb(7.5)),
    )
    .unwrap();
    let paths = compute_paths(&[wall], Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0)).unwrap();
    let los = paths.iter().find(|p| p.is_los()).unwrap();
    assert_abs_diff_eq!(los.extra_loss_db, 7.5);
}

fn brute_reflection(a: Vec2, b: Vec2, bs: Vec2, ms: Vec2) -> (f64, f64) {
    // shortest bounce over a fine parameter grid, refined by ternary search
    let f = |u: f64| {
        let p = a + (b - a) * u;
        bs.distance(p) + p.distance(ms)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (0..=2000)
        .map(|k| k as f64 / 2000.0)
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap();
    lo = lo.max(best - 1e-3);
    hi = hi.min(best + 1e-3);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best = (lo + hi) / 2.0;
    (best, f(best))
}

proptest! {
    #[test]
    fn gain_matches_oracle(peak in 5.0f64..30.0, bw in 1.0f64..90.0, gap in 1.0f64..40.0, off in -720.0f64..720.0) {
        let p = BeamPattern::new(peak, bw, peak - gap).unwrap();
        prop_assert!((p.gain_db(off) - gain_oracle(&p, off)).abs() < 1e-9);
        prop_assert!(p.gain_db(off) <= peak);
        prop_assert!(p.gain_db(off) >= peak - gap);
    }

    #[test]
    fn best_beam_is_brute_force_nearest(n in 1usize..64, sector in 10.0f64..180.0, target in -180.0f64..180.0) {
        let cb = Codebook::uniform(n, sector, BeamPattern::default()).unwrap();
        let got = cb.best_beam(target);
        let best_d = (0..n).map(|i| angular_distance_deg(cb.boresight(i), target)).fold(f64::INFINITY, f64::min);
        prop_assert!((angular_distance_deg(cb.boresight(got), target) - best_d).abs() < 1e-9);
        let first = (0..n).find(|&i| (angular_distance_deg(cb.boresight(i), target) - best_d).abs() < 1e-9).unwrap();
        prop_assert_eq!(got, first);
    }

    #[test]
    fn reflection_is_shortest_bounce(
        ax in -5.0f64..0.0, bx in 5.0f64..10.0, wy in 1.0f64..5.0,
        msx in 1.0f64..8.0, msy in -3.0f64..0.5,
    ) {
        let (a, b) = (Vec2::new(ax, wy), Vec2::new(bx, wy));
        let bs = Vec2::new(0.0, 0.0);
        let ms = Vec2::new(msx, msy);
        let wall = Surface::new(a, b, Material::new("m", 1.0, Penetration::LossDb(3.0))).unwrap();
        let paths = compute_paths(&[wall], bs, ms).unwrap();
        let r = paths.iter().find(|p| !p.is_los());
        let (u, len) = brute_reflection(a, b, bs, ms);
        if u > 1e-3 && u < 1.0 - 1e-3 {
            let r = r.expect("interior bounce must be found");
            prop_assert!((r.length_m - len).abs() < 1e-6, "{} vs {}", r.length_m, len);
            let p = a + (b - a) * u;
            prop_assert!(r.vertices[1].distance(p) < 1e-3);
        }
    }

    #[test]
    fn rss_is_power_sum(tx in -20.0f64..10.0, d in 1.0f64..20.0) {
        let cb = Codebook::default();
        let link = LinkBudgetParams { tx_power_dbm: tx, ..Default::default() };
        let wall = Surface::new(
            Vec2::new(-50.0, 2.0), Vec2::new(50.0, 2.0),
            Material::new("m", 4.0, Penetration::OPAQUE),
        ).unwrap();
        let paths = compute_paths(&[wall], Vec2::new(0.0, 0.0), Vec2::new(d, 0.0)).unwrap();
        let arrays = Arrays { bs: &cb, bs_facing_deg: 0.0, ms: &cb, ms_facing_deg: 180.0 };
        let total = rss_dbm(12, 12, &paths, &[], &link, &arrays);
        let mw: f64 = paths.iter().map(|p| {
            let g_bs = gain_oracle(cb.pattern(), p.aod_deg);
            let g_ms = gain_oracle(cb.pattern(), p.aoa_deg - 180.0);
            10f64.powf((tx + g_bs + g_ms - fspl_db(p.length_m, 60.0) - p.extra_loss_db) / 10.0)
        }).sum();
        prop_assert!((total - 10.0 * mw.log10()).abs() < 1e-9);
        let blocked = rss_dbm(12, 12, &paths, &[1e9, 0.0], &link, &arrays);
        prop_assert!(blocked < total);
    }
}
