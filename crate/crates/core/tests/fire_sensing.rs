use std::f64::consts::{FRAC_PI_8, PI};

use firecover::fire::{FireFrontSource, FireState, SpreadParams, SpreadPolicy, WindModel};
use firecover::sensing::{contains, discretize_fov, fov_rect, CameraIntrinsics, ImportanceMode, Pose};
use firecover::Vec2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn camera() -> CameraIntrinsics {
    CameraIntrinsics {
        focal_length: 10.0,
        pixel_area: 1e-4,
        half_angles: [30f64.to_radians(), 45f64.to_radians()],
        intensity_min: 0.005,
        intensity_max: 0.1,
        importance_gain: 1.0,
        regularizer: 1.5e-5,
        importance_mode: ImportanceMode::BorderFocus,
    }
}

fn table_wind() -> WindModel {
    WindModel::new(FRAC_PI_8, 1.0, 5.0, 2.0).unwrap()
}

#[test]
fn wind_draws_follow_the_table() {
    let wind = table_wind();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 20_000;
    let draws: Vec<_> = (0..n).map(|_| wind.sample(&mut rng)).collect();
    assert!(draws
        .iter()
        .all(|d| d.speed >= 0.0 && (0.0..2.0 * PI).contains(&d.theta)));
    let mean_speed = draws.iter().map(|d| d.speed).sum::<f64>() / n as f64;
    // The zero clamp lifts the mean slightly above 5.
    assert!((5.0..5.1).contains(&mean_speed), "{mean_speed}");
    let (s, c) = draws
        .iter()
        .fold((0.0, 0.0), |(s, c), d| (s + d.theta.sin(), c + d.theta.cos()));
    assert!((s.atan2(c) - FRAC_PI_8).abs() < 0.03);
}

#[test]
fn fire_drifts_downwind_on_average() {
    let start = vec![FireFrontSource::new(Vec2::new(0.0, 0.0), Vec2::new(5.0, 5.0))];
    let mut fire = FireState::new(
        start,
        WindModel::new(FRAC_PI_8, 0.2, 5.0, 0.5).unwrap(),
        SpreadParams::new(4.0, 1.0).unwrap(),
        SpreadPolicy {
            min_front_separation: 1.0,
            wind_shared: false,
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        fire.step(&mut rng);
    }
    let n = fire.sources.len() as f64;
    let centroid = fire.sources.iter().map(|s| s.position).sum::<Vec2>() / n;
    // Azimuth π/8 clockwise from north points mostly north, a little east.
    assert!(centroid.y > 2.0 * centroid.x && centroid.x > 0.0, "{centroid:?}");
}

#[test]
fn fire_replays_from_a_seed() {
    let grow = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fire = FireState::seeded(
            5,
            Vec2::new(500.0, 500.0),
            20.0,
            Vec2::new(5.0, 5.0),
            table_wind(),
            SpreadParams::new(4.0, 1.0).unwrap(),
            SpreadPolicy {
                min_front_separation: 1.5,
                wind_shared: false,
            },
            &mut rng,
        )
        .unwrap();
        for _ in 0..20 {
            fire.step(&mut rng);
        }
        fire.sources
    };
    assert_eq!(grow(4), grow(4));
    assert_ne!(grow(4), grow(5));
}

#[test]
fn footprint_matches_half_angles() {
    let cam = camera();
    let rect = fov_rect(&Pose::new(100.0, 200.0, 60.0), &cam).unwrap();
    let b = rect.bounds();
    assert!((b.x_max - b.x_min - 120.0 * 30f64.to_radians().tan()).abs() < 1e-9);
    assert!((b.y_max - b.y_min - 120.0).abs() < 1e-9);
    assert!(fov_rect(&Pose::new(0.0, 0.0, 0.0), &cam).is_err());
}

proptest! {
    #[test]
    fn quadrature_weights_tile_the_footprint(
        x in -100.0..100.0f64, y in -100.0..100.0f64, z in 11.0..150.0f64,
        cells in 1usize..5000, edge in 1usize..300,
    ) {
        let cam = camera();
        let rect = fov_rect(&Pose::new(x, y, z), &cam).unwrap();
        let b = rect.bounds();
        let d = discretize_fov(&rect, cells, edge);
        let area: f64 = d.interior.iter().map(|s| s.weight).sum();
        prop_assert!((area - (b.x_max - b.x_min) * (b.y_max - b.y_min)).abs() < 1e-9 * area);
        for (k, nodes) in d.edges.iter().enumerate() {
            prop_assert_eq!(nodes.len(), edge);
            let length: f64 = nodes.iter().map(|s| s.weight).sum();
            let expected = if k % 2 == 0 { b.y_max - b.y_min } else { b.x_max - b.x_min };
            prop_assert!((length - expected).abs() < 1e-9 * expected);
        }
        prop_assert!(d.interior.iter().all(|s| contains(&Pose::new(x, y, z), &cam, s.point)));
    }
}
