mod common;

use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgraph::geometry::*;
use tgraph::Error;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn relative_t_transfers_points(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (pi, pj) = (common::random_pose(&mut r), common::random_pose(&mut r));
        let rel = relative_t(&pi, &pj);
        let x = Vector3::from_fn(|_, _| r.random_range(-5.0..5.0));
        let xi = pi.transform_point(&x);
        let xj = pj.transform_point(&x);
        prop_assert!((rel.rotation * xi + rel.translation - xj).norm() < 1e-9);
    }

    #[test]
    fn relative_t_to_itself_is_identity(seed in any::<u64>()) {
        let p = common::random_pose(&mut rng(seed));
        let rel = relative_t(&p, &p);
        prop_assert!((rel.rotation - Matrix3::identity()).abs().max() < 1e-12);
        prop_assert!(rel.translation.norm() < 1e-12);
    }

    #[test]
    fn closest_point_is_symmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = Ray::new(Vector3::from_fn(|_, _| r.random_range(-2.0..2.0)), common::random_unit(&mut r)).unwrap();
        let b = Ray::new(Vector3::from_fn(|_, _| r.random_range(-2.0..2.0)), common::random_unit(&mut r)).unwrap();
        prop_assume!(a.direction.dot(&b.direction).abs() < 0.99);
        let ab = closest_point_between_axes(&a, &b).unwrap();
        let ba = closest_point_between_axes(&b, &a).unwrap();
        prop_assert!((ab.point - ba.point).norm() < 1e-9);
        prop_assert!((ab.gap - ba.gap).abs() < 1e-9);
    }

    #[test]
    fn closest_point_ignores_direction_sign_and_origin_slide(seed in any::<u64>(), slide in -5.0..5.0f64) {
        let mut r = rng(seed);
        let a = Ray::new(Vector3::from_fn(|_, _| r.random_range(-2.0..2.0)), common::random_unit(&mut r)).unwrap();
        let b = Ray::new(Vector3::from_fn(|_, _| r.random_range(-2.0..2.0)), common::random_unit(&mut r)).unwrap();
        prop_assume!(a.direction.dot(&b.direction).abs() < 0.99);
        let base = closest_point_between_axes(&a, &b).unwrap();
        let a2 = Ray::new(a.at(slide), -a.direction.into_inner()).unwrap();
        let moved = closest_point_between_axes(&a2, &b).unwrap();
        prop_assert!((base.point - moved.point).norm() < 1e-8);
    }

    #[test]
    fn pair_t_is_independent_of_roll(seed in any::<u64>(), ai in -3.1..3.1f64, aj in -3.1..3.1f64) {
        let (pi, pj) = common::center_facing_pair(&mut rng(seed));
        let base = pair_t(&pi, &pj).unwrap();
        let rolled = pair_t(&pi.rolled(ai), &pj.rolled(aj)).unwrap();
        // rolling rotates the frame about z, so only depth is preserved per camera
        prop_assert!((base.t_ki.z - rolled.t_ki.z).abs() < 1e-9);
        prop_assert!((base.point - rolled.point).norm() < 1e-9);
        prop_assert!((Rotation3::from_axis_angle(&Vector3::z_axis(), ai) * base.t_ki - rolled.t_ki).norm() < 1e-9);
    }

    #[test]
    fn pair_t_depths_are_positive_for_center_facing(seed in any::<u64>()) {
        let (pi, pj) = common::center_facing_pair(&mut rng(seed));
        let p = pair_t(&pi, &pj).unwrap();
        prop_assert!(p.t_ki.z > 0.0 && p.t_kj.z > 0.0);
    }

    #[test]
    fn camera_center_maps_to_origin(seed in any::<u64>()) {
        let p = common::random_pose(&mut rng(seed));
        prop_assert!(p.transform_point(&camera_center(&p)).norm() < 1e-12);
    }

    #[test]
    fn world_similarity_preserves_relative_rotation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (pi, pj) = (common::random_pose(&mut r), common::random_pose(&mut r));
        let q = common::random_rotation(&mut r);
        let u = Vector3::from_fn(|_, _| r.random_range(-3.0..3.0));
        let a = relative_t(&pi, &pj);
        let b = relative_t(&pi.in_transformed_world(&q, &u), &pj.in_transformed_world(&q, &u));
        prop_assert!((a.rotation - b.rotation).abs().max() < 1e-12);
        prop_assert!((a.translation - b.translation).norm() < 1e-9);
    }

    #[test]
    fn scene_scale_scales_linearly(seed in any::<u64>(), s in 0.1..10.0f64) {
        let mut r = rng(seed);
        let pts: Vec<Vector3<f64>> = (0..5).map(|_| Vector3::from_fn(|_, _| r.random_range(-3.0..3.0))).collect();
        let scaled: Vec<_> = pts.iter().map(|p| p * s + Vector3::new(1.0, -2.0, 0.5)).collect();
        prop_assert!((scene_scale(&scaled).unwrap() - s * scene_scale(&pts).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn parallel_and_antiparallel_axes_are_degenerate() {
    let a = Ray::new(Vector3::zeros(), Vector3::z()).unwrap();
    let b = Ray::new(Vector3::x(), Vector3::z()).unwrap();
    let c = Ray::new(Vector3::y(), -Vector3::z()).unwrap();
    assert!(matches!(closest_point_between_axes(&a, &b), Err(Error::DegenerateAxes { .. })));
    assert!(matches!(closest_point_between_axes(&a, &c), Err(Error::DegenerateAxes { .. })));
}

#[test]
fn closest_point_matches_brute_force() {
    let mut r = rng(99);
    for _ in 0..50 {
        let a = Ray::new(Vector3::from_fn(|_, _| r.random_range(-2.0..2.0)), common::random_unit(&mut r)).unwrap();
        let b = Ray::new(Vector3::from_fn(|_, _| r.random_range(-2.0..2.0)), common::random_unit(&mut r)).unwrap();
        if a.direction.dot(&b.direction).abs() > 0.95 {
            continue;
        }
        let k = closest_point_between_axes(&a, &b).unwrap();
        let (point, gap) = common::brute_force_closest(&a, &b, 200.0);
        assert!((k.point - point).norm() < 1e-6);
        assert!((k.gap - gap).abs() < 1e-6);
    }
}
