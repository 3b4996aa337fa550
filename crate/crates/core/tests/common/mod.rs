#![allow(dead_code)]

use nalgebra::{Matrix3, UnitQuaternion, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use tgraph::geometry::{CameraPose, Ray};

pub fn random_unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        if v.norm() > 1e-3 {
            return v.normalize();
        }
    }
}

/// Haar-uniform rotation from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    let q = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q)).to_rotation_matrix().into_inner()
}

pub fn random_pose<R: Rng>(rng: &mut R) -> CameraPose {
    let t = Vector3::from_fn(|_, _| rng.random_range(-3.0..3.0));
    CameraPose::new(random_rotation(rng), t).unwrap()
}

/// Two cameras on a sphere of radius 2 looking at the origin, each axis
/// tilted by up to 5 degrees.
pub fn center_facing_pair<R: Rng>(rng: &mut R) -> (CameraPose, CameraPose) {
    let make = |rng: &mut R| loop {
        let c = 2.0 * random_unit(rng);
        let tilt = nalgebra::Rotation3::from_scaled_axis(random_unit(rng) * rng.random_range(0.0..5f64.to_radians()));
        let target = tilt * (-c) + c;
        if let Ok(p) = CameraPose::look_at(&c, &target, &random_unit(rng)) {
            return p;
        }
    };
    loop {
        let (a, b) = (make(rng), make(rng));
        // keep the axes well away from parallel
        if tgraph::geometry::pair_t(&a, &b).is_ok()
            && tgraph::geometry::optical_axis(&a).direction.dot(&tgraph::geometry::optical_axis(&b).direction).abs()
                < 0.99
        {
            return (a, b);
        }
    }
}

fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-11 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Nested golden-section search over the two line parameters. Returns the
/// midpoint of the closest points and their distance.
pub fn brute_force_closest(a: &Ray, b: &Ray, range: f64) -> (Vector3<f64>, f64) {
    let inner = |s: f64| {
        let pa = a.at(s);
        let u = golden_min(-range, range, |u| (pa - b.at(u)).norm_squared());
        (u, (pa - b.at(u)).norm_squared())
    };
    let s = golden_min(-range, range, |s| inner(s).1);
    let (u, _) = inner(s);
    let (pa, pb) = (a.at(s), b.at(u));
    ((pa + pb) * 0.5, (pa - pb).norm())
}
