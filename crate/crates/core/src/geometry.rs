//! Camera pose algebra and the two pairwise translation representations.
//!
//! Poses are world-to-camera: a world point `X` maps to the camera frame as
//! `R * X + t`. The camera center is therefore `-R^T t` and the optical axis
//! (camera `+z`) points along `R^T * (0, 0, 1)` in world coordinates.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `R^T R - I` and `det R - 1` for a valid pose.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Two axes are parallel when `|1 - |dir_a . dir_b|| < PARALLEL_EPS`.
pub const PARALLEL_EPS: f64 = 1e-8;

/// Relative intersection tolerance; scaled by `max(1, |origin_a - origin_b|)`.
pub const INTERSECT_EPS: f64 = 1e-6;

/// World-to-camera rigid transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        check_rotation(&rotation)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPose("translation is not finite".into()));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Pose with the given orientation whose camera center sits at `center`.
    pub fn from_center(rotation: Matrix3<f64>, center: &Vector3<f64>) -> Result<Self> {
        Self::new(rotation, -(rotation * center))
    }

    /// Camera at `center` whose optical axis passes through `target`.
    ///
    /// `up` only fixes the roll; it must not be parallel to the viewing direction.
    pub fn look_at(center: &Vector3<f64>, target: &Vector3<f64>, up: &Vector3<f64>) -> Result<Self> {
        let forward = target - center;
        let z = forward
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidPose("look_at target coincides with center".into()))?;
        let x = up
            .cross(&z)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidPose("look_at up vector is parallel to the view".into()))?;
        let y = z.cross(&x);
        let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        Self::from_center(rotation, center)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Maps a world point into this camera's frame.
    pub fn transform_point(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * world + self.translation
    }

    pub fn center(&self) -> Vector3<f64> {
        camera_center(self)
    }

    /// Rotates the camera about its own optical axis by `angle` radians,
    /// keeping its center fixed.
    pub fn rolled(&self, angle: f64) -> Self {
        let roll = *Rotation3::from_axis_angle(&Vector3::z_axis(), angle).matrix();
        Self { rotation: roll * self.rotation, translation: roll * self.translation }
    }

    /// The pose seen from a world that was moved by the rigid transform
    /// `X' = q * X + u`.
    pub fn in_transformed_world(&self, q: &Matrix3<f64>, u: &Vector3<f64>) -> Self {
        let rotation = self.rotation * q.transpose();
        Self { rotation, translation: self.translation - rotation * u }
    }

    /// Re-expresses this pose with `reference` as the world frame.
    pub fn relative_to(&self, reference: &CameraPose) -> Self {
        let rel = relative_t(reference, self);
        Self { rotation: rel.rotation, translation: rel.translation }
    }
}

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidPose("rotation is not finite".into()));
    }
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    if ortho > ROTATION_TOLERANCE {
        return Err(Error::InvalidPose(format!("rotation is not orthonormal (deviation {ortho:.3e})")));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ROTATION_TOLERANCE {
        return Err(Error::InvalidPose(format!("rotation determinant is {det}")));
    }
    Ok(())
}

/// A half-line with unit direction. Only its supporting line matters for the
/// closest-point construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    pub direction: Unit<Vector3<f64>>,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, direction: Vector3<f64>) -> Result<Self> {
        let direction = Unit::try_new(direction, 1e-12)
            .ok_or_else(|| Error::InvalidInput("ray direction has zero length".into()))?;
        Ok(Self { origin, direction })
    }

    pub fn at(&self, s: f64) -> Vector3<f64> {
        self.origin + self.direction.into_inner() * s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisStatus {
    Intersecting,
    Skew,
    Degenerate,
}

/// Midpoint of the common perpendicular of two lines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisClosestPoint {
    pub point: Vector3<f64>,
    pub gap: f64,
    pub status: AxisStatus,
}

pub fn camera_center(pose: &CameraPose) -> Vector3<f64> {
    -(pose.rotation.transpose() * pose.translation)
}

pub fn optical_axis(pose: &CameraPose) -> Ray {
    let direction = pose.rotation.transpose() * Vector3::z();
    Ray { origin: camera_center(pose), direction: Unit::new_normalize(direction) }
}

/// Point minimizing the summed squared distance to the two infinite lines
/// carrying `a` and `b`.
///
/// Fails with [`Error::DegenerateAxes`] when the lines are parallel, since the
/// minimizer is then a whole line.
pub fn closest_point_between_axes(a: &Ray, b: &Ray) -> Result<AxisClosestPoint> {
    let da = a.direction.into_inner();
    let db = b.direction.into_inner();
    let w = a.origin - b.origin;
    let cos = da.dot(&db);
    let deviation = (1.0 - cos.abs()).abs();
    if deviation < PARALLEL_EPS {
        return Err(Error::DegenerateAxes { deviation });
    }
    let d = da.dot(&w);
    let e = db.dot(&w);
    let denom = 1.0 - cos * cos;
    let s = (cos * e - d) / denom;
    let u = (e - cos * d) / denom;
    let pa = a.at(s);
    let pb = b.at(u);
    let gap = (pa - pb).norm();
    let tol = INTERSECT_EPS * w.norm().max(1.0);
    let status = if gap <= tol { AxisStatus::Intersecting } else { AxisStatus::Skew };
    Ok(AxisClosestPoint { point: (pa + pb) * 0.5, gap, status })
}

/// Pose of camera `j` expressed with camera `i` as the world frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativePose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

/// `R_rel = R_j R_i^T`, `t_rel = t_j - R_rel t_i`, so that
/// `R_rel * X_i + t_rel = X_j` for camera-frame coordinates of any world point.
pub fn relative_t(pose_i: &CameraPose, pose_j: &CameraPose) -> RelativePose {
    let rotation = pose_j.rotation * pose_i.rotation.transpose();
    let translation = pose_j.translation - rotation * pose_i.translation;
    RelativePose { rotation, translation }
}

/// Location of the optical-axis intersection point in each camera's frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairT {
    pub t_ki: Vector3<f64>,
    pub t_kj: Vector3<f64>,
    /// Intersection point in world coordinates.
    pub point: Vector3<f64>,
    pub gap: f64,
    pub status: AxisStatus,
}

impl PairT {
    /// `(t_ki, t_kj)` flattened, the payload layout of a pair-t graph edge.
    pub fn payload(&self) -> [f64; 6] {
        [self.t_ki.x, self.t_ki.y, self.t_ki.z, self.t_kj.x, self.t_kj.y, self.t_kj.z]
    }
}

pub fn pair_t(pose_i: &CameraPose, pose_j: &CameraPose) -> Result<PairT> {
    let k = closest_point_between_axes(&optical_axis(pose_i), &optical_axis(pose_j))?;
    Ok(PairT {
        t_ki: pose_i.transform_point(&k.point),
        t_kj: pose_j.transform_point(&k.point),
        point: k.point,
        gap: k.gap,
        status: k.status,
    })
}

/// Distance from the centroid of `centers` to the farthest center.
pub fn scene_scale(centers: &[Vector3<f64>]) -> Result<f64> {
    if centers.len() < 2 {
        return Err(Error::InvalidInput(format!("scene scale needs at least 2 centers, got {}", centers.len())));
    }
    let centroid = centroid(centers);
    Ok(centers.iter().map(|c| (c - centroid).norm()).fold(0.0, f64::max))
}

pub(crate) fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / points.len() as f64
}
