//! Continuous 6-value rotation parameterization: two 3-vectors orthonormalized
//! by Gram-Schmidt, completed by a cross product. The vectors become the first
//! two columns of the rotation matrix.

use nalgebra::{Matrix3, Vector3};

/// Inputs shorter than this (after projection, for the second vector) cannot
/// be orthonormalized reliably.
pub const GRAM_SCHMIDT_EPS: f64 = 1e-9;

struct Frame {
    b1: Vector3<f64>,
    b2: Vector3<f64>,
    b3: Vector3<f64>,
    a1_norm: f64,
    u2_norm: f64,
}

fn frame(raw: &[f64; 6]) -> Option<Frame> {
    let a1 = Vector3::new(raw[0], raw[1], raw[2]);
    let a2 = Vector3::new(raw[3], raw[4], raw[5]);
    let a1_norm = a1.norm();
    if !(a1_norm > GRAM_SCHMIDT_EPS) {
        return None;
    }
    let b1 = a1 / a1_norm;
    let u2 = a2 - b1 * b1.dot(&a2);
    let u2_norm = u2.norm();
    if !(u2_norm > GRAM_SCHMIDT_EPS) {
        return None;
    }
    let b2 = u2 / u2_norm;
    Some(Frame { b1, b2, b3: b1.cross(&b2), a1_norm, u2_norm })
}

/// Rotation matrix for six raw values, or `None` when the two vectors are
/// near zero or collinear.
pub fn rotation_from_6d(raw: &[f64; 6]) -> Option<Matrix3<f64>> {
    frame(raw).map(|f| Matrix3::from_columns(&[f.b1, f.b2, f.b3]))
}

/// The six raw values that map back to `r`: its first two columns.
pub fn rotation_to_6d(r: &Matrix3<f64>) -> [f64; 6] {
    [r[(0, 0)], r[(1, 0)], r[(2, 0)], r[(0, 1)], r[(1, 1)], r[(2, 1)]]
}

/// Pulls `dL/dR` back to `dL/draw`. Degenerate inputs get a zero gradient.
pub fn rotation_from_6d_backward(raw: &[f64; 6], d_rot: &Matrix3<f64>) -> [f64; 6] {
    let Some(f) = frame(raw) else {
        return [0.0; 6];
    };
    let a2 = Vector3::new(raw[3], raw[4], raw[5]);
    let g3: Vector3<f64> = d_rot.column(2).into();
    // b3 = b1 x b2
    let mut g1: Vector3<f64> = d_rot.column(0).into_owned() + f.b2.cross(&g3);
    let g2: Vector3<f64> = d_rot.column(1).into_owned() + g3.cross(&f.b1);
    // b2 = u2 / |u2|
    let du2 = (g2 - f.b2 * f.b2.dot(&g2)) / f.u2_norm;
    // u2 = a2 - (b1 . a2) b1
    let proj = f.b1.dot(&a2);
    let da2 = du2 - f.b1 * f.b1.dot(&du2);
    g1 -= du2 * proj + a2 * f.b1.dot(&du2);
    // b1 = a1 / |a1|
    let da1 = (g1 - f.b1 * f.b1.dot(&g1)) / f.a1_norm;
    [da1.x, da1.y, da1.z, da2.x, da2.y, da2.z]
}
