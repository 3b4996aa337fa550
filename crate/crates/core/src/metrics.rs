//! Least-squares similarity alignment and the similarity-invariant pose
//! accuracy metrics (rotation @ 15 deg, camera center and translation @ 20% of
//! the scene scale).

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{camera_center, centroid, scene_scale, CameraPose};
use crate::graph::{edge_pairs, pair_count};

pub const ROTATION_THRESHOLD_DEG: f64 = 15.0;
pub const SCENE_SCALE_FRACTION: f64 = 0.2;

/// Source spreads with a second principal variance below this fraction of the
/// first are treated as collinear.
const RANK_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self { scale: 1.0, rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// `s * R * p + t`
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }

    /// Sum of squared residuals `|T(src_k) - dst_k|^2`.
    pub fn squared_error(&self, src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> f64 {
        src.iter().zip(dst).map(|(s, d)| (self.apply(s) - d).norm_squared()).sum()
    }
}

/// Similarity `(s, R, t)` minimizing `sum |s R src_k + t - dst_k|^2`, with
/// reflections excluded.
///
/// Needs at least three points and a source that is not collinear; otherwise
/// the rotation about the source line is unresolvable.
pub fn umeyama_align(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<SimilarityTransform> {
    check_lengths(src, dst, 3)?;
    let spread = principal_variances(src);
    if !(spread[1] > RANK_EPS * spread[0].max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateAlignment(format!(
            "source points are collinear or coincident (principal variances {:.3e}, {:.3e}, {:.3e})",
            spread[0], spread[1], spread[2]
        )));
    }
    solve_similarity(src, dst)
}

/// Least-squares similarity that only requires a non-coincident source.
///
/// For collinear sources the rotation about the line is not unique, but every
/// minimizer maps each source point to the same place, so per-point residuals
/// are well defined. The metrics rely on that.
pub(crate) fn align_points(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<SimilarityTransform> {
    check_lengths(src, dst, 2)?;
    solve_similarity(src, dst)
}

fn check_lengths(src: &[Vector3<f64>], dst: &[Vector3<f64>], min: usize) -> Result<()> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch { expected: src.len(), found: dst.len() });
    }
    if src.len() < min {
        return Err(Error::InvalidInput(format!("alignment needs at least {min} points, got {}", src.len())));
    }
    Ok(())
}

/// Eigenvalues of the source covariance, descending.
fn principal_variances(points: &[Vector3<f64>]) -> [f64; 3] {
    let mu = centroid(points);
    let cov = points.iter().map(|p| (p - mu) * (p - mu).transpose()).fold(Matrix3::zeros(), |a, b| a + b)
        / points.len() as f64;
    let mut ev: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    [ev[0], ev[1], ev[2]]
}

fn solve_similarity(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<SimilarityTransform> {
    let n = src.len() as f64;
    let mu_s = centroid(src);
    let mu_d = centroid(dst);
    let var_s = src.iter().map(|p| (p - mu_s).norm_squared()).sum::<f64>() / n;
    if !(var_s > f64::EPSILON * mu_s.norm_squared().max(1.0) * 1e-4) {
        return Err(Error::DegenerateAlignment("source points coincide".into()));
    }
    let cross =
        src.iter().zip(dst).map(|(s, d)| (d - mu_d) * (s - mu_s).transpose()).fold(Matrix3::zeros(), |a, b| a + b) / n;

    let svd = cross.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD failed to produce singular vectors".into())),
    };
    let sigma = svd.singular_values;
    let mut signs = Vector3::new(1.0, 1.0, 1.0);
    if u.determinant() * v_t.determinant() < 0.0 {
        let smallest = sigma.imin();
        signs[smallest] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&signs) * v_t;
    let scale = sigma.dot(&signs) / var_s;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::DegenerateAlignment(format!("non-positive similarity scale {scale}")));
    }
    let translation = mu_d - scale * (rotation * mu_s);
    Ok(SimilarityTransform { scale, rotation, translation })
}

/// Geodesic angle of `a * b^T`, in degrees within `[0, 180]`.
pub fn rotation_angle_deg(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let trace = (a * b.transpose()).trace();
    ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
}

fn check_pose_sets(pred: &[CameraPose], gt: &[CameraPose]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch { expected: gt.len(), found: pred.len() });
    }
    if gt.len() < 2 {
        return Err(Error::InvalidInput(format!("metrics need at least 2 views, got {}", gt.len())));
    }
    Ok(())
}

/// Fraction of camera pairs whose predicted relative rotation is within
/// `threshold_deg` of the ground-truth relative rotation.
pub fn rotation_accuracy(pred: &[CameraPose], gt: &[CameraPose], threshold_deg: f64) -> Result<f64> {
    check_pose_sets(pred, gt)?;
    let n = gt.len();
    let hits = edge_pairs(n)
        .filter(|&(i, j)| {
            let rel_pred = pred[j].rotation() * pred[i].rotation().transpose();
            let rel_gt = gt[j].rotation() * gt[i].rotation().transpose();
            rotation_angle_deg(&rel_pred, &rel_gt) <= threshold_deg
        })
        .count();
    Ok(hits as f64 / pair_count(n) as f64)
}

/// Aligns `pred` onto `gt` and counts points within `frac * scene_scale(gt_centers)`.
fn aligned_hit_fraction(
    pred: &[Vector3<f64>],
    gt: &[Vector3<f64>],
    gt_centers: &[Vector3<f64>],
    frac: f64,
) -> Result<f64> {
    let align = align_points(pred, gt)?;
    let threshold = frac * scene_scale(gt_centers)?;
    let hits = pred.iter().zip(gt).filter(|(p, g)| (align.apply(p) - *g).norm() <= threshold).count();
    Ok(hits as f64 / gt.len() as f64)
}

/// Fraction of similarity-aligned predicted camera centers within
/// `frac * scene_scale` of the ground truth. Two views always align exactly,
/// so `n = 2` returns 1.
pub fn camera_center_accuracy(pred: &[CameraPose], gt: &[CameraPose], frac: f64) -> Result<f64> {
    check_pose_sets(pred, gt)?;
    if gt.len() == 2 {
        return Ok(1.0);
    }
    let pred_c: Vec<_> = pred.iter().map(camera_center).collect();
    let gt_c: Vec<_> = gt.iter().map(camera_center).collect();
    aligned_hit_fraction(&pred_c, &gt_c, &gt_c, frac)
}

/// Like [`camera_center_accuracy`] but aligning the translation vectors
/// themselves. The threshold still uses the scene scale of the camera centers.
pub fn translation_accuracy(pred: &[CameraPose], gt: &[CameraPose], frac: f64) -> Result<f64> {
    check_pose_sets(pred, gt)?;
    let pred_t: Vec<_> = pred.iter().map(|p| *p.translation()).collect();
    let gt_t: Vec<_> = gt.iter().map(|p| *p.translation()).collect();
    let gt_c: Vec<_> = gt.iter().map(camera_center).collect();
    aligned_hit_fraction(&pred_t, &gt_t, &gt_c, frac)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_views: usize,
    pub rotation_acc_15: f64,
    pub center_acc_02: f64,
    pub translation_acc_02: f64,
}

impl MetricReport {
    /// All three metrics at their default thresholds.
    pub fn evaluate(pred: &[CameraPose], gt: &[CameraPose]) -> Result<Self> {
        Ok(Self {
            n_views: gt.len(),
            rotation_acc_15: rotation_accuracy(pred, gt, ROTATION_THRESHOLD_DEG)?,
            center_acc_02: camera_center_accuracy(pred, gt, SCENE_SCALE_FRACTION)?,
            translation_acc_02: translation_accuracy(pred, gt, SCENE_SCALE_FRACTION)?,
        })
    }

    /// Mean of reports that share a view count.
    pub fn mean(reports: &[MetricReport]) -> Result<Self> {
        let first = reports.first().ok_or_else(|| Error::InvalidInput("no reports to average".into()))?;
        if let Some(r) = reports.iter().find(|r| r.n_views != first.n_views) {
            return Err(Error::Contract(format!(
                "cannot average reports for {} and {} views",
                first.n_views, r.n_views
            )));
        }
        let m = reports.len() as f64;
        let avg = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / m;
        Ok(Self {
            n_views: first.n_views,
            rotation_acc_15: avg(|r| r.rotation_acc_15),
            center_acc_02: avg(|r| r.center_acc_02),
            translation_acc_02: avg(|r| r.translation_acc_02),
        })
    }
}

/// One metrics CSV row; field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub n_views: usize,
    pub rotation_acc_15: f64,
    pub center_acc_02: f64,
    pub translation_acc_02: f64,
    pub representation: String,
    pub seed: u64,
}

impl MetricRow {
    pub fn new(report: &MetricReport, representation: impl Into<String>, seed: u64) -> Self {
        Self {
            n_views: report.n_views,
            rotation_acc_15: report.rotation_acc_15,
            center_acc_02: report.center_acc_02,
            translation_acc_02: report.translation_acc_02,
            representation: representation.into(),
            seed,
        }
    }
}
