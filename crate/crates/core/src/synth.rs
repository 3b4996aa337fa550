//! Synthetic camera rigs for the three configuration regimes (center-facing,
//! mixed, near-parallel), pose-derived stand-in features, and an analysis of
//! how stable the pairwise optical-axis intersections are.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    camera_center, centroid, closest_point_between_axes, optical_axis, scene_scale, AxisStatus, CameraPose,
};
use crate::graph::{edge_pairs, pair_count};

pub const MIN_CAMERAS: usize = 2;
pub const MAX_CAMERAS: usize = 8;
/// Center-facing cameras stay within this elevation of the equator.
pub const ELEVATION_BAND_DEG: f64 = 30.0;
/// Cameras keep a roughly level horizon: roll about the optical axis stays
/// within this angle of upright.
pub const ROLL_JITTER_DEG: f64 = 10.0;
pub const MIN_FEATURE_DIM: usize = 12;
const PROJECTION_SEED: u64 = 0x7467_7261_7068;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    CenterFacing,
    Mixed,
    Parallel,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::CenterFacing => "center-facing",
            Scenario::Mixed => "mixed",
            Scenario::Parallel => "parallel",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center-facing" => Ok(Scenario::CenterFacing),
            "mixed" => Ok(Scenario::Mixed),
            "parallel" => Ok(Scenario::Parallel),
            other => Err(Error::InvalidInput(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Per-camera stand-in for an image feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub dim: usize,
    pub noise_sigma: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { dim: 24, noise_sigma: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneParams {
    pub radius: f64,
    pub look_jitter_deg: f64,
    pub spacing: f64,
    pub axis_jitter_deg: f64,
    pub parallel_fraction: f64,
    pub feature_dim: usize,
    pub noise_sigma: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        let features = FeatureConfig::default();
        Self {
            radius: 2.0,
            look_jitter_deg: 5.0,
            spacing: 0.5,
            axis_jitter_deg: 2.0,
            parallel_fraction: 0.25,
            feature_dim: features.dim,
            noise_sigma: features.noise_sigma,
        }
    }
}

impl SceneParams {
    pub fn features(&self) -> FeatureConfig {
        FeatureConfig { dim: self.feature_dim, noise_sigma: self.noise_sigma }
    }
}

/// One training or evaluation instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSample {
    pub poses: Vec<CameraPose>,
    pub features: Vec<FeatureVector>,
    pub scenario: Scenario,
    pub seed: u64,
    pub params: SceneParams,
    /// How many cameras (listed last) came from the parallel generator.
    pub parallel_count: usize,
}

impl SceneSample {
    pub fn n(&self) -> usize {
        self.poses.len()
    }

    pub fn centers(&self) -> Vec<Vector3<f64>> {
        self.poses.iter().map(camera_center).collect()
    }

    /// Camera-array extent: the scene scale of the camera centers.
    pub fn extent(&self) -> Result<f64> {
        scene_scale(&self.centers())
    }

    /// The same rig with every camera center scaled by `s` about the world
    /// origin. Features are re-encoded with the original seeds.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {s}")));
        }
        let poses = self
            .poses
            .iter()
            .map(|p| CameraPose::new(*p.rotation(), p.translation() * s))
            .collect::<Result<Vec<_>>>()?;
        let features = encode_all(&poses, self.params.features(), self.seed)?;
        Ok(Self { poses, features, ..self.clone() })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if !(MIN_CAMERAS..=MAX_CAMERAS).contains(&n) {
            return Err(Error::InvalidInput(format!("scene has {n} cameras, expected 2..=8")));
        }
        if self.features.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: self.features.len() });
        }
        let dim = self.features[0].len();
        if self.features.iter().any(|f| f.len() != dim || !f.0.iter().all(|v| v.is_finite())) {
            return Err(Error::Contract("scene features must be finite and share one width".into()));
        }
        if self.parallel_count > n {
            return Err(Error::Contract("parallel_count exceeds camera count".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&SceneFile::from(self)).map_err(|e| Error::Contract(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        file.try_into()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraFile {
    /// Row-major rotation.
    #[serde(rename = "R")]
    r: [f64; 9],
    t: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    #[serde(flatten)]
    params: SceneParams,
    parallel_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    scenario: Scenario,
    seed: u64,
    params: ParamsFile,
    cameras: Vec<CameraFile>,
    features: Vec<FeatureVector>,
}

impl From<&SceneSample> for SceneFile {
    fn from(s: &SceneSample) -> Self {
        let cameras = s
            .poses
            .iter()
            .map(|p| {
                let r = p.rotation();
                CameraFile {
                    r: std::array::from_fn(|k| r[(k / 3, k % 3)]),
                    t: [p.translation().x, p.translation().y, p.translation().z],
                }
            })
            .collect();
        Self {
            scenario: s.scenario,
            seed: s.seed,
            params: ParamsFile { params: s.params, parallel_count: s.parallel_count },
            cameras,
            features: s.features.clone(),
        }
    }
}

impl TryFrom<SceneFile> for SceneSample {
    type Error = Error;

    fn try_from(f: SceneFile) -> Result<Self> {
        let poses = f
            .cameras
            .iter()
            .map(|c| CameraPose::new(Matrix3::from_row_slice(&c.r), Vector3::from_column_slice(&c.t)))
            .collect::<Result<Vec<_>>>()?;
        let scene = SceneSample {
            poses,
            features: f.features,
            scenario: f.scenario,
            seed: f.seed,
            params: f.params.params,
            parallel_count: f.params.parallel_count,
        };
        scene.validate()?;
        Ok(scene)
    }
}

/// SplitMix64 finalizer over `(seed, stream)`; gives independent sub-seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_n(n: usize) -> Result<()> {
    if (MIN_CAMERAS..=MAX_CAMERAS).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("camera count must be in 2..=8, got {n}")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite and non-negative, got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite and positive, got {v}")))
    }
}

/// Unit vector perpendicular to `d`, at a uniformly random angle around it.
fn random_perpendicular<R: Rng>(d: &Vector3<f64>, rng: &mut R) -> Unit<Vector3<f64>> {
    let helper = if d.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = d.cross(&helper).normalize();
    let e2 = d.cross(&e1);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    Unit::new_normalize(e1 * phi.cos() + e2 * phi.sin())
}

/// Tilts `d` by a uniform angle in `[0, max_deg]` in a random direction.
fn jitter_direction<R: Rng>(d: &Vector3<f64>, max_deg: f64, rng: &mut R) -> Vector3<f64> {
    if max_deg == 0.0 {
        // consume the same draws so seeds line up across jitter settings
        let _ = random_perpendicular(d, rng);
        let _: f64 = rng.random();
        return *d;
    }
    let axis = random_perpendicular(d, rng);
    let angle = rng.random::<f64>() * max_deg.to_radians();
    Rotation3::from_axis_angle(&axis, angle) * d
}

/// Camera at `center` looking along `dir`, upright with a small random roll.
fn oriented_camera<R: Rng>(
    center: &Vector3<f64>,
    dir: &Vector3<f64>,
    up: &Vector3<f64>,
    rng: &mut R,
) -> Result<CameraPose> {
    let limit = ROLL_JITTER_DEG.to_radians();
    let roll = rng.random_range(-limit..=limit);
    Ok(CameraPose::look_at(center, &(center + dir), up)?.rolled(roll))
}

fn encode_all(poses: &[CameraPose], features: FeatureConfig, seed: u64) -> Result<Vec<FeatureVector>> {
    poses
        .iter()
        .enumerate()
        .map(|(m, p)| encode_features(p, features.dim, features.noise_sigma, derive_seed(seed, 1000 + m as u64)))
        .collect()
}

fn center_facing_poses(n: usize, radius: f64, look_jitter_deg: f64, rng: &mut ChaCha8Rng) -> Result<Vec<CameraPose>> {
    let band = ELEVATION_BAND_DEG.to_radians();
    (0..n)
        .map(|_| {
            let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
            let elevation = rng.random_range(-band..=band);
            let center = radius
                * Vector3::new(elevation.cos() * azimuth.cos(), elevation.cos() * azimuth.sin(), elevation.sin());
            let look = jitter_direction(&(-center / radius), look_jitter_deg, rng);
            oriented_camera(&center, &look, &Vector3::z(), rng)
        })
        .collect()
}

/// Cameras on a sphere band of `radius` aimed at the origin, each optical axis
/// tilted by at most `look_jitter_deg`.
pub fn gen_center_facing(
    n: usize,
    radius: f64,
    look_jitter_deg: f64,
    seed: u64,
    features: FeatureConfig,
) -> Result<SceneSample> {
    check_n(n)?;
    check_positive("radius", radius)?;
    check_nonneg("look_jitter_deg", look_jitter_deg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let poses = center_facing_poses(n, radius, look_jitter_deg, &mut rng)?;
    Ok(SceneSample {
        features: encode_all(&poses, features, seed)?,
        poses,
        scenario: Scenario::CenterFacing,
        seed,
        params: SceneParams {
            radius,
            look_jitter_deg,
            parallel_fraction: 0.0,
            feature_dim: features.dim,
            noise_sigma: features.noise_sigma,
            ..SceneParams::default()
        },
        parallel_count: 0,
    })
}

/// Grid positions on the `z = 0` plane, centered on the origin.
fn grid_centers(n: usize, spacing: f64) -> Vec<Vector3<f64>> {
    let cols = (n as f64).sqrt().ceil() as usize;
    let raw: Vec<_> =
        (0..n).map(|k| Vector3::new((k % cols) as f64 * spacing, (k / cols) as f64 * spacing, 0.0)).collect();
    let mid = centroid(&raw);
    raw.into_iter().map(|c| c - mid).collect()
}

fn parallel_poses(n: usize, spacing: f64, axis_jitter_deg: f64, rng: &mut ChaCha8Rng) -> Result<Vec<CameraPose>> {
    grid_centers(n, spacing)
        .iter()
        .map(|c| {
            let look = jitter_direction(&Vector3::z(), axis_jitter_deg, rng);
            oriented_camera(c, &look, &Vector3::y(), rng)
        })
        .collect()
}

/// Cameras on a planar grid with the given spacing, all looking along `+z`
/// with each axis tilted by at most `axis_jitter_deg`.
pub fn gen_parallel(
    n: usize,
    spacing: f64,
    axis_jitter_deg: f64,
    seed: u64,
    features: FeatureConfig,
) -> Result<SceneSample> {
    check_n(n)?;
    check_positive("spacing", spacing)?;
    check_nonneg("axis_jitter_deg", axis_jitter_deg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let poses = parallel_poses(n, spacing, axis_jitter_deg, &mut rng)?;
    Ok(SceneSample {
        features: encode_all(&poses, features, seed)?,
        poses,
        scenario: Scenario::Parallel,
        seed,
        params: SceneParams {
            spacing,
            axis_jitter_deg,
            parallel_fraction: 1.0,
            feature_dim: features.dim,
            noise_sigma: features.noise_sigma,
            ..SceneParams::default()
        },
        parallel_count: n,
    })
}

/// Center-facing rig in which `ceil(parallel_fraction * n)` cameras are
/// replaced by a near-parallel group. The group sits on the sphere band and
/// faces the origin as a whole; its cameras are listed last.
pub fn gen_mixed(n: usize, parallel_fraction: f64, seed: u64, params: &SceneParams) -> Result<SceneSample> {
    check_n(n)?;
    if !(0.0..=1.0).contains(&parallel_fraction) {
        return Err(Error::InvalidInput(format!("parallel_fraction must be in [0, 1], got {parallel_fraction}")));
    }
    let features = params.features();
    let k = ((parallel_fraction * n as f64).ceil() as usize).min(n);
    let mut scene = match k {
        0 => gen_center_facing(n, params.radius, params.look_jitter_deg, seed, features)?,
        k if k == n => gen_parallel(n, params.spacing, params.axis_jitter_deg, seed, features)?,
        k => {
            check_positive("radius", params.radius)?;
            check_positive("spacing", params.spacing)?;
            check_nonneg("look_jitter_deg", params.look_jitter_deg)?;
            check_nonneg("axis_jitter_deg", params.axis_jitter_deg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
            let mut poses = center_facing_poses(n - k, params.radius, params.look_jitter_deg, &mut rng)?;

            let band = ELEVATION_BAND_DEG.to_radians();
            let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
            let elevation = rng.random_range(-band..=band);
            let anchor = params.radius
                * Vector3::new(elevation.cos() * azimuth.cos(), elevation.cos() * azimuth.sin(), elevation.sin());
            // Group frame: +z toward the origin, centered on the anchor.
            let to_world = Rotation3::rotation_between(&Vector3::z(), &(-anchor))
                .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI));
            let q = *to_world.matrix();
            for pose in parallel_poses(k, params.spacing, params.axis_jitter_deg, &mut rng)? {
                poses.push(pose.in_transformed_world(&q, &anchor));
            }
            SceneSample {
                features: encode_all(&poses, features, seed)?,
                poses,
                scenario: Scenario::Mixed,
                seed,
                params: *params,
                parallel_count: k,
            }
        }
    };
    scene.params.parallel_fraction = parallel_fraction;
    Ok(scene)
}

/// Dispatches to the generator for `scenario`.
pub fn generate(scenario: Scenario, n: usize, seed: u64, params: &SceneParams) -> Result<SceneSample> {
    let features = params.features();
    let mut scene = match scenario {
        Scenario::CenterFacing => gen_center_facing(n, params.radius, params.look_jitter_deg, seed, features)?,
        Scenario::Parallel => gen_parallel(n, params.spacing, params.axis_jitter_deg, seed, features)?,
        Scenario::Mixed => gen_mixed(n, params.parallel_fraction, seed, params)?,
    };
    scene.params = SceneParams { parallel_fraction: scene.params.parallel_fraction, ..*params };
    Ok(scene)
}

/// Fixed projection of the 12-value pose embedding onto the extra feature dims.
fn projection(rows: usize) -> Vec<[f64; 12]> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROJECTION_SEED);
    let normal = Normal::new(0.0, 1.0 / 12f64.sqrt()).expect("valid normal");
    (0..rows).map(|_| std::array::from_fn(|_| normal.sample(&mut rng))).collect()
}

/// Pose-derived feature: flattened rotation and translation followed by a
/// fixed random projection of them, plus Gaussian noise.
pub fn encode_features(pose: &CameraPose, dim: usize, noise_sigma: f64, seed: u64) -> Result<FeatureVector> {
    if dim < MIN_FEATURE_DIM {
        return Err(Error::InvalidInput(format!("feature dim must be at least {MIN_FEATURE_DIM}, got {dim}")));
    }
    check_nonneg("noise_sigma", noise_sigma)?;
    let r = pose.rotation();
    let t = pose.translation();
    let mut embedding = [0.0; 12];
    for k in 0..9 {
        embedding[k] = r[(k / 3, k % 3)];
    }
    embedding[9..].copy_from_slice(t.as_slice());

    let mut values = embedding.to_vec();
    values.extend(projection(dim - 12).iter().map(|row| row.iter().zip(&embedding).map(|(a, b)| a * b).sum::<f64>()));
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for v in &mut values {
            *v += noise.sample(&mut rng);
        }
    }
    Ok(FeatureVector(values))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairIntersection {
    pub i: usize,
    pub j: usize,
    pub status: AxisStatus,
    pub point: Option<[f64; 3]>,
    pub gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub pairs: Vec<PairIntersection>,
    /// Mean squared distance of the intersection points from their centroid;
    /// `None` when every pair is degenerate.
    pub point_variance: Option<f64>,
    pub extent: f64,
    pub intersecting_fraction: f64,
    pub skew_fraction: f64,
    pub degenerate_fraction: f64,
}

impl StabilityReport {
    /// Point variance in units of the squared camera-array extent.
    pub fn normalized_variance(&self) -> Option<f64> {
        self.point_variance.map(|v| v / (self.extent * self.extent))
    }
}

/// Per-pair intersections of the optical axes and how widely they scatter.
pub fn intersection_stability(scene: &SceneSample) -> Result<StabilityReport> {
    let n = scene.n();
    if n < 3 {
        return Err(Error::InvalidInput(format!("stability analysis needs at least 3 cameras, got {n}")));
    }
    let axes: Vec<_> = scene.poses.iter().map(optical_axis).collect();
    let pairs: Vec<_> = edge_pairs(n)
        .map(|(i, j)| match closest_point_between_axes(&axes[i], &axes[j]) {
            Ok(k) => PairIntersection { i, j, status: k.status, point: Some(k.point.into()), gap: Some(k.gap) },
            Err(_) => PairIntersection { i, j, status: AxisStatus::Degenerate, point: None, gap: None },
        })
        .collect();
    let points: Vec<Vector3<f64>> = pairs.iter().filter_map(|p| p.point.map(Vector3::from)).collect();
    let point_variance = (!points.is_empty()).then(|| {
        let mu = centroid(&points);
        points.iter().map(|p| (p - mu).norm_squared()).sum::<f64>() / points.len() as f64
    });
    let total = pair_count(n) as f64;
    let frac = |s: AxisStatus| pairs.iter().filter(|p| p.status == s).count() as f64 / total;
    Ok(StabilityReport {
        point_variance,
        extent: scene.extent()?,
        intersecting_fraction: frac(AxisStatus::Intersecting),
        skew_fraction: frac(AxisStatus::Skew),
        degenerate_fraction: frac(AxisStatus::Degenerate),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pair_t;

    fn feats() -> FeatureConfig {
        FeatureConfig::default()
    }

    #[test]
    fn center_facing_without_jitter_meets_at_origin() {
        let scene = gen_center_facing(4, 2.0, 0.0, 1, feats()).unwrap();
        for (i, j) in edge_pairs(4) {
            let p = pair_t(&scene.poses[i], &scene.poses[j]).unwrap();
            assert_eq!(p.status, AxisStatus::Intersecting);
            assert!(p.point.norm() < 1e-12);
            assert!((p.t_ki - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
            assert!((p.t_kj - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn elevation_stays_in_band() {
        for seed in 0..20 {
            let scene = gen_center_facing(8, 3.0, 0.0, seed, feats()).unwrap();
            for c in scene.centers() {
                assert!((c.norm() - 3.0).abs() < 1e-12);
                assert!((c.z / 3.0).asin().to_degrees().abs() <= ELEVATION_BAND_DEG + 1e-9);
            }
        }
    }

    #[test]
    fn invalid_generator_ranges() {
        assert!(gen_center_facing(1, 2.0, 0.0, 0, feats()).is_err());
        assert!(gen_center_facing(9, 2.0, 0.0, 0, feats()).is_err());
        assert!(gen_center_facing(3, 0.0, 0.0, 0, feats()).is_err());
        assert!(gen_center_facing(3, 1.0, -1.0, 0, feats()).is_err());
        assert!(gen_parallel(3, -1.0, 0.0, 0, feats()).is_err());
        assert!(gen_mixed(3, 1.5, 0, &SceneParams::default()).is_err());
        assert!(encode_features(&CameraPose::identity(), 11, 0.0, 0).is_err());
    }

    #[test]
    fn mixed_counts_and_limits() {
        let params = SceneParams::default();
        let scene = gen_mixed(8, 0.25, 5, &params).unwrap();
        assert_eq!(scene.parallel_count, 2);
        assert_eq!(scene.scenario, Scenario::Mixed);

        let cf = gen_mixed(5, 0.0, 9, &params).unwrap();
        let direct = gen_center_facing(5, params.radius, params.look_jitter_deg, 9, params.features()).unwrap();
        assert_eq!(cf.poses, direct.poses);
        let par = gen_mixed(5, 1.0, 9, &params).unwrap();
        let direct = gen_parallel(5, params.spacing, params.axis_jitter_deg, 9, params.features()).unwrap();
        assert_eq!(par.poses, direct.poses);
    }

    #[test]
    fn parallel_group_in_mixed_scene_stays_parallel() {
        let params = SceneParams { axis_jitter_deg: 0.0, ..SceneParams::default() };
        let scene = gen_mixed(8, 0.5, 2, &params).unwrap();
        let group = &scene.poses[8 - scene.parallel_count..];
        let d0 = optical_axis(&group[0]).direction;
        for p in &group[1..] {
            assert!((optical_axis(p).direction.dot(&d0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn features_are_deterministic_and_pose_dependent() {
        let a = CameraPose::identity();
        let b = CameraPose::new(Matrix3::identity(), Vector3::x()).unwrap();
        assert_eq!(encode_features(&a, 24, 0.0, 1).unwrap(), encode_features(&a, 24, 0.0, 2).unwrap());
        assert_ne!(encode_features(&a, 24, 0.0, 1).unwrap(), encode_features(&b, 24, 0.0, 1).unwrap());
        let noisy = encode_features(&a, 24, 0.05, 7).unwrap();
        assert_eq!(noisy.len(), 24);
        assert_eq!(noisy, encode_features(&a, 24, 0.05, 7).unwrap());
    }

    #[test]
    fn scene_json_round_trip() {
        let scene = gen_mixed(6, 0.34, 4, &SceneParams::default()).unwrap();
        let text = scene.to_json().unwrap();
        let back = SceneSample::from_json(&text).unwrap();
        assert_eq!(back.scenario, scene.scenario);
        assert_eq!(back.parallel_count, scene.parallel_count);
        assert_eq!(back.features, scene.features);
        for (a, b) in back.poses.iter().zip(&scene.poses) {
            assert_eq!(a, b);
        }
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["cameras"][0]["R"].as_array().unwrap().len(), 9);
        assert_eq!(v["scenario"], "mixed");
    }

    #[test]
    fn stability_extremes() {
        let cf = gen_center_facing(5, 2.0, 0.0, 3, feats()).unwrap();
        let r = intersection_stability(&cf).unwrap();
        assert!(r.point_variance.unwrap() < 1e-20);
        assert_eq!(r.intersecting_fraction, 1.0);

        let par = gen_parallel(5, 1.0, 0.0, 3, feats()).unwrap();
        let r = intersection_stability(&par).unwrap();
        assert_eq!(r.degenerate_fraction, 1.0);
        assert_eq!(r.point_variance, None);

        let two = gen_center_facing(2, 2.0, 0.0, 3, feats()).unwrap();
        assert!(intersection_stability(&two).is_err());
    }
}
