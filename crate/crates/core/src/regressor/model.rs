use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::rotation::rotation_from_6d;
use crate::error::{Error, Result};
use crate::geometry::CameraPose;
use crate::graph::{edge_pairs, Representation, TranslationGraph};
use crate::synth::{derive_seed, FeatureVector};

/// Hidden layers in the translation head; with the output layer that makes
/// six weight layers.
pub const TGRAPH_HIDDEN_LAYERS: usize = 5;
/// Raw outputs per camera from the baseline head: two rotation columns and a
/// translation.
pub const BASELINE_OUTPUTS: usize = 9;
pub const CHECKPOINT_FORMAT: &str = "tgraph-checkpoint-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub feature_dim: usize,
    pub latent_dim: usize,
    pub encoder_hidden: usize,
    pub hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { feature_dim: 24, latent_dim: 64, encoder_hidden: 128, hidden: 128 }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.feature_dim, self.latent_dim, self.encoder_hidden, self.hidden].contains(&0) {
            return Err(Error::InvalidInput(format!("model widths must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn encoder_dims(&self) -> Vec<usize> {
        vec![self.feature_dim, self.encoder_hidden, self.latent_dim]
    }

    pub fn baseline_dims(&self) -> Vec<usize> {
        vec![2 * self.latent_dim, self.hidden, self.hidden, BASELINE_OUTPUTS]
    }

    pub fn tgraph_dims(&self, representation: Representation) -> Vec<usize> {
        let mut dims = vec![2 * self.latent_dim];
        dims.extend([self.hidden; TGRAPH_HIDDEN_LAYERS]);
        dims.push(representation.payload_len());
        dims
    }
}

/// Whether a translation-graph branch trains alongside the baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TrainMode {
    BaselineOnly,
    Joint(Representation),
}

impl TrainMode {
    pub fn representation(self) -> Option<Representation> {
        match self {
            TrainMode::BaselineOnly => None,
            TrainMode::Joint(r) => Some(r),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::BaselineOnly => "none",
            TrainMode::Joint(r) => r.as_str(),
        }
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TrainMode::BaselineOnly),
            other => other.parse().map(TrainMode::Joint),
        }
    }
}

impl From<TrainMode> for String {
    fn from(m: TrainMode) -> Self {
        m.as_str().to_owned()
    }
}

impl TryFrom<String> for TrainMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// Shared translation regressor applied to one edge: the head sees `f_i || f_j`.
pub fn tgraph_forward(
    model: &Mlp,
    f_i: &FeatureVector,
    f_j: &FeatureVector,
    representation: Representation,
) -> Result<Vec<f64>> {
    if model.input_dim() != f_i.len() + f_j.len() || f_i.len() != f_j.len() {
        return Err(Error::Contract(format!(
            "head expects {} inputs, got features of width {} and {}",
            model.input_dim(),
            f_i.len(),
            f_j.len()
        )));
    }
    if model.output_dim() != representation.payload_len() {
        return Err(Error::Contract(format!(
            "head emits {} values but {representation} payloads have {}",
            model.output_dim(),
            representation.payload_len()
        )));
    }
    model.forward(&concat(f_i.as_slice(), f_j.as_slice()))
}

/// Pose from the nine raw baseline outputs. Degenerate rotation columns fall
/// back to the identity.
pub(crate) fn decode_pose(raw: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let r6: [f64; 6] = raw[..6].try_into().expect("nine outputs");
    let rotation = rotation_from_6d(&r6).unwrap_or_else(|| {
        log::warn!("degenerate rotation output {r6:?}; using identity");
        Matrix3::identity()
    });
    (rotation, Vector3::new(raw[6], raw[7], raw[8]))
}

/// Encoder plus the per-camera pose head. This is all that runs at inference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineModel {
    pub encoder: Mlp,
    pub head: Mlp,
}

impl BaselineModel {
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut enc_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 10));
        let mut head_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 11));
        Ok(Self {
            encoder: Mlp::he_uniform(&config.encoder_dims(), &mut enc_rng)?,
            head: Mlp::he_uniform(&config.baseline_dims(), &mut head_rng)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.head.input_dim() != 2 * self.encoder.output_dim() || self.head.output_dim() != BASELINE_OUTPUTS {
            return Err(Error::Contract(format!(
                "baseline head dims {:?} do not fit encoder dims {:?}",
                self.head.dims(),
                self.encoder.dims()
            )));
        }
        Ok(())
    }

    pub fn encode(&self, features: &[FeatureVector]) -> Result<Vec<FeatureVector>> {
        features.iter().map(|f| self.encoder.forward(f.as_slice()).map(FeatureVector)).collect()
    }

    /// Raw head outputs for camera `m`, conditioned on camera 0.
    pub(crate) fn head_raw(&self, latents: &[FeatureVector], m: usize) -> Result<Vec<f64>> {
        self.head.forward(&concat(latents[0].as_slice(), latents[m].as_slice()))
    }
}

/// Per-camera poses for one scene, expressed in camera 0's frame.
pub fn baseline_predict(model: &BaselineModel, features: &[FeatureVector]) -> Result<Vec<CameraPose>> {
    if features.is_empty() {
        return Err(Error::InvalidInput("no features".into()));
    }
    model.validate()?;
    let latents = model.encode(features)?;
    let raw: Vec<_> =
        (0..latents.len()).map(|m| model.head_raw(&latents, m).map(|r| decode_pose(&r))).collect::<Result<_>>()?;
    let (r0, t0) = raw[0];
    raw.iter()
        .map(|(r, t)| {
            let rel = r * r0.transpose();
            let trans = t - rel * t0;
            CameraPose::new(rel, trans)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointModel {
    pub config: ModelConfig,
    pub mode: TrainMode,
    pub baseline: BaselineModel,
    pub tgraph_head: Option<Mlp>,
}

impl JointModel {
    pub fn init(config: &ModelConfig, mode: TrainMode, seed: u64) -> Result<Self> {
        let baseline = BaselineModel::init(config, seed)?;
        let tgraph_head = mode
            .representation()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 12));
                Mlp::he_uniform(&config.tgraph_dims(r), &mut rng)
            })
            .transpose()?;
        Ok(Self { config: *config, mode, baseline, tgraph_head })
    }

    pub fn into_parts(self) -> (BaselineModel, Option<Mlp>) {
        (self.baseline, self.tgraph_head)
    }

    /// Predicted translation graph in normalized units.
    pub fn tgraph_predict(&self, features: &[FeatureVector]) -> Result<TranslationGraph> {
        let (Some(head), Some(repr)) = (&self.tgraph_head, self.mode.representation()) else {
            return Err(Error::Contract("model has no translation-graph head".into()));
        };
        let latents = self.baseline.encode(features)?;
        let payloads = edge_pairs(latents.len())
            .map(|(i, j)| tgraph_forward(head, &latents[i], &latents[j], repr))
            .collect::<Result<Vec<_>>>()?;
        let mut graph = TranslationGraph::from_payloads(latents.len(), repr, payloads)?;
        graph.normalized = true;
        Ok(graph)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_owned(),
            mode: self.mode,
            config: self.config,
            encoder: self.baseline.encoder.clone(),
            baseline_head: self.baseline.head.clone(),
            tgraph_head: self.tgraph_head.clone(),
        }
    }
}

/// On-disk model. The translation head is optional: inference never reads it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub mode: TrainMode,
    pub config: ModelConfig,
    pub encoder: Mlp,
    pub baseline_head: Mlp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgraph_head: Option<Mlp>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Contract(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::InvalidInput(format!("unsupported checkpoint format `{}`", ckpt.format)));
        }
        ckpt.baseline().validate()?;
        Ok(ckpt)
    }

    pub fn baseline(&self) -> BaselineModel {
        BaselineModel { encoder: self.encoder.clone(), head: self.baseline_head.clone() }
    }

    pub fn without_tgraph_head(mut self) -> Self {
        self.tgraph_head = None;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_head_gives_zero_payload() {
        let head = Mlp::zeros(&[4, 3, 3]).unwrap();
        let f = FeatureVector(vec![1.0, 2.0]);
        let out = tgraph_forward(&head, &f, &f, Representation::RelativeT).unwrap();
        assert_eq!(out, vec![0.0; 3]);
    }

    #[test]
    fn identity_head_copies_inputs() {
        // d_f = 1, one layer [2 -> 6]: out = (x_i, x_j, 0, 0, 0, 0)
        let mut w = vec![0.0; 12];
        w[0] = 1.0;
        w[3] = 1.0;
        let mut params = w;
        params.extend([0.0; 6]);
        let head = Mlp::from_params(&[2, 6], params).unwrap();
        let out = tgraph_forward(&head, &FeatureVector(vec![0.5]), &FeatureVector(vec![-2.0]), Representation::PairT)
            .unwrap();
        assert_eq!(out, vec![0.5, -2.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn forward_width_mismatch() {
        let head = Mlp::zeros(&[4, 3]).unwrap();
        let f = FeatureVector(vec![1.0; 3]);
        assert!(matches!(tgraph_forward(&head, &f, &f, Representation::RelativeT), Err(Error::Contract(_))));
        let g = FeatureVector(vec![1.0; 2]);
        assert!(matches!(tgraph_forward(&head, &g, &g, Representation::PairT), Err(Error::Contract(_))));
    }

    #[test]
    fn identity_raw_outputs_give_identity_poses() {
        let encoder = Mlp::zeros(&[12, 4, 2]).unwrap();
        let mut head = Mlp::zeros(&[4, 9]).unwrap();
        let (_, b) = head.layer_mut(0);
        b.copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let model = BaselineModel { encoder, head };
        let poses = baseline_predict(&model, &vec![FeatureVector(vec![0.3; 12]); 3]).unwrap();
        for p in poses {
            assert_eq!(p, CameraPose::identity());
        }
    }

    #[test]
    fn degenerate_outputs_fall_back_to_identity() {
        let model = BaselineModel { encoder: Mlp::zeros(&[12, 4, 2]).unwrap(), head: Mlp::zeros(&[4, 9]).unwrap() };
        let poses = baseline_predict(&model, &vec![FeatureVector(vec![1.0; 12]); 2]).unwrap();
        assert_eq!(poses[1], CameraPose::identity());
    }

    #[test]
    fn first_camera_is_canonical() {
        let model = BaselineModel::init(&ModelConfig { hidden: 16, ..Default::default() }, 3).unwrap();
        let feats: Vec<_> = (0..4).map(|m| FeatureVector((0..24).map(|k| (k * m) as f64 * 0.01).collect())).collect();
        let poses = baseline_predict(&model, &feats).unwrap();
        assert!((poses[0].rotation() - Matrix3::identity()).abs().max() < 1e-12);
        assert!(poses[0].translation().norm() < 1e-12);
        assert_eq!(poses, baseline_predict(&model, &feats).unwrap());
    }

    #[test]
    fn mode_strings() {
        for s in ["none", "relative-t", "pair-t"] {
            assert_eq!(s.parse::<TrainMode>().unwrap().to_string(), s);
        }
        assert!("both".parse::<TrainMode>().is_err());
    }

    #[test]
    fn head_depth_and_independent_inits() {
        let cfg = ModelConfig::default();
        let m = JointModel::init(&cfg, TrainMode::Joint(Representation::PairT), 5).unwrap();
        let head = m.tgraph_head.as_ref().unwrap();
        assert_eq!(head.num_layers(), 6);
        assert_eq!(head.dims(), &[128, 128, 128, 128, 128, 128, 6]);
        let b = JointModel::init(&cfg, TrainMode::BaselineOnly, 5).unwrap();
        assert_eq!(m.baseline, b.baseline);
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = ModelConfig { hidden: 8, encoder_hidden: 8, latent_dim: 4, feature_dim: 12 };
        let m = JointModel::init(&cfg, TrainMode::Joint(Representation::RelativeT), 1).unwrap();
        let text = m.to_checkpoint().to_json().unwrap();
        let back = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back, m.to_checkpoint());
        let stripped = back.without_tgraph_head().to_json().unwrap();
        assert!(!stripped.contains("tgraph_head"));
        assert!(Checkpoint::from_json(&stripped).unwrap().tgraph_head.is_none());
    }
}
