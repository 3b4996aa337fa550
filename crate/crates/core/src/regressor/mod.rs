//! Shared feature encoder, the per-camera baseline pose head, the six-layer
//! translation-graph head, and their joint training.

pub mod adamw;
pub mod mlp;
pub mod model;
pub mod rotation;
pub mod train;

pub use adamw::{AdamW, AdamWConfig};
pub use mlp::{mlp_grad, Mlp, MlpTrace};
pub use model::{baseline_predict, tgraph_forward, BaselineModel, Checkpoint, JointModel, ModelConfig, TrainMode};
pub use rotation::{rotation_from_6d, rotation_from_6d_backward, rotation_to_6d};
pub use train::{train_joint, EpochLog, TrainConfig, TrainOutput};
