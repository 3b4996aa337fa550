//! Option structs shared by clap and the `--config` JSON files. Every field is
//! optional in both places; flags win over the file, and the file wins over
//! the built-in default.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

macro_rules! options {
    (
        $(#[$meta:meta])*
        pub struct $name:ident {
            $( $(#[$fmeta:meta])* pub $field:ident : $ty:ty, )*
        }
    ) => {
        $(#[$meta])*
        #[derive(clap::Args, serde::Deserialize, Clone, Debug, Default)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            /// JSON file holding any of these options (snake_case keys); flags take precedence
            #[arg(long, value_name = "FILE")]
            #[serde(skip)]
            pub config: Option<std::path::PathBuf>,
            $( $(#[$fmeta])* #[arg(long)] pub $field: Option<$ty>, )*
        }

        impl $name {
            /// Folds in the `--config` file, if any.
            pub fn resolve(self) -> anyhow::Result<Self> {
                let Some(path) = self.config.clone() else { return Ok(self) };
                let file: Self = $crate::options::read_json(&path)?;
                Ok(Self { config: Some(path), $( $field: self.$field.or(file.$field), )* })
            }
        }
    };
}

options! {
    pub struct GenOptions {
        /// Camera layout: center-facing, mixed or parallel [default: center-facing]
        pub scenario: tgraph::Scenario,
        /// Cameras per scene, 2..=8 [default: 8]
        pub n: usize,
        /// Number of scenes [default: 64]
        pub count: usize,
        /// Base seed; scene k uses a seed derived from it [default: 0]
        pub seed: u64,
        /// Output directory [default: scenes]
        pub out: PathBuf,
        /// Center-facing radius [default: 2.0]
        pub radius: f64,
        /// Max look-at jitter of center-facing cameras, degrees [default: 5.0]
        pub look_jitter_deg: f64,
        /// Grid spacing of parallel rigs [default: 0.5]
        pub spacing: f64,
        /// Max axis tilt of parallel rigs, degrees [default: 2.0]
        pub axis_jitter_deg: f64,
        /// Share of cameras in the parallel group of mixed scenes [default: 0.25]
        pub parallel_fraction: f64,
        /// Feature vector length [default: 24]
        pub feature_dim: usize,
        /// Feature noise standard deviation [default: 0.05]
        pub noise_sigma: f64,
    }
}

options! {
    pub struct GraphOptions {
        /// Directory of scene files [default: scenes]
        pub scenes: PathBuf,
        /// relative-t or pair-t [default: pair-t]
        pub representation: tgraph::Representation,
    }
}

options! {
    pub struct TrainOptions {
        /// Directory of training scenes [default: scenes]
        pub data: PathBuf,
        /// Graph branch: none, relative-t or pair-t [default: pair-t]
        pub representation: tgraph::regressor::TrainMode,
        /// [default: 200]
        pub epochs: usize,
        /// Scenes per minibatch [default: 16]
        pub batch_size: usize,
        /// AdamW learning rate [default: 0.001]
        pub lr: f64,
        /// AdamW decoupled weight decay [default: 0.01]
        pub weight_decay: f64,
        /// Seed for initialization, shuffling and the validation split [default: 0]
        pub seed: u64,
        /// Epochs without validation improvement before stopping, 0 disables [default: 20]
        pub patience: usize,
        /// Share of scenes held out for early stopping [default: 0.125]
        pub val_fraction: f64,
        /// Hidden width of both heads [default: 128]
        pub hidden: usize,
        /// Encoder hidden width [default: 128]
        pub encoder_hidden: usize,
        /// Encoder output width [default: 64]
        pub latent_dim: usize,
        /// Checkpoint path [default: checkpoint.json]
        pub out: PathBuf,
        /// Training log CSV path [default: train_log.csv]
        pub log: PathBuf,
    }
}

options! {
    pub struct EvalOptions {
        /// Checkpoint to evaluate [default: checkpoint.json]
        pub checkpoint: PathBuf,
        /// Directory of held-out scenes [default: scenes]
        pub scenes: PathBuf,
        /// Smallest number of views [default: 2]
        pub n_min: usize,
        /// Largest number of views [default: 8]
        pub n_max: usize,
        /// Random camera subsets drawn per scene and view count [default: 1]
        pub trials: usize,
        /// Seed for camera subsampling [default: 0]
        pub seed: u64,
        /// Metrics CSV path [default: metrics.csv]
        pub out: PathBuf,
    }
}

options! {
    pub struct CompareOptions {
        /// A run as LABEL=CSV; repeat a label to pool several seeds
        pub run: Vec<String>,
        /// Also write the tables to this file
        pub out: PathBuf,
    }
}
