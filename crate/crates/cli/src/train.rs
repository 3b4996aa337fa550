use std::path::PathBuf;

use anyhow::{ensure, Result};
use tgraph::graph::Representation;
use tgraph::regressor::{train_joint, AdamWConfig, ModelConfig, TrainConfig, TrainMode};
use tgraph::Execution;

use crate::files::{load_scenes, write_atomic, write_csv};
use crate::options::TrainOptions;

pub fn run(opts: TrainOptions, exec: Execution) -> Result<()> {
    let data = opts.data.unwrap_or_else(|| PathBuf::from("scenes"));
    let scenes = load_scenes(&data)?;
    let feature_dim = scenes[0].features[0].len();
    ensure!(
        scenes.iter().all(|s| s.features.iter().all(|f| f.len() == feature_dim)),
        "scenes in {} have mixed feature lengths",
        data.display()
    );

    let base = TrainConfig::default();
    let model = ModelConfig {
        feature_dim,
        hidden: opts.hidden.unwrap_or(base.model.hidden),
        encoder_hidden: opts.encoder_hidden.unwrap_or(base.model.encoder_hidden),
        latent_dim: opts.latent_dim.unwrap_or(base.model.latent_dim),
    };
    let config = TrainConfig {
        mode: opts.representation.unwrap_or(TrainMode::Joint(Representation::PairT)),
        epochs: opts.epochs.unwrap_or(base.epochs),
        batch_size: opts.batch_size.unwrap_or(base.batch_size),
        optimizer: AdamWConfig {
            lr: opts.lr.unwrap_or(base.optimizer.lr),
            weight_decay: opts.weight_decay.unwrap_or(base.optimizer.weight_decay),
            ..base.optimizer
        },
        seed: opts.seed.unwrap_or(base.seed),
        patience: opts.patience.unwrap_or(base.patience),
        val_fraction: opts.val_fraction.unwrap_or(base.val_fraction),
        model,
        execution: exec,
    };
    config.validate()?;

    let out = train_joint(&scenes, &config)?;
    let checkpoint = opts.out.unwrap_or_else(|| PathBuf::from("checkpoint.json"));
    let log_path = opts.log.unwrap_or_else(|| PathBuf::from("train_log.csv"));
    write_csv(&log_path, &out.log)?;
    write_atomic(&checkpoint, out.model.to_checkpoint().to_json()?.as_bytes())?;
    log::info!(
        "trained {} on {} scenes: kept epoch {}{}, {} scenes without a graph term",
        config.mode,
        scenes.len(),
        out.best_epoch,
        if out.stopped_early { " (stopped early)" } else { "" },
        out.graphless.len()
    );
    Ok(())
}
