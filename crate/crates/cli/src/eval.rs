use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tgraph::metrics::MetricReport;
use tgraph::regressor::{baseline_predict, BaselineModel, Checkpoint};
use tgraph::synth::{derive_seed, SceneSample};
use tgraph::{CameraPose, Execution};

use crate::files::{load_scenes, write_csv};
use crate::options::EvalOptions;

/// Column order of the metrics CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub n_views: usize,
    pub rotation_acc_15: f64,
    pub center_acc_02: f64,
    pub translation_acc_02: f64,
    pub representation: String,
    pub seed: u64,
}

/// Metrics for `trials` random `n`-camera subsets of one scene. The first
/// sampled camera is the reference frame for both prediction and truth.
fn evaluate_scene(
    model: &BaselineModel,
    scene: &SceneSample,
    index: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<MetricReport>> {
    (0..trials)
        .map(|trial| {
            let stream = derive_seed(derive_seed(seed, n as u64), (index * trials + trial) as u64);
            let picked = sample(&mut ChaCha8Rng::seed_from_u64(stream), scene.n(), n).into_vec();
            let features: Vec<_> = picked.iter().map(|&k| scene.features[k].clone()).collect();
            let reference = &scene.poses[picked[0]];
            let gt: Vec<CameraPose> = picked.iter().map(|&k| scene.poses[k].relative_to(reference)).collect();
            let pred = baseline_predict(model, &features)?;
            Ok(MetricReport::evaluate(&pred, &gt)?)
        })
        .collect()
}

pub fn run(opts: EvalOptions, exec: Execution) -> Result<()> {
    let checkpoint_path = opts.checkpoint.unwrap_or_else(|| PathBuf::from("checkpoint.json"));
    let dir = opts.scenes.unwrap_or_else(|| PathBuf::from("scenes"));
    let (n_min, n_max) = (opts.n_min.unwrap_or(2), opts.n_max.unwrap_or(8));
    let trials = opts.trials.unwrap_or(1);
    let seed = opts.seed.unwrap_or(0);
    let out = opts.out.unwrap_or_else(|| PathBuf::from("metrics.csv"));
    ensure!(2 <= n_min && n_min <= n_max, "view range {n_min}..={n_max} must start at 2 or more");
    ensure!(trials > 0, "--trials must be positive");

    let text = std::fs::read_to_string(&checkpoint_path)
        .with_context(|| format!("reading checkpoint {}", checkpoint_path.display()))?;
    let checkpoint = Checkpoint::from_json(&text).context("parsing checkpoint")?;
    // inference runs the encoder and baseline head only
    let model = checkpoint.baseline();
    let scenes = load_scenes(&dir)?;
    let feature_dim = checkpoint.config.feature_dim;
    if let Some(bad) = scenes.iter().position(|s| s.features.iter().any(|f| f.len() != feature_dim)) {
        bail!("scene {bad} in {} does not carry {feature_dim}-dim features", dir.display());
    }

    let mut rows = Vec::new();
    for n in n_min..=n_max {
        let eligible: Vec<(usize, &SceneSample)> = scenes.iter().enumerate().filter(|(_, s)| s.n() >= n).collect();
        ensure!(!eligible.is_empty(), "no scene in {} has {n} cameras", dir.display());
        let per_scene = exec.map(&eligible, |(k, s)| evaluate_scene(&model, s, *k, n, trials, seed));
        let mut reports = Vec::new();
        for r in per_scene {
            reports.extend(r?);
        }
        let mean = MetricReport::mean(&reports)?;
        rows.push(EvalRow {
            n_views: n,
            rotation_acc_15: mean.rotation_acc_15,
            center_acc_02: mean.center_acc_02,
            translation_acc_02: mean.translation_acc_02,
            representation: checkpoint.mode.to_string(),
            seed,
        });
    }
    write_csv(&out, &rows)?;
    log::info!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}
