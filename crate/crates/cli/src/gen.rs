use std::path::PathBuf;

use anyhow::{Context, Result};
use tgraph::synth::{derive_seed, generate, SceneParams};
use tgraph::{Execution, Scenario};

use crate::files::write_atomic;
use crate::options::GenOptions;

pub fn run(opts: GenOptions, exec: Execution) -> Result<()> {
    let defaults = SceneParams::default();
    let params = SceneParams {
        radius: opts.radius.unwrap_or(defaults.radius),
        look_jitter_deg: opts.look_jitter_deg.unwrap_or(defaults.look_jitter_deg),
        spacing: opts.spacing.unwrap_or(defaults.spacing),
        axis_jitter_deg: opts.axis_jitter_deg.unwrap_or(defaults.axis_jitter_deg),
        parallel_fraction: opts.parallel_fraction.unwrap_or(defaults.parallel_fraction),
        feature_dim: opts.feature_dim.unwrap_or(defaults.feature_dim),
        noise_sigma: opts.noise_sigma.unwrap_or(defaults.noise_sigma),
    };
    let scenario = opts.scenario.unwrap_or(Scenario::CenterFacing);
    let n = opts.n.unwrap_or(8);
    let count = opts.count.unwrap_or(64);
    let seed = opts.seed.unwrap_or(0);
    let out = opts.out.unwrap_or_else(|| PathBuf::from("scenes"));
    anyhow::ensure!(count > 0, "--count must be positive");

    // everything is generated before the first write, so bad parameters leave
    // no partial output behind
    let scenes = exec.map_range(count, |k| generate(scenario, n, derive_seed(seed, k as u64), &params));
    let mut texts = Vec::with_capacity(count);
    for scene in scenes {
        texts.push(scene.context("generating scenes")?.to_json()?);
    }
    for (k, text) in texts.iter().enumerate() {
        write_atomic(&out.join(format!("scene_{k:05}.json")), text.as_bytes())?;
    }
    log::info!("wrote {count} {scenario} scenes with {n} cameras to {}", out.display());
    Ok(())
}
