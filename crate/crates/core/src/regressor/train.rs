use nalgebra::Matrix3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adamw::{AdamW, AdamWConfig};
use super::mlp::{l1_subgradient, Mlp, MlpTrace};
use super::model::{JointModel, ModelConfig, TrainMode};
use super::rotation::{rotation_from_6d, rotation_from_6d_backward};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{build_graph, edge_pairs, k_factor, normalize_graph, TranslationGraph};
use crate::synth::{derive_seed, FeatureVector, SceneSample};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamWConfig,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    /// Share of scenes held out for early stopping.
    pub val_fraction: f64,
    pub model: ModelConfig,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::BaselineOnly,
            epochs: 200,
            batch_size: 16,
            optimizer: AdamWConfig::default(),
            seed: 0,
            patience: 20,
            val_fraction: 0.125,
            model: ModelConfig::default(),
            execution: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.model.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::InvalidInput(format!("val_fraction must be in [0, 1), got {}", self.val_fraction)));
        }
        Ok(())
    }
}

/// One CSV log row. Row 0 holds the losses of the initial parameters; later
/// rows average the per-scene losses seen during that epoch's updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub l_ori: f64,
    pub l_tgraph: f64,
    pub l_full: f64,
    /// Mean pose loss on the held-out scenes (NaN without a held-out split).
    pub val_metric: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: JointModel,
    pub log: Vec<EpochLog>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    /// Scenes trained without a graph term because their graph was degenerate.
    pub graphless: Vec<usize>,
}

struct Prepared<'a> {
    features: &'a [FeatureVector],
    /// Target rotation and translation of each camera relative to camera 0.
    targets: Vec<(Matrix3<f64>, [f64; 3])>,
    graph: Option<(TranslationGraph, f64)>,
}

struct Grads {
    encoder: Vec<f64>,
    baseline: Vec<f64>,
    tgraph: Vec<f64>,
}

impl Grads {
    fn zeros(model: &JointModel) -> Self {
        Self {
            encoder: vec![0.0; model.baseline.encoder.num_params()],
            baseline: vec![0.0; model.baseline.head.num_params()],
            tgraph: vec![0.0; model.tgraph_head.as_ref().map_or(0, Mlp::num_params)],
        }
    }

    fn add_assign(&mut self, other: &Grads) {
        for (a, b) in [
            (&mut self.encoder, &other.encoder),
            (&mut self.baseline, &other.baseline),
            (&mut self.tgraph, &other.tgraph),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, s: f64) {
        for v in [&mut self.encoder, &mut self.baseline, &mut self.tgraph] {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }
}

fn prepare<'a>(scene: &'a SceneSample, index: usize, config: &TrainConfig) -> Result<Prepared<'a>> {
    scene.validate()?;
    let width = scene.features[0].len();
    if width != config.model.feature_dim {
        return Err(Error::LengthMismatch { expected: config.model.feature_dim, found: width });
    }
    let p0 = &scene.poses[0];
    let targets = scene
        .poses
        .iter()
        .map(|p| {
            let rel = p.rotation() * p0.rotation().transpose();
            let t = p.translation() - rel * p0.translation();
            (rel, [t.x, t.y, t.z])
        })
        .collect();
    let graph = match config.mode.representation() {
        None => None,
        Some(repr) => match build_graph(&scene.poses, repr).and_then(|g| normalize_graph(&g)) {
            Ok(g) => Some((g, k_factor(scene.n(), repr)?)),
            Err(e @ (Error::DegeneratePair { .. } | Error::DegenerateScale { .. })) => {
                log::warn!("scene {index}: {e}; training it without the graph term");
                None
            }
            Err(e) => return Err(e),
        },
    };
    Ok(Prepared { features: &scene.features, targets, graph })
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// Losses of one scene, accumulating parameter gradients when `grads` is given.
fn scene_pass(
    model: &JointModel,
    scene: &Prepared,
    with_tgraph: bool,
    mut grads: Option<&mut Grads>,
) -> Result<(f64, f64)> {
    let encoder = &model.baseline.encoder;
    let head = &model.baseline.head;
    let n = scene.features.len();
    let latent = encoder.output_dim();
    let traces: Vec<MlpTrace> =
        scene.features.iter().map(|f| encoder.forward_traced(f.as_slice())).collect::<Result<_>>()?;
    let mut d_latent = vec![vec![0.0; latent]; n];
    let add_latent = |d_lat: &mut Vec<Vec<f64>>, d_in: &[f64], i: usize, j: usize| {
        for (a, b) in d_lat[i].iter_mut().zip(&d_in[..latent]) {
            *a += b;
        }
        for (a, b) in d_lat[j].iter_mut().zip(&d_in[latent..]) {
            *a += b;
        }
    };

    let inv_n = 1.0 / n as f64;
    let mut l_ori = 0.0;
    for (m, (target_r, target_t)) in scene.targets.iter().enumerate() {
        let trace = head.forward_traced(&concat(&traces[0].output, &traces[m].output))?;
        let raw = &trace.output;
        let r6: [f64; 6] = raw[..6].try_into().expect("nine outputs");
        let rotation = rotation_from_6d(&r6);
        if rotation.is_none() {
            log::warn!("degenerate rotation output for camera {m}; using identity");
        }
        let r = rotation.unwrap_or_else(Matrix3::identity);
        let mut d_rot = Matrix3::zeros();
        for row in 0..3 {
            for col in 0..3 {
                let e = r[(row, col)] - target_r[(row, col)];
                l_ori += e.abs();
                d_rot[(row, col)] = inv_n * l1_subgradient(e);
            }
        }
        let mut d_out = [0.0; 9];
        if rotation.is_some() {
            d_out[..6].copy_from_slice(&rotation_from_6d_backward(&r6, &d_rot));
        }
        for k in 0..3 {
            let e = raw[6 + k] - target_t[k];
            l_ori += e.abs();
            d_out[6 + k] = inv_n * l1_subgradient(e);
        }
        if let Some(g) = grads.as_deref_mut() {
            let d_in = head.backward(&trace, &d_out, &mut g.baseline);
            add_latent(&mut d_latent, &d_in, 0, m);
        }
    }
    l_ori *= inv_n;

    let mut l_tgraph = 0.0;
    if let (true, Some(tg_head), Some((gt, k))) = (with_tgraph, &model.tgraph_head, &scene.graph) {
        for (edge, (i, j)) in gt.edges.iter().zip(edge_pairs(n)) {
            let trace = tg_head.forward_traced(&concat(&traces[i].output, &traces[j].output))?;
            let d_out: Vec<f64> = trace
                .output
                .iter()
                .zip(&edge.payload)
                .map(|(p, g)| {
                    l_tgraph += (p - g).abs();
                    k * l1_subgradient(p - g)
                })
                .collect();
            if let Some(g) = grads.as_deref_mut() {
                let d_in = tg_head.backward(&trace, &d_out, &mut g.tgraph);
                add_latent(&mut d_latent, &d_in, i, j);
            }
        }
        l_tgraph *= k;
    }

    if let Some(g) = grads {
        for (trace, d) in traces.iter().zip(&d_latent) {
            encoder.backward(trace, d, &mut g.encoder);
        }
    }
    Ok((l_ori, l_tgraph))
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::Numerical(_) => Error::Diverged { epoch, l_ori: f64::NAN, l_tgraph: f64::NAN },
        other => other,
    }
}

/// Mean losses over `indices`, summed in index order.
fn mean_losses(
    model: &JointModel,
    scenes: &[Prepared],
    indices: &[usize],
    with_tgraph: bool,
    exec: Execution,
) -> Result<(f64, f64)> {
    if indices.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let per_scene = exec.map(indices, |&s| scene_pass(model, &scenes[s], with_tgraph, None));
    let (mut a, mut b) = (0.0, 0.0);
    for r in per_scene {
        let (l_ori, l_tg) = r?;
        a += l_ori;
        b += l_tg;
    }
    let m = indices.len() as f64;
    Ok((a / m, b / m))
}

fn split(n: usize, config: &TrainConfig) -> (Vec<usize>, Vec<usize>) {
    let n_val = ((config.val_fraction * n as f64).floor() as usize).min(n.saturating_sub(1));
    let mut order: Vec<usize> = (0..n).collect();
    if n_val > 0 {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 21)));
    }
    let mut val = order[..n_val].to_vec();
    let mut train = order[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    (train, val)
}

/// Trains encoder, baseline head and (in joint mode) the translation-graph
/// head on `L_full = L_ori + L_tgraph` with AdamW.
pub fn train_joint(dataset: &[SceneSample], config: &TrainConfig) -> Result<TrainOutput> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    config.validate()?;
    let exec = config.execution;
    let prepared: Vec<Prepared> =
        dataset.iter().enumerate().map(|(s, scene)| prepare(scene, s, config)).collect::<Result<_>>()?;
    let graphless: Vec<usize> = if config.mode.representation().is_some() {
        prepared.iter().enumerate().filter(|(_, p)| p.graph.is_none()).map(|(s, _)| s).collect()
    } else {
        Vec::new()
    };
    let (train_idx, val_idx) = split(dataset.len(), config);

    let mut model = JointModel::init(&config.model, config.mode, config.seed)?;
    let mut opt_encoder = AdamW::new(config.optimizer, model.baseline.encoder.num_params());
    let mut opt_baseline = AdamW::new(config.optimizer, model.baseline.head.num_params());
    let mut opt_tgraph = AdamW::new(config.optimizer, model.tgraph_head.as_ref().map_or(0, Mlp::num_params));

    let record = |epoch: usize, l_ori: f64, l_tgraph: f64, val: f64| -> Result<EpochLog> {
        if !(l_ori.is_finite() && l_tgraph.is_finite()) {
            return Err(Error::Diverged { epoch, l_ori, l_tgraph });
        }
        Ok(EpochLog { epoch, l_ori, l_tgraph, l_full: l_ori + l_tgraph, val_metric: val })
    };

    let (l_ori, l_tg) = mean_losses(&model, &prepared, &train_idx, true, exec).map_err(|e| diverged(0, e))?;
    let (val0, _) = mean_losses(&model, &prepared, &val_idx, false, exec).map_err(|e| diverged(0, e))?;
    let mut log = vec![record(0, l_ori, l_tg, val0)?];
    let mut best = (val0, 0, model.clone());
    let mut stopped_early = false;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 20));
    let mut order = train_idx.clone();
    let mut scene_losses = vec![(0.0, 0.0); dataset.len()];
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let results = exec.map(batch, |&s| {
                let mut g = Grads::zeros(&model);
                scene_pass(&model, &prepared[s], true, Some(&mut g)).map(|l| (l, g))
            });
            let mut total = Grads::zeros(&model);
            for (&s, r) in batch.iter().zip(results) {
                let (losses, g) = r.map_err(|e| diverged(epoch, e))?;
                scene_losses[s] = losses;
                total.add_assign(&g);
            }
            total.scale(1.0 / batch.len() as f64);
            opt_encoder.step(model.baseline.encoder.params_mut(), &total.encoder)?;
            opt_baseline.step(model.baseline.head.params_mut(), &total.baseline)?;
            if let Some(head) = model.tgraph_head.as_mut() {
                opt_tgraph.step(head.params_mut(), &total.tgraph)?;
            }
        }
        let m = train_idx.len() as f64;
        let l_ori = train_idx.iter().map(|&s| scene_losses[s].0).sum::<f64>() / m;
        let l_tg = train_idx.iter().map(|&s| scene_losses[s].1).sum::<f64>() / m;
        let (val, _) = mean_losses(&model, &prepared, &val_idx, false, exec).map_err(|e| diverged(epoch, e))?;
        log.push(record(epoch, l_ori, l_tg, val)?);

        if val_idx.is_empty() {
            continue;
        }
        if val < best.0 {
            best = (val, epoch, model.clone());
        } else if config.patience > 0 && epoch - best.1 >= config.patience {
            log::info!("early stop at epoch {epoch}; best epoch {}", best.1);
            stopped_early = true;
            break;
        }
    }

    let best_epoch = if val_idx.is_empty() {
        config.epochs
    } else {
        model = best.2;
        best.1
    };
    Ok(TrainOutput { model, log, best_epoch, stopped_early, train_indices: train_idx, val_indices: val_idx, graphless })
}

/// Batch losses and gradients for one scene set, exposed for checking.
#[doc(hidden)]
pub fn scene_losses(model: &JointModel, scene: &SceneSample) -> Result<(f64, f64)> {
    let config = TrainConfig { mode: model.mode, model: model.config, ..Default::default() };
    let prepared = prepare(scene, 0, &config)?;
    scene_pass(model, &prepared, true, None)
}
