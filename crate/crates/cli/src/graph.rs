use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;
use tgraph::graph::{build_graph, k_factor, normalize_graph, Representation, TranslationGraph};
use tgraph::Execution;

use crate::files::{load_scene, scene_paths, write_atomic};
use crate::options::GraphOptions;

#[derive(Serialize)]
struct GraphFile<'a> {
    scene: &'a str,
    k_factor: f64,
    graph: TranslationGraph,
}

fn export(path: &Path, representation: Representation) -> Result<PathBuf> {
    let scene = load_scene(path)?;
    let graph = normalize_graph(&build_graph(&scene.poses, representation)?)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let file = GraphFile { scene: name, k_factor: k_factor(scene.n(), representation)?, graph };
    let stem = path.file_stem().and_then(|n| n.to_str()).unwrap_or_default();
    let target = path.with_file_name(format!("{stem}.{representation}.graph.json"));
    write_atomic(&target, serde_json::to_string_pretty(&file)?.as_bytes())?;
    Ok(target)
}

/// Returns the number of skipped scenes.
pub fn run(opts: GraphOptions, exec: Execution) -> Result<usize> {
    let dir = opts.scenes.unwrap_or_else(|| PathBuf::from("scenes"));
    let representation = opts.representation.unwrap_or(Representation::PairT);
    let paths = scene_paths(&dir)?;
    let results = exec.map(&paths, |p| export(p, representation));
    let mut skipped = 0;
    for (path, result) in paths.iter().zip(results) {
        if let Err(e) = result {
            eprintln!("skipped {}: {e:#}", path.display());
            skipped += 1;
        }
    }
    log::info!("wrote {} {representation} graphs, skipped {skipped}", paths.len() - skipped);
    Ok(skipped)
}
