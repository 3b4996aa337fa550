use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

use crate::eval::EvalRow;
use crate::files::write_atomic;
use crate::options::CompareOptions;

/// One labelled run: per view count, the mean of each metric over seeds.
struct Run {
    label: String,
    means: BTreeMap<usize, [f64; 3]>,
}

const METRICS: [&str; 3] = ["rotation_acc_15", "center_acc_02", "translation_acc_02"];

fn read_rows(path: &Path) -> Result<Vec<EvalRow>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<EvalRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    ensure!(!rows.is_empty(), "{} has no rows", path.display());
    Ok(rows)
}

fn parse_runs(specs: &[String]) -> Result<Vec<Run>> {
    let mut grouped: Vec<(String, Vec<EvalRow>)> = Vec::new();
    for spec in specs {
        let Some((label, path)) = spec.split_once('=') else {
            bail!("run `{spec}` is not of the form LABEL=CSV");
        };
        let rows = read_rows(Path::new(path))?;
        match grouped.iter_mut().find(|(l, _)| l == label) {
            Some((_, all)) => all.extend(rows),
            None => grouped.push((label.to_owned(), rows)),
        }
    }
    Ok(grouped
        .into_iter()
        .map(|(label, rows)| {
            let mut sums: BTreeMap<usize, ([f64; 3], usize)> = BTreeMap::new();
            for r in rows {
                let entry = sums.entry(r.n_views).or_default();
                for (s, v) in entry.0.iter_mut().zip([r.rotation_acc_15, r.center_acc_02, r.translation_acc_02]) {
                    *s += v;
                }
                entry.1 += 1;
            }
            let means = sums.into_iter().map(|(n, (s, c))| (n, s.map(|v| v / c as f64))).collect();
            Run { label, means }
        })
        .collect())
}

/// One table per metric with a column per view count. The best value in each
/// column is starred, ties included. Center accuracy is trivially 1 at two views, so its
/// table starts at three.
fn render(runs: &[Run]) -> String {
    let views: Vec<usize> = runs[0].means.keys().copied().collect();
    let width = runs.iter().map(|r| r.label.len()).max().unwrap_or(0).max(3);
    let mut text = String::new();
    for (m, metric) in METRICS.iter().enumerate() {
        let columns: Vec<usize> = views.iter().copied().filter(|&n| m != 1 || n >= 3).collect();
        let _ = writeln!(text, "{metric}");
        let _ = write!(text, "{:<width$}", "run");
        for n in &columns {
            let _ = write!(text, " {:>9}", format!("n={n}"));
        }
        let _ = writeln!(text);
        for run in runs {
            let _ = write!(text, "{:<width$}", run.label);
            for n in &columns {
                let v = run.means[n][m];
                let best = runs.iter().map(|r| r.means[n][m]).fold(f64::NEG_INFINITY, f64::max);
                let star = if best - v <= 1e-12 { "*" } else { " " };
                let _ = write!(text, " {:>8.4}{star}", v);
            }
            let _ = writeln!(text);
        }
        let _ = writeln!(text);
    }
    text
}

pub fn run(opts: CompareOptions) -> Result<()> {
    let specs = opts.run.unwrap_or_default();
    let runs = parse_runs(&specs)?;
    ensure!(runs.len() >= 2, "compare needs at least two differently labelled runs");
    let views: Vec<usize> = runs[0].means.keys().copied().collect();
    for run in &runs[1..] {
        let other: Vec<usize> = run.means.keys().copied().collect();
        ensure!(
            other == views,
            "incompatible view counts: `{}` covers {:?}, `{}` covers {:?}",
            runs[0].label,
            views,
            run.label,
            other
        );
    }
    let text = render(&runs);
    print!("{text}");
    if let Some(out) = opts.out {
        let out: PathBuf = out;
        write_atomic(&out, text.as_bytes())?;
    }
    Ok(())
}
