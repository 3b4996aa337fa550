//! The fully-connected translation graph, its per-scene normalization, and the
//! balanced L1 loss.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pair_t, relative_t, CameraPose};

/// Normalization refuses graphs whose largest translation is below this.
pub const MIN_NORM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Representation {
    #[serde(rename = "relative-t")]
    RelativeT,
    #[serde(rename = "pair-t")]
    PairT,
}

impl Representation {
    /// Number of 3-vectors carried by one edge.
    pub fn vectors_per_edge(self) -> usize {
        match self {
            Representation::RelativeT => 1,
            Representation::PairT => 2,
        }
    }

    pub fn payload_len(self) -> usize {
        3 * self.vectors_per_edge()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Representation::RelativeT => "relative-t",
            Representation::PairT => "pair-t",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative-t" => Ok(Representation::RelativeT),
            "pair-t" => Ok(Representation::PairT),
            other => Err(Error::InvalidInput(format!("unknown representation `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub payload: Vec<f64>,
}

impl Edge {
    pub fn vectors(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        self.payload.chunks_exact(3).map(Vector3::from_column_slice)
    }
}

/// Complete graph over `n` cameras. Edges are stored once per unordered pair,
/// in `(0,1), (0,2), .., (n-2,n-1)` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationGraph {
    pub n: usize,
    pub representation: Representation,
    pub normalized: bool,
    pub norm_divisor: f64,
    pub edges: Vec<Edge>,
}

/// `C(n, 2)`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Canonical `i < j` pairs in edge order.
pub fn edge_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

impl TranslationGraph {
    /// Wraps per-edge payloads (in canonical edge order) as an unnormalized graph.
    pub fn from_payloads(n: usize, representation: Representation, payloads: Vec<Vec<f64>>) -> Result<Self> {
        if payloads.len() != pair_count(n) {
            return Err(Error::LengthMismatch { expected: pair_count(n), found: payloads.len() });
        }
        let edges = edge_pairs(n).zip(payloads).map(|((i, j), payload)| Edge { i, j, payload }).collect();
        let graph = Self { n, representation, normalized: false, norm_divisor: 1.0, edges };
        graph.validate()?;
        Ok(graph)
    }

    /// Checks edge count, canonical ordering, payload widths and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("graph needs at least 2 cameras, got {}", self.n)));
        }
        if self.edges.len() != pair_count(self.n) {
            return Err(Error::LengthMismatch { expected: pair_count(self.n), found: self.edges.len() });
        }
        let width = self.representation.payload_len();
        for (edge, (i, j)) in self.edges.iter().zip(edge_pairs(self.n)) {
            if (edge.i, edge.j) != (i, j) {
                return Err(Error::Contract(format!(
                    "edge ({}, {}) found where ({i}, {j}) was expected",
                    edge.i, edge.j
                )));
            }
            if edge.payload.len() != width {
                return Err(Error::LengthMismatch { expected: width, found: edge.payload.len() });
            }
            if !edge.payload.iter().all(|v| v.is_finite()) {
                return Err(Error::Numerical(format!("edge ({i}, {j}) payload is not finite")));
            }
        }
        if !(self.norm_divisor.is_finite() && self.norm_divisor > 0.0) {
            return Err(Error::Contract(format!("norm_divisor must be positive, got {}", self.norm_divisor)));
        }
        Ok(())
    }

    /// Largest L2 norm over every constituent 3-vector.
    pub fn max_vector_norm(&self) -> f64 {
        self.edges.iter().flat_map(Edge::vectors).map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn payload(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.edges.iter().find(|e| e.i == i && e.j == j).map(|e| e.payload.as_slice())
    }
}

/// Ground-truth graph for a set of poses.
///
/// Relative-t edges carry `t_{i->j}`; pair-t edges carry `t_ki || t_kj`.
pub fn build_graph(poses: &[CameraPose], representation: Representation) -> Result<TranslationGraph> {
    let n = poses.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("graph needs at least 2 cameras, got {n}")));
    }
    let payloads = edge_pairs(n)
        .map(|(i, j)| match representation {
            Representation::RelativeT => {
                let t = relative_t(&poses[i], &poses[j]).translation;
                Ok(vec![t.x, t.y, t.z])
            }
            Representation::PairT => pair_t(&poses[i], &poses[j]).map(|p| p.payload().to_vec()).map_err(|e| match e {
                Error::DegenerateAxes { .. } => Error::DegeneratePair { i, j },
                other => other,
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    TranslationGraph::from_payloads(n, representation, payloads)
}

/// Divides every 3-vector by the largest 3-vector norm in the graph.
pub fn normalize_graph(graph: &TranslationGraph) -> Result<TranslationGraph> {
    if graph.normalized {
        return Err(Error::Contract("graph is already normalized".into()));
    }
    let max_norm = graph.max_vector_norm();
    if !(max_norm >= MIN_NORM) {
        return Err(Error::DegenerateScale { max_norm });
    }
    let edges = graph
        .edges
        .iter()
        .map(|e| Edge { i: e.i, j: e.j, payload: e.payload.iter().map(|v| v / max_norm).collect() })
        .collect();
    Ok(TranslationGraph {
        n: graph.n,
        representation: graph.representation,
        normalized: true,
        norm_divisor: max_norm,
        edges,
    })
}

/// Loss weight that makes the graph's vector-term count match the view count:
/// `n / (2 C(n,2))` for pair-t and `n / C(n,2)` for relative-t.
pub fn k_factor(n: usize, representation: Representation) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("k factor needs n >= 2, got {n}")));
    }
    let terms = representation.vectors_per_edge() * pair_count(n);
    Ok(n as f64 / terms as f64)
}

fn check_compatible(pred: &TranslationGraph, gt: &TranslationGraph) -> Result<()> {
    if pred.n != gt.n {
        return Err(Error::Contract(format!("camera count mismatch: {} vs {}", pred.n, gt.n)));
    }
    if pred.representation != gt.representation {
        return Err(Error::Contract(format!(
            "representation mismatch: {} vs {}",
            pred.representation, gt.representation
        )));
    }
    pred.validate()?;
    gt.validate()
}

/// `k * sum_edges |pred - gt|_1`.
pub fn t_graph_loss(pred: &TranslationGraph, gt: &TranslationGraph) -> Result<f64> {
    check_compatible(pred, gt)?;
    let k = k_factor(gt.n, gt.representation)?;
    let sum: f64 = pred
        .edges
        .iter()
        .zip(&gt.edges)
        .map(|(p, g)| p.payload.iter().zip(&g.payload).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .sum();
    Ok(k * sum)
}

/// `L_full = L_ori + L_tgraph`.
pub fn total_loss(l_ori: f64, l_tgraph: f64) -> Result<f64> {
    for (name, v) in [("l_ori", l_ori), ("l_tgraph", l_tgraph)] {
        if !v.is_finite() {
            return Err(Error::Contract(format!("{name} is not finite: {v}")));
        }
        if v < 0.0 {
            return Err(Error::Contract(format!("{name} is negative: {v}")));
        }
    }
    Ok(l_ori + l_tgraph)
}
