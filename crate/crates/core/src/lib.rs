//! Pairwise translation-graph supervision for sparse-view camera pose
//! regression: pose geometry, translation graphs and their loss, similarity
//! invariant accuracy metrics, a small from-scratch regressor, and synthetic
//! camera rigs to exercise all of it.

// `!(x > eps)` is used on purpose so that NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod geometry;
pub mod graph;
pub mod metrics;
pub mod regressor;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{pair_t, relative_t, CameraPose};
pub use graph::{Representation, TranslationGraph};
pub use metrics::MetricReport;
pub use synth::{FeatureVector, Scenario, SceneSample};
