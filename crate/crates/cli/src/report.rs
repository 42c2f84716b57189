//! JSON documents written by `test`, `select-k` and `generate`.

use serde::Serialize;

use manifold_boundary::hypothesis::ConsistentDecision;
use manifold_boundary::{
    GroundTruth, KSelectionTrace, ManifoldSpec, PointCloud, TestConfig, TestOutcome,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct GenerateSidecar {
    pub schema: u32,
    pub spec: ManifoldSpec,
    pub seed: u64,
    pub ground_truth: GroundTruth,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub schema: u32,
    pub n: usize,
    pub d: usize,
    pub dprime: usize,
    pub k: usize,
    pub alpha: f64,
    pub rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<KSelectionTrace>,
    pub big_delta: f64,
    pub argmax_index: usize,
    pub threshold: f64,
    pub p_value_bound: f64,
    pub reject: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistent: Option<ConsistentDecision>,
    pub flag_level: f64,
    /// Zero-based row indices of flagged points.
    pub boundary_points: Vec<usize>,
    pub level_diagnostic: f64,
    pub degenerate_points: usize,
    pub deltas: Vec<f64>,
}

impl TestReport {
    pub fn new(
        cloud: &PointCloud,
        config: &TestConfig,
        outcome: &TestOutcome,
        selection: Option<KSelectionTrace>,
    ) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            n: cloud.len(),
            d: cloud.ambient_dim(),
            dprime: cloud.intrinsic_dim(),
            k: config.k,
            alpha: config.alpha,
            rule: outcome.rule_used.name(),
            selection,
            big_delta: outcome.statistic.big_delta,
            argmax_index: outcome.statistic.argmax_index,
            threshold: outcome.threshold,
            p_value_bound: outcome.p_value_bound,
            reject: outcome.reject,
            consistent: outcome.consistent,
            flag_level: config.flag_level,
            boundary_points: outcome.boundary_points.clone(),
            level_diagnostic: outcome.level_diagnostic,
            degenerate_points: outcome.statistic.degenerate_count(),
            deltas: outcome.statistic.deltas(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub schema: u32,
    pub n: usize,
    pub dprime: usize,
    pub trace: KSelectionTrace,
}
