//! Monte Carlo estimation of level and power.
//!
//! A plan is a grid of supports x sample sizes. Each cell runs `replications`
//! independent samples and records how often the test rejects. All
//! randomness flows from `base_seed`:
//!
//! ```text
//! cell_seed        = base_seed ^ splitmix64((kind_index << 40) ^ n)
//! replication r    = cell_seed ^ splitmix64(r)
//! calibration r    = cell_seed ^ splitmix64(2^63 + r)
//! ```
//!
//! so any single replication can be regenerated in isolation, and the report
//! does not depend on how many worker threads ran it.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use manifold_boundary::manifolds::derive_seed;
use manifold_boundary::{
    generate, run_test, select_k, ManifoldKind, ManifoldSpec, Rule, TestConfig,
};

use crate::error::CliError;
use crate::report::SCHEMA_VERSION;

pub const SEED_RULE: &str = "cell_seed = base_seed ^ splitmix64((kind_index << 40) ^ n); \
replication_seed = cell_seed ^ splitmix64(r); calibration_seed = cell_seed ^ splitmix64(2^63 + r)";

const CALIBRATION_OFFSET: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq)]
pub enum KPolicy {
    /// One `k` per sample size, aligned with `sample_sizes`.
    Fixed(Vec<usize>),
    /// Average of the selected `k` over `calibration` extra samples, rounded.
    Auto { calibration: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub kinds: Vec<ManifoldKind>,
    pub sample_sizes: Vec<usize>,
    pub k_policy: KPolicy,
    pub replications: usize,
    pub alpha: f64,
    pub rule: Rule,
    pub base_seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.kinds.is_empty() || self.sample_sizes.is_empty() {
            return Err(CliError::input(
                "plan needs at least one kind and one sample size",
            ));
        }
        if self.replications == 0 {
            return Err(CliError::input("replications must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::input(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        for kind in &self.kinds {
            kind.validate()?;
        }
        match &self.k_policy {
            KPolicy::Fixed(ks) => {
                if ks.len() != self.sample_sizes.len() {
                    return Err(CliError::input(format!(
                        "{} values of k given for {} sample sizes",
                        ks.len(),
                        self.sample_sizes.len()
                    )));
                }
                for kind in &self.kinds {
                    let dprime = kind.intrinsic_dim();
                    for (&n, &k) in self.sample_sizes.iter().zip(ks) {
                        if k < dprime + 1 || k + 1 > n {
                            return Err(CliError::input(format!(
                                "k = {k} is invalid for n = {n} on {} (need {}..={})",
                                kind.label(),
                                dprime + 1,
                                n.saturating_sub(1)
                            )));
                        }
                    }
                }
            }
            KPolicy::Auto { calibration } => {
                if *calibration == 0 {
                    return Err(CliError::input(
                        "calibration pass needs at least one sample",
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn cell_seed(base_seed: u64, kind_index: usize, n: usize) -> u64 {
    derive_seed(base_seed, ((kind_index as u64) << 40) ^ n as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub big_delta: Option<f64>,
    pub threshold: Option<f64>,
    pub p_value_bound: Option<f64>,
    pub reject: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub kind: String,
    pub spec: ManifoldKind,
    pub n: usize,
    pub k: Option<usize>,
    pub k_policy: &'static str,
    pub mean_chosen_k: Option<f64>,
    pub calibration_replications: usize,
    pub seed: u64,
    pub replications: usize,
    pub completed: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub incomplete: bool,
    pub error: Option<String>,
    pub details: Vec<ReplicationRecord>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub base_seed: u64,
    pub seed_rule: &'static str,
    pub alpha: f64,
    pub rule: Rule,
    pub replications: usize,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    /// Rows are kinds, columns sample sizes; cells `rate (k=..)`.
    pub fn table_csv(&self, plan: &ExperimentPlan) -> String {
        let mut out = String::from("kind");
        for n in &plan.sample_sizes {
            let _ = write!(out, ",n={n}");
        }
        out.push('\n');
        for (ki, kind) in plan.kinds.iter().enumerate() {
            out.push_str(&kind.label());
            for ni in 0..plan.sample_sizes.len() {
                let cell = &self.cells[ki * plan.sample_sizes.len() + ni];
                let k = cell.k.map(|k| k.to_string()).unwrap_or_else(|| "NA".into());
                let mark = if cell.incomplete { "*" } else { "" };
                let _ = write!(out, ",{:.4}{mark} (k={k})", cell.rejection_rate);
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the plan on `jobs` worker threads.
pub fn run_experiment(plan: &ExperimentPlan, jobs: usize) -> Result<ExperimentReport, CliError> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::input(format!("cannot start worker pool: {e}")))?;
    let cells = pool.install(|| {
        let mut cells = Vec::new();
        for (ki, kind) in plan.kinds.iter().enumerate() {
            for (ni, &n) in plan.sample_sizes.iter().enumerate() {
                cells.push(run_cell(plan, ki, *kind, ni, n));
            }
        }
        cells
    });
    Ok(ExperimentReport {
        schema: SCHEMA_VERSION,
        base_seed: plan.base_seed,
        seed_rule: SEED_RULE,
        alpha: plan.alpha,
        rule: plan.rule,
        replications: plan.replications,
        cells,
    })
}

fn calibrate_k(kind: ManifoldKind, n: usize, seed: u64, samples: usize) -> Result<f64, String> {
    let picks: Vec<Result<usize, String>> = (0..samples)
        .into_par_iter()
        .map(|r| {
            let spec = ManifoldSpec::new(kind, n, derive_seed(seed, CALIBRATION_OFFSET + r as u64));
            let (cloud, _) = generate(&spec).map_err(|e| e.to_string())?;
            select_k(&cloud, None)
                .map(|t| t.chosen_k)
                .map_err(|e| e.to_string())
        })
        .collect();
    let ok: Vec<usize> = picks
        .iter()
        .filter_map(|p| p.as_ref().ok().copied())
        .collect();
    if ok.is_empty() {
        let first = picks
            .into_iter()
            .find_map(|p| p.err())
            .unwrap_or_else(|| "no calibration samples".into());
        return Err(format!("k calibration failed: {first}"));
    }
    Ok(ok.iter().sum::<usize>() as f64 / ok.len() as f64)
}

fn run_cell(
    plan: &ExperimentPlan,
    ki: usize,
    kind: ManifoldKind,
    ni: usize,
    n: usize,
) -> CellReport {
    let start = Instant::now();
    let seed = cell_seed(plan.base_seed, ki, n);
    let (k, mean_chosen_k, calibration, policy) = match &plan.k_policy {
        KPolicy::Fixed(ks) => (Ok(ks[ni]), None, 0, "fixed"),
        KPolicy::Auto { calibration } => match calibrate_k(kind, n, seed, *calibration) {
            Ok(mean) => (Ok(mean.round() as usize), Some(mean), *calibration, "auto"),
            Err(e) => (Err(e), None, *calibration, "auto"),
        },
    };

    let mut cell = CellReport {
        kind: kind.label(),
        spec: kind,
        n,
        k: k.as_ref().ok().copied(),
        k_policy: policy,
        mean_chosen_k,
        calibration_replications: calibration,
        seed,
        replications: plan.replications,
        completed: 0,
        rejections: 0,
        rejection_rate: 0.0,
        incomplete: false,
        error: None,
        details: Vec::new(),
        wall_time_secs: 0.0,
    };
    let k = match k {
        Ok(k) => k,
        Err(e) => {
            cell.incomplete = true;
            cell.error = Some(e);
            cell.wall_time_secs = start.elapsed().as_secs_f64();
            return cell;
        }
    };

    let config = TestConfig {
        rule: plan.rule,
        ..TestConfig::threshold(plan.alpha, k)
    };
    cell.details = (0..plan.replications)
        .into_par_iter()
        .map(|r| run_replication(kind, n, derive_seed(seed, r as u64), r, &config))
        .collect();
    cell.completed = cell.details.iter().filter(|d| d.error.is_none()).count();
    cell.rejections = cell.details.iter().filter(|d| d.reject).count();
    cell.rejection_rate = cell.rejections as f64 / plan.replications as f64;
    cell.incomplete = cell.completed < plan.replications;
    cell.wall_time_secs = start.elapsed().as_secs_f64();
    cell
}

fn run_replication(
    kind: ManifoldKind,
    n: usize,
    seed: u64,
    replication: usize,
    config: &TestConfig,
) -> ReplicationRecord {
    let outcome =
        generate(&ManifoldSpec::new(kind, n, seed)).and_then(|(cloud, _)| run_test(&cloud, config));
    match outcome {
        Ok(o) => ReplicationRecord {
            replication,
            seed,
            big_delta: Some(o.statistic.big_delta),
            threshold: Some(o.threshold),
            p_value_bound: Some(o.p_value_bound),
            reject: o.reject,
            error: None,
        },
        Err(e) => ReplicationRecord {
            replication,
            seed,
            big_delta: None,
            threshold: None,
            p_value_bound: None,
            reject: false,
            error: Some(e.to_string()),
        },
    }
}
