//! Automatic choice of the neighbor count `k`.
//!
//! Each candidate `k` is scored by the mean absolute gap between the
//! empirical distribution of the `delta` values and `chi^2(d')`. When the
//! test at that `k` already points to a boundary (p-value bound below 5%),
//! only points whose `delta` is unremarkable (`F_{d'}(delta) >= 0.05`) are
//! compared, against the chi-square law truncated at its 95% quantile. The
//! chosen `k` minimizes the score, smallest `k` on ties.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chisq::{chisq_cdf, chisq_sf, DegreesOfFreedom};
use crate::error::{Error, Result};
use crate::hypothesis::p_value_bound;
use crate::knn::{NeighborIndex, NeighborList, PointCloud};
use crate::statistic::{
    compute_statistic, compute_statistic_from_neighbors, EmpiricalCdf, StatisticResult,
};

/// Level separating the two scoring branches and defining interior points.
pub const BRANCH_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// p-value bound `>= 0.05`: every point is scored.
    AllPoints,
    /// p-value bound `< 0.05`: only points far from the boundary are scored.
    FarFromBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCandidate {
    pub k: usize,
    pub d_chi2: f64,
    pub p_value_bound: f64,
    pub branch: Branch,
    /// Number of points entering the score.
    pub scored_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionTrace {
    pub candidates: Vec<KCandidate>,
    /// Grid values whose evaluation failed, with the reason.
    pub failures: Vec<(usize, String)>,
    pub chosen_k: usize,
}

impl KSelectionTrace {
    pub fn chosen(&self) -> &KCandidate {
        self.candidates
            .iter()
            .find(|c| c.k == self.chosen_k)
            .expect("chosen k is always a candidate")
    }
}

/// `max(d' + 2, 5), +5, ..., min(n / 10, 100)`.
pub fn default_grid(n: usize, d_prime: usize) -> Vec<usize> {
    let lo = (d_prime + 2).max(5);
    let hi = (n / 10).min(100);
    if hi < lo {
        return vec![lo];
    }
    (lo..=hi).step_by(5).collect()
}

fn dof(cloud: &PointCloud) -> Result<DegreesOfFreedom> {
    DegreesOfFreedom::new(cloud.intrinsic_dim() as u32)
}

/// Score of a single `k`.
pub fn d_chi2(cloud: &PointCloud, k: usize) -> Result<KCandidate> {
    let stat = compute_statistic(cloud, k)?;
    d_chi2_from_statistic(&stat, dof(cloud)?)
}

pub fn d_chi2_from_statistic(
    stat: &StatisticResult,
    d_prime: DegreesOfFreedom,
) -> Result<KCandidate> {
    let k = stat.k_used;
    let deltas = stat.deltas();
    let n = deltas.len();
    let p = p_value_bound(n, stat.big_delta, d_prime);

    if p >= BRANCH_LEVEL {
        let ecdf = EmpiricalCdf::new(&deltas);
        let total: f64 = deltas
            .iter()
            .map(|&x| (ecdf.eval(x) - chisq_cdf(d_prime, x)).abs())
            .sum();
        return Ok(KCandidate {
            k,
            d_chi2: total / n as f64,
            p_value_bound: p,
            branch: Branch::AllPoints,
            scored_points: n,
        });
    }

    let interior: Vec<f64> = deltas
        .into_iter()
        .filter(|&x| chisq_sf(d_prime, x) >= BRANCH_LEVEL)
        .collect();
    let required = 10.max(d_prime.get() as usize + 2);
    if interior.len() < required {
        return Err(Error::InsufficientInterior {
            k,
            found: interior.len(),
            required,
        });
    }
    let ecdf = EmpiricalCdf::new(&interior);
    let cap = 1.0 - BRANCH_LEVEL;
    let total: f64 = interior
        .iter()
        .map(|&x| {
            let psi = chisq_cdf(d_prime, x);
            // interior points sit below the 95% quantile up to rounding
            debug_assert!(
                psi <= cap + 1e-12,
                "interior point above the 0.95 cut: {psi}"
            );
            let reference = (psi / cap).min(1.0);
            (ecdf.eval(x) - reference).abs()
        })
        .sum();
    Ok(KCandidate {
        k,
        d_chi2: total / interior.len() as f64,
        p_value_bound: p,
        branch: Branch::FarFromBoundary,
        scored_points: interior.len(),
    })
}

/// Scans `grid` (default: [`default_grid`]) and returns the full trace.
pub fn select_k(cloud: &PointCloud, grid: Option<&[usize]>) -> Result<KSelectionTrace> {
    let d_prime = dof(cloud)?;
    let lo = cloud.intrinsic_dim() + 1;
    let hi = cloud.len() - 1;
    let mut ks: Vec<usize> = match grid {
        Some(g) => g.to_vec(),
        None => default_grid(cloud.len(), cloud.intrinsic_dim()),
    };
    ks.retain(|&k| (lo..=hi).contains(&k));
    ks.sort_unstable();
    ks.dedup();
    let k_max = *ks.last().ok_or_else(|| {
        Error::invalid(format!("no candidate k inside the valid range {lo}..={hi}"))
    })?;

    let index = NeighborIndex::build(cloud);
    let lists: Vec<Result<NeighborList>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| index.k_nearest(i, k_max))
        .collect();
    let lists = lists.into_iter().collect::<Result<Vec<_>>>();

    let outcomes: Vec<(usize, Result<KCandidate>)> = match &lists {
        Ok(lists) => ks
            .iter()
            .map(|&k| {
                let cand = compute_statistic_from_neighbors(cloud, lists, k)
                    .and_then(|s| d_chi2_from_statistic(&s, d_prime));
                (k, cand)
            })
            .collect(),
        // duplicates deep in the neighborhoods: fall back to per-k queries
        Err(_) => ks.iter().map(|&k| (k, d_chi2(cloud, k))).collect(),
    };

    let mut candidates = Vec::new();
    let mut errors = Vec::new();
    for (k, res) in outcomes {
        match res {
            Ok(c) => candidates.push(c),
            Err(e) => errors.push((k, e)),
        }
    }
    if candidates.is_empty() {
        return Err(Error::SelectionFailed(errors));
    }
    let mut best = &candidates[0];
    for c in &candidates[1..] {
        if c.d_chi2 < best.d_chi2 {
            best = c;
        }
    }
    let chosen_k = best.k;
    Ok(KSelectionTrace {
        failures: errors
            .into_iter()
            .map(|(k, e)| (k, e.to_string()))
            .collect(),
        candidates,
        chosen_k,
    })
}
