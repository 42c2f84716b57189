//! Per-point `delta` values and their maximum.
//!
//! For point `X_i` with `k` nearest neighbors at radius `r`:
//!
//! 1. offsets `X_j - X_i` of the neighbors, stacked as rows;
//! 2. their uncentered second moment `S = rows^T rows / k`;
//! 3. the span `Q` of the top-`d'` eigenvectors of `S`;
//! 4. the mean `m` of the offsets projected onto `Q`;
//! 5. `delta_i = (d' + 2) k |m|^2 / r^2`.
//!
//! `S` is taken about `X_i`, not about the neighbor centroid: near a
//! boundary the one-sided shift is the signal.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::{NeighborIndex, NeighborList, PointCloud};
use crate::linalg::{norm_sq, sym_eigen, Basis, SymMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSummary {
    pub point_index: usize,
    pub k: usize,
    pub radius: f64,
    pub second_moment: SymMatrix,
    pub basis: Basis,
    /// Mean of the projected neighbor offsets.
    pub projected_mean: Vec<f64>,
    pub delta: f64,
    /// The top-`d'` eigenspace of the second moment is not separated.
    pub degenerate_spectrum: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticResult {
    pub summaries: Vec<NeighborhoodSummary>,
    pub big_delta: f64,
    pub argmax_index: usize,
    pub k_used: usize,
}

impl StatisticResult {
    pub fn from_summaries(summaries: Vec<NeighborhoodSummary>, k: usize) -> Result<Self> {
        if summaries.is_empty() {
            return Err(Error::invalid("statistic needs at least one point"));
        }
        let mut argmax = 0;
        for (i, s) in summaries.iter().enumerate().skip(1) {
            if s.delta > summaries[argmax].delta {
                argmax = i;
            }
        }
        Ok(Self {
            big_delta: summaries[argmax].delta,
            argmax_index: argmax,
            k_used: k,
            summaries,
        })
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.summaries.iter().map(|s| s.delta).collect()
    }

    pub fn degenerate_count(&self) -> usize {
        self.summaries
            .iter()
            .filter(|s| s.degenerate_spectrum)
            .count()
    }

    pub fn empirical_cdf(&self) -> EmpiricalCdf {
        EmpiricalCdf::new(&self.deltas())
    }
}

fn check_k(cloud: &PointCloud, k: usize) -> Result<()> {
    let lo = cloud.intrinsic_dim() + 1;
    let hi = cloud.len() - 1;
    if k < lo || k > hi {
        return Err(Error::invalid(format!(
            "k = {k} outside the valid range {lo}..={hi} for {} points of intrinsic dimension {}",
            cloud.len(),
            cloud.intrinsic_dim()
        )));
    }
    Ok(())
}

/// Local PCA summary of point `i` with `k` neighbors.
pub fn neighborhood_summary(
    cloud: &PointCloud,
    index: &NeighborIndex<'_>,
    i: usize,
    k: usize,
) -> Result<NeighborhoodSummary> {
    check_k(cloud, k)?;
    let neighbors = index.k_nearest(i, k)?;
    summarize_neighbors(cloud, &neighbors)
}

/// Local PCA summary from an already computed neighbor list.
pub fn summarize_neighbors(
    cloud: &PointCloud,
    neighbors: &NeighborList,
) -> Result<NeighborhoodSummary> {
    let d = cloud.ambient_dim();
    let dprime = cloud.intrinsic_dim();
    let k = neighbors.k();
    let origin = cloud.point(neighbors.query_index);

    let mut rows = Vec::with_capacity(k * d);
    for &j in &neighbors.neighbor_indices {
        rows.extend(cloud.point(j).iter().zip(origin).map(|(a, b)| a - b));
    }
    let second_moment = SymMatrix::second_moment(&rows, d)?;
    let eig = sym_eigen(&second_moment)?;
    let basis = eig.top_basis(dprime)?;

    let mut projected_mean = vec![0.0; d];
    let mut proj = vec![0.0; d];
    for row in rows.chunks_exact(d) {
        basis.project_into(row, &mut proj);
        for (m, p) in projected_mean.iter_mut().zip(&proj) {
            *m += p;
        }
    }
    let scale = 1.0 / k as f64;
    projected_mean.iter_mut().for_each(|m| *m *= scale);

    let r = neighbors.radius;
    let delta = (dprime + 2) as f64 * k as f64 * norm_sq(&projected_mean) / (r * r);

    Ok(NeighborhoodSummary {
        point_index: neighbors.query_index,
        k,
        radius: r,
        second_moment,
        basis,
        projected_mean,
        delta,
        degenerate_spectrum: eig.is_degenerate_at(dprime),
    })
}

/// `Delta = max_i delta_i` over the whole cloud.
pub fn compute_statistic(cloud: &PointCloud, k: usize) -> Result<StatisticResult> {
    check_k(cloud, k)?;
    let index = NeighborIndex::build(cloud);
    compute_statistic_with_index(cloud, &index, k)
}

pub fn compute_statistic_with_index(
    cloud: &PointCloud,
    index: &NeighborIndex<'_>,
    k: usize,
) -> Result<StatisticResult> {
    check_k(cloud, k)?;
    let results: Vec<Result<NeighborhoodSummary>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| neighborhood_summary(cloud, index, i, k).map_err(|e| e.at_point(i)))
        .collect();
    let summaries = results.into_iter().collect::<Result<Vec<_>>>()?;
    StatisticResult::from_summaries(summaries, k)
}

/// Statistic for `k` from neighbor lists computed for some `k_max >= k`.
pub fn compute_statistic_from_neighbors(
    cloud: &PointCloud,
    neighbors: &[NeighborList],
    k: usize,
) -> Result<StatisticResult> {
    check_k(cloud, k)?;
    if neighbors.len() != cloud.len() {
        return Err(Error::invalid("one neighbor list per point is required"));
    }
    let results: Vec<Result<NeighborhoodSummary>> = neighbors
        .par_iter()
        .map(|nl| {
            nl.truncated(k)
                .and_then(|t| summarize_neighbors(cloud, &t))
                .map_err(|e| e.at_point(nl.query_index))
        })
        .collect();
    let summaries = results.into_iter().collect::<Result<Vec<_>>>()?;
    StatisticResult::from_summaries(summaries, k)
}

/// `(1/n) #{i : delta_i <= x}`.
pub fn empirical_cdf(result: &StatisticResult, x: f64) -> f64 {
    let below = result.summaries.iter().filter(|s| s.delta <= x).count();
    below as f64 / result.len() as f64
}

/// Right-continuous step function over a sorted sample.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
}
