//! Boundary detection for sampled manifolds.
//!
//! Given an i.i.d. sample from a compact `d'`-dimensional manifold embedded in
//! `R^d`, every sample point gets a local statistic
//!
//! ```text
//! delta_i = (d' + 2) * k * |mean of projected neighbor offsets|^2 / r_i^2
//! ```
//!
//! where the offsets to the `k` nearest neighbors are projected onto the
//! top-`d'` eigenspace of their second-moment matrix and `r_i` is the distance
//! to the `k`-th neighbor. Interior points give values that are close to
//! `chi^2(d')`; points near a boundary see a half-ball and give values of order
//! `k`. The maximum over all points drives the test of `H0: the boundary is
//! empty`.
//!
//! Module map:
//!
//! - [`linalg`]: symmetric eigensolver and subspace projection.
//! - [`chisq`]: chi-square functions, the half-ball constant, level bounds.
//! - [`knn`]: point clouds and exact k-nearest-neighbor search.
//! - [`statistic`]: per-point `delta` values and the global maximum.
//! - [`hypothesis`]: thresholds, p-value bound, decision rules, flagging.
//! - [`kselect`]: automatic choice of `k`.
//! - [`manifolds`]: seeded synthetic samples with ground truth.

pub mod chisq;
pub mod error;
pub mod hypothesis;
pub mod knn;
pub mod kselect;
pub mod linalg;
pub mod manifolds;
pub mod statistic;

pub use error::{Error, Result};
pub use hypothesis::{run_test, threshold, Rule, TestConfig, TestOutcome};
pub use knn::{NeighborIndex, NeighborList, PointCloud};
pub use kselect::{d_chi2, select_k, Branch, KSelectionTrace};
pub use manifolds::{generate, GroundTruth, ManifoldKind, ManifoldSpec};
pub use statistic::{compute_statistic, NeighborhoodSummary, StatisticResult};
