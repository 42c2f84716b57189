//! Point clouds and exact k-nearest-neighbor search.
//!
//! [`NeighborIndex`] is a median-split kd-tree. Candidates are ordered by
//! `(squared distance, point index)`, the same key the brute-force oracle
//! sorts by, so both return identical neighbor sequences including ties.

use std::cmp::Ordering;

use crate::error::{Error, Result};

const LEAF_SIZE: usize = 12;

/// `n` points in `R^d` sampled from a manifold of declared dimension `d'`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    n: usize,
    d: usize,
    coords: Vec<f64>,
    intrinsic_dim: usize,
}

impl PointCloud {
    /// `coords` is row-major, `ambient_dim` values per point.
    pub fn new(coords: Vec<f64>, ambient_dim: usize, intrinsic_dim: usize) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::invalid("ambient dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(ambient_dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into points of dimension {ambient_dim}",
                coords.len()
            )));
        }
        if intrinsic_dim == 0 || intrinsic_dim > ambient_dim {
            return Err(Error::invalid(format!(
                "intrinsic dimension {intrinsic_dim} must lie in 1..={ambient_dim}"
            )));
        }
        let n = coords.len() / ambient_dim;
        if n < intrinsic_dim + 2 {
            return Err(Error::invalid(format!(
                "need at least {} points for intrinsic dimension {intrinsic_dim}, got {n}",
                intrinsic_dim + 2
            )));
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate {} of point {}",
                pos % ambient_dim,
                pos / ambient_dim
            )));
        }
        Ok(Self {
            n,
            d: ambient_dim,
            coords,
            intrinsic_dim,
        })
    }

    pub fn from_points(points: &[Vec<f64>], intrinsic_dim: usize) -> Result<Self> {
        let d = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("point cloud is empty"))?;
        if let Some(i) = points.iter().position(|p| p.len() != d) {
            return Err(Error::invalid(format!(
                "point {i} has {} coordinates, expected {d}",
                points[i].len()
            )));
        }
        Self::new(points.concat(), d, intrinsic_dim)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    /// Same points with a different declared intrinsic dimension.
    pub fn with_intrinsic_dim(&self, intrinsic_dim: usize) -> Result<Self> {
        Self::new(self.coords.clone(), self.d, intrinsic_dim)
    }

    /// Applies `f` to every point, keeping the intrinsic dimension.
    pub fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let pts: Vec<Vec<f64>> = self.points().map(f).collect();
        Self::from_points(&pts, self.intrinsic_dim)
    }
}

/// The `k` nearest neighbors of one sample point, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub query_index: usize,
    pub neighbor_indices: Vec<usize>,
    pub distances: Vec<f64>,
    /// Distance to the `k`-th neighbor.
    pub radius: f64,
}

impl NeighborList {
    pub fn k(&self) -> usize {
        self.neighbor_indices.len()
    }

    /// The first `k` neighbors. Exact because candidates are totally ordered.
    pub fn truncated(&self, k: usize) -> Result<NeighborList> {
        if k == 0 || k > self.k() {
            return Err(Error::invalid(format!(
                "cannot truncate {} neighbors to {k}",
                self.k()
            )));
        }
        let radius = self.distances[k - 1];
        if radius == 0.0 {
            return Err(degenerate(self.query_index, k));
        }
        Ok(NeighborList {
            query_index: self.query_index,
            neighbor_indices: self.neighbor_indices[..k].to_vec(),
            distances: self.distances[..k].to_vec(),
            radius,
        })
    }
}

fn degenerate(i: usize, k: usize) -> Error {
    Error::DegenerateSample(format!(
        "the {k}-th neighbor of point {i} coincides with it; the sample has duplicated points"
    ))
}

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

#[inline]
fn key_cmp(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn check_k(cloud: &PointCloud, i: usize, k: usize) -> Result<()> {
    if i >= cloud.len() {
        return Err(Error::invalid(format!(
            "query index {i} out of range for {} points",
            cloud.len()
        )));
    }
    if k == 0 || k >= cloud.len() {
        return Err(Error::invalid(format!(
            "k = {k} must lie in 1..={}",
            cloud.len() - 1
        )));
    }
    Ok(())
}

fn into_list(i: usize, best: Vec<(f64, usize)>) -> Result<NeighborList> {
    let k = best.len();
    let distances: Vec<f64> = best.iter().map(|(d2, _)| d2.sqrt()).collect();
    let radius = distances[k - 1];
    if radius == 0.0 {
        return Err(degenerate(i, k));
    }
    Ok(NeighborList {
        query_index: i,
        neighbor_indices: best.into_iter().map(|(_, j)| j).collect(),
        distances,
        radius,
    })
}

/// Reference implementation: sort every other point by `(distance, index)`.
pub fn brute_force_k_nearest(cloud: &PointCloud, i: usize, k: usize) -> Result<NeighborList> {
    check_k(cloud, i, k)?;
    let q = cloud.point(i);
    let mut all: Vec<(f64, usize)> = (0..cloud.len())
        .filter(|&j| j != i)
        .map(|j| (dist_sq(q, cloud.point(j)), j))
        .collect();
    all.sort_by(|a, b| key_cmp(*a, *b));
    all.truncate(k);
    into_list(i, all)
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Immutable kd-tree over a [`PointCloud`].
#[derive(Debug, Clone)]
pub struct NeighborIndex<'a> {
    cloud: &'a PointCloud,
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl<'a> NeighborIndex<'a> {
    pub fn build(cloud: &'a PointCloud) -> Self {
        let mut order: Vec<usize> = (0..cloud.len()).collect();
        let mut nodes = Vec::with_capacity(2 * cloud.len() / LEAF_SIZE + 1);
        let root = build_node(cloud, &mut order, 0, &mut nodes);
        Self {
            cloud,
            order,
            nodes,
            root,
        }
    }

    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    /// Exact `k` nearest neighbors of sample point `i`, excluding `i`.
    pub fn k_nearest(&self, i: usize, k: usize) -> Result<NeighborList> {
        check_k(self.cloud, i, k)?;
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.search(self.root, self.cloud.point(i), i, k, &mut best);
        into_list(i, best)
    }

    fn search(&self, node: usize, q: &[f64], skip: usize, k: usize, best: &mut Vec<(f64, usize)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j == skip {
                        continue;
                    }
                    let cand = (dist_sq(q, self.cloud.point(j)), j);
                    if best.len() == k {
                        if key_cmp(cand, best[k - 1]) != Ordering::Less {
                            continue;
                        }
                        best.pop();
                    }
                    let pos = best.partition_point(|&b| key_cmp(b, cand) == Ordering::Less);
                    best.insert(pos, cand);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, skip, k, best);
                // ties at the bound may still hide a smaller index
                if best.len() < k || diff * diff <= best[k - 1].0 {
                    self.search(far, q, skip, k, best);
                }
            }
        }
    }
}

fn build_node(
    cloud: &PointCloud,
    order: &mut [usize],
    offset: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let len = order.len();
    if len <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + len,
        });
        return nodes.len() - 1;
    }
    let d = cloud.ambient_dim();
    let mut axis = 0;
    let mut widest = -1.0;
    for a in 0..d {
        let (lo, hi) = order
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &j| {
                let x = cloud.point(j)[a];
                (lo.min(x), hi.max(x))
            });
        if hi - lo > widest {
            widest = hi - lo;
            axis = a;
        }
    }
    let mid = len / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        cloud.point(a)[axis]
            .total_cmp(&cloud.point(b)[axis])
            .then(a.cmp(&b))
    });
    let value = cloud.point(order[mid])[axis];
    let (lo, hi) = order.split_at_mut(mid);
    let slot = nodes.len();
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let left = build_node(cloud, lo, offset, nodes);
    let right = build_node(cloud, hi, offset + mid, nodes);
    nodes[slot] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    slot
}
