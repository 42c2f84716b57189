//! Small dense symmetric matrices, a cyclic Jacobi eigensolver and projection
//! onto the span of leading eigenvectors.
//!
//! Everything here is sized for local second-moment matrices, so `dim` is
//! expected to stay around ten or below.

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-14;
const DEGENERACY_TOL: f64 = 1e-12;
const ORTHONORMAL_TOL: f64 = 1e-10;

/// Square symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from row-major entries, replacing it by `(A + A^T) / 2`.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if entries.len() != dim * dim {
            return Err(Error::invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite matrix entry at ({}, {})",
                pos / dim,
                pos % dim
            )));
        }
        let mut data = entries;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid(
                "matrix rows must all have length equal to the row count",
            ));
        }
        Self::new(dim, rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    /// `(1/k) X^T X` for the `k` rows of `rows` (row-major, `dim` columns).
    ///
    /// The rows are not centered by their own mean.
    pub fn second_moment(rows: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || rows.is_empty() || !rows.len().is_multiple_of(dim) {
            return Err(Error::invalid(
                "second moment needs a nonempty k x dim row block",
            ));
        }
        let k = rows.len() / dim;
        let mut data = vec![0.0; dim * dim];
        for row in rows.chunks_exact(dim) {
            for i in 0..dim {
                let ri = row[i];
                for j in i..dim {
                    data[i * dim + j] += ri * row[j];
                }
            }
        }
        let scale = 1.0 / k as f64;
        for i in 0..dim {
            for j in i..dim {
                let v = data[i * dim + j] * scale;
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("second moment overflowed"));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Eigenpairs of a [`SymMatrix`], eigenvalues sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    dim: usize,
    values: Vec<f64>,
    /// Row-major; column `j` is the eigenvector for `values[j]`.
    vectors: Vec<f64>,
    sweeps: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvector paired with the `j`-th largest eigenvalue.
    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.vectors[i * self.dim + j])
            .collect()
    }

    /// Entry `(i, j)` of the eigenvector matrix `V`.
    pub fn vector_entry(&self, i: usize, j: usize) -> f64 {
        self.vectors[i * self.dim + j]
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// True when the eigenvalue at position `rank - 1` is not separated from
    /// the one at `rank`, so the top-`rank` subspace is not well defined.
    pub fn is_degenerate_at(&self, rank: usize) -> bool {
        if rank == 0 || rank >= self.dim {
            return false;
        }
        let gap = self.values[rank - 1] - self.values[rank];
        gap <= DEGENERACY_TOL * self.values[0].abs()
    }

    /// Orthonormal basis of the span of the top-`rank` eigenvectors.
    pub fn top_basis(&self, rank: usize) -> Result<Basis> {
        if rank == 0 || rank > self.dim {
            return Err(Error::invalid(format!(
                "basis rank {rank} outside 1..={}",
                self.dim
            )));
        }
        Ok(Basis {
            ambient: self.dim,
            columns: (0..rank).map(|j| self.eigenvector(j)).collect(),
        })
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenDecomposition> {
    let n = m.dim;
    if let Some(pos) = m.data.iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite matrix entry at ({}, {})",
            pos / n,
            pos % n
        )));
    }
    let mut a = m.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let norm = m.frobenius();

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let off = off_diagonal_norm(&a, n);
        if off <= OFF_DIAGONAL_TOL * norm {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their diagonal order
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));

    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for i in 1..n {
            if v[i * n + src].abs() > v[pivot * n + src].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot * n + src] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[i * n + col] = sign * v[i * n + src];
        }
    }

    Ok(EigenDecomposition {
        dim: n,
        values,
        vectors,
        sweeps,
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[k * n + p] = new_kp;
        a[p * n + k] = new_kp;
        a[k * n + q] = new_kq;
        a[q * n + k] = new_kq;
    }
    a[p * n + p] -= t * apq;
    a[q * n + q] += t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

/// Orthonormal vectors spanning a linear subspace of `R^ambient`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    ambient: usize,
    columns: Vec<Vec<f64>>,
}

impl Basis {
    /// Checks that `columns` are orthonormal to within `1e-10`.
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        let ambient = columns
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("basis needs at least one vector"))?;
        if columns.len() > ambient {
            return Err(Error::invalid(format!(
                "{} basis vectors cannot be independent in R^{ambient}",
                columns.len()
            )));
        }
        if columns.iter().any(|c| c.len() != ambient) {
            return Err(Error::invalid("basis vectors have differing lengths"));
        }
        for (i, a) in columns.iter().enumerate() {
            for (j, b) in columns.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(a, b) - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::invalid("basis vectors are not orthonormal"));
                }
            }
        }
        Ok(Self { ambient, columns })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Writes the orthogonal projection of `v` into `out`.
    pub fn project_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for b in &self.columns {
            let c = dot(v, b);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
    }

    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.ambient {
            return Err(Error::invalid(format!(
                "vector of length {} does not live in R^{}",
                v.len(),
                self.ambient
            )));
        }
        let mut out = vec![0.0; self.ambient];
        self.project_into(v, &mut out);
        Ok(out)
    }
}

/// Projects every vector onto the span of `basis`.
pub fn project_onto_span(vectors: &[Vec<f64>], basis: &Basis) -> Result<Vec<Vec<f64>>> {
    vectors.iter().map(|v| basis.project(v)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}
