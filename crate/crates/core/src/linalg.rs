//! Dense pixel planes and the SVD contract the solver is built on.
//!
//! [`ImageMatrix`] is a thin newtype over an `nalgebra` dense matrix. All
//! decompositions go through [`svd`], which returns singular values sorted in
//! non-increasing order with a fixed sign convention on the singular vectors
//! so results are reproducible run to run.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Result, SplicError};

/// Real-valued `m x n` pixel plane.
#[derive(Clone, PartialEq)]
pub struct ImageMatrix {
    data: DMatrix<f64>,
}

impl ImageMatrix {
    /// Builds a matrix from row-major values.
    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(SplicError::param(
                "values",
                format!(
                    "expected {} entries for {rows}x{cols}, got {}",
                    rows * cols,
                    values.len()
                ),
            ));
        }
        Ok(Self {
            data: DMatrix::from_row_slice(rows, cols, values),
        })
    }

    /// Builds a matrix from nested rows. Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        assert!(rows.iter().all(|r| r.as_ref().len() == n), "ragged rows");
        Self::from_fn(m, n, |i, j| rows[i].as_ref()[j])
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            data: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(rows, cols, 0.0)
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            data: DMatrix::from_element(rows, cols, value),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    /// Square matrix with `diag` on the main diagonal.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }

    /// Number of entries, `m * n`.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[(row, col)] = value;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    /// Iterates over all entries in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data.iter()
    }

    pub fn map(&self, f: impl FnMut(f64) -> f64) -> Self {
        Self {
            data: self.data.map(f),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn sum(&self) -> f64 {
        self.data.sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        ensure_same_shape(self, other)?;
        Ok(Self {
            data: &self.data - &other.data,
        })
    }

    /// Entrywise `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_same_shape(self, other)?;
        Ok(Self {
            data: &self.data + &other.data,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            data: &self.data * factor,
        }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(SplicError::ShapeMismatch {
                expected: (self.cols(), other.cols()),
                actual: other.shape(),
            });
        }
        Ok(Self {
            data: &self.data * &other.data,
        })
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Self {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn ensure_finite(&self) -> Result<()> {
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                if !self.data[(i, j)].is_finite() {
                    return Err(SplicError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Rejects matrices with fewer than two rows or columns.
    pub fn ensure_solver_shape(&self) -> Result<()> {
        let (rows, cols) = self.shape();
        if rows < 2 || cols < 2 {
            return Err(SplicError::DegenerateDimensions { rows, cols });
        }
        Ok(())
    }
}

impl From<DMatrix<f64>> for ImageMatrix {
    fn from(data: DMatrix<f64>) -> Self {
        Self { data }
    }
}

impl fmt::Debug for ImageMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ImageMatrix {}x{} ", self.rows(), self.cols())?;
        if self.len() <= 64 {
            let rows: Vec<Vec<f64>> = (0..self.rows())
                .map(|i| (0..self.cols()).map(|j| self.get(i, j)).collect())
                .collect();
            write!(f, "{rows:?}")
        } else {
            write!(f, "[..]")
        }
    }
}

pub(crate) fn ensure_same_shape(a: &ImageMatrix, b: &ImageMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(SplicError::ShapeMismatch {
            expected: a.shape(),
            actual: b.shape(),
        });
    }
    Ok(())
}

/// Thin SVD `X = U diag(sigma) V^T` with `l = min(m, n)` components.
///
/// Singular values are non-increasing and non-negative. The largest-magnitude
/// entry of every column of `U` is non-negative (first such entry on ties);
/// the matching column of `V` carries the compensating sign.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
}

impl SvdFactors {
    /// `m x l` left singular vectors.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// `n x l` right singular vectors.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Number of components, `min(m, n)`.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.nrows(), self.v.nrows())
    }

    /// Largest singular value, zero for an empty decomposition.
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// `U diag(weights) V^T`.
    pub fn reconstruct_with_weights(&self, weights: &[f64]) -> ImageMatrix {
        debug_assert_eq!(weights.len(), self.sigma.len());
        let mut scaled = self.u.clone();
        for (k, &w) in weights.iter().enumerate() {
            scaled.column_mut(k).scale_mut(w);
        }
        ImageMatrix::from(scaled * self.v.transpose())
    }

    /// `U diag(f(sigma_k)) V^T`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ImageMatrix {
        let weights: Vec<f64> = self.sigma.iter().map(|&s| f(s)).collect();
        self.reconstruct_with_weights(&weights)
    }

    pub fn reconstruct(&self) -> ImageMatrix {
        self.reconstruct_with_weights(&self.sigma)
    }

    /// Copy with `sigma_{r+1..l}` set to zero. `U` and `V` are kept whole.
    pub fn truncated(&self, r: usize) -> Result<SvdFactors> {
        check_rank(r, self.len())?;
        let mut out = self.clone();
        for s in out.sigma.iter_mut().skip(r) {
            *s = 0.0;
        }
        Ok(out)
    }
}

fn check_rank(r: usize, l: usize) -> Result<()> {
    if r == 0 || r > l {
        return Err(SplicError::param(
            "r",
            format!("target rank must satisfy 1 <= r <= {l}, got {r}"),
        ));
    }
    Ok(())
}

/// Thin singular value decomposition with sorted values and a fixed sign
/// convention.
pub fn svd(x: &ImageMatrix) -> Result<SvdFactors> {
    x.ensure_finite()?;
    let l = x.rows().min(x.cols());
    let dec = nalgebra::linalg::SVD::new(x.as_matrix().clone(), true, true);
    let (u, v_t) = match (dec.u, dec.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("singular vectors were requested"),
    };
    let raw_sigma = dec.singular_values;

    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| raw_sigma[b].total_cmp(&raw_sigma[a]));

    let mut su = DMatrix::zeros(x.rows(), l);
    let mut sv = DMatrix::zeros(x.cols(), l);
    let mut sigma = Vec::with_capacity(l);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &v_t.row(src).transpose());
        sigma.push(raw_sigma[src].max(0.0));
    }

    for k in 0..l {
        let col = su.column(k);
        let mut pivot = 0.0f64;
        for &value in col.iter() {
            if value.abs() > pivot.abs() {
                pivot = value;
            }
        }
        if pivot < 0.0 {
            su.column_mut(k).neg_mut();
            sv.column_mut(k).neg_mut();
        }
    }

    Ok(SvdFactors {
        u: su,
        sigma,
        v: sv,
    })
}

/// `U diag(sigma_1..sigma_r, 0, ..) V^T`, the best rank-`r` approximation.
pub fn truncate_rank(f: &SvdFactors, r: usize) -> Result<ImageMatrix> {
    Ok(f.truncated(r)?.reconstruct())
}

/// Count of singular values strictly above `tol * sigma_1`.
pub fn numerical_rank(x: &ImageMatrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(SplicError::param("tol", "tolerance must be positive"));
    }
    Ok(numerical_rank_of(&svd(x)?, tol))
}

pub(crate) fn numerical_rank_of(f: &SvdFactors, tol: f64) -> usize {
    let top = f.sigma_max();
    if top == 0.0 {
        return 0;
    }
    f.sigma().iter().filter(|&&s| s > tol * top).count()
}
