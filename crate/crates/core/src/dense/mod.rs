//! Dense matrices and the numerical kernels the factorization code is built on.

mod kmeans;
mod lstsq;
mod rng;
mod svd;

use std::fmt;
use std::ops::Index;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use kmeans::{kmeans, Clustering, DEFAULT_KMEANS_MAX_ITER};
pub use lstsq::least_squares_left;
pub(crate) use lstsq::lstsq_left;
pub use rng::{random_gaussian, random_uniform, RngSeed, SeededRng};
pub(crate) use rng::{gaussian_from, uniform_from};
pub use svd::{singular_values, tail_norm, truncated_svd, SvdTriplet};
pub(crate) use svd::{leading_left_vector, thin_svd};

/// Column-major dense real matrix with finite entries.
///
/// Thin wrapper over [`nalgebra::DMatrix`]; the checked constructors reject
/// NaN and infinite entries so every matrix that crosses the public API is
/// finite.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        DenseMatrix(DMatrix::identity(n, n))
    }

    /// Builds a matrix from entries listed column by column.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(DenseMatrix(DMatrix::from_vec(rows, cols, data)))
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        check_finite(data)?;
        Ok(DenseMatrix(DMatrix::from_row_slice(rows, cols, data)))
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        let mut flat = Vec::with_capacity(m * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::dims(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_major(m, n, &flat)
    }

    pub fn from_nalgebra(inner: DMatrix<f64>) -> Result<Self> {
        check_finite(inner.as_slice())?;
        Ok(DenseMatrix(inner))
    }

    /// Wraps a kernel result. Callers guarantee finiteness.
    pub(crate) fn wrap(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.iter().all(|x| x.is_finite()));
        DenseMatrix(inner)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Entries in column-major order.
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let m = self.rows();
        &self.0.as_slice()[j * m..(j + 1) * m]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix(self.0.transpose())
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(DenseMatrix(&self.0 * &rhs.0))
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::dims(format!(
                "cannot subtract {:?} from {:?}",
                rhs.shape(),
                self.shape()
            )));
        }
        Ok(DenseMatrix(&self.0 - &rhs.0))
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        DenseMatrix(&self.0 * factor)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Smallest entry, `+∞` for an empty matrix.
    pub fn min_entry(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `‖self − a·b‖_F`.
    pub fn residual_norm(&self, a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
        let prod = a.matmul(b)?;
        Ok(self.sub(&prod)?.frobenius_norm())
    }

    /// Column `j` is treated as zero when its 2-norm is at most `zero_tol·‖self‖_max`.
    pub fn nonzero_columns(&self, zero_tol: f64) -> Vec<usize> {
        let threshold = zero_tol * self.max_abs();
        (0..self.cols())
            .filter(|&j| {
                let norm = self.column(j).iter().map(|x| x * x).sum::<f64>().sqrt();
                norm > threshold && norm > 0.0
            })
            .collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> DenseMatrix {
        DenseMatrix(self.0.select_columns(cols))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix {}x{} ", self.rows(), self.cols())?;
        f.debug_list()
            .entries((0..self.rows()).map(|i| self.row(i)))
            .finish()
    }
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(pos) => Err(Error::arg(format!(
            "non-finite entry {} at column-major position {pos}",
            data[pos]
        ))),
        None => Ok(()),
    }
}
