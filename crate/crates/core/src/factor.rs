//! Exact constructions: the rank-`(k+1)` lift of any factorization, the
//! same-rank semi-nonnegative factorization from a half-space witness, and the
//! semi-nonnegative rank itself.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dense::{thin_svd, DenseMatrix};
use crate::error::{Error, Result};
use crate::halfspace::{halfspace_feasible, HalfspaceCertificate, DEFAULT_ZERO_TOL};

/// Singular values `σ_i ≤ max(m, n)·σ₁·RANK_RTOL` count as zero.
pub const RANK_RTOL: f64 = 1e-10;
/// Smallest admissible `|1 + yᵀα|` in the Sherman–Morrison step.
pub const SHERMAN_MORRISON_TOL: f64 = 1e-12;

/// A semi-NMF pair `(U, V)` with `V ≥ 0`.
#[derive(Debug, Clone, Serialize)]
pub struct Factorization {
    #[serde(skip)]
    pub u: DenseMatrix,
    #[serde(skip)]
    pub v: DenseMatrix,
    /// `‖M − UV‖_F` for the matrix the factorization was built for.
    pub frob_error: f64,
    /// Magnitude of the most negative entry clamped to zero in `V`.
    pub clamped: f64,
}

impl Factorization {
    /// Clamps negative roundoff in `v` to zero and records `‖source − UV‖_F`.
    pub fn new(source: &DenseMatrix, u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        Self::from_parts(source.as_nalgebra(), u.into_nalgebra(), v.into_nalgebra())
    }

    pub(crate) fn from_parts(source: &DMatrix<f64>, u: DMatrix<f64>, mut v: DMatrix<f64>) -> Result<Self> {
        if u.ncols() != v.nrows() || u.nrows() != source.nrows() || v.ncols() != source.ncols() {
            return Err(Error::dims(format!(
                "U {:?} and V {:?} do not factor a {:?} matrix",
                u.shape(),
                v.shape(),
                source.shape()
            )));
        }
        let mut clamped = 0.0_f64;
        for x in v.iter_mut() {
            if *x < 0.0 {
                clamped = clamped.max(-*x);
                *x = 0.0;
            }
        }
        let frob_error = (source - &u * &v).norm();
        Ok(Factorization {
            u: DenseMatrix::wrap(u),
            v: DenseMatrix::wrap(v),
            frob_error,
            clamped,
        })
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn product(&self) -> DenseMatrix {
        DenseMatrix::wrap(self.u.as_nalgebra() * self.v.as_nalgebra())
    }
}

/// Turns any `A (m×k)`, `B (k×n)` into `U = [A, −Ae]` and
/// `V(:,j) = [B(:,j); 0] + max(0, max_i −B_ij)·e` with `V ≥ 0` and `UV = AB`.
pub fn lift_rank_plus_one(a: &DenseMatrix, b: &DenseMatrix) -> Result<Factorization> {
    if a.cols() != b.rows() {
        return Err(Error::dims(format!(
            "A has {} columns but B has {} rows",
            a.cols(),
            b.rows()
        )));
    }
    let (u, v) = lift(a.as_nalgebra(), b.as_nalgebra());
    let source = a.as_nalgebra() * b.as_nalgebra();
    Factorization::from_parts(&source, u, v)
}

pub(crate) fn lift(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, k) = a.shape();
    let n = b.ncols();
    let mut u = DMatrix::zeros(m, k + 1);
    u.columns_mut(0, k).copy_from(a);
    let row_sums: DVector<f64> = a.column_sum();
    u.column_mut(k).copy_from(&(-row_sums));

    let mut v = DMatrix::zeros(k + 1, n);
    for j in 0..n {
        let col = b.column(j);
        let shift = col.iter().fold(0.0_f64, |acc, &x| acc.max(-x));
        for i in 0..k {
            v[(i, j)] = col[i] + shift;
        }
        v[(k, j)] = shift;
    }
    (u, v)
}

/// Negates `(A(:,i), B(i,:))` whenever `min_j B(i,j) ≤ min_j −B(i,j)`.
///
/// The product `AB` is unchanged exactly. Returns which rows were flipped.
pub fn sign_flip(a: &DenseMatrix, b: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix, Vec<bool>)> {
    if a.cols() != b.rows() {
        return Err(Error::dims(format!(
            "A has {} columns but B has {} rows",
            a.cols(),
            b.rows()
        )));
    }
    let mut a = a.as_nalgebra().clone();
    let mut b = b.as_nalgebra().clone();
    let flipped = sign_flip_in_place(&mut a, &mut b);
    Ok((DenseMatrix::wrap(a), DenseMatrix::wrap(b), flipped))
}

pub(crate) fn sign_flip_in_place(a: &mut DMatrix<f64>, b: &mut DMatrix<f64>) -> Vec<bool> {
    (0..b.nrows())
        .map(|i| {
            let row = b.row(i);
            let flip = row.min() <= -row.max();
            if flip {
                b.row_mut(i).neg_mut();
                a.column_mut(i).neg_mut();
            }
            flip
        })
        .collect()
}

/// Same-rank exact semi-NMF of `AB` from a witness `y` with `Bᵀy > 0` on nonzero columns.
///
/// With `x = Bᵀy` and `α_i = max(0, max_j −B(i,j)/x_j)`, `V = B + αxᵀ ≥ 0` and
/// `U = A(I + αyᵀ)⁻¹ = A(I − αyᵀ/(1 + yᵀα))`. Rows of `B` must have a positive
/// maximum (see [`sign_flip`]); exactly zero columns of `B` stay zero in `V`.
pub fn exact_semi_nmf_same_rank(a: &DenseMatrix, b: &DenseMatrix, y: &[f64]) -> Result<Factorization> {
    let (a, b) = (a.as_nalgebra(), b.as_nalgebra());
    if a.ncols() != b.nrows() || y.len() != b.nrows() {
        return Err(Error::dims(format!(
            "A {:?}, B {:?} and y of length {} are not conformable",
            a.shape(),
            b.shape(),
            y.len()
        )));
    }
    let (u, v) = same_rank(a, b, y)?;
    Factorization::from_parts(&(a * b), u, v)
}

fn same_rank(a: &DMatrix<f64>, b: &DMatrix<f64>, y: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (r, n) = b.shape();
    if let Some(i) = (0..r).find(|&i| !(b.row(i).max() > 0.0)) {
        return Err(Error::arg(format!(
            "row {i} of B has no positive entry; B must be sign-normalized with rank {r}"
        )));
    }
    // Negating (A(:,i), B(i,:), y_i) leaves AB and x unchanged; with y ≥ 0 the
    // averaging bound gives 1 + yᵀα > 0.
    let (mut a, mut b, mut y) = (a.clone(), b.clone(), DVector::from_column_slice(y));
    for i in 0..r {
        if y[i] < 0.0 {
            y[i] = -y[i];
            b.row_mut(i).neg_mut();
            a.column_mut(i).neg_mut();
        }
    }
    let x = b.transpose() * &y;
    let nonzero: Vec<usize> = (0..n).filter(|&j| b.column(j).iter().any(|&v| v != 0.0)).collect();
    if let Some(&j) = nonzero.iter().find(|&&j| !(x[j] > 0.0)) {
        return Err(Error::arg(format!("witness gives B(:,{j})ᵀy = {} ≤ 0", x[j])));
    }
    let alpha = DVector::from_iterator(
        r,
        (0..r).map(|i| nonzero.iter().fold(0.0_f64, |acc, &j| acc.max(-b[(i, j)] / x[j]))),
    );
    let denom = 1.0 + y.dot(&alpha);
    if denom.abs() < SHERMAN_MORRISON_TOL {
        return Err(Error::numerical(format!("1 + yᵀα = {denom:e} is singular")));
    }
    let v = &b + &alpha * x.transpose();
    let u = &a - (&a * &alpha) * (y.transpose() / denom);
    Ok((u, v))
}

/// Rank, semi-nonnegative rank and an exact semi-NMF of `M`.
#[derive(Debug, Clone, Serialize)]
pub struct SemiRankReport {
    pub rank: usize,
    pub semi_rank: usize,
    pub certificate: HalfspaceCertificate,
    pub factorization: Factorization,
    pub singular_values: Vec<f64>,
}

pub fn semi_rank(m: &DenseMatrix) -> Result<SemiRankReport> {
    semi_rank_with(m, DEFAULT_ZERO_TOL)
}

/// Exact semi-NMF in polynomial time.
///
/// The numerical rank `r` comes from the SVD; the half-space test runs on the
/// sign-normalized right factor `B` restricted to the nonzero columns of `M`.
/// Feasible gives a rank-`r` factorization, infeasible the rank-`(r+1)` lift.
pub fn semi_rank_with(m: &DenseMatrix, zero_tol: f64) -> Result<SemiRankReport> {
    let (rows, cols) = m.shape();
    let mat = m.as_nalgebra();
    let (u_full, sv, vt_full) = thin_svd(mat)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let cutoff = rows.max(cols) as f64 * smax * RANK_RTOL;
    let rank = sv.iter().take_while(|&&s| s > cutoff && s > 0.0).count();

    if rank == 0 {
        let factorization =
            Factorization::from_parts(mat, DMatrix::zeros(rows, 0), DMatrix::zeros(0, cols))?;
        return Ok(SemiRankReport {
            rank: 0,
            semi_rank: 0,
            certificate: HalfspaceCertificate {
                feasible: true,
                z: Some(vec![1.0; rows]),
                margin: f64::INFINITY,
                lp_objective: 0.0,
            },
            factorization,
            singular_values: sv,
        });
    }

    let mut a = u_full.columns(0, rank).into_owned();
    for (mut col, &s) in a.column_iter_mut().zip(&sv) {
        col *= s;
    }
    let mut b = vt_full.rows(0, rank).into_owned();
    let nonzero = m.nonzero_columns(zero_tol);
    for j in 0..cols {
        if nonzero.binary_search(&j).is_err() {
            b.column_mut(j).fill(0.0);
        }
    }
    sign_flip_in_place(&mut a, &mut b);

    let restricted = DenseMatrix::wrap(b.select_columns(&nonzero));
    let certificate = halfspace_feasible(&restricted, 0.0)?;
    let (u, v, semi) = match &certificate.z {
        Some(y) => {
            let (u, v) = same_rank(&a, &b, y)?;
            (u, v, rank)
        }
        None => {
            let (u, v) = lift(&a, &b);
            (u, v, rank + 1)
        }
    };
    let factorization = Factorization::from_parts(mat, u, v)?;
    Ok(SemiRankReport { rank, semi_rank: semi, certificate, factorization, singular_values: sv })
}
