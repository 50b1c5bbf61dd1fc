//! Initial factors for coordinate descent.
//!
//! - `RD`: uniform random `V`.
//! - `KM`: k-means indicator matrix plus 0.2.
//! - `A2`: rank-`(r−1)` truncated SVD lifted to rank `r`; its error equals the
//!   best rank-`(r−1)` error, which bounds every later CD iterate.
//! - `A3`: rank-`r` truncated SVD made semi-nonnegative through the smallest
//!   shift `ε*` found by bisection; optimal whenever `ε* = 0`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dense::{kmeans, lstsq_left, random_uniform, truncated_svd, DenseMatrix, RngSeed, DEFAULT_KMEANS_MAX_ITER};
use crate::error::{Error, Result};
use crate::factor::{lift, sign_flip_in_place, Factorization};
use crate::halfspace::{bisection_epsilon, BisectionResult, DEFAULT_REL_PREC, DEFAULT_ZERO_TOL};

/// Constant added to the k-means indicator matrix.
pub const KM_OFFSET: f64 = 0.2;
/// Floor on `x_j` before dividing in the A3 correction.
pub const A3_X_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Rd,
    Km,
    A2,
    A3,
}

impl InitKind {
    pub const ALL: [InitKind; 4] = [InitKind::Rd, InitKind::Km, InitKind::A2, InitKind::A3];

    pub fn as_str(self) -> &'static str {
        match self {
            InitKind::Rd => "rd",
            InitKind::Km => "km",
            InitKind::A2 => "a2",
            InitKind::A3 => "a3",
        }
    }

    /// Smallest factorization rank the initializer accepts.
    pub fn min_rank(self) -> usize {
        if self == InitKind::A2 { 2 } else { 1 }
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rd" => Ok(InitKind::Rd),
            "km" => Ok(InitKind::Km),
            "a2" => Ok(InitKind::A2),
            "a3" => Ok(InitKind::A3),
            other => Err(Error::arg(format!("unknown initialization '{other}' (expected rd, km, a2 or a3)"))),
        }
    }
}

/// Which initializer to run and the parameters it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitStrategy {
    pub kind: InitKind,
    /// Used by RD and KM.
    pub seed: RngSeed,
    /// KM only.
    pub kmeans_max_iter: usize,
    /// A3 only.
    pub rel_prec: f64,
}

impl InitStrategy {
    pub fn new(kind: InitKind, seed: RngSeed) -> Self {
        InitStrategy { kind, seed, kmeans_max_iter: DEFAULT_KMEANS_MAX_ITER, rel_prec: DEFAULT_REL_PREC }
    }
}

#[derive(Debug, Clone)]
pub struct Initialization {
    pub v0: DenseMatrix,
    /// Present for A2 and A3, which build `U0` alongside `V0`.
    pub factorization: Option<Factorization>,
    /// A3 only.
    pub bisection: Option<BisectionResult>,
}

pub fn initialize(m: &DenseMatrix, r: usize, strategy: &InitStrategy) -> Result<Initialization> {
    match strategy.kind {
        InitKind::Rd => Ok(Initialization {
            v0: init_rd(m, r, strategy.seed)?,
            factorization: None,
            bisection: None,
        }),
        InitKind::Km => Ok(Initialization {
            v0: init_km(m, r, strategy.seed, strategy.kmeans_max_iter)?,
            factorization: None,
            bisection: None,
        }),
        InitKind::A2 => {
            let f = init_a2(m, r)?;
            Ok(Initialization { v0: f.v.clone(), factorization: Some(f), bisection: None })
        }
        InitKind::A3 => {
            let (f, bis) = init_a3(m, r, strategy.rel_prec)?;
            Ok(Initialization { v0: f.v.clone(), factorization: Some(f), bisection: Some(bis) })
        }
    }
}

fn check_rank(m: &DenseMatrix, r: usize, min: usize, what: &str) -> Result<()> {
    let q = m.rows().min(m.cols());
    if r < min || r > q {
        return Err(Error::arg(format!(
            "{what} needs {min} <= r <= min(m, n) = {q}, got r = {r}"
        )));
    }
    Ok(())
}

/// `V0 = rand(r, n)`.
pub fn init_rd(m: &DenseMatrix, r: usize, seed: RngSeed) -> Result<DenseMatrix> {
    if r == 0 {
        return Err(Error::arg("random initialization needs r >= 1"));
    }
    Ok(random_uniform(r, m.cols(), seed))
}

/// Cluster indicator matrix of k-means on the columns of `M`, plus 0.2 everywhere.
pub fn init_km(m: &DenseMatrix, r: usize, seed: RngSeed, max_iter: usize) -> Result<DenseMatrix> {
    let clustering = kmeans(m, r, seed, max_iter)?;
    let mut v = DMatrix::from_element(r, m.cols(), KM_OFFSET);
    for (j, &k) in clustering.assignment.iter().enumerate() {
        v[(k, j)] += 1.0;
    }
    Ok(DenseMatrix::wrap(v))
}

/// Rank-`(r−1)` truncated SVD `(A·S, B)`, sign-flipped, then lifted to rank `r`.
pub fn init_a2(m: &DenseMatrix, r: usize) -> Result<Factorization> {
    check_rank(m, r, 2, "A2")?;
    let svd = truncated_svd(m, r - 1)?;
    let mut a = svd.scaled_left().into_nalgebra();
    let mut b = svd.right.into_nalgebra();
    sign_flip_in_place(&mut a, &mut b);
    let (u, v) = lift(&a, &b);
    Factorization::from_parts(m.as_nalgebra(), u, v)
}

/// Rank-`r` truncated SVD, shifted toward semi-nonnegativity by bisection.
///
/// With `(ε*, y*)` from [`bisection_epsilon`] on the sign-flipped right factor
/// `B`, `x = (B + ε*)ᵀy*`, `α_i = max(0, max_j −B(i,j)/x_j)` and
/// `V0 = B + αxᵀ`; `U0` is the least-squares fit to `M`.
pub fn init_a3(m: &DenseMatrix, r: usize, rel_prec: f64) -> Result<(Factorization, BisectionResult)> {
    check_rank(m, r, 1, "A3")?;
    let svd = truncated_svd(m, r)?;
    let mut a = svd.scaled_left().into_nalgebra();
    let mut b = svd.right.into_nalgebra();
    sign_flip_in_place(&mut a, &mut b);

    let bisection = bisection_epsilon(&DenseMatrix::wrap(b.clone()), rel_prec)?;
    let eps = bisection.epsilon_star;
    let shifted = b.add_scalar(eps);
    let active = DenseMatrix::wrap(shifted.clone()).nonzero_columns(DEFAULT_ZERO_TOL);
    let y = DVector::from_column_slice(&bisection.y_star);
    let x = (shifted.transpose() * &y).map(|v| v.max(A3_X_FLOOR));

    let alpha = DVector::from_iterator(
        r,
        (0..r).map(|i| active.iter().fold(0.0_f64, |acc, &j| acc.max(-b[(i, j)] / x[j]))),
    );
    let v0 = &b + &alpha * x.transpose();
    let mut v0_clamped = v0;
    v0_clamped.iter_mut().for_each(|v| *v = v.max(0.0));
    let u0 = lstsq_left(m.as_nalgebra(), &v0_clamped)?;
    let f = Factorization::from_parts(m.as_nalgebra(), u0, v0_clamped)?;
    Ok((f, bisection))
}
