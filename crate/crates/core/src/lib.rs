//! Semi-nonnegative matrix factorization.
//!
//! Given `M` (any real `m×n` matrix) and a rank `r`, semi-NMF looks for
//! `U ∈ R^{m×r}` and `V ∈ R^{r×n}` with `V ≥ 0` minimizing `‖M − UV‖_F`.
//!
//! The crate provides:
//! - [`factor::semi_rank`]: exact semi-NMF and the semi-nonnegative rank, which is
//!   always `rank(M)` or `rank(M) + 1` and is decided by a half-space LP;
//! - [`init`]: the RD, KM, A2 (rank-`(r−1)` SVD lift) and A3 (SVD plus
//!   ε-bisection) initializations;
//! - [`cd::cd_semi_nmf`]: block coordinate descent with exact row updates;
//! - [`bench`]: the quality measure, synthetic generators and a seeded
//!   experiment runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod bench;
pub mod cd;
pub mod dense;
pub mod error;
pub mod factor;
pub mod halfspace;
pub mod init;

pub use dense::{DenseMatrix, RngSeed, SvdTriplet};
pub use error::{Error, Result};
pub use factor::{Factorization, SemiRankReport};
pub use halfspace::{BisectionResult, HalfspaceCertificate};
