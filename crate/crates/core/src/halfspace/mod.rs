//! Half-space containment of column sets.
//!
//! The nonzero columns of `M` lie in the interior of a common half space iff
//! the system `M(:,j)ᵀz ≥ 1` over those columns is feasible. That decides
//! whether `rank_s(M) = rank(M)`.

mod bisection;
mod simplex;

use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use crate::dense::{thin_svd, DenseMatrix};
use crate::error::{Error, Result};
use simplex::{LpOutcome, StandardLp};

pub use bisection::{bisection_epsilon, bisection_epsilon_with, BisectionResult, DEFAULT_REL_PREC};

/// Columns with 2-norm at most `DEFAULT_ZERO_TOL·‖M‖_max` count as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;
/// Relative singular value cutoff for the column span used by the LP.
pub const SPAN_RTOL: f64 = 1e-12;
/// Largest phase-one objective `t` still accepted as feasible.
pub const LP_FEASIBILITY_TOL: f64 = 1e-9;

const MAX_PIVOTS: usize = 200_000;

/// Outcome of a half-space feasibility test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceCertificate {
    pub feasible: bool,
    /// Witness with `M(:,j)ᵀz ≥ 1` on every nonzero column, present iff feasible.
    pub z: Option<Vec<f64>>,
    /// `min_j M(:,j)ᵀz` over nonzero columns; `+∞` when there are none. For an
    /// infeasible verdict it is the margin of the LP optimum on the columns the
    /// LP saw (below one).
    pub margin: f64,
    /// Optimal `t` of the phase-one LP (0 when no LP was needed).
    pub lp_objective: f64,
}

impl HalfspaceCertificate {
    fn vacuous(dim: usize) -> Self {
        HalfspaceCertificate {
            feasible: true,
            z: Some(vec![1.0; dim]),
            margin: f64::INFINITY,
            lp_objective: 0.0,
        }
    }
}

fn min_margin(columns: &DenseMatrix, idx: &[usize], z: &[f64]) -> f64 {
    idx.iter()
        .map(|&j| columns.column(j).iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Solves `min t  s.t.  cᵀz ≥ 1 − t` for every column `c`, `t ≥ 0`, `z` free.
///
/// The simplex runs on the dual, `max eᵀλ  s.t.  Cλ = 0, eᵀλ ≤ 1, λ ≥ 0`, whose
/// tableau has one row per coordinate instead of one per column; `(z, t)` are
/// its optimal multipliers. Feasible iff the optimal `t ≤ 1e-9`; the returned
/// witness is rescaled so its margin over the given columns is at least one.
pub fn lp_feasibility(columns: &DenseMatrix) -> Result<HalfspaceCertificate> {
    let (m, p) = columns.shape();
    if p == 0 {
        return Ok(HalfspaceCertificate::vacuous(m));
    }
    if let Some(j) = (0..p).find(|&j| columns.column(j).iter().all(|&x| x == 0.0)) {
        return Err(Error::arg(format!("column {j} is zero")));
    }

    // Variables: λ (p), slack of eᵀλ ≤ 1. Rows: C (m), then eᵀ.
    let cols = p + 1;
    let mut a = vec![0.0; (m + 1) * cols];
    for j in 0..p {
        for (i, &c) in columns.column(j).iter().enumerate() {
            a[i * cols + j] = c;
        }
        a[m * cols + j] = 1.0;
    }
    a[m * cols + p] = 1.0;
    let mut b = vec![0.0; m + 1];
    b[m] = 1.0;
    let mut cost = vec![-1.0; cols];
    cost[p] = 0.0;
    let lp = StandardLp { rows: m + 1, cols, a, b, c: cost, max_pivots: MAX_PIVOTS };

    let (y, t) = match lp.solve()? {
        LpOutcome::Optimal { duals, objective, .. } => (duals, (-objective).max(0.0)),
        other => {
            return Err(Error::numerical(format!(
                "half-space LP is always feasible and bounded, solver reported {other:?}"
            )))
        }
    };
    let all: Vec<usize> = (0..p).collect();
    let mut z: Vec<f64> = y[..m].iter().map(|v| -v).collect();
    if t > LP_FEASIBILITY_TOL {
        let margin = min_margin(columns, &all, &z);
        return Ok(HalfspaceCertificate { feasible: false, z: None, margin, lp_objective: t });
    }
    let margin = min_margin(columns, &all, &z);
    if margin <= 0.0 {
        return Err(Error::numerical(format!(
            "LP optimum t = {t:e} but the witness margin is {margin:e}"
        )));
    }
    if margin < 1.0 {
        z.iter_mut().for_each(|v| *v /= margin);
    }
    let margin = min_margin(columns, &all, &z);
    Ok(HalfspaceCertificate { feasible: true, z: Some(z), margin, lp_objective: t })
}

/// Decides whether the nonzero columns of `m` lie in the interior of a common half space.
///
/// Columns whose 2-norm is at most `zero_tol·‖M‖_max` are discarded. The LP runs
/// on unit-normalized columns; the witness is then rescaled so that
/// `M(:,j)ᵀz ≥ 1` holds on the original columns.
pub fn halfspace_feasible(m: &DenseMatrix, zero_tol: f64) -> Result<HalfspaceCertificate> {
    if m.rows() == 0 {
        return Err(Error::arg("half-space test needs at least one row"));
    }
    if !(zero_tol >= 0.0) {
        return Err(Error::arg(format!("zero_tol must be nonnegative, got {zero_tol}")));
    }
    let idx = m.nonzero_columns(zero_tol);
    if idx.is_empty() {
        return Ok(HalfspaceCertificate::vacuous(m.rows()));
    }
    let mut normalized = m.select_columns(&idx).into_nalgebra();
    for mut col in normalized.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    // The LP runs in coordinates of the column span so that directions
    // orthogonal to every column cannot inflate the witness.
    let (basis, sv, vt) = thin_svd(&normalized)?;
    let cutoff = SPAN_RTOL * normalized.nrows().max(normalized.ncols()) as f64 * sv[0];
    let k = sv.iter().take_while(|&&s| s > cutoff).count().max(1);
    let coords = DMatrix::from_diagonal(&DVector::from_column_slice(&sv[..k])) * vt.rows(0, k);
    let reduced = lp_feasibility(&DenseMatrix::wrap(coords))?;
    let Some(w) = reduced.z.clone() else {
        return Ok(reduced);
    };
    let mut z: Vec<f64> = (basis.columns(0, k) * DVector::from_vec(w)).iter().copied().collect();
    let margin = min_margin(m, &idx, &z);
    if margin <= 0.0 {
        return Err(Error::numerical("normalized witness lost positivity on original columns"));
    }
    z.iter_mut().for_each(|v| *v /= margin);
    let margin = min_margin(m, &idx, &z);
    Ok(HalfspaceCertificate { feasible: true, z: Some(z), margin, lp_objective: reduced.lp_objective })
}

/// Checks `M(:,j)ᵀz ≥ 1 − tol` on every nonzero column, without touching the LP.
pub fn verify_witness(m: &DenseMatrix, z: &[f64], zero_tol: f64, tol: f64) -> bool {
    z.len() == m.rows() && min_margin(m, &m.nonzero_columns(zero_tol), z) >= 1.0 - tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{random_gaussian, random_uniform, RngSeed};

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn plane_spanning_columns_are_infeasible() {
        let m = mat(&[&[1.0, 0.0, -1.0], &[0.0, 1.0, -1.0]]);
        let cert = halfspace_feasible(&m, DEFAULT_ZERO_TOL).unwrap();
        assert!(!cert.feasible && cert.z.is_none());
        assert!(cert.lp_objective > 0.1);
    }

    #[test]
    fn boundary_columns_are_infeasible() {
        let m = mat(&[&[1.0, -1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(!halfspace_feasible(&m, DEFAULT_ZERO_TOL).unwrap().feasible);
    }

    #[test]
    fn positive_matrices_are_feasible() {
        for seed in 0..10 {
            let m = random_uniform(5, 12, RngSeed(seed));
            let cert = halfspace_feasible(&m, DEFAULT_ZERO_TOL).unwrap();
            assert!(cert.feasible);
            let z = cert.z.unwrap();
            assert!(verify_witness(&m, &z, DEFAULT_ZERO_TOL, 1e-9));
            // e itself works after scaling.
            let e = vec![1.0; 5];
            let scale = 1.0 / min_margin(&m, &(0..12).collect::<Vec<_>>(), &e);
            assert!(verify_witness(&m, &[scale; 5], DEFAULT_ZERO_TOL, 1e-12));
        }
    }

    #[test]
    fn single_and_antipodal_columns() {
        let c = mat(&[&[3.0], &[4.0]]);
        let cert = lp_feasibility(&c).unwrap();
        assert!(cert.feasible && cert.margin >= 1.0 - 1e-9);

        let pair = mat(&[&[3.0, -3.0], &[4.0, -4.0]]);
        assert!(!lp_feasibility(&pair).unwrap().feasible);
    }

    #[test]
    fn lp_rejects_zero_columns() {
        let m = mat(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(lp_feasibility(&m).is_err());
        assert!(halfspace_feasible(&m, DEFAULT_ZERO_TOL).unwrap().feasible);
    }

    #[test]
    fn zero_matrix_is_vacuously_feasible() {
        let cert = halfspace_feasible(&DenseMatrix::zeros(3, 4), DEFAULT_ZERO_TOL).unwrap();
        assert!(cert.feasible);
        assert_eq!(cert.margin, f64::INFINITY);
    }

    #[test]
    fn two_dimensional_random_directions_match_angular_gap() {
        use rand::Rng;
        let mut rng = RngSeed(11).rng();
        for _ in 0..30 {
            // 20 unit vectors within an arc narrower than π.
            let start: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let width: f64 = rng.random::<f64>() * 0.95 * std::f64::consts::PI;
            let angles: Vec<f64> = (0..20).map(|_| start + rng.random::<f64>() * width).collect();
            let data: Vec<f64> = angles.iter().flat_map(|a| [a.cos(), a.sin()]).collect();
            let m = DenseMatrix::from_column_major(2, 20, data).unwrap();
            assert!(lp_feasibility(&m).unwrap().feasible);
        }
    }

    #[test]
    fn tall_gaussian_is_feasible_wide_gaussian_is_not() {
        // n ≤ m: rank n, the row space is all of R^n.
        let tall = random_gaussian(10, 6, RngSeed(1));
        assert!(halfspace_feasible(&tall, DEFAULT_ZERO_TOL).unwrap().feasible);
        // 60 Gaussian directions in R^3 essentially never share a half space.
        let wide = random_gaussian(3, 60, RngSeed(2));
        assert!(!halfspace_feasible(&wide, DEFAULT_ZERO_TOL).unwrap().feasible);
    }
}
