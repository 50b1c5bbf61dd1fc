//! Smallest uniform shift `ε` making `B + ε·1` semi-nonnegative.

use serde::{Deserialize, Serialize};

use super::{halfspace_feasible, DEFAULT_ZERO_TOL};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Bisection stops once the bracket is at most `DEFAULT_REL_PREC·ε₊` wide.
pub const DEFAULT_REL_PREC: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionResult {
    /// Smallest feasible shift found.
    pub epsilon_star: f64,
    /// Witness for `epsilon_star`: `(B(:,j) + ε*·e)ᵀy ≥ 1` on nonzero shifted columns.
    pub y_star: Vec<f64>,
    /// `max_{i,k} max(−B_ik, 0)`, always feasible.
    pub epsilon_plus: f64,
    pub lp_calls: usize,
    /// Every LP evaluated, as `(ε, feasible)` in order.
    pub trace: Vec<(f64, bool)>,
}

fn shifted(b: &DenseMatrix, eps: f64) -> DenseMatrix {
    DenseMatrix::wrap(b.as_nalgebra().add_scalar(eps))
}

pub fn bisection_epsilon(b: &DenseMatrix, rel_prec: f64) -> Result<BisectionResult> {
    bisection_epsilon_with(b, rel_prec, DEFAULT_ZERO_TOL)
}

/// Bisection on `ε ∈ [0, ε₊]` for `min ε  s.t.  (B(:,j) + ε·e)ᵀy ≥ 1`.
///
/// `ε = 0` is tried first. Otherwise the bracket `[ε_i, ε_f]` starts at
/// `[0, ε₊]` with the witness `y ∝ e` at `ε₊` and halves until
/// `ε_f − ε_i ≤ rel_prec·ε₊`. Shifted columns that vanish are dropped with the
/// same `zero_tol` rule as [`halfspace_feasible`].
pub fn bisection_epsilon_with(b: &DenseMatrix, rel_prec: f64, zero_tol: f64) -> Result<BisectionResult> {
    let (r, n) = b.shape();
    if r == 0 || n == 0 {
        return Err(Error::arg("bisection needs a nonempty matrix"));
    }
    if !(rel_prec > 0.0 && rel_prec < 1.0) {
        return Err(Error::arg(format!("relative precision must lie in (0, 1), got {rel_prec}")));
    }
    let epsilon_plus = b.as_slice().iter().fold(0.0_f64, |acc, &x| acc.max(-x));

    let mut trace = Vec::new();
    let at_zero = halfspace_feasible(b, zero_tol)?;
    trace.push((0.0, at_zero.feasible));
    if let Some(z) = at_zero.z {
        return Ok(BisectionResult { epsilon_star: 0.0, y_star: z, epsilon_plus, lp_calls: 1, trace });
    }
    if epsilon_plus == 0.0 {
        return Err(Error::numerical("nonnegative matrix reported outside every half space"));
    }

    let top = shifted(b, epsilon_plus);
    let min_sum = top
        .nonzero_columns(zero_tol)
        .into_iter()
        .map(|j| top.column(j).iter().sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let scale = if min_sum.is_finite() && min_sum > 0.0 { 1.0 / min_sum } else { 1.0 };
    let mut y_f = vec![scale; r];

    let (mut eps_i, mut eps_f) = (0.0, epsilon_plus);
    while eps_f - eps_i > rel_prec * epsilon_plus {
        let mid = 0.5 * (eps_i + eps_f);
        let cert = halfspace_feasible(&shifted(b, mid), zero_tol)?;
        trace.push((mid, cert.feasible));
        match cert.z {
            Some(z) => {
                eps_f = mid;
                y_f = z;
            }
            None => eps_i = mid,
        }
    }
    Ok(BisectionResult {
        epsilon_star: eps_f,
        y_star: y_f,
        epsilon_plus,
        lp_calls: trace.len(),
        trace,
    })
}
