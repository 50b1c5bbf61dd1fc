use nalgebra::DMatrix;

use super::{thin_svd, DenseMatrix};
use crate::error::{Error, Result};

/// Relative singular-value cutoff for the pseudoinverse, scaled by `max(r, n)·σ_max`.
const PINV_RTOL: f64 = 1e-12;

/// `argmin_X ‖M − X·V‖_F`, the minimum-norm minimizer when `V` is rank deficient.
pub fn least_squares_left(m: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    if m.cols() != v.cols() {
        return Err(Error::dims(format!(
            "M has {} columns but V has {}",
            m.cols(),
            v.cols()
        )));
    }
    lstsq_left(m.as_nalgebra(), v.as_nalgebra()).map(DenseMatrix::wrap)
}

/// `M·V⁺` computed from the thin SVD `V = P·diag(σ)·Qᵀ` as `(M·Q)·diag(σ⁺)·Pᵀ`.
pub(crate) fn lstsq_left(m: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (r, n) = v.shape();
    let (p, sv, qt) = thin_svd(v)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let cutoff = r.max(n) as f64 * smax * PINV_RTOL;

    let mut mq = m * qt.transpose();
    for (mut col, &s) in mq.column_iter_mut().zip(&sv) {
        if s > cutoff && s > 0.0 {
            col /= s;
        } else {
            col.fill(0.0);
        }
    }
    Ok(mq * p.transpose())
}
