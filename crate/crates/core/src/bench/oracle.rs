use std::f64::consts::PI;

use crate::dense::{singular_values, DenseMatrix};
use crate::error::{Error, Result};

/// Largest `vᵀMᵀMv` over `v = p/‖p‖` with `p` a nonzero point of the integer
/// grid `{0, …, density}^n`. Only for `n ≤ 4`.
pub fn oracle_rank1_grid(m: &DenseMatrix, density: usize) -> Result<f64> {
    let n = m.cols();
    if n == 0 || n > 4 {
        return Err(Error::arg(format!("grid oracle needs 1 <= n <= 4, got n = {n}")));
    }
    if density == 0 {
        return Err(Error::arg("grid density must be >= 1"));
    }
    let gram = m.as_nalgebra().transpose() * m.as_nalgebra();
    let side = density + 1;
    let mut p = vec![0usize; n];
    let mut best = 0.0_f64;
    for idx in 1..side.pow(n as u32) {
        let mut rest = idx;
        for slot in p.iter_mut() {
            *slot = rest % side;
            rest /= side;
        }
        let mut num = 0.0;
        let mut norm2 = 0.0;
        for a in 0..n {
            let pa = p[a] as f64;
            norm2 += pa * pa;
            for b in 0..n {
                num += pa * gram[(a, b)] * p[b] as f64;
            }
        }
        best = best.max(num / norm2);
    }
    Ok(best)
}

/// Upper bound on the gap between the grid optimum of [`oracle_rank1_grid`]
/// and the true maximum over the nonnegative unit sphere: `2σ₁²√n/d`.
///
/// Rounding `d·v*` to the grid moves it by at most `√n/2`, so the normalized
/// point is within `√n/d` of `v*`, and `|f(v) − f(w)| ≤ 2σ₁²‖v − w‖` on the
/// unit sphere.
pub fn rank1_grid_slack(m: &DenseMatrix, density: usize) -> Result<f64> {
    let s1 = singular_values(m)?.first().copied().unwrap_or(0.0);
    Ok(2.0 * s1 * s1 * (m.cols() as f64).sqrt() / density as f64)
}

/// Whether the nonzero columns of a `2×n` matrix lie in an open half-plane,
/// decided by the largest angular gap between consecutive column directions.
pub fn oracle_halfplane_2d(m: &DenseMatrix, zero_tol: f64) -> Result<bool> {
    if m.rows() != 2 {
        return Err(Error::dims(format!("half-plane oracle needs 2 rows, got {}", m.rows())));
    }
    let mut angles: Vec<f64> = m
        .nonzero_columns(zero_tol)
        .into_iter()
        .map(|j| {
            let c = m.column(j);
            c[1].atan2(c[0])
        })
        .collect();
    if angles.is_empty() {
        return Ok(true);
    }
    angles.sort_by(f64::total_cmp);
    let wrap = 2.0 * PI - (angles[angles.len() - 1] - angles[0]);
    let gap = angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
    Ok(gap > PI)
}

/// `M = [1 −1 0; 0 0 1]` with the rank-2 factors `U = [1 −1; δ δ]`,
/// `V = [1 0 1/(2δ); 0 1 1/(2δ)]`, for which `UV = [1 −1 0; δ δ 1]` and
/// `‖M − UV‖_F = δ√2`, although `M` has no exact rank-2 semi-NMF.
pub fn ill_posed_fixture(delta: f64) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::arg(format!("delta must be positive and finite, got {delta}")));
    }
    let m = DenseMatrix::from_rows(&[[1.0, -1.0, 0.0], [0.0, 0.0, 1.0]])?;
    let u = DenseMatrix::from_rows(&[[1.0, -1.0], [delta, delta]])?;
    let h = 0.5 / delta;
    let v = DenseMatrix::from_rows(&[[1.0, 0.0, h], [0.0, 1.0, h]])?;
    Ok((m, u, v))
}
