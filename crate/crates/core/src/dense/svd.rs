use nalgebra::{DMatrix, SVD};

use super::DenseMatrix;
use crate::error::{Error, Result};

const SVD_MAX_SWEEPS: usize = 10_000;
/// Convergence thresholds tried in order by [`thin_svd`].
const SVD_EPS_LADDER: [f64; 4] = [5.0 * f64::EPSILON, 1e-14, 1e-13, f64::EPSILON];
const ACCURACY_RTOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Top-`k` singular triplet `M ≈ left · diag(singular_values) · right`.
///
/// `left` is `m×k` with orthonormal columns, `right` is `k×n` with
/// orthonormal rows; singular values are nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdTriplet {
    pub left: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right: DenseMatrix,
}

impl SvdTriplet {
    /// `left · diag(singular_values)`.
    pub fn scaled_left(&self) -> DenseMatrix {
        let mut a = self.left.as_nalgebra().clone();
        for (mut col, &s) in a.column_iter_mut().zip(&self.singular_values) {
            col *= s;
        }
        DenseMatrix::wrap(a)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        DenseMatrix::wrap(self.scaled_left().as_nalgebra() * self.right.as_nalgebra())
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }
}

/// Thin SVD `(U, σ, Vᵀ)` with `q = min(m, n)` sorted nonincreasing.
///
/// nalgebra's Golub–Kahan iteration sometimes returns a wrong decomposition
/// for (nearly) rank-deficient inputs, depending on the convergence threshold
/// and orientation. Each attempt is therefore checked for reconstruction and
/// orthonormality, and the next threshold or the transpose is tried on failure.
pub(crate) fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok((DMatrix::zeros(rows, 0), Vec::new(), DMatrix::zeros(0, cols)));
    }
    let tol = ACCURACY_RTOL * m.norm();
    let transposed = m.transpose();
    let mut worst = 0.0_f64;
    let mut found = None;
    'search: for &eps in &SVD_EPS_LADDER {
        for flip in [false, true] {
            let Some((u, sv, vt)) = raw_svd(if flip { &transposed } else { m }, eps) else {
                continue;
            };
            let candidate = if flip { (vt.transpose(), sv, u.transpose()) } else { (u, sv, vt) };
            let err = defect(m, &candidate);
            if err <= tol.max(f64::MIN_POSITIVE) || m.norm() == 0.0 {
                found = Some(candidate);
                break 'search;
            }
            worst = worst.max(err);
        }
    }
    if found.is_none() {
        let candidate = jacobi_svd(m);
        let err = defect(m, &candidate);
        if err <= tol {
            found = Some(candidate);
        }
        worst = worst.max(err);
    }
    let (u, sv, vt) = found.ok_or_else(|| {
        Error::numerical(format!("SVD of a {rows}x{cols} matrix failed its accuracy check (defect {worst:e})"))
    })?;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return Ok((u, sv, vt));
    }
    let sorted = order.iter().map(|&i| sv[i]).collect();
    Ok((u.select_columns(&order), sorted, vt.select_rows(&order)))
}

type RawSvd = (DMatrix<f64>, Vec<f64>, DMatrix<f64>);

fn raw_svd(m: &DMatrix<f64>, eps: f64) -> Option<RawSvd> {
    let svd = SVD::try_new(m.clone(), true, true, eps, SVD_MAX_SWEEPS)?;
    Some((svd.u?, svd.singular_values.iter().copied().collect(), svd.v_t?))
}

/// One-sided Jacobi SVD. Slower than Golub–Kahan but reliable on the
/// rank-deficient inputs where the latter misbehaves.
fn jacobi_svd(m: &DMatrix<f64>) -> RawSvd {
    if m.nrows() < m.ncols() {
        let (u, sv, vt) = jacobi_svd(&m.transpose());
        return (vt.transpose(), sv, u.transpose());
    }
    let (rows, cols) = m.shape();
    let mut w = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let (a, b) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = c * a - s * b;
                        mat[(i, q)] = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sv: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tiny = rows as f64 * f64::EPSILON * smax;
    let mut u = DMatrix::<f64>::zeros(rows, cols);
    let mut pending = Vec::new();
    for (j, &s) in sv.iter().enumerate() {
        if s > tiny && s > 0.0 {
            u.set_column(j, &(w.column(j) / s));
        } else {
            pending.push(j);
        }
    }
    // Complete the columns of negligible singular values to an orthonormal set.
    let mut basis = 0;
    for j in pending {
        while basis < rows {
            let mut c = nalgebra::DVector::<f64>::zeros(rows);
            c[basis] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for k in 0..cols {
                    if k != j {
                        let proj = u.column(k).dot(&c);
                        c -= u.column(k) * proj;
                    }
                }
            }
            let norm = c.norm();
            if norm > 0.5 {
                u.set_column(j, &(c / norm));
                break;
            }
        }
    }
    (u, sv, v.transpose())
}

/// Reconstruction error plus orthonormality defects scaled by `‖M‖_F`.
fn defect(m: &DMatrix<f64>, (u, sv, vt): &RawSvd) -> f64 {
    let mut us = u.clone();
    for (j, &s) in sv.iter().enumerate() {
        us.column_mut(j).scale_mut(s);
    }
    let q = sv.len();
    let eye = DMatrix::<f64>::identity(q, q);
    let ortho = (u.transpose() * u - &eye).norm() + (vt * vt.transpose() - &eye).norm();
    (us * vt - m).norm() + ortho * m.norm()
}

/// Best rank-`k` approximation of `M` in the Frobenius norm.
///
/// A full SVD is computed and truncated; desk-scale problems make this cheaper
/// than it sounds.
pub fn truncated_svd(m: &DenseMatrix, k: usize) -> Result<SvdTriplet> {
    let q = m.rows().min(m.cols());
    if k == 0 || k > q {
        return Err(Error::arg(format!(
            "truncation rank {k} outside 1..={q} for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let (u, sv, vt) = thin_svd(m.as_nalgebra())?;
    Ok(SvdTriplet {
        left: DenseMatrix::wrap(u.columns(0, k).into_owned()),
        singular_values: sv[..k].to_vec(),
        right: DenseMatrix::wrap(vt.rows(0, k).into_owned()),
    })
}

/// Full spectrum of `M`, nonincreasing, `min(m, n)` values.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    let mut sv = thin_svd(m.as_nalgebra())?.1;
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// `sqrt(Σ_{i>k} σ_i²)`: the error of the best rank-`k` approximation.
pub fn tail_norm(singular_values: &[f64], k: usize) -> f64 {
    singular_values.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt()
}

/// Unit leading left singular vector of `m`, `None` when `m` vanishes.
pub(crate) fn leading_left_vector(m: &DMatrix<f64>) -> Result<Option<nalgebra::DVector<f64>>> {
    let (u, sv, _) = thin_svd(m)?;
    match sv.first() {
        Some(&s) if s > 0.0 => Ok(Some(u.column(0).into_owned())),
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{random_gaussian, RngSeed};
    use nalgebra::SymmetricEigen;

    #[test]
    fn wide_collinear_columns() {
        // Regression: a tight convergence threshold broke this decomposition.
        let u = [0.3, -1.2, 0.7, 2.0, -0.4, 0.9];
        let w = [0.1, 0.5, 0.9, 0.2, 0.7, 0.3, 0.8, 0.05, 0.6, 0.4];
        let rows: Vec<Vec<f64>> = u.iter().map(|a| w.iter().map(|b| a * b).collect()).collect();
        let m = DenseMatrix::from_rows(&rows).unwrap();
        let expected = m.frobenius_norm();
        let t = truncated_svd(&m, 1).unwrap();
        assert!((t.singular_values[0] - expected).abs() <= 1e-12 * expected);
        assert!(t.reconstruct().sub(&m).unwrap().frobenius_norm() <= 1e-12 * expected);
        assert!((singular_values(&m).unwrap()[0] - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn jacobi_fallback_is_accurate() {
        for (s, (m, n, k)) in [(6, 10, 1), (10, 4, 4), (40, 100, 12), (7, 7, 3)].into_iter().enumerate() {
            let seed = RngSeed(s as u64);
            let a = random_gaussian(m, k, seed).matmul(&random_gaussian(k, n, seed.derive(1))).unwrap();
            let mat = a.as_nalgebra();
            let svd = jacobi_svd(mat);
            assert_eq!(svd.1.len(), m.min(n));
            assert!(defect(mat, &svd) <= 1e-12 * mat.norm(), "{m}x{n} rank {k}");
            assert_eq!(svd.1.iter().filter(|&&x| x > 1e-10 * mat.norm()).count(), k);
        }
    }

    #[test]
    fn diagonal_matrix() {
        let m = DenseMatrix::from_rows(&[[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let t = truncated_svd(&m, 2).unwrap();
        assert!((t.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((t.singular_values[1] - 2.0).abs() < 1e-14);
        let resid = m.sub(&t.reconstruct()).unwrap().frobenius_norm();
        assert!((resid - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let m = DenseMatrix::zeros(4, 5);
        let t = truncated_svd(&m, 1).unwrap();
        assert_eq!(t.singular_values, vec![0.0]);
        assert_eq!(m.sub(&t.reconstruct()).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn rank_out_of_range() {
        let m = DenseMatrix::zeros(3, 5);
        assert!(matches!(truncated_svd(&m, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(truncated_svd(&m, 4), Err(Error::InvalidArgument(_))));
        assert!(truncated_svd(&m, 3).is_ok());
    }

    #[test]
    fn residual_matches_eigen_oracle() {
        // Independent route: the spectrum of MᵀM from a symmetric eigensolver.
        let m = random_gaussian(20, 30, RngSeed(42));
        let gram = m.as_nalgebra().transpose() * m.as_nalgebra();
        let mut eig: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().map(|l| l.max(0.0)).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let oracle_tail = eig[5..].iter().sum::<f64>().sqrt();

        let t = truncated_svd(&m, 5).unwrap();
        let resid = m.sub(&t.reconstruct()).unwrap().frobenius_norm();
        assert!((resid - oracle_tail).abs() <= 1e-8 * oracle_tail, "{resid} vs {oracle_tail}");
        for (s, l) in t.singular_values.iter().zip(&eig) {
            assert!((s * s - l).abs() <= 1e-8 * l);
        }
    }

    #[test]
    fn factors_orthonormal_and_sorted() {
        for (rows, cols, seed) in [(12, 7, 1), (7, 12, 2), (9, 9, 3)] {
            let m = random_gaussian(rows, cols, RngSeed(seed));
            let k = rows.min(cols) - 1;
            let t = truncated_svd(&m, k).unwrap();
            assert!(t.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let a = t.left.as_nalgebra();
            let b = t.right.as_nalgebra();
            let ata = a.transpose() * a;
            let bbt = b * b.transpose();
            let eye = DMatrix::<f64>::identity(k, k);
            assert!((ata - &eye).abs().max() < 1e-8);
            assert!((bbt - &eye).abs().max() < 1e-8);
            let sv = singular_values(&m).unwrap();
            let resid = m.sub(&t.reconstruct()).unwrap().frobenius_norm();
            assert!((resid - tail_norm(&sv, k)).abs() <= 1e-8 * tail_norm(&sv, k));
        }
    }
}
