//! Block coordinate descent for semi-NMF.
//!
//! Each iteration solves the unconstrained least-squares problem for `U` and
//! then sweeps the rows of `V` in index order, replacing row `i` by its exact
//! minimizer `max(0, (M − U(:,I)V(I,:))ᵀU(:,i) / ‖U(:,i)‖²)` with
//! `I = {1..r} \ {i}`. The residual `M − UV` is maintained across the sweep so
//! a row update costs `O(mn)`.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dense::{leading_left_vector, lstsq_left, DenseMatrix};
use crate::error::{Error, Result};
use crate::factor::Factorization;

/// Column `i` of `U` is degenerate when `‖U(:,i)‖² < DEGENERATE_RTOL·‖U‖_F²`.
pub const DEGENERATE_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct CdOptions {
    pub max_iter: usize,
    /// Stop once `e_{t−1} − e_t ≤ rel_tol·e_0`. Off by default.
    pub rel_tol: Option<f64>,
    /// Record the objective after every half-step (U-solve and row update).
    pub record_half_steps: bool,
}

impl CdOptions {
    pub fn new(max_iter: usize) -> Self {
        CdOptions { max_iter, rel_tol: None, record_half_steps: false }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveTrace {
    /// `errors[0]` follows the first U-solve, `errors[t]` iteration `t`.
    pub errors: Vec<f64>,
    pub iterations_run: usize,
    #[serde(skip)]
    pub wall_time: Duration,
    /// Row updates skipped because `U(:,i)` was degenerate.
    pub skipped_updates: usize,
    /// Columns of `U` reset to the residual's leading direction.
    pub reinitialized_columns: usize,
    /// Objective after each half-step, when requested.
    pub half_steps: Vec<f64>,
    /// `‖M‖_F`, the scale for the monotonicity slack.
    pub input_norm: f64,
}

impl SolveTrace {
    pub fn final_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(f64::NAN)
    }

    /// `errors[t+1] ≤ errors[t] + rel_slack·‖M‖_F` for every `t`.
    ///
    /// The slack is relative to the input norm: once the error reaches roundoff
    /// level `errors[0]` itself is noise.
    pub fn is_monotone(&self, rel_slack: f64) -> bool {
        let slack = rel_slack * self.input_norm;
        self.errors.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

pub fn cd_semi_nmf(m: &DenseMatrix, v0: &DenseMatrix, max_iter: usize) -> Result<(Factorization, SolveTrace)> {
    cd_semi_nmf_with(m, v0, &CdOptions::new(max_iter))
}

/// Runs coordinate descent from `v0` (`r×n`, nonnegative, no zero row).
pub fn cd_semi_nmf_with(m: &DenseMatrix, v0: &DenseMatrix, opts: &CdOptions) -> Result<(Factorization, SolveTrace)> {
    let start = Instant::now();
    if opts.max_iter == 0 {
        return Err(Error::arg("max_iter must be at least 1"));
    }
    if v0.cols() != m.cols() {
        return Err(Error::dims(format!(
            "V0 has {} columns, M has {}",
            v0.cols(),
            m.cols()
        )));
    }
    if v0.rows() == 0 {
        return Err(Error::arg("V0 must have at least one row"));
    }
    if v0.min_entry() < 0.0 {
        return Err(Error::arg("V0 must be entrywise nonnegative"));
    }
    if let Some(i) = (0..v0.rows()).find(|&i| v0.row(i).iter().all(|&x| x == 0.0)) {
        return Err(Error::arg(format!("row {i} of V0 is zero")));
    }

    let mat = m.as_nalgebra();
    let mut state = State::new(mat, v0.as_nalgebra().clone())?;
    let mut trace = SolveTrace { input_norm: mat.norm(), ..SolveTrace::default() };
    trace.errors.push(state.error());
    if opts.record_half_steps {
        trace.half_steps.push(trace.errors[0]);
    }

    for it in 1..=opts.max_iter {
        if it > 1 {
            state.solve_u()?;
            if opts.record_half_steps {
                trace.half_steps.push(state.error());
            }
        }
        trace.reinitialized_columns += state.reseed_degenerate_columns()?;
        for i in 0..state.v.nrows() {
            if !state.update_row(i) {
                trace.skipped_updates += 1;
            }
            if opts.record_half_steps {
                trace.half_steps.push(state.error());
            }
        }
        state.refresh();
        trace.errors.push(state.error());
        trace.iterations_run = it;
        if let Some(tol) = opts.rel_tol {
            let n = trace.errors.len();
            if trace.errors[n - 2] - trace.errors[n - 1] <= tol * trace.errors[0] {
                break;
            }
        }
    }
    trace.wall_time = start.elapsed();
    let fact = Factorization::from_parts(mat, state.u, state.v)?;
    Ok((fact, trace))
}

struct State<'a> {
    m: &'a DMatrix<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    /// `M − UV`.
    resid: DMatrix<f64>,
}

impl<'a> State<'a> {
    fn new(m: &'a DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        let u = lstsq_left(m, &v)?;
        let resid = accurate_residual(m, &u, &v);
        Ok(State { m, u, v, resid })
    }

    fn error(&self) -> f64 {
        self.resid.norm()
    }

    /// Least-squares `U`. A truncated pseudoinverse is not an exact minimizer
    /// for ill-conditioned `V`, so a solve that increases the error is dropped.
    fn solve_u(&mut self) -> Result<()> {
        let u = lstsq_left(self.m, &self.v)?;
        let resid = accurate_residual(self.m, &u, &self.v);
        if resid.norm() <= self.resid.norm() {
            self.u = u;
            self.resid = resid;
        }
        Ok(())
    }

    /// Recomputes `M − UV`, discarding drift from the rank-one updates.
    fn refresh(&mut self) {
        self.resid = accurate_residual(self.m, &self.u, &self.v);
    }

    fn is_degenerate(&self, i: usize, total: f64) -> bool {
        let sq = self.u.column(i).norm_squared();
        sq == 0.0 || sq < DEGENERATE_RTOL * total
    }

    /// Resets degenerate columns of `U` whose row of `V` is zero. Those columns
    /// do not enter the product, so the objective is unchanged.
    fn reseed_degenerate_columns(&mut self) -> Result<usize> {
        let total = self.u.norm_squared();
        let mut count = 0;
        for i in 0..self.u.ncols() {
            if !self.is_degenerate(i, total) || self.v.row(i).iter().any(|&x| x != 0.0) {
                continue;
            }
            let Some(dir) = leading_left_vector(&self.resid)? else {
                continue;
            };
            let proj = self.resid.transpose() * &dir;
            let pos: f64 = proj.iter().map(|&p| p.max(0.0).powi(2)).sum();
            let neg: f64 = proj.iter().map(|&p| (-p).max(0.0).powi(2)).sum();
            let dir = if neg > pos { -dir } else { dir };
            self.u.column_mut(i).copy_from(&dir);
            count += 1;
        }
        Ok(count)
    }

    /// Exact minimization over row `i`. Returns false when the update was skipped.
    fn update_row(&mut self, i: usize) -> bool {
        let total = self.u.norm_squared();
        if self.is_degenerate(i, total) {
            return false;
        }
        let ui = self.u.column(i).into_owned();
        let nrm = ui.norm_squared();
        // (M − U(:,I)V(I,:))ᵀu = Rᵀu + ‖u‖²·V(i,:)ᵀ
        let g: DVector<f64> = self.resid.tr_mul(&ui);
        let n = self.v.ncols();
        let mut delta = DVector::zeros(n);
        for j in 0..n {
            let old = self.v[(i, j)];
            let new = (old + g[j] / nrm).max(0.0);
            delta[j] = new - old;
            self.v[(i, j)] = new;
        }
        self.resid.ger(-1.0, &ui, &delta, 1.0);
        true
    }
}

/// `M − UV` with compensated dot products.
///
/// `U` and `V` can be far larger than `M` (`‖U‖‖V‖ ≫ ‖M‖`) with the product
/// cancelling, and a plain product then has roundoff well above the
/// monotonicity slack. Each entry is accumulated with TwoSum/TwoProduct error
/// terms, which is about as accurate as working in twice the precision.
fn accurate_residual(m: &DMatrix<f64>, u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    // Dekker's splitting; `mul_add` is a library call without target FMA.
    let split = |x: f64| {
        let c = 134_217_729.0 * x;
        let hi = c - (c - x);
        (hi, x - hi)
    };
    let ut = u.map(|x| -x).transpose();
    let us: Vec<(f64, f64)> = ut.iter().map(|&x| split(x)).collect();
    let vs: Vec<(f64, f64)> = v.iter().map(|&x| split(x)).collect();
    let r = u.ncols();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let (mut sum, mut comp) = (m[(i, j)], 0.0);
        for k in 0..r {
            let (a, b) = (ut[(k, i)], v[(k, j)]);
            let ((ah, al), (bh, bl)) = (us[i * r + k], vs[j * r + k]);
            let p = a * b;
            let p_err = al * bl - (((p - ah * bh) - al * bh) - ah * bl);
            let t = sum + p;
            let z = t - sum;
            comp += (sum - (t - z)) + (p - z) + p_err;
            sum = t;
        }
        sum + comp
    })
}

/// Exact minimizer of `‖M − UV‖_F` over row `i` of `V ≥ 0`, all else fixed.
pub fn residual_row_update(m: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix, i: usize) -> Result<Vec<f64>> {
    if u.rows() != m.rows() || v.cols() != m.cols() || u.cols() != v.rows() {
        return Err(Error::dims("M, U and V are not conformable"));
    }
    if i >= v.rows() {
        return Err(Error::arg(format!("row {i} out of range for {} rows", v.rows())));
    }
    let mat = m.as_nalgebra();
    let mut state = State {
        m: mat,
        u: u.as_nalgebra().clone(),
        v: v.as_nalgebra().clone(),
        resid: mat - u.as_nalgebra() * v.as_nalgebra(),
    };
    if !state.update_row(i) {
        return Err(Error::numerical(format!("column {i} of U is degenerate")));
    }
    Ok(state.v.row(i).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{random_gaussian, random_uniform, RngSeed};

    #[test]
    fn residual_survives_cancellation() {
        // (2³⁰+1)² − 2³⁰(2³⁰+2) = 1, but (2³⁰+1)² needs 61 bits.
        let a = (1u64 << 30) as f64;
        let m = DMatrix::from_element(1, 1, 1.0);
        let u = DMatrix::from_row_slice(1, 2, &[a + 1.0, -a]);
        let v = DMatrix::from_column_slice(2, 1, &[a + 1.0, a + 2.0]);
        assert_ne!((&m - &u * &v)[(0, 0)], 0.0);
        assert_eq!(accurate_residual(&m, &u, &v)[(0, 0)], 0.0);
    }

    #[test]
    fn exact_start_stays_exact() {
        let u = random_gaussian(6, 2, RngSeed(1));
        let v = random_uniform(2, 9, RngSeed(2));
        let m = u.matmul(&v).unwrap();
        let (f, trace) = cd_semi_nmf(&m, &v, 20).unwrap();
        assert!(trace.errors[0] < 1e-12 * m.frobenius_norm());
        assert!(trace.errors.iter().all(|&e| e < 1e-10 * m.frobenius_norm()));
        assert!(f.frob_error < 1e-10 * m.frobenius_norm());
    }

    #[test]
    fn plane_spanning_fixture_reaches_zero_at_rank_three() {
        let m = DenseMatrix::from_rows(&[[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]]).unwrap();
        let v0 = random_uniform(3, 3, RngSeed(5));
        // A generic 3×3 V0 is invertible, so the first U-solve is already exact.
        assert!(cd_semi_nmf(&m, &v0, 1).unwrap().1.errors[0] < 1e-10);
        let (f, trace) = cd_semi_nmf(&m, &v0, 500).unwrap();
        assert!(f.frob_error < 1e-6, "error {}", f.frob_error);
        assert!(trace.is_monotone(1e-12));
        assert!(f.v.min_entry() >= 0.0);
    }

    #[test]
    fn half_steps_never_increase() {
        for seed in 0..10 {
            let m = random_gaussian(12, 20, RngSeed(seed));
            let v0 = random_uniform(4, 20, RngSeed(100 + seed));
            let opts = CdOptions { record_half_steps: true, ..CdOptions::new(30) };
            let (_, trace) = cd_semi_nmf_with(&m, &v0, &opts).unwrap();
            let slack = 1e-12 * m.frobenius_norm();
            assert!(trace.half_steps.windows(2).all(|w| w[1] <= w[0] + slack));
            assert!(trace.is_monotone(1e-12));
            assert_eq!(trace.errors.len(), 31);
        }
    }

    #[test]
    fn converged_runs_satisfy_kkt() {
        // Gaussian inputs can drift toward an unattained infimum; a noisy
        // semi-nonnegative input has a well-defined stationary point.
        let base = random_gaussian(8, 3, RngSeed(20)).matmul(&random_uniform(3, 10, RngSeed(21))).unwrap();
        let m = DenseMatrix::wrap(base.as_nalgebra() + random_gaussian(8, 10, RngSeed(23)).as_nalgebra() * 0.1);
        let v0 = random_uniform(2, 10, RngSeed(22));
        let opts = CdOptions { rel_tol: Some(1e-13), ..CdOptions::new(20_000) };
        let (f, trace) = cd_semi_nmf_with(&m, &v0, &opts).unwrap();
        assert!(trace.iterations_run < 20_000, "did not converge {:?} {:?}", &trace.errors[..5], &trace.errors[19990..]);
        let (mm, u, v) = (m.as_nalgebra(), f.u.as_nalgebra(), f.v.as_nalgebra());
        // Gradient w.r.t. V: Uᵀ(UV − M); KKT: ≥ 0 where V = 0, = 0 where V > 0.
        let grad = u.transpose() * (u * v - mm);
        let scale = u.norm() * mm.norm();
        for ((&g, &x), _) in grad.iter().zip(v.iter()).zip(0..) {
            if x > 0.0 {
                assert!(g.abs() <= 1e-6 * scale, "g = {g}");
            } else {
                assert!(g >= -1e-6 * scale, "g = {g}");
            }
        }
    }

    #[test]
    fn rank_one_update_matches_grid_search() {
        let m = DenseMatrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let u = DenseMatrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let v = DenseMatrix::from_rows(&[[0.3, 0.3]]).unwrap();
        let row = residual_row_update(&m, &u, &v, 0).unwrap();
        // Closed form: max(0, Mᵀu / ‖u‖²).
        assert!((row[0] - 0.4).abs() < 1e-14 && row[1] == 0.8_f64.max(0.0) * 1.0);

        let objective = |a: f64, b: f64| {
            let cand = DenseMatrix::from_rows(&[[a, b]]).unwrap();
            m.residual_norm(&u, &cand).unwrap()
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for ia in 0..=400 {
            for ib in 0..=400 {
                let (a, b) = (ia as f64 * 0.005, ib as f64 * 0.005);
                let val = objective(a, b);
                if val < best.0 {
                    best = (val, a, b);
                }
            }
        }
        assert!((row[0] - best.1).abs() <= 0.005 && (row[1] - best.2).abs() <= 0.005);
        assert!(objective(row[0], row[1]) <= best.0 + 1e-12);
    }

    #[test]
    fn row_update_is_idempotent_and_kkt() {
        let m = random_gaussian(7, 9, RngSeed(3));
        let u = random_gaussian(7, 3, RngSeed(4));
        let mut v = random_uniform(3, 9, RngSeed(5));
        let row = residual_row_update(&m, &u, &v, 1).unwrap();
        let mut data = v.as_nalgebra().clone();
        for (j, &x) in row.iter().enumerate() {
            data[(1, j)] = x;
        }
        v = DenseMatrix::wrap(data);
        let again = residual_row_update(&m, &u, &v, 1).unwrap();
        for (a, b) in row.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
        let resid = m.as_nalgebra() - u.as_nalgebra() * v.as_nalgebra();
        let g = resid.transpose() * u.as_nalgebra().column(1);
        for (j, &x) in row.iter().enumerate() {
            if x > 0.0 {
                assert!(g[j].abs() < 1e-8);
            } else {
                assert!(g[j] <= 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_column_is_skipped() {
        // M = u·vᵀ and V0 = [v; w]: the U-solve returns U = [u, 0].
        let u = random_gaussian(4, 1, RngSeed(1));
        let v = random_uniform(1, 5, RngSeed(2));
        let m = u.matmul(&v).unwrap();
        let mut v0 = DMatrix::zeros(2, 5);
        v0.row_mut(0).copy_from(&v.as_nalgebra().row(0));
        v0.row_mut(1).copy_from(&random_uniform(1, 5, RngSeed(3)).as_nalgebra().row(0));
        let (f, trace) = cd_semi_nmf(&m, &DenseMatrix::wrap(v0), 4).unwrap();
        assert!(trace.skipped_updates > 0);
        assert!(f.frob_error < 1e-12 * m.frobenius_norm());
        assert!(f.u.as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn zero_row_gets_reseeded_without_changing_the_objective() {
        let m = random_gaussian(5, 6, RngSeed(4));
        let mut v = random_uniform(2, 6, RngSeed(5)).into_nalgebra();
        v.row_mut(1).fill(0.0);
        let mut state = State::new(m.as_nalgebra(), v).unwrap();
        assert_eq!(state.u.column(1).norm(), 0.0);
        let before = state.error();
        assert_eq!(state.reseed_degenerate_columns().unwrap(), 1);
        assert!((state.u.column(1).norm() - 1.0).abs() < 1e-12);
        assert!((state.error() - before).abs() < 1e-14);
        assert!(state.update_row(1));
        assert!(state.error() < before);
        assert!(state.v.row(1).iter().any(|&x| x > 0.0));
    }

    #[test]
    fn zero_matrix_is_handled() {
        let m = DenseMatrix::zeros(3, 4);
        let v0 = random_uniform(2, 4, RngSeed(1));
        let (f, trace) = cd_semi_nmf(&m, &v0, 3).unwrap();
        assert_eq!(f.frob_error, 0.0);
        assert!(trace.skipped_updates > 0);
    }

    #[test]
    fn rejects_invalid_input() {
        let m = random_gaussian(3, 4, RngSeed(1));
        let v0 = random_uniform(2, 4, RngSeed(2));
        assert!(cd_semi_nmf(&m, &v0, 0).is_err());
        assert!(cd_semi_nmf(&m, &v0.scale(-1.0), 5).is_err());
        assert!(cd_semi_nmf(&m, &DenseMatrix::zeros(2, 4), 5).is_err());
        assert!(cd_semi_nmf(&m, &random_uniform(2, 3, RngSeed(3)), 5).is_err());
    }

    #[test]
    fn early_stop_tolerance() {
        let m = random_gaussian(10, 15, RngSeed(8));
        let v0 = random_uniform(3, 15, RngSeed(9));
        let opts = CdOptions { rel_tol: Some(1e-6), ..CdOptions::new(5000) };
        let (_, trace) = cd_semi_nmf_with(&m, &v0, &opts).unwrap();
        assert!(trace.iterations_run < 5000);
        assert_eq!(trace.errors.len(), trace.iterations_run + 1);
    }

    #[test]
    fn rank_one_identity() {
        for seed in 0..20 {
            let m = random_gaussian(5, 4, RngSeed(seed));
            let mut v = random_gaussian(4, 1, RngSeed(50 + seed)).into_nalgebra();
            v /= v.norm();
            let mm = m.as_nalgebra();
            let u = mm * &v;
            let lhs = (mm - &u * v.transpose()).norm_squared();
            let rhs = mm.norm_squared() - (v.transpose() * mm.transpose() * mm * &v)[(0, 0)];
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()));
        }
    }
}
