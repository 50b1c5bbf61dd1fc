//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Solves `min cᵀx  s.t.  A·x = b, x ≥ 0`. Phase one minimizes the sum of one
//! artificial variable per row; phase two starts from the resulting basis.
//! The optimal simplex multipliers `y` (with `Aᵀy ≤ c` and `bᵀy = cᵀx`) are
//! read off the reduced costs of the artificial columns.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const PHASE_ONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, duals: Vec<f64>, objective: f64, pivots: usize },
    Infeasible { phase_one_objective: f64 },
    Unbounded,
}

/// Equality-form LP with `rows` constraints over `cols` nonnegative variables.
#[derive(Debug, Clone)]
pub(crate) struct StandardLp {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows×cols` constraint matrix.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub max_pivots: usize,
}

struct Tableau {
    /// Row-major `(rows + 1) × (width + 1)`; the last row holds reduced costs,
    /// the last column the right-hand side.
    t: Vec<f64>,
    rows: usize,
    width: usize,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn stride(&self) -> usize {
        self.width + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.stride() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let stride = self.stride();
        let p = self.at(row, col);
        let (before, rest) = self.t.split_at_mut(row * stride);
        let (pivot_row, after) = rest.split_at_mut(stride);
        pivot_row.iter_mut().for_each(|x| *x /= p);
        pivot_row[col] = 1.0;
        for other in before.chunks_exact_mut(stride).chain(after.chunks_exact_mut(stride)) {
            let f = other[col];
            if f != 0.0 {
                other.iter_mut().zip(pivot_row.iter()).for_each(|(x, y)| *x -= f * y);
                other[col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs simplex iterations over columns `0..active`. Returns false when unbounded.
    fn iterate(&mut self, active: usize, max_pivots: usize) -> Result<bool> {
        loop {
            let cost_row = self.rows;
            let entering = (0..active).find(|&j| self.at(cost_row, j) < -COST_TOL);
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leaving else {
                return Ok(false);
            };
            if self.pivots >= max_pivots {
                return Err(Error::numerical(format!(
                    "simplex exceeded {max_pivots} pivots ({} rows, {active} columns)",
                    self.rows
                )));
            }
            self.pivot(row, col);
        }
    }
}

impl StandardLp {
    pub fn solve(&self) -> Result<LpOutcome> {
        debug_assert_eq!(self.a.len(), self.rows * self.cols);
        let (rows, cols) = (self.rows, self.cols);
        let width = cols + rows;
        let stride = width + 1;
        let mut t = vec![0.0; (rows + 1) * stride];
        for i in 0..rows {
            let sign = if self.b[i] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..cols {
                t[i * stride + j] = sign * self.a[i * cols + j];
            }
            t[i * stride + cols + i] = 1.0;
            t[i * stride + width] = sign * self.b[i];
        }
        // Phase-one reduced costs: minus the column sums over all rows.
        for j in (0..cols).chain(std::iter::once(width)) {
            let s: f64 = (0..rows).map(|i| t[i * stride + j]).sum();
            t[rows * stride + j] = -s;
        }
        let signs: Vec<f64> = self.b.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut tab = Tableau { t, rows, width, basis: (cols..cols + rows).collect(), pivots: 0 };

        tab.iterate(width, self.max_pivots)?;
        let phase_one = -tab.rhs(rows);
        if phase_one > PHASE_ONE_TOL {
            return Ok(LpOutcome::Infeasible { phase_one_objective: phase_one });
        }

        // Drive remaining artificials out of the basis; rows where that is
        // impossible are redundant and stay degenerate at zero.
        for i in 0..rows {
            if tab.basis[i] >= cols {
                if let Some(j) = (0..cols).find(|&j| tab.at(i, j).abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }
        // Phase-two reduced costs.
        for j in 0..=width {
            let direct = if j < cols { self.c[j] } else { 0.0 };
            let basic: f64 = (0..rows)
                .map(|i| {
                    let bj = tab.basis[i];
                    let cb = if bj < cols { self.c[bj] } else { 0.0 };
                    cb * tab.at(i, j)
                })
                .sum();
            tab.t[rows * stride + j] = direct - basic;
        }
        if !tab.iterate(cols, self.max_pivots)? {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![0.0; cols];
        for i in 0..rows {
            if tab.basis[i] < cols {
                x[tab.basis[i]] = tab.rhs(i).max(0.0);
            }
        }
        let duals = (0..rows).map(|i| -signs[i] * tab.at(rows, cols + i)).collect();
        let objective = x.iter().zip(&self.c).map(|(a, b)| a * b).sum();
        Ok(LpOutcome::Optimal { x, duals, objective, pivots: tab.pivots })
    }
}
