//! Dense tableau simplex for small equality-form linear programs
//! `max cᵀx  s.t.  A x = b, x ≥ 0`, started from a supplied feasible basis.
//!
//! Entering columns follow Dantzig's rule; after a run of degenerate pivots
//! the rule switches to Bland's (smallest index) until progress resumes.
//! Ties in the ratio test go to the smallest basic variable index, so the
//! pivot sequence is deterministic.

use crate::error::{Error, Result};

/// Reduced costs above this value are improving.
const ENTER_TOL: f64 = 1e-11;
/// Pivot elements must exceed this magnitude.
const PIVOT_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

/// A linear program in equality form with a dense constraint matrix.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    /// Row-major constraint matrix, `rows × cols`.
    pub a: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub rhs: Vec<f64>,
    pub objective: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
    /// Largest |A x − b| at the returned point.
    pub primal_residual: f64,
}

impl LinearProgram {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { a: vec![0.0; rows * cols], rows, cols, rhs: vec![0.0; rows], objective: vec![0.0; cols] }
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.cols + c] = v;
    }

    /// Maximizes from `basis` (one column per row), which must be a feasible
    /// basis: the basic solution it defines has to be nonnegative.
    pub fn maximize(&self, basis: &[usize], max_pivots: usize) -> Result<LpSolution> {
        let (m, n) = (self.rows, self.cols);
        if basis.len() != m {
            return Err(Error::LpFailed(format!("basis has {} columns for {m} rows", basis.len())));
        }
        let w = n + 1;
        let mut t = vec![0.0; (m + 1) * w];
        for r in 0..m {
            t[r * w..r * w + n].copy_from_slice(&self.a[r * n..(r + 1) * n]);
            t[r * w + n] = self.rhs[r];
        }
        for c in 0..n {
            t[m * w + c] = -self.objective[c];
        }
        let mut basis = basis.to_vec();
        for r in 0..m {
            let c = basis[r];
            if t[r * w + c].abs() <= PIVOT_TOL {
                return Err(Error::LpFailed(format!("initial basis column {c} is singular in row {r}")));
            }
            pivot(&mut t, m, w, r, c);
        }
        if let Some(r) = (0..m).find(|&r| t[r * w + n] < -1e-9) {
            return Err(Error::LpFailed(format!("initial basis is infeasible in row {r}")));
        }
        let mut pivots = 0;
        let mut degenerate = 0;
        loop {
            let z = &t[m * w..m * w + n];
            let entering = if degenerate >= DEGENERATE_RUN {
                (0..n).find(|&c| z[c] < -ENTER_TOL)
            } else {
                (0..n).filter(|&c| z[c] < -ENTER_TOL).min_by(|&a, &b| z[a].total_cmp(&z[b]))
            };
            let Some(c) = entering else { break };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = t[r * w + c];
                if a > PIVOT_TOL {
                    let ratio = t[r * w + n].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-14 || (ratio <= lratio + 1e-14 && basis[r] < basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::LpFailed("objective is unbounded".into()));
            };
            degenerate = if ratio <= 1e-14 { degenerate + 1 } else { 0 };
            pivot(&mut t, m, w, r, c);
            basis[r] = c;
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::LpFailed(format!("no convergence after {max_pivots} pivots")));
            }
        }
        let mut x = vec![0.0; n];
        for r in 0..m {
            x[basis[r]] = t[r * w + n].max(0.0);
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        let primal_residual = (0..m)
            .map(|r| {
                let ax: f64 = (0..n).map(|c| self.a[r * n + c] * x[c]).sum();
                (ax - self.rhs[r]).abs()
            })
            .fold(0.0, f64::max);
        Ok(LpSolution { x, value, pivots, primal_residual })
    }
}

/// Gauss-Jordan pivot on (r, c) over all rows including the objective row.
fn pivot(t: &mut [f64], m: usize, w: usize, r: usize, c: usize) {
    let p = t[r * w + c];
    for v in &mut t[r * w..(r + 1) * w] {
        *v /= p;
    }
    let pivot_row: Vec<(usize, f64)> = t[r * w..(r + 1) * w]
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (j, *v))
        .collect();
    for i in 0..=m {
        if i == r {
            continue;
        }
        let f = t[i * w + c];
        if f == 0.0 {
            continue;
        }
        let row = &mut t[i * w..(i + 1) * w];
        for &(j, v) in &pivot_row {
            row[j] -= f * v;
        }
        row[c] = 0.0;
    }
}
