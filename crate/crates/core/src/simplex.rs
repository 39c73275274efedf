//! A small dense simplex solver for the fractional-cover linear programs.
//!
//! We solve covering LPs `min w.c  s.t.  A c >= 1, c >= 0` through their
//! packing duals `max 1.y  s.t.  A^T y <= w, y >= 0`, which admit the slack
//! basis as a starting point (no phase 1). Strong duality gives the covering
//! optimum. Bland's rule guarantees termination.

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

/// Maximize `sum x` subject to `rows[i] . x <= caps[i]`, `x >= 0`.
/// All `caps` must be nonnegative. Returns the optimal objective value.
pub fn maximize_uniform_packing(rows: &[Vec<bool>], caps: &[f64], n_vars: usize) -> Result<f64> {
    let m = rows.len();
    if caps.len() != m {
        return Err(Error::internal("caps/rows length mismatch"));
    }
    if caps.iter().any(|&c| c < 0.0) {
        return Err(Error::internal("negative cap in packing LP"));
    }
    // Tableau: m constraint rows + 1 objective row.
    // Columns: n_vars structural + m slacks + 1 rhs.
    let cols = n_vars + m + 1;
    let mut t = vec![vec![0.0f64; cols]; m + 1];
    for (i, row) in rows.iter().enumerate() {
        for (j, &b) in row.iter().enumerate() {
            if b {
                t[i][j] = 1.0;
            }
        }
        t[i][n_vars + i] = 1.0;
        t[i][cols - 1] = caps[i];
    }
    // Objective row: maximize sum x -> row holds c_j - z_j, start with -1s.
    for j in 0..n_vars {
        t[m][j] = -1.0;
    }
    let mut basis: Vec<usize> = (n_vars..n_vars + m).collect();

    let max_iters = 50_000usize.max(200 * (m + n_vars));
    for _ in 0..max_iters {
        // Bland: entering = smallest index with negative reduced cost.
        let Some(enter) = (0..cols - 1).find(|&j| t[m][j] < -EPS) else {
            return Ok(t[m][cols - 1]);
        };
        // Ratio test; Bland tie-break on basis variable index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][cols - 1] / t[i][enter];
                if ratio < best - EPS
                    || (ratio < best + EPS && leave.is_some_and(|l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            return Err(Error::internal("packing LP unbounded"));
        };
        pivot(&mut t, leave, enter);
        basis[leave] = enter;
    }
    Err(Error::internal("simplex iteration cap reached"))
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i != row {
            let f = r[col];
            if f != 0.0 {
                for (v, &pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
}
