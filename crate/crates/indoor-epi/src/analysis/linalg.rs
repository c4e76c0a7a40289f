//! Dense solves sized for small regression systems (k <= 10).

use crate::error::{Error, Result};

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major and consumed.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) || b.len() != n {
        return Err(Error::Estimation("malformed linear system".into()));
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-12 {
            return Err(Error::Estimation(format!(
                "singular system: pivot {col} below tolerance"
            )));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Ordinary least squares of `y` on `regressors` (column vectors) with an
/// intercept. Returns `(intercept, slopes)`.
pub fn ols(regressors: &[&[f64]], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = y.len();
    let k = regressors.len() + 1;
    if n < k {
        return Err(Error::Estimation(format!(
            "{n} observations cannot identify {k} coefficients"
        )));
    }
    for col in regressors {
        if col.len() != n {
            return Err(Error::Estimation("regressor length mismatch".into()));
        }
    }

    // Normal equations over [1, X].
    let design = |row: usize, col: usize| -> f64 {
        if col == 0 {
            1.0
        } else {
            regressors[col - 1][row]
        }
    };
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for row in 0..n {
        for i in 0..k {
            let di = design(row, i);
            xty[i] += di * y[row];
            for j in i..k {
                xtx[i][j] += di * design(row, j);
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[i][j] = xtx[j][i];
        }
    }
    let beta = solve(xtx, xty).map_err(|_| {
        Error::Estimation("rank-deficient design: regressors are collinear".into())
    })?;
    let mut iter = beta.into_iter();
    let intercept = iter.next().unwrap();
    Ok((intercept, iter.collect()))
}
