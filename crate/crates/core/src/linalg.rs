//! Tridiagonal and dense solves.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Solve `a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i]` by the Thomas
/// algorithm. `a[0]` and `c[n-1]` are ignored.
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || c.len() != n || d.len() != n {
        return Err(Error::Usage("tridiagonal bands have different lengths".into()));
    }
    let mut cp = Vec::with_capacity(n);
    let mut dp = Vec::with_capacity(n);
    let mut denom = b[0];
    if denom.abs() < f64::MIN_POSITIVE {
        return Err(Error::Step("zero pivot in tridiagonal solve".into()));
    }
    cp.push(c[0] / denom);
    dp.push(d[0] / denom);
    for i in 1..n {
        denom = b[i] - a[i] * cp[i - 1];
        if denom.abs() < f64::MIN_POSITIVE || !denom.is_finite() {
            return Err(Error::Step("zero pivot in tridiagonal solve".into()));
        }
        cp.push(c[i] / denom);
        dp.push((d[i] - a[i] * dp[i - 1]) / denom);
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}

/// Dense `n x n` row-major system whose row `i` has no entries right of
/// column `ext[i]`. Gaussian elimination without pivoting costs
/// `O(n^2 max(ext[i] - i))`; falls back to partial pivoting when a pivot
/// is tiny or the residual check fails.
pub fn solve_narrow_upper(a: &[f64], n: usize, ext: &[usize], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != n * n || ext.len() != n || b.len() != n {
        return Err(Error::Usage("dense system has inconsistent sizes".into()));
    }
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let mut ext = ext.to_vec();
    let mut ok = true;
    'elim: for j in 0..n {
        let p = m[j * n + j];
        let scale = (j..=ext[j].min(n - 1)).map(|c| m[j * n + c].abs()).fold(0.0, f64::max);
        if !(p.abs() > 1e-13 * scale) {
            ok = false;
            break 'elim;
        }
        let ej = ext[j].min(n - 1);
        for i in j + 1..n {
            let f = m[i * n + j] / p;
            if f == 0.0 {
                continue;
            }
            m[i * n + j] = 0.0;
            for c in j + 1..=ej {
                m[i * n + c] -= f * m[j * n + c];
            }
            x[i] -= f * x[j];
            ext[i] = ext[i].max(ej);
        }
    }
    if ok {
        for i in (0..n).rev() {
            let mut acc = x[i];
            for c in i + 1..=ext[i].min(n - 1) {
                acc -= m[i * n + c] * x[c];
            }
            x[i] = acc / m[i * n + i];
        }
        if x.iter().all(|v| v.is_finite()) && residual_ok(a, n, &x, b) {
            return Ok(x);
        }
    }
    solve_dense(a, n, b)
}

fn residual_ok(a: &[f64], n: usize, x: &[f64], b: &[f64]) -> bool {
    let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (0..n).all(|i| {
        let row = &a[i * n..(i + 1) * n];
        let r: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - b[i];
        let rowmax = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        r.abs() <= 1e-9 * (rowmax * xmax + bmax).max(f64::MIN_POSITIVE)
    })
}

/// Gaussian elimination with partial pivoting on a dense row-major system.
pub fn solve_dense(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != n * n || b.len() != n {
        return Err(Error::Usage("dense system has inconsistent sizes".into()));
    }
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for j in 0..n {
        let piv = (j..n)
            .max_by(|&p, &q| m[p * n + j].abs().total_cmp(&m[q * n + j].abs()))
            .unwrap_or(j);
        if !(m[piv * n + j].abs() > f64::MIN_POSITIVE) {
            return Err(Error::Step("singular dense system".into()));
        }
        if piv != j {
            for c in 0..n {
                m.swap(j * n + c, piv * n + c);
            }
            x.swap(j, piv);
        }
        let p = m[j * n + j];
        for i in j + 1..n {
            let f = m[i * n + j] / p;
            if f != 0.0 {
                for c in j..n {
                    m[i * n + c] -= f * m[j * n + c];
                }
                x[i] -= f * x[j];
            }
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for c in i + 1..n {
            acc -= m[i * n + c] * x[c];
        }
        x[i] = acc / m[i * n + i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Step("non-finite dense solution".into()))
    }
}
