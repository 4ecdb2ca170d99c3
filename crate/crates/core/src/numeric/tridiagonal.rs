use crate::error::{MarketError, Result};
use crate::scalar::Scalar;

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[k]` multiplies `x[k]` in row `k + 1` and `upper[k]` multiplies
/// `x[k + 1]` in row `k`, so both have length `n - 1`. No pivoting: the
/// systems assembled here are diagonally dominant.
pub fn solve_tridiagonal<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    assert!(n > 0, "empty system");
    assert!(lower.len() + 1 == n && upper.len() + 1 == n && rhs.len() == n, "inconsistent band lengths");

    let mut c_prime = vec![T::zero(); n];
    let mut d_prime = vec![T::zero(); n];
    let pivot = |row: usize, v: T| {
        if v == T::zero() || !v.is_finite() {
            Err(MarketError::SingularSystem { row })
        } else {
            Ok(v)
        }
    };

    let mut denom = pivot(0, diag[0])?;
    if n > 1 {
        c_prime[0] = upper[0] / denom;
    }
    d_prime[0] = rhs[0] / denom;
    for k in 1..n {
        denom = pivot(k, diag[k] - lower[k - 1] * c_prime[k - 1])?;
        if k + 1 < n {
            c_prime[k] = upper[k] / denom;
        }
        d_prime[k] = (rhs[k] - lower[k - 1] * d_prime[k - 1]) / denom;
    }

    let mut x = d_prime;
    for k in (0..n - 1).rev() {
        let next = x[k + 1];
        x[k] = x[k] - c_prime[k] * next;
    }
    Ok(x)
}

/// `A x` for the same band layout.
pub fn tridiagonal_apply<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], x: &[T]) -> Vec<T> {
    let n = diag.len();
    (0..n)
        .map(|k| {
            let mut acc = diag[k] * x[k];
            if k > 0 {
                acc = acc + lower[k - 1] * x[k - 1];
            }
            if k + 1 < n {
                acc = acc + upper[k] * x[k + 1];
            }
            acc
        })
        .collect()
}
