//! Dense LU factorization with partial pivoting, generic over [`Scalar`].
//!
//! The systems this crate solves are small (a stopping problem on n states
//! needs one n-by-n solve per iteration, with n in the tens to low hundreds),
//! dense after masking, and must work over exact rationals as well as
//! floats. A hand-rolled LU keeps the scalar type fully generic; external
//! linear-algebra crates fix the element type or demand more of it than the
//! [`Scalar`] trait asks.
//!
//! Pivoting is by largest absolute value in the column. Over the rationals
//! that rule still guarantees a nonzero pivot whenever the matrix is
//! invertible, which is all exact arithmetic needs.

use crate::scalar::{sup_norm, Scalar};

/// Packed LU factors of a row permutation of a square matrix.
pub(crate) struct LuFactors<S> {
    n: usize,
    /// Row-major packed factors: strictly-lower part holds L (unit
    /// diagonal implied), diagonal and upper part hold U.
    lu: Vec<S>,
    /// `perm[i]` is the original row index that ended up in position `i`.
    perm: Vec<usize>,
}

/// Factor the row-major `n x n` matrix `a`. Returns `None` when a pivot
/// column is exactly zero, i.e. the matrix is singular (exact types) or
/// numerically singular to working precision (floats).
pub(crate) fn factor<S: Scalar>(n: usize, a: &[S]) -> Option<LuFactors<S>> {
    debug_assert_eq!(a.len(), n * n);
    let mut lu = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = lu[col * n + col].abs();
        for row in col + 1..n {
            let mag = lu[row * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag.is_zero() {
            return None;
        }
        if pivot_row != col {
            perm.swap(pivot_row, col);
            for k in 0..n {
                lu.swap(pivot_row * n + k, col * n + k);
            }
        }
        let pivot = lu[col * n + col].clone();
        for row in col + 1..n {
            let factor = lu[row * n + col].clone() / pivot.clone();
            lu[row * n + col] = factor.clone();
            for k in col + 1..n {
                let sub = factor.clone() * lu[col * n + k].clone();
                lu[row * n + k] -= sub;
            }
        }
    }

    Some(LuFactors { n, lu, perm })
}

impl<S: Scalar> LuFactors<S> {
    /// Solve `A x = b` using the stored factors.
    pub(crate) fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);

        // Forward substitution on the permuted right-hand side.
        let mut x: Vec<S> = self.perm.iter().map(|&i| b[i].clone()).collect();
        for row in 1..n {
            for col in 0..row {
                let sub = self.lu[row * n + col].clone() * x[col].clone();
                x[row] -= sub;
            }
        }
        // Back substitution.
        for row in (0..n).rev() {
            for col in row + 1..n {
                let sub = self.lu[row * n + col].clone() * x[col].clone();
                x[row] -= sub;
            }
            x[row] = x[row].clone() / self.lu[row * n + row].clone();
        }
        x
    }
}

/// Row-major matrix-vector product `A v`.
pub(crate) fn mat_vec<S: Scalar>(n: usize, a: &[S], v: &[S]) -> Vec<S> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(v.len(), n);
    (0..n)
        .map(|row| {
            let mut acc = S::zero();
            for col in 0..n {
                acc += a[row * n + col].clone() * v[col].clone();
            }
            acc
        })
        .collect()
}

/// Residual `b - A x` of a candidate solution.
fn residual<S: Scalar>(n: usize, a: &[S], x: &[S], b: &[S]) -> Vec<S> {
    let ax = mat_vec(n, a, x);
    b.iter()
        .zip(ax)
        .map(|(bi, axi)| bi.clone() - axi)
        .collect()
}

/// Solve `A x = b` and report the sup-norm of the achieved residual.
///
/// One pass of iterative refinement runs when the first residual is
/// nonzero; refinement in working precision usually buys a digit or two on
/// float data and is free on exact data (whose first residual is already
/// zero). The refined iterate is kept only if it actually has the smaller
/// residual. Returns `None` when the matrix is singular.
pub(crate) fn solve_refined<S: Scalar>(n: usize, a: &[S], b: &[S]) -> Option<(Vec<S>, S)> {
    if n == 0 {
        return Some((Vec::new(), S::zero()));
    }
    let factors = factor(n, a)?;
    let mut x = factors.solve(b);
    let mut r = residual(n, a, &x, b);
    let mut r_norm = sup_norm(&r);
    if !r_norm.is_zero() {
        let correction = factors.solve(&r);
        let candidate: Vec<S> = x
            .iter()
            .zip(&correction)
            .map(|(xi, di)| xi.clone() + di.clone())
            .collect();
        r = residual(n, a, &candidate, b);
        let candidate_norm = sup_norm(&r);
        if candidate_norm < r_norm {
            x = candidate;
            r_norm = candidate_norm;
        }
    }
    Some((x, r_norm))
}
