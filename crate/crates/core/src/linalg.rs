//! Dense kernels: column-pivoted Householder QR for tall matrices stored as
//! columns, a small Cholesky factorization, and a safe wrapper around
//! `matrixmultiply::dgemm` for the network code.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{dot, sqrt};

/// QR factorization with column pivoting, `A P = Q R`, truncated at the
/// numerical rank.
///
/// Pivot `k` is the remaining column with the largest norm after the first
/// `k` reflections, so `|r_00| >= |r_11| >= ...`. Factorization stops at the
/// first pivot whose norm is at most `tol * |r_00|`; that count is the rank.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    nrows: usize,
    ncols: usize,
    /// Householder vectors; `reflectors[k]` is non-zero only on rows `k..`.
    reflectors: Vec<Vec<f64>>,
    taus: Vec<f64>,
    /// `r[k][i]` is `R[i][k]` for `i <= k`, over the selected columns.
    r: Vec<Vec<f64>>,
    /// `perm[k]` is the original index of the `k`-th pivot column.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(columns: &[Vec<f64>], nrows: usize, tol: f64) -> Self {
        let ncols = columns.len();
        let mut work: Vec<Vec<f64>> = columns.to_vec();
        let mut perm: Vec<usize> = (0..ncols).collect();
        let mut reflectors = Vec::new();
        let mut taus = Vec::new();
        let mut r: Vec<Vec<f64>> = Vec::new();
        let steps = nrows.min(ncols);
        let mut r00 = 0.0f64;
        let mut rank = 0;

        for k in 0..steps {
            // Exact partial norms; avoids the cancellation of norm downdating.
            let mut best = k;
            let mut best_norm = -1.0;
            for (j, col) in work.iter().enumerate().skip(k) {
                let s = dot(&col[k..], &col[k..]);
                if s > best_norm {
                    best_norm = s;
                    best = j;
                }
            }
            let pivot_norm = sqrt(best_norm.max(0.0));
            if k == 0 {
                r00 = pivot_norm;
            }
            if pivot_norm == 0.0 || pivot_norm <= tol * r00 {
                break;
            }
            work.swap(k, best);
            perm.swap(k, best);

            let x = &work[k];
            let alpha = if x[k] >= 0.0 { -pivot_norm } else { pivot_norm };
            let mut v = vec![0.0; nrows];
            v[k..].copy_from_slice(&x[k..]);
            v[k] -= alpha;
            let vnorm2 = dot(&v[k..], &v[k..]);
            let tau = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };

            let mut rk = vec![0.0; k + 1];
            rk[..k].copy_from_slice(&work[k][..k]);
            rk[k] = alpha;
            r.push(rk);

            for col in work.iter_mut().skip(k + 1) {
                let s = tau * dot(&v[k..], &col[k..]);
                for (c, vi) in col[k..].iter_mut().zip(&v[k..]) {
                    *c -= s * vi;
                }
            }
            reflectors.push(v);
            taus.push(tau);
            rank += 1;
        }

        PivotedQr {
            nrows,
            ncols,
            reflectors,
            taus,
            r,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Original indices of the selected (linearly independent) columns, in
    /// pivot order.
    pub fn selected(&self) -> &[usize] {
        &self.perm[..self.rank]
    }

    /// Absolute diagonal of `R` over the selected columns.
    pub fn diagonal(&self) -> Vec<f64> {
        self.r.iter().enumerate().map(|(k, c)| c[k].abs()).collect()
    }

    /// Least-squares coefficients of `z` on the selected columns, in pivot
    /// order.
    pub fn solve_selected(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.nrows);
        let mut w = z.to_vec();
        for (k, (v, &tau)) in self.reflectors.iter().zip(&self.taus).enumerate() {
            let s = tau * dot(&v[k..], &w[k..]);
            for (wi, vi) in w[k..].iter_mut().zip(&v[k..]) {
                *wi -= s * vi;
            }
        }
        // Back substitution on the leading rank x rank block.
        let mut c = vec![0.0; self.rank];
        for i in (0..self.rank).rev() {
            let mut acc = w[i];
            for (j, cj) in c.iter().enumerate().skip(i + 1) {
                acc -= self.r[j][i] * cj;
            }
            c[i] = acc / self.r[i][i];
        }
        c
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix
/// given row-major as `dim x dim`.
pub fn cholesky(a: &[f64], dim: usize) -> Result<Vec<f64>> {
    if a.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            context: "cholesky",
            expected: dim * dim,
            got: a.len(),
        });
    }
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::invalid("matrix is not positive definite"));
                }
                l[i * dim + i] = sqrt(s);
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Ok(l)
}

/// Layout of a row-major operand of [`gemm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    /// Use the stored `rows x cols` matrix as is.
    N,
    /// Use its transpose.
    T,
}

/// `c = alpha * op(a) * op(b) + beta * c` with all matrices row-major.
///
/// `a` is stored as `a_rows x a_cols`, `b` as `b_rows x b_cols`; `c` is
/// `m x n` where `m`/`n` follow from the ops.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    alpha: f64,
    a: &[f64],
    a_rows: usize,
    a_cols: usize,
    op_a: Op,
    b: &[f64],
    b_rows: usize,
    b_cols: usize,
    op_b: Op,
    beta: f64,
    c: &mut [f64],
) {
    assert_eq!(a.len(), a_rows * a_cols);
    assert_eq!(b.len(), b_rows * b_cols);
    let (m, k, rsa, csa) = match op_a {
        Op::N => (a_rows, a_cols, a_cols as isize, 1),
        Op::T => (a_cols, a_rows, 1, a_cols as isize),
    };
    let (kb, n, rsb, csb) = match op_b {
        Op::N => (b_rows, b_cols, b_cols as isize, 1),
        Op::T => (b_cols, b_rows, 1, b_cols as isize),
    };
    assert_eq!(k, kb, "inner dimensions differ");
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above pin every operand's extent to the strides
    // passed in, so all accesses stay inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
