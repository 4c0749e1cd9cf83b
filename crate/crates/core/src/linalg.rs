//! Small dense helpers shared by the factored routines.
//!
//! Everything here operates on matrices whose size is bounded by the
//! landmark count (or on dense oracles used for small problems).

use nalgebra::{DMatrix, DVector};

/// Relative cutoff below which singular values are treated as zero in
/// pseudo-inverses.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-12;

/// Relative cutoff below which eigenpairs of low-rank decompositions are
/// dropped.
pub const EIG_DROP_RELATIVE: f64 = 1e-10;

/// Symmetric eigendecomposition sorted by descending `|λ|`.
///
/// The input is symmetrized as `(A + Aᵀ)/2` before decomposition so that
/// round-off asymmetry in products such as `BᵀB` does not leak into the
/// solver.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .abs()
            .total_cmp(&eig.eigenvalues[i].abs())
            .then(eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]))
    });
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix.
///
/// For symmetric input the singular values are `|λ|`, so the pseudo-inverse
/// is `U·diag(1/λ)·Uᵀ` over eigenpairs with `|λ| > cutoff·max|λ|`.
pub fn sym_pinv(a: &DMatrix<f64>, relative_cutoff: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let (vals, vecs) = sym_eigen(a);
    let max_abs = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = DMatrix::zeros(n, n);
    if max_abs == 0.0 {
        return out;
    }
    for (k, &lam) in vals.iter().enumerate() {
        if lam.abs() <= relative_cutoff * max_abs {
            continue;
        }
        let u = vecs.column(k);
        out.ger(1.0 / lam, &u, &u, 1.0);
    }
    symmetrize(&mut out);
    out
}

/// Replaces `a` by `(a + aᵀ)/2` in place.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `‖a − b‖_F / max(‖b‖_F, tiny)`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

/// Rows of `a` selected by `rows`, in the given order.
pub fn select_rows(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), a.ncols(), |r, c| a[(rows[r], c)])
}

/// Sum of the rows of `a` indexed by `rows`, as a column vector.
pub fn sum_rows(a: &DMatrix<f64>, rows: impl IntoIterator<Item = usize>) -> DVector<f64> {
    let mut s = DVector::zeros(a.ncols());
    for r in rows {
        for c in 0..a.ncols() {
            s[c] += a[(r, c)];
        }
    }
    s
}
