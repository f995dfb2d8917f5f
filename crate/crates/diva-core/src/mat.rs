//! Small dense-matrix helpers shared across the crate.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;
pub type Vec64 = DVector<f64>;

/// Frobenius norm of the antisymmetric part `(a - a^T)/2` — the symmetry
/// residual of a nominally symmetric matrix.
pub fn antisymmetry_norm(a: &Mat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = 0.5 * (a[(i, j)] - a[(j, i)]);
            acc += 2.0 * d * d;
        }
    }
    acc.sqrt()
}

/// Replace `a` with its symmetric part.
pub fn symmetrize(a: &mut Mat) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
}

/// Frobenius inner product `<a, b> = sum_ij a_ij b_ij`.
pub fn frob_inner(a: &Mat, b: &Mat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn frob_norm(a: &Mat) -> f64 {
    frob_inner(a, a).sqrt()
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// ascending and eigenvector columns permuted to match.
///
/// Ties are broken by the eigensolver's original column index so repeated
/// calls on the same input give identical output.
pub fn sorted_symmetric_eigen(a: &Mat) -> (Vec64, Mat) {
    let eig = a.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap()
            .then(i.cmp(&j))
    });
    let values = Vec64::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}
