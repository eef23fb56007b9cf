//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Singular-value cutoff used for numerical rank and kernels:
/// `max(rows, cols) * eps * sigma_max`.
pub fn rank_threshold(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

fn square_padded(m: &DMatrix<f64>) -> DMatrix<f64> {
    let size = m.nrows().max(m.ncols());
    let mut padded = DMatrix::zeros(size, size);
    padded.view_mut((0, 0), m.shape()).copy_from(m);
    padded
}

/// Numerical rank from the singular values.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let sigma_max = sv.max();
    let tol = rank_threshold(m.nrows(), m.ncols(), sigma_max);
    sv.iter().filter(|s| **s > tol).count()
}

/// Orthonormal basis of the kernel of `m`, one column per kernel direction.
///
/// Wide matrices are zero-padded to square so the SVD yields a full right
/// singular basis.
pub fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    let svd = square_padded(m).svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd.singular_values.max();
    let tol = rank_threshold(m.nrows(), m.ncols(), sigma_max);
    let kernel_rows: Vec<usize> =
        svd.singular_values.iter().enumerate().filter(|(_, s)| **s <= tol).map(|(i, _)| i).collect();
    DMatrix::from_fn(cols, kernel_rows.len(), |r, c| v_t[(kernel_rows[c], r)])
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(sym.clone()).eigenvalues.min()
}

/// A `d x (d-1)` matrix with orthonormal columns spanning the orthogonal
/// complement of the unit vector `g`.
///
/// In the plane this is `g` rotated by +90 degrees. In space the first
/// column is the least-aligned coordinate axis with its `g` component
/// removed, and the second is `g` crossed with the first.
pub fn orthonormal_complement(g: &DVector<f64>) -> DMatrix<f64> {
    match g.len() {
        2 => DMatrix::from_column_slice(2, 1, &[-g[1], g[0]]),
        3 => {
            let axis = (0..3).min_by(|a, b| g[*a].abs().total_cmp(&g[*b].abs())).unwrap_or(0);
            let mut e = DVector::zeros(3);
            e[axis] = 1.0;
            let u = (&e - g * g.dot(&e)).normalize();
            let w = DVector::from_column_slice(&[
                g[1] * u[2] - g[2] * u[1],
                g[2] * u[0] - g[0] * u[2],
                g[0] * u[1] - g[1] * u[0],
            ]);
            DMatrix::from_columns(&[u, w])
        }
        d => {
            // General d: kernel of g^T.
            let row = DMatrix::from_row_slice(1, d, g.as_slice());
            null_space(&row)
        }
    }
}
