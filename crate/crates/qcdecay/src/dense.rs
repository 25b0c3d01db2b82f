//! Thin wrappers around the LAPACK-backed dense Hermitian eigensolver.
//!
//! Eigenvalues come back in ascending order; eigenvectors are the
//! columns of the returned matrix. Inputs are copied into
//! column-major layout first: the LAPACK binding takes the memory
//! as-is, and a row-major complex Hermitian matrix would be read as
//! its conjugate, silently conjugating every eigenvector.

use ndarray::{Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

fn to_fortran_order<T: Clone>(matrix: &Array2<T>) -> Array2<T> {
    let dim = matrix.dim();
    Array2::from_shape_fn(dim.f(), |idx| matrix[idx].clone())
}

pub(crate) fn eigh_real(matrix: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), String> {
    let (vals, vecs) = to_fortran_order(matrix)
        .eigh(UPLO::Lower)
        .map_err(|e| format!("real symmetric eigensolver failed: {e}"))?;
    Ok((vals.to_vec(), vecs))
}

pub(crate) fn eigh_complex(
    matrix: &Array2<Complex64>,
) -> Result<(Vec<f64>, Array2<Complex64>), String> {
    let (vals, vecs) = to_fortran_order(matrix)
        .eigh(UPLO::Lower)
        .map_err(|e| format!("Hermitian eigensolver failed: {e}"))?;
    Ok((vals.to_vec(), vecs))
}
