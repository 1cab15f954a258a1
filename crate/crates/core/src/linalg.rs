//! Small dense linear-algebra helpers shared by the detectors.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::{ComplexMat, Error, Result};

pub fn hermitian(a: &ComplexMat) -> ComplexMat {
    a.t().mapv(|z| z.conj())
}

fn to_na<T: nalgebra::Scalar + Copy>(a: &Array2<T>) -> DMatrix<T> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_na<T: nalgebra::Scalar + Copy>(a: &DMatrix<T>) -> Array2<T> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

/// Solves `A·X = B` for square `A` by LU with partial pivoting.
pub fn solve_complex(a: &ComplexMat, b: &ComplexMat) -> Result<ComplexMat> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Shape(format!("cannot solve {:?} against {:?}", a.dim(), b.dim())));
    }
    to_na(a)
        .lu()
        .solve(&to_na(b))
        .map(|x| from_na(&x))
        .filter(|x: &ComplexMat| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::Numeric("singular system".into()))
}

/// Moore–Penrose pseudo-inverse through the SVD.
pub fn pinv_complex(a: &ComplexMat) -> Result<ComplexMat> {
    to_na(a)
        .pseudo_inverse(1e-12)
        .map(|p| from_na(&p))
        .map_err(|e| Error::Numeric(e.to_string()))
}

/// Largest eigenvalue modulus of a real square matrix (real Schur form).
pub fn spectral_radius(a: &Array2<f64>) -> f64 {
    to_na(a)
        .complex_eigenvalues()
        .iter()
        .map(|z: &Complex64| z.norm())
        .fold(0.0, f64::max)
}

/// Solves the symmetric positive definite system `A·X = B` by Cholesky.
pub fn solve_spd(a: Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let chol = to_na(&a)
        .cholesky()
        .ok_or_else(|| Error::Numeric("matrix is not positive definite".into()))?;
    Ok(from_na(&chol.solve(&to_na(b))))
}
