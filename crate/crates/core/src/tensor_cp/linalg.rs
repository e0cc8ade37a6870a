//! Dense decompositions used by the CP routines.
//!
//! Singular value and symmetric eigen decompositions come from faer, run
//! single-threaded so results do not depend on the worker count. nalgebra's
//! SVD returns wrong factors for some rank-deficient inputs. General
//! eigenvalues use nalgebra's Schur form with a capped iteration count.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::linalg::svd::{svd as faer_svd, svd_scratch, ComputeSvdVectors};
use faer::diag::Diag;
use faer::{Mat, Par};
use nalgebra::{Complex, DMatrix, DVector, Dyn, Schur, SVD};

use crate::error::{Error, Result};

const MAX_ITERS: usize = 10_000;

pub(crate) type Svd = SVD<f64, Dyn, Dyn>;

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD with `u` and `v_t` present; singular values in decreasing order.
pub(crate) fn svd(m: DMatrix<f64>) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let size = rows.min(cols);
    if m.iter().any(|x| !x.is_finite()) {
        return Err(degenerate("matrix has non-finite entries"));
    }
    let a = to_faer(&m);
    let mut u = Mat::<f64>::zeros(rows, size);
    let mut v = Mat::<f64>::zeros(cols, size);
    let mut s = Diag::<f64>::zeros(size);
    let mut mem = MemBuffer::new(svd_scratch::<f64>(
        rows,
        cols,
        ComputeSvdVectors::Thin,
        ComputeSvdVectors::Thin,
        Par::Seq,
        Default::default(),
    ));
    faer_svd(
        a.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        Some(v.as_mut()),
        Par::Seq,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|_| degenerate("singular value decomposition did not converge"))?;
    Ok(SVD {
        u: Some(from_faer(u.as_ref())),
        v_t: Some(from_faer(v.as_ref()).transpose()),
        singular_values: DVector::from_iterator(size, s.column_vector().iter().copied()),
    })
}

/// Eigenvalues (ascending) and unit eigenvectors of a symmetric matrix.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if m.iter().any(|x| !x.is_finite()) {
        return Err(degenerate("matrix has non-finite entries"));
    }
    let a = to_faer(m);
    let mut u = Mat::<f64>::zeros(n, n);
    let mut s = Diag::<f64>::zeros(n);
    let mut mem = MemBuffer::new(self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        Par::Seq,
        Default::default(),
    ));
    self_adjoint_evd(
        a.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|_| degenerate("symmetric eigensolver did not converge"))?;
    Ok((s.column_vector().iter().copied().collect(), from_faer(u.as_ref())))
}

pub(crate) fn eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    Schur::try_new(m, f64::EPSILON, MAX_ITERS)
        .map(|s| s.complex_eigenvalues().iter().copied().collect())
        .ok_or_else(|| degenerate("eigenvalue iteration did not converge"))
}

fn degenerate(msg: &str) -> Error {
    Error::DegenerateEigensystem(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_deficient_wide_svd_recomposes() {
        let a = DMatrix::from_row_slice(3, 2, &[-0.07, 0.81, 0.92, -0.17, -0.39, 0.56]);
        let b = DMatrix::from_row_slice(2, 6, &[0.3, -1.2, 0.5, 0.9, -0.1, 0.4, 1.1, 0.2, -0.7, 0.3, 0.8, -0.5]);
        let m = &a * &b;
        let s = svd(m.clone()).unwrap();
        assert!(s.singular_values[2] < 1e-14 * s.singular_values[0]);
        assert!((s.recompose().unwrap() - &m).norm() < 1e-13 * m.norm());
    }

    #[test]
    fn symmetric_eigen_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 1.0]);
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let back = &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals)) * vecs.transpose();
        assert!((back - m).norm() < 1e-13);
    }
}
