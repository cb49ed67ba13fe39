use std::cmp::Ordering;

use nalgebra::linalg::{Schur, SymmetricEigen};
use num_complex::Complex64;

use super::{ensure_hermitian, validate_square, ComplexMatrix, ComplexVector, ToleranceSet};
use crate::error::{Error, Result};

/// Residual bound factor on `‖Mv − λv‖ / ‖M‖` for accepted eigenpairs.
const RESIDUAL_FACTOR: f64 = 1e3;

/// Eigenvalues of a general complex matrix with unit-norm right
/// eigenvectors stored as columns in the same order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub vectors: ComplexMatrix,
}

/// Orders eigenvalues by real part, then imaginary part.
pub(crate) fn spectral_order(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigen-decomposition of a general square matrix via complex Schur form and
/// back-substitution on the triangular factor.
pub fn eigensolve_general(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = validate_square(m)?;
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let scale = m.norm();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::EigensolverFailure("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();

    let small = f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);
    let mut pairs: Vec<(Complex64, ComplexVector)> = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = ComplexVector::zeros(n);
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                s += t[(i, j)] * y[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[i] = -s / denom;
        }
        let mut v = &q * y;
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::EigensolverFailure(format!(
                "eigenvector #{k} could not be normalised"
            )));
        }
        v.unscale_mut(norm);
        pairs.push((lambda, v));
    }

    pairs.sort_by(|a, b| spectral_order(&a.0, &b.0));

    let bound = RESIDUAL_FACTOR * f64::EPSILON * scale;
    for (k, (lambda, v)) in pairs.iter().enumerate() {
        let resid = (m * v - v * *lambda).norm();
        if resid > bound && resid > f64::MIN_POSITIVE {
            return Err(Error::EigensolverFailure(format!(
                "eigenpair #{k} residual {resid:.3e} exceeds {bound:.3e}"
            )));
        }
    }

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let columns: Vec<ComplexVector> = pairs.into_iter().map(|p| p.1).collect();
    Ok(EigenDecomposition {
        eigenvalues,
        vectors: ComplexMatrix::from_columns(&columns),
    })
}

/// Ascending eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eigen(h: &ComplexMatrix, tol: &ToleranceSet) -> Result<HermitianEigen> {
    ensure_hermitian(h, tol)?;
    let n = h.nrows();
    // Symmetrize so round-off asymmetry never reaches the solver.
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigensolverFailure("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let columns: Vec<ComplexVector> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    Ok(HermitianEigen {
        eigenvalues,
        vectors: ComplexMatrix::from_columns(&columns),
    })
}

/// Smallest eigenvalue of a Hermitian matrix with a unit eigenvector.
pub fn min_eigenvalue_hermitian(
    h: &ComplexMatrix,
    tol: &ToleranceSet,
) -> Result<(f64, ComplexVector)> {
    if h.nrows() == 0 {
        return Err(Error::InvalidArgument("empty matrix has no eigenvalues".into()));
    }
    let eig = hermitian_eigen(h, tol)?;
    Ok((eig.eigenvalues[0], eig.vectors.column(0).into_owned()))
}
