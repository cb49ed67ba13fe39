//! Dense complex matrices and the numerical contracts the rest of the crate
//! is built on: Hermitian splits, eigensolves, positivity and rank-revealing
//! least squares.

mod eigen;
pub mod json;
mod lstsq;

pub use eigen::{
    eigensolve_general, hermitian_eigen, min_eigenvalue_hermitian, EigenDecomposition,
    HermitianEigen,
};
pub use lstsq::{least_squares_with_nullspace, least_squares_with_reference, svd, RankedLinearSolution};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense square complex matrix, row/column indexed from zero.
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;
pub type RealMatrix = DMatrix<f64>;
pub type RealVector = DVector<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numerical thresholds threaded through every decision the toolkit makes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    /// Relative bound on |Im λ| for a spectrum to count as real.
    pub tol_real: f64,
    /// Relative eigenvalue separation below which a spectrum is degenerate.
    pub tol_degen: f64,
    /// Residual acceptance threshold (also the relative rank cutoff).
    pub tol_resid: f64,
    /// Strict-positivity margin for metrics and κ coordinates.
    pub tol_pos: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            tol_real: 1e-8,
            tol_degen: 1e-8,
            tol_resid: 1e-8,
            tol_pos: 1e-9,
        }
    }
}

impl ToleranceSet {
    pub fn new(tol_real: f64, tol_degen: f64, tol_resid: f64, tol_pos: f64) -> Result<Self> {
        let tol = Self {
            tol_real,
            tol_degen,
            tol_resid,
            tol_pos,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("tol_real", self.tol_real),
            ("tol_degen", self.tol_degen),
            ("tol_resid", self.tol_resid),
            ("tol_pos", self.tol_pos),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }
}

/// Checks that `m` is square with finite entries and returns its dimension.
pub fn validate_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_same_dim(expected: usize, m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != expected || m.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected: format!("{expected}x{expected}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn real_commutator(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    a * b - b * a
}

/// `‖M − M†‖_F / ‖M‖_F`, or zero for the zero matrix.
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / scale
}

pub fn ensure_hermitian(m: &ComplexMatrix, tol: &ToleranceSet) -> Result<()> {
    validate_square(m)?;
    let defect = hermitian_defect(m);
    if defect > tol.tol_resid {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// Splits `M` into its Hermitian part `(M + M†)/2` and anti-Hermitian part
/// `(M − M†)/2`.
pub fn hermitian_split(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let adj = m.adjoint();
    let h = (m + &adj).scale(0.5);
    let k = (m - &adj).scale(0.5);
    (h, k)
}

/// Splits a Hermitian `H = S + iA` into its real symmetric part `S` and real
/// antisymmetric part `A`.
pub fn real_imag_split(h: &ComplexMatrix, tol: &ToleranceSet) -> Result<(RealMatrix, RealMatrix)> {
    ensure_hermitian(h, tol)?;
    Ok((h.map(|z| z.re), h.map(|z| z.im)))
}

/// Recombines `S + iA`.
pub fn complexify(re: &RealMatrix, im: &RealMatrix) -> ComplexMatrix {
    re.zip_map(im, Complex64::new)
}

/// Spectral norm condition number of a square matrix (infinite when singular).
pub fn condition_number(m: &ComplexMatrix) -> f64 {
    let sv = svd(m).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn smallest_singular_value(m: &ComplexMatrix) -> f64 {
    svd(m).singular_values.min()
}

/// Least-squares slope of `ln y` against `ln x`; needs two distinct abscissae.
pub fn loglog_slope(points: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
