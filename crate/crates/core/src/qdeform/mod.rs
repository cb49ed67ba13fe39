//! Truncated-oscillator realisation of the first-order q-deformed oscillator
//! `H_q = H₀ + (ε/8)H₁`, its deformed coordinate `X_q` and the candidate
//! metric `Θ₀ = 1 + εf` with map `Ω₀ = 1 + εg`.
//!
//! Matrices are `N × N` truncations, so products are only exact away from the
//! top-left-to-bottom-right edge. Comparisons go through an
//! [`InteriorProjector`] that keeps the leading block.

mod checks;
pub mod symbolic;

pub use checks::{
    a24_crosscheck, hermitization_defect, qcommutator_check, x_metric_residual, A24Report,
    HermitizationReport, QCommutatorReport, XMetricReport,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{identity, ComplexMatrix, ToleranceSet, I};
use crate::spectral::hermitian_function;

pub const MIN_TRUNCATION: usize = 12;
pub const MAX_EPSILON: f64 = 0.1;
pub const DEFAULT_BUFFER: usize = 10;

/// Ladder matrix with `a_{k−1,k} = √k`.
pub fn annihilation(n: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

#[derive(Debug, Clone)]
pub struct OscillatorBasis {
    pub n: usize,
    pub a: ComplexMatrix,
    pub adag: ComplexMatrix,
    pub x: ComplexMatrix,
    pub p: ComplexMatrix,
}

pub fn build_basis(n: usize) -> Result<OscillatorBasis> {
    if n < MIN_TRUNCATION {
        return Err(Error::DimensionTooSmall {
            n,
            min: MIN_TRUNCATION,
        });
    }
    let a = annihilation(n);
    let adag = a.adjoint();
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let x = (&a + &adag) * s;
    let p = (&adag - &a) * (I * s);
    Ok(OscillatorBasis { n, a, adag, x, p })
}

/// Keeps the leading `size × size` block of an `N × N` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InteriorProjector {
    #[serde(rename = "N")]
    pub n: usize,
    pub buffer: usize,
    pub size: usize,
}

impl InteriorProjector {
    /// Indices below `N − buffer`.
    pub fn new(n: usize, buffer: usize) -> Result<Self> {
        if buffer >= n {
            return Err(Error::InvalidArgument(format!(
                "buffer {buffer} leaves no interior in dimension {n}"
            )));
        }
        Ok(Self {
            n,
            buffer,
            size: n - buffer,
        })
    }

    /// Fixed leading block, used to compare different truncations.
    pub fn with_size(n: usize, size: usize) -> Result<Self> {
        if size == 0 || size > n {
            return Err(Error::InvalidArgument(format!(
                "interior size {size} not in 1..={n}"
            )));
        }
        Ok(Self {
            n,
            buffer: n - size,
            size,
        })
    }

    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        m.view((0, 0), (self.size, self.size)).into_owned()
    }

    pub fn norm(&self, m: &ComplexMatrix) -> f64 {
        m.view((0, 0), (self.size, self.size)).norm()
    }
}

/// How `e^{εf}` and `e^{εg}` are realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricForm {
    #[default]
    Linear,
    Exponential,
}

#[derive(Debug, Clone)]
pub struct QDeformedModel {
    pub basis: OscillatorBasis,
    pub epsilon: f64,
    pub buffer: usize,
    pub form: MetricForm,
    pub h0: ComplexMatrix,
    pub h1: ComplexMatrix,
    pub hq: ComplexMatrix,
    pub x1: ComplexMatrix,
    pub xq: ComplexMatrix,
    pub f: ComplexMatrix,
    pub g: ComplexMatrix,
    pub theta0: ComplexMatrix,
    pub omega0: ComplexMatrix,
}

impl QDeformedModel {
    pub fn n(&self) -> usize {
        self.basis.n
    }

    pub fn projector(&self) -> InteriorProjector {
        InteriorProjector::new(self.basis.n, self.buffer).expect("buffer checked at build")
    }

    /// Same truncation, buffer and metric form at another ε.
    pub fn rebuilt(&self, epsilon: f64, tol: &ToleranceSet) -> Result<Self> {
        build_model_with(self.basis.n, epsilon, self.buffer, self.form, tol)
    }
}

pub fn build_model(n: usize, epsilon: f64, tol: &ToleranceSet) -> Result<QDeformedModel> {
    build_model_with(n, epsilon, DEFAULT_BUFFER, MetricForm::Linear, tol)
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon.abs() > MAX_EPSILON {
        return Err(Error::EpsilonOutOfRange {
            epsilon,
            max: MAX_EPSILON,
        });
    }
    Ok(())
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn im(v: f64) -> Complex64 {
    Complex64::new(0.0, v)
}

/// Builds every operator by matrix products in the written factor order.
pub fn build_model_with(
    n: usize,
    epsilon: f64,
    buffer: usize,
    form: MetricForm,
    tol: &ToleranceSet,
) -> Result<QDeformedModel> {
    check_epsilon(epsilon)?;
    let basis = build_basis(n)?;
    InteriorProjector::new(n, buffer)?;
    let (x, p) = (&basis.x, &basis.p);
    let one = identity(n);
    let xx = x * x;
    let pp = p * p;
    let xxx = &xx * x;
    let ppp = &pp * p;

    let h0 = &pp + &xx;
    let h1 = &xx * &xx * re(2.0) - &xx + &pp * re(3.0) - &one * re(3.0)
        + &xxx * p * im(2.0)
        + x * &ppp * im(2.0)
        + &xx * &pp * re(2.0)
        - x * p * im(8.0);
    let hq = &h0 + &h1 * re(epsilon / 8.0);

    let x1 = (&xxx - x * &pp + &xx * im(1.0) + &xx * p * im(1.0) - x
        + &ppp * im(1.0)
        + p * x * p
        + &pp * x)
        * re(0.125);
    let xq = x + &x1 * re(epsilon);

    // p²x² and p³x are evaluated as the exact adjoints of x²p² and xp³: the
    // same truncated matrices, but bitwise Hermitian sums.
    let xxpp = &xx * &pp;
    let xppp = x * &ppp;
    let f = ((&xxpp + &pp * &pp + xxpp.adjoint()) * re(0.25)
        + (&xppp - xppp.adjoint()) * im(1.0 / 3.0))
        * re(0.25);
    let g = &f * re(0.5);

    let (theta0, omega0) = match form {
        MetricForm::Linear => (&one + &f * re(epsilon), &one + &g * re(epsilon)),
        MetricForm::Exponential => (
            hermitian_function(&f, tol, |v| Ok((epsilon * v).exp()))?,
            hermitian_function(&g, tol, |v| Ok((epsilon * v).exp()))?,
        ),
    };

    Ok(QDeformedModel {
        basis,
        epsilon,
        buffer,
        form,
        h0,
        h1,
        hq,
        x1,
        xq,
        f,
        g,
        theta0,
        omega0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator;

    #[test]
    fn ladder_matrix_layout() {
        let a = annihilation(3);
        assert_eq!(a[(0, 1)].re, 1.0);
        assert_eq!(a[(1, 2)].re, 2f64.sqrt());
        assert_eq!(a.iter().filter(|z| z.norm() != 0.0).count(), 2);
    }

    #[test]
    fn basis_invariants() {
        let b = build_basis(20).unwrap();
        assert_eq!(b.x, b.x.adjoint());
        assert_eq!(b.p, b.p.adjoint());
        let comm = commutator(&b.x, &b.p);
        for i in 0..18 {
            for j in 0..18 {
                let expect = if i == j { im(1.0) } else { re(0.0) };
                assert!((comm[(i, j)] - expect).norm() < 1e-14);
            }
        }
        let h = &b.x * &b.x + &b.p * &b.p;
        for k in 0..18 {
            assert!((h[(k, k)].re - (2 * k + 1) as f64).abs() < 1e-12);
        }
        assert!(matches!(build_basis(11), Err(Error::DimensionTooSmall { n: 11, min: 12 })));
    }

    #[test]
    fn undeformed_limit() {
        let m = build_model(20, 0.0, &ToleranceSet::default()).unwrap();
        assert_eq!(m.hq, m.h0);
        assert_eq!(m.xq, m.basis.x);
        assert_eq!(m.theta0, identity(20));
    }

    #[test]
    fn structural_hermiticity() {
        let m = build_model(20, 0.01, &ToleranceSet::default()).unwrap();
        assert!((&m.f - m.f.adjoint()).norm() <= 1e-12);
        assert!((&m.g - m.g.adjoint()).norm() <= 1e-12);
        assert_eq!(m.h0, m.h0.adjoint());
        assert!((&m.h1 - m.h1.adjoint()).norm() > 1.0);
        let linear = &m.h0 + &m.h1 * re(0.01 / 8.0);
        assert_eq!(m.hq, linear);
    }

    #[test]
    fn epsilon_range_is_enforced() {
        let tol = ToleranceSet::default();
        assert!(matches!(build_model(20, 0.2, &tol), Err(Error::EpsilonOutOfRange { .. })));
        assert!(build_model(20, -0.1, &tol).is_ok());
    }

    #[test]
    fn matrices_agree_with_normal_forms_on_interior() {
        let tol = ToleranceSet::default();
        let m = build_model(30, 0.0, &tol).unwrap();
        let proj = m.projector();
        for (mat, poly) in [
            (&m.h1, symbolic::h1()),
            (&m.x1, symbolic::x1()),
            (&m.f, symbolic::f()),
        ] {
            let diff = proj.norm(&(mat - poly.to_matrix(&m.basis)));
            assert!(diff < 1e-10 * proj.norm(mat), "{diff}");
        }
    }

    #[test]
    fn exponential_form_matches_linear_to_first_order() {
        let tol = ToleranceSet::default();
        let lin = build_model_with(24, 1e-6, 10, MetricForm::Linear, &tol).unwrap();
        let exp = build_model_with(24, 1e-6, 10, MetricForm::Exponential, &tol).unwrap();
        let proj = lin.projector();
        assert!(proj.norm(&(&lin.theta0 - &exp.theta0)) < 1e-8);
    }
}
