//! Biorthogonal eigensystems of non-Hermitian matrices with real spectra and
//! the κ-parameterised family `Θ(κ) = Σ κ_n |n⟩⟩⟨⟨n|` of metrics that make
//! such a matrix self-adjoint.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::json::{serde_matrix, Exact};
use crate::linalg::{
    condition_number, eigensolve_general, ensure_same_dim, hermitian_eigen,
    min_eigenvalue_hermitian, validate_square, ComplexMatrix, ComplexVector, EigenDecomposition,
    ToleranceSet,
};

/// Reality and separation diagnostics of a spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub is_real: bool,
    pub is_nondegenerate: bool,
    /// Largest |Im λ|.
    pub max_imag: f64,
    /// Smallest |λ_i − λ_j| over distinct indices (infinite for n = 1).
    pub min_gap: f64,
    /// Eigenvalues as `[re, im]`, sorted by real then imaginary part.
    pub eigenvalues: Vec<[f64; 2]>,
}

struct SpectrumAnalysis {
    report: SpectrumReport,
    decomposition: EigenDecomposition,
    worst_imag: Option<(usize, Option<usize>)>,
    closest_pair: Option<(usize, usize)>,
}

fn analyse(a: &ComplexMatrix, tol: &ToleranceSet) -> Result<SpectrumAnalysis> {
    let n = validate_square(a)?;
    let decomposition = eigensolve_general(a)?;
    let eig = &decomposition.eigenvalues;
    let scale = a.norm();

    let mut max_imag = 0.0f64;
    let mut worst_imag = None;
    for (k, z) in eig.iter().enumerate() {
        if z.im.abs() > max_imag || worst_imag.is_none() {
            max_imag = max_imag.max(z.im.abs());
            worst_imag = Some(k);
        }
    }
    let worst_imag = worst_imag.map(|k| {
        let target = eig[k].conj();
        let partner = (0..n)
            .filter(|&j| j != k)
            .min_by(|&i, &j| (eig[i] - target).norm().total_cmp(&(eig[j] - target).norm()));
        (k, partner)
    });

    let mut min_gap = f64::INFINITY;
    let mut closest_pair = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (eig[i] - eig[j]).norm();
            if gap < min_gap {
                min_gap = gap;
                closest_pair = Some((i, j));
            }
        }
    }

    let report = SpectrumReport {
        is_real: max_imag <= tol.tol_real * scale,
        is_nondegenerate: min_gap > tol.tol_degen * scale,
        max_imag,
        min_gap,
        eigenvalues: eig.iter().map(|z| [z.re, z.im]).collect(),
    };
    Ok(SpectrumAnalysis {
        report,
        decomposition,
        worst_imag,
        closest_pair,
    })
}

/// Reports whether the spectrum of `a` is real and non-degenerate relative to
/// `‖a‖_F`.
pub fn diagnose_spectrum(a: &ComplexMatrix, tol: &ToleranceSet) -> Result<SpectrumReport> {
    Ok(analyse(a, tol)?.report)
}

/// Checks that `a` has a real, non-degenerate spectrum, naming the offending
/// eigenvalues otherwise.
pub fn require_real_nondegenerate(a: &ComplexMatrix, tol: &ToleranceSet) -> Result<SpectrumReport> {
    let analysis = analyse(a, tol)?;
    check_analysis(&analysis)?;
    Ok(analysis.report)
}

fn check_analysis(analysis: &SpectrumAnalysis) -> Result<()> {
    let eig = &analysis.decomposition.eigenvalues;
    if !analysis.report.is_real {
        let (index, partner) = analysis.worst_imag.expect("non-empty spectrum");
        return Err(Error::ComplexSpectrum {
            index,
            value: eig[index],
            partner,
        });
    }
    if !analysis.report.is_nondegenerate {
        let (first, second) = analysis.closest_pair.expect("at least two eigenvalues");
        return Err(Error::DegenerateSpectrum {
            first,
            second,
            first_value: eig[first],
            second_value: eig[second],
        });
    }
    Ok(())
}

/// Real eigenvalues with paired right eigenvectors `|n⟩` of `A` and left
/// eigenvectors `|n⟩⟩` of `A†`, normalised so that `⟨⟨m|n⟩ = δ_mn`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiorthogonalSystem {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    #[serde(with = "serde_matrix")]
    pub right_kets: ComplexMatrix,
    #[serde(with = "serde_matrix")]
    pub left_ketkets: ComplexMatrix,
}

/// Invariant residuals of a [`BiorthogonalSystem`] against its source matrix.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SystemResiduals {
    /// `‖L†R − I‖_F`.
    pub biorthonormality: f64,
    /// `max_n ‖A|n⟩ − E_n|n⟩‖ / ‖A‖_F`.
    pub right_eigen: f64,
    /// `max_n ‖A†|n⟩⟩ − E_n|n⟩⟩‖ / (‖A‖_F ‖|n⟩⟩‖)`.
    pub left_eigen: f64,
    /// `‖Σ|n⟩E_n⟨⟨n| − A‖_F / ‖A‖_F`.
    pub reconstruction: f64,
}

impl BiorthogonalSystem {
    /// Assembles a system from explicit parts, checking only shapes.
    pub fn from_parts(
        eigenvalues: Vec<f64>,
        right_kets: ComplexMatrix,
        left_ketkets: ComplexMatrix,
    ) -> Result<Self> {
        let n = eigenvalues.len();
        ensure_same_dim(n, &right_kets)?;
        ensure_same_dim(n, &left_ketkets)?;
        Ok(Self {
            n,
            eigenvalues,
            right_kets,
            left_ketkets,
        })
    }

    pub fn left(&self, k: usize) -> ComplexVector {
        self.left_ketkets.column(k).into_owned()
    }

    pub fn right(&self, k: usize) -> ComplexVector {
        self.right_kets.column(k).into_owned()
    }

    /// The rank-one metric generator `G_k = |k⟩⟩⟨⟨k|`.
    pub fn generator(&self, k: usize) -> ComplexMatrix {
        let l = self.left(k);
        &l * l.adjoint()
    }

    /// `Σ_n |n⟩ E_n ⟨⟨n|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut scaled = self.right_kets.clone();
        for (k, e) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*e);
        }
        scaled * self.left_ketkets.adjoint()
    }

    /// Spectral condition number of the left basis; positivity of `Θ(κ)` is
    /// read off the signs of κ reliably only while this stays moderate.
    pub fn left_condition(&self) -> f64 {
        condition_number(&self.left_ketkets)
    }

    pub fn residuals(&self, a: &ComplexMatrix) -> SystemResiduals {
        let scale = a.norm().max(f64::MIN_POSITIVE);
        let overlap = self.left_ketkets.adjoint() * &self.right_kets;
        let biorthonormality = (overlap - ComplexMatrix::identity(self.n, self.n)).norm();
        let adj = a.adjoint();
        let mut right_eigen = 0.0f64;
        let mut left_eigen = 0.0f64;
        for k in 0..self.n {
            let e = Complex64::new(self.eigenvalues[k], 0.0);
            let r = self.right(k);
            let l = self.left(k);
            right_eigen = right_eigen.max((a * &r - &r * e).norm() / (scale * r.norm()));
            left_eigen = left_eigen.max((&adj * &l - &l * e).norm() / (scale * l.norm()));
        }
        let reconstruction = (self.reconstruct() - a).norm() / scale;
        SystemResiduals {
            biorthonormality,
            right_eigen,
            left_eigen,
            reconstruction,
        }
    }
}

/// Builds the biorthonormal eigenbasis of a matrix with real, non-degenerate
/// spectrum.
///
/// Right kets are unit vectors whose first component above `tol_resid` in
/// modulus is real and positive; left ketkets are the columns of `(R⁻¹)†`,
/// which pairs them with the right kets eigenvalue by eigenvalue.
pub fn biorthogonalize(a: &ComplexMatrix, tol: &ToleranceSet) -> Result<BiorthogonalSystem> {
    let analysis = analyse(a, tol)?;
    check_analysis(&analysis)?;
    let n = a.nrows();
    let mut right = analysis.decomposition.vectors;
    for k in 0..n {
        let mut col = right.column_mut(k);
        let norm = col.norm();
        col.unscale_mut(norm);
        if let Some(pivot) = col.iter().copied().find(|z| z.norm() > tol.tol_resid) {
            let phase = pivot.conj() / pivot.norm();
            for z in col.iter_mut() {
                *z *= phase;
            }
        }
    }
    let inverse = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::EigensolverFailure("right eigenbasis is singular".into()))?;
    let left = inverse.adjoint();
    let eigenvalues = analysis.decomposition.eigenvalues.iter().map(|z| z.re).collect();
    Ok(BiorthogonalSystem {
        n,
        eigenvalues,
        right_kets: right,
        left_ketkets: left,
    })
}

/// A Hermitian metric candidate with its positivity and quasi-Hermiticity
/// diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct MetricCandidate {
    #[serde(with = "serde_matrix")]
    pub theta: ComplexMatrix,
    pub kappa: Option<Vec<Exact>>,
    pub lambda_min: f64,
    /// `(observable index, quasi_hermiticity_residual)` pairs.
    pub quasi_residuals: Vec<(usize, f64)>,
}

impl MetricCandidate {
    pub fn new(theta: ComplexMatrix, kappa: Option<Vec<f64>>, tol: &ToleranceSet) -> Result<Self> {
        let (lambda_min, _) = min_eigenvalue_hermitian(&theta, tol)?;
        Ok(Self {
            theta,
            kappa: kappa.map(|k| k.into_iter().map(Exact).collect()),
            lambda_min,
            quasi_residuals: Vec::new(),
        })
    }

    pub fn kappa_values(&self) -> Option<Vec<f64>> {
        self.kappa.as_ref().map(|k| k.iter().map(|e| e.0).collect())
    }

    /// Records the residual against each observable, in order.
    pub fn with_residuals(mut self, observables: &[ComplexMatrix]) -> Result<Self> {
        self.quasi_residuals = observables
            .iter()
            .enumerate()
            .map(|(j, obs)| quasi_hermiticity_residual(&self.theta, obs).map(|r| (j, r)))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn max_residual(&self) -> f64 {
        self.quasi_residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    /// Positive definite beyond `tol_pos` and every residual within `tol_resid`.
    pub fn is_certified(&self, tol: &ToleranceSet) -> bool {
        self.lambda_min > tol.tol_pos && self.max_residual() <= tol.tol_resid
    }
}

/// `Θ(κ) = Σ_n κ_n |n⟩⟩⟨⟨n|`.
pub fn metric_from_kappa(
    sys: &BiorthogonalSystem,
    kappa: &[f64],
    tol: &ToleranceSet,
) -> Result<MetricCandidate> {
    if kappa.len() != sys.n {
        return Err(Error::DimensionMismatch {
            expected: format!("kappa of length {}", sys.n),
            found: format!("length {}", kappa.len()),
        });
    }
    if let Some(bad) = kappa.iter().position(|k| !k.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa[{bad}] is not finite")));
    }
    let theta = metric_matrix(sys, kappa);
    MetricCandidate::new(theta, Some(kappa.to_vec()), tol)
}

/// The bare matrix `Θ(κ)`, Hermitian to the last bit.
pub(crate) fn metric_matrix(sys: &BiorthogonalSystem, kappa: &[f64]) -> ComplexMatrix {
    let mut scaled = sys.left_ketkets.clone();
    for (k, w) in kappa.iter().enumerate() {
        scaled.column_mut(k).scale_mut(*w);
    }
    let theta = scaled * sys.left_ketkets.adjoint();
    (&theta + theta.adjoint()).scale(0.5)
}

/// `‖ΘΛ − Λ†Θ‖_F / (‖Θ‖_F ‖Λ‖_F + ε_machine)`.
pub fn quasi_hermiticity_residual(theta: &ComplexMatrix, lambda: &ComplexMatrix) -> Result<f64> {
    let n = validate_square(theta)?;
    ensure_same_dim(n, lambda)?;
    let mismatch = theta * lambda - lambda.adjoint() * theta;
    Ok(mismatch.norm() / (theta.norm() * lambda.norm() + f64::EPSILON))
}

/// The Hermitian positive square root `Ω = Θ^{1/2}`, so that `Θ = Ω†Ω`.
pub fn factorize_metric(theta: &ComplexMatrix, tol: &ToleranceSet) -> Result<ComplexMatrix> {
    hermitian_function(theta, tol, |lambda| {
        if lambda > tol.tol_pos {
            Ok(lambda.sqrt())
        } else {
            Err(Error::NotPositiveDefinite { lambda_min: lambda })
        }
    })
}

/// Applies a scalar function to a Hermitian matrix through its eigenbasis.
pub fn hermitian_function<F>(h: &ComplexMatrix, tol: &ToleranceSet, mut f: F) -> Result<ComplexMatrix>
where
    F: FnMut(f64) -> Result<f64>,
{
    let eig = hermitian_eigen(h, tol)?;
    let mut scaled = eig.vectors.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let value = f(lambda)?;
        scaled.column_mut(k).scale_mut(value);
    }
    let out = scaled * eig.vectors.adjoint();
    Ok((&out + out.adjoint()).scale(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RealMatrix;

    fn real(n: usize, data: &[f64]) -> ComplexMatrix {
        RealMatrix::from_row_slice(n, n, data).map(|v| Complex64::new(v, 0.0))
    }

    #[test]
    fn spectrum_of_hermitian_is_real() {
        let h = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 2.0),
                Complex64::new(0.0, -2.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let rep = diagnose_spectrum(&h, &ToleranceSet::default()).unwrap();
        assert!(rep.is_real && rep.is_nondegenerate);
    }

    #[test]
    fn rotation_generator_is_complex() {
        let a = real(2, &[0.0, 1.0, -1.0, 0.0]);
        let rep = diagnose_spectrum(&a, &ToleranceSet::default()).unwrap();
        assert!(!rep.is_real);
        assert!((rep.max_imag - 1.0).abs() < 1e-14);
        match biorthogonalize(&a, &ToleranceSet::default()) {
            Err(Error::ComplexSpectrum { index, partner, .. }) => {
                assert_eq!(partner, Some(1 - index));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_is_degenerate() {
        let a = real(2, &[1.0, 0.0, 0.0, 1.0]);
        let rep = diagnose_spectrum(&a, &ToleranceSet::default()).unwrap();
        assert!(!rep.is_nondegenerate);
        assert!(matches!(
            biorthogonalize(&a, &ToleranceSet::default()),
            Err(Error::DegenerateSpectrum { first: 0, second: 1, .. })
        ));
    }

    #[test]
    fn triangular_example_gauge() {
        let tol = ToleranceSet::default();
        let a = real(2, &[1.0, 1.0, 0.0, 2.0]);
        let sys = biorthogonalize(&a, &tol).unwrap();
        assert_eq!(sys.eigenvalues.len(), 2);
        assert!((sys.eigenvalues[0] - 1.0).abs() < 1e-14);
        let h = 0.5f64.sqrt();
        let expect_right = real(2, &[1.0, h, 0.0, h]);
        assert!((&sys.right_kets - expect_right).norm() < 1e-14);
        // Left ketkets are (1, −1) and (0, √2) under the unit-norm right gauge.
        let expect_left = real(2, &[1.0, 0.0, -1.0, 2f64.sqrt()]);
        assert!((&sys.left_ketkets - expect_left).norm() < 1e-14);
        let overlap = sys.left_ketkets.adjoint() * &sys.right_kets;
        assert!((overlap - ComplexMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn metric_from_unnormalised_kets_matches_hand_oracle() {
        // Right kets (1,0),(1,1) with left ketkets (1,−1),(0,1).
        let tol = ToleranceSet::default();
        let sys = BiorthogonalSystem::from_parts(
            vec![1.0, 2.0],
            real(2, &[1.0, 1.0, 0.0, 1.0]),
            real(2, &[1.0, 0.0, -1.0, 1.0]),
        )
        .unwrap();
        let m = metric_from_kappa(&sys, &[1.0, 1.0], &tol).unwrap();
        assert!((&m.theta - real(2, &[1.0, -1.0, -1.0, 2.0])).norm() < 1e-15);
        assert!((m.lambda_min - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
        let a = real(2, &[1.0, 1.0, 0.0, 2.0]);
        assert!(sys.residuals(&a).reconstruction < 1e-15);
    }

    #[test]
    fn metric_in_unit_gauge_covers_same_matrix() {
        let tol = ToleranceSet::default();
        let sys = biorthogonalize(&real(2, &[1.0, 1.0, 0.0, 2.0]), &tol).unwrap();
        let m = metric_from_kappa(&sys, &[1.0, 0.5], &tol).unwrap();
        assert!((&m.theta - real(2, &[1.0, -1.0, -1.0, 2.0])).norm() < 1e-14);
    }

    #[test]
    fn hermitian_matrix_gives_unitary_basis_and_identity_metric() {
        let tol = ToleranceSet::default();
        let h = real(3, &[2.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 5.0]);
        let sys = biorthogonalize(&h, &tol).unwrap();
        assert!((&sys.left_ketkets - &sys.right_kets).norm() < 1e-13);
        let m = metric_from_kappa(&sys, &[1.0; 3], &tol).unwrap();
        assert!((m.theta - ComplexMatrix::identity(3, 3)).norm() < 1e-13);
    }

    #[test]
    fn negative_kappa_breaks_positivity() {
        let tol = ToleranceSet::default();
        let sys = biorthogonalize(&real(2, &[1.0, 1.0, 0.0, 2.0]), &tol).unwrap();
        let m = metric_from_kappa(&sys, &[1.0, -0.2], &tol).unwrap();
        assert!(m.lambda_min < 0.0);
    }

    #[test]
    fn kappa_length_checked() {
        let tol = ToleranceSet::default();
        let sys = biorthogonalize(&real(2, &[1.0, 1.0, 0.0, 2.0]), &tol).unwrap();
        assert!(matches!(
            metric_from_kappa(&sys, &[1.0], &tol),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn residual_examples() {
        let tol = ToleranceSet::default();
        let h = real(2, &[1.0, 2.0, 2.0, -1.0]);
        assert!(quasi_hermiticity_residual(&ComplexMatrix::identity(2, 2), &h).unwrap() < 1e-16);

        let a = real(2, &[1.0, 1.0, 0.0, 2.0]);
        let sys = biorthogonalize(&a, &tol).unwrap();
        let m = metric_from_kappa(&sys, &[0.3, 4.0], &tol).unwrap();
        assert!(quasi_hermiticity_residual(&m.theta, &a).unwrap() <= 1e-10);

        // ΘΛ − Λ†Θ = [[0,1],[−1,0]] with norm √2; denominator √2·1.
        let shift = real(2, &[0.0, 1.0, 0.0, 0.0]);
        let r = quasi_hermiticity_residual(&ComplexMatrix::identity(2, 2), &shift).unwrap();
        let expected = 2f64.sqrt() / (2f64.sqrt() + f64::EPSILON);
        assert!((r - expected).abs() < 1e-15);
    }

    #[test]
    fn factorize_examples() {
        let tol = ToleranceSet::default();
        let id = ComplexMatrix::identity(3, 3);
        assert!((factorize_metric(&id, &tol).unwrap() - &id).norm() < 1e-14);

        let omega = factorize_metric(&real(2, &[4.0, 0.0, 0.0, 9.0]), &tol).unwrap();
        assert!((omega - real(2, &[2.0, 0.0, 0.0, 3.0])).norm() < 1e-14);

        let theta = real(2, &[1.0, -1.0, -1.0, 2.0]);
        let omega = factorize_metric(&theta, &tol).unwrap();
        assert!((omega.adjoint() * &omega - &theta).norm() < 1e-12);

        assert!(matches!(
            factorize_metric(&real(2, &[1.0, 0.0, 0.0, -1.0]), &tol),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
