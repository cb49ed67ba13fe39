//! Seeded random ensembles used by the survey and by the test suites.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{condition_number, ComplexMatrix};

/// Condition-number ceiling for "well-conditioned" similarity transforms.
pub const MAX_SIMILARITY_CONDITION: f64 = 50.0;
/// Minimum spacing between sampled eigenvalues.
pub const MIN_EIGENVALUE_GAP: f64 = 0.2;

/// Independent stream for `(seed, index)`, identical whatever the schedule.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| complex_gaussian(rng))
}

pub fn real_gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), 0.0))
}

/// Hermitian matrix from the Gaussian unitary ensemble.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = gaussian_matrix(n, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Hermitian matrix whose eigenvalues are separated by at least
/// [`MIN_EIGENVALUE_GAP`] relative to its spread.
pub fn random_nondegenerate_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let spectrum = distinct_spectrum(n, rng);
    let u = random_unitary(n, rng);
    let d = ComplexMatrix::from_diagonal(&DVector::from_iterator(
        n,
        spectrum.iter().map(|&e| Complex64::new(e, 0.0)),
    ));
    let h = &u * d * u.adjoint();
    (&h + h.adjoint()).scale(0.5)
}

pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    gaussian_matrix(n, rng).qr().q()
}

/// Distinct real values in `[-2, 2]` with pairwise gaps at least
/// [`MIN_EIGENVALUE_GAP`].
pub fn distinct_spectrum<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let half_width = 2.0f64.max(MIN_EIGENVALUE_GAP * n as f64);
    loop {
        let mut values: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-half_width..half_width))
            .collect();
        values.sort_by(f64::total_cmp);
        if values.windows(2).all(|w| w[1] - w[0] >= MIN_EIGENVALUE_GAP) {
            return values;
        }
    }
}

/// Complex Gaussian matrix with spectral condition number at most
/// [`MAX_SIMILARITY_CONDITION`].
pub fn well_conditioned<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        let s = gaussian_matrix(n, rng);
        if condition_number(&s) <= MAX_SIMILARITY_CONDITION {
            return s;
        }
    }
}

/// `S diag(d) S⁻¹` for distinct real `d` and a well-conditioned complex `S`.
pub fn real_spectrum_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let d = distinct_spectrum(n, rng);
    let s = well_conditioned(n, rng);
    similar_to_diagonal(&s, &d)
}

pub fn similar_to_diagonal(s: &ComplexMatrix, d: &[f64]) -> ComplexMatrix {
    let inv = s.clone().try_inverse().expect("well-conditioned matrix is invertible");
    let diag = ComplexMatrix::from_diagonal(&DVector::from_iterator(
        d.len(),
        d.iter().map(|&e| Complex64::new(e, 0.0)),
    ));
    s * diag * inv
}

/// A pair `S diag(a) S⁻¹`, `S diag(b) S⁻¹` sharing one eigenbasis.
pub fn commuting_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (ComplexMatrix, ComplexMatrix) {
    let s = well_conditioned(n, rng);
    let a = distinct_spectrum(n, rng);
    let b = distinct_spectrum(n, rng);
    (similar_to_diagonal(&s, &a), similar_to_diagonal(&s, &b))
}

/// Uniform draw from `(lo, hi)` per component.
pub fn uniform_vector<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = stream_rng(7, 3).random();
        let b: f64 = stream_rng(7, 3).random();
        let c: f64 = stream_rng(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn spectrum_gaps_hold() {
        let mut rng = stream_rng(1, 0);
        for n in 1..8 {
            let d = distinct_spectrum(n, &mut rng);
            assert_eq!(d.len(), n);
            assert!(d.windows(2).all(|w| w[1] - w[0] >= MIN_EIGENVALUE_GAP));
        }
    }

    #[test]
    fn well_conditioned_respects_ceiling() {
        let mut rng = stream_rng(2, 0);
        let s = well_conditioned(4, &mut rng);
        assert!(condition_number(&s) <= MAX_SIMILARITY_CONDITION);
    }
}
