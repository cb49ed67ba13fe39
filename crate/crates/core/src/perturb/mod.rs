//! First-order construction of a shared metric `Θ = I + εF` for observables
//! `A = A₀ + εA₁` with Hermitian `A₀`.
//!
//! Each observable contributes `[A₀, F] = A₁ − A₁† ≡ iR`. Splitting into real
//! and imaginary parts and packing the symmetric and antisymmetric pieces turns
//! this into a real `n² × n²` block system in `f = (pack_sym F_s, pack_antisym F_a)`.

mod packing;
mod scaling;
mod two_level;

pub use packing::{
    antisym_dim, antisym_positions, commutator_blocks, pack_antisym, pack_sym, sym_dim,
    sym_positions, unpack_antisym, unpack_sym, CommutatorBlocks,
};
pub use scaling::{
    compatible_linear_family, perturbative_vs_full_check, LinearFamily, ScalingPoint,
    ScalingReport,
};
pub use two_level::{
    two_level_from_problem, two_level_restrictions, RatioCheck, TwoLevelCoefficients,
    TwoLevelReport, TwoLevelRhs,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::json::{serde_matrix, serde_real_matrix, serde_real_vector};
use crate::linalg::{
    commutator, complexify, ensure_hermitian, least_squares_with_reference, validate_square,
    ComplexMatrix, RealMatrix, RealVector, ToleranceSet, I,
};
use packing::{pack_upper_antisym, pack_upper_sym};

/// `R = −i(A₁ − A₁†)`.
pub fn rhs_hermitian(a1: &ComplexMatrix) -> Result<ComplexMatrix> {
    validate_square(a1)?;
    Ok((a1 - a1.adjoint()) * (-I))
}

/// Inverse of [`rhs_hermitian`] on Hermitian input: `A₁ = (i/2)R`.
pub fn perturbation_from_rhs(r: &ComplexMatrix) -> ComplexMatrix {
    r * (I * 0.5)
}

#[derive(Debug, Clone)]
pub struct PerturbedObservable {
    pub h0: ComplexMatrix,
    pub h1: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct PerturbativeProblem {
    pub observables: Vec<PerturbedObservable>,
    pub epsilon: Option<f64>,
}

impl PerturbativeProblem {
    pub fn new(observables: Vec<PerturbedObservable>, tol: &ToleranceSet) -> Result<Self> {
        let first = observables
            .first()
            .ok_or_else(|| Error::InvalidArgument("at least one observable required".into()))?;
        let n = validate_square(&first.h0)?;
        for obs in &observables {
            for m in [&obs.h0, &obs.h1] {
                let k = validate_square(m)?;
                if k != n {
                    return Err(Error::DimensionMismatch {
                        expected: format!("{n}x{n}"),
                        found: format!("{k}x{k}"),
                    });
                }
            }
            ensure_hermitian(&obs.h0, tol)?;
        }
        Ok(Self {
            observables,
            epsilon: None,
        })
    }

    pub fn pair(
        a0: ComplexMatrix,
        a1: ComplexMatrix,
        b0: ComplexMatrix,
        b1: ComplexMatrix,
        tol: &ToleranceSet,
    ) -> Result<Self> {
        Self::new(
            vec![
                PerturbedObservable { h0: a0, h1: a1 },
                PerturbedObservable { h0: b0, h1: b1 },
            ],
            tol,
        )
    }

    pub fn single(a0: ComplexMatrix, a1: ComplexMatrix, tol: &ToleranceSet) -> Result<Self> {
        Self::new(vec![PerturbedObservable { h0: a0, h1: a1 }], tol)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn dim(&self) -> usize {
        self.observables[0].h0.nrows()
    }

    /// `A₀ + εA₁` for every observable.
    pub fn at(&self, epsilon: f64) -> Vec<ComplexMatrix> {
        self.observables
            .iter()
            .map(|o| &o.h0 + &o.h1 * Complex64::new(epsilon, 0.0))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VectorizedSystem {
    pub n: usize,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub blocks: Vec<CommutatorBlocks>,
    #[serde(with = "serde_real_matrix")]
    pub stacked_matrix: RealMatrix,
    #[serde(with = "serde_real_vector")]
    pub rhs: RealVector,
}

/// Packs a Hermitian `R = R_s + iR_a` as `(pack_sym R_s, pack_antisym(−R_a))`.
pub fn pack_rhs(r: &ComplexMatrix) -> RealVector {
    let rs = r.map(|z| z.re);
    let ra = r.map(|z| -z.im);
    let mut out = pack_upper_sym(&rs).as_slice().to_vec();
    out.extend_from_slice(pack_upper_antisym(&ra).as_slice());
    RealVector::from_vec(out)
}

/// Packs a Hermitian `F = F_s + iF_a` as `(pack_sym F_s, pack_antisym F_a)`.
pub fn pack_hermitian(f: &ComplexMatrix) -> RealVector {
    let mut out = pack_upper_sym(&f.map(|z| z.re)).as_slice().to_vec();
    out.extend_from_slice(pack_upper_antisym(&f.map(|z| z.im)).as_slice());
    RealVector::from_vec(out)
}

pub fn unpack_hermitian(f: &[f64], n: usize) -> Result<ComplexMatrix> {
    let v = sym_dim(n);
    if f.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: format!("{} packed entries", n * n),
            found: f.len().to_string(),
        });
    }
    let fs = unpack_sym(&f[..v], n)?;
    let fa = unpack_antisym(&f[v..], n)?;
    Ok(complexify(&fs, &fa))
}

pub fn assemble_joint_system(p: &PerturbativeProblem, tol: &ToleranceSet) -> Result<VectorizedSystem> {
    let n = p.dim();
    let nn = n * n;
    let k = p.observables.len();
    let mut stacked = RealMatrix::zeros(k * nn, nn);
    let mut rhs = RealVector::zeros(k * nn);
    let mut blocks = Vec::with_capacity(k);
    for (j, obs) in p.observables.iter().enumerate() {
        let b = commutator_blocks(&obs.h0, tol)?;
        stacked.view_mut((j * nn, 0), (nn, nn)).copy_from(&b.system_matrix());
        rhs.rows_mut(j * nn, nn).copy_from(&pack_rhs(&rhs_hermitian(&obs.h1)?));
        blocks.push(b);
    }
    Ok(VectorizedSystem {
        n,
        v: sym_dim(n),
        m: antisym_dim(n),
        blocks,
        stacked_matrix: stacked,
        rhs,
    })
}

/// A solvability condition that the data violate, with its size.
#[derive(Debug, Clone, Serialize)]
pub struct Restriction {
    pub description: String,
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbativeSolution {
    #[serde(rename = "F", with = "serde_matrix")]
    pub f: ComplexMatrix,
    pub residual: f64,
    pub consistent: bool,
    pub rank: usize,
    pub kernel_dim: usize,
    pub restrictions: Vec<Restriction>,
    #[serde(skip)]
    pub kernel_basis: Vec<RealVector>,
}

impl PerturbativeSolution {
    /// Kernel directions as Hermitian matrices.
    pub fn kernel_matrices(&self) -> Vec<ComplexMatrix> {
        let n = self.f.nrows();
        self.kernel_basis
            .iter()
            .map(|v| unpack_hermitian(v.as_slice(), n).expect("kernel vectors have n² entries"))
            .collect()
    }
}

/// Joint relative mismatch of `[A₀, F] = iR` over all observables.
pub fn first_order_residual(p: &PerturbativeProblem, f: &ComplexMatrix) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for obs in &p.observables {
        let r = rhs_hermitian(&obs.h1)?;
        let mismatch = commutator(&obs.h0, f) - &r * I;
        num += mismatch.norm_squared();
        den += (2.0 * obs.h0.norm() * f.norm() + r.norm()).powi(2);
    }
    Ok(if den == 0.0 { 0.0 } else { (num / den).sqrt() })
}

/// Minimum-norm least-squares solve of the stacked first-order system.
///
/// Inconsistent data do not raise: the violated conditions appear in
/// `restrictions` and `consistent` is false.
pub fn solve_first_order(p: &PerturbativeProblem, tol: &ToleranceSet) -> Result<PerturbativeSolution> {
    let n = p.dim();
    let sys = assemble_joint_system(p, tol)?;
    // Off-diagonal packed entries stand for two matrix entries; weighting them
    // by √2 makes both the misfit and the solution norm Frobenius norms, so the
    // answer is covariant under unitary changes of basis.
    let w = frobenius_weights(n);
    let k = p.observables.len();
    let row_w = RealVector::from_iterator(k * n * n, (0..k).flat_map(|_| w.iter().copied()));
    let mut weighted = sys.stacked_matrix.clone();
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row *= row_w[i];
    }
    for (j, mut col) in weighted.column_iter_mut().enumerate() {
        col /= w[j];
    }
    let reference = p.observables.iter().map(|o| o.h0.norm()).fold(0.0, f64::max);
    let solved = least_squares_with_reference(&weighted, &sys.rhs.component_mul(&row_w), tol.tol_resid, reference)?;
    let solution = solved.solution.component_div(&w);
    let kernel_basis = orthonormal_columns(solved.nullspace_basis.iter().map(|v| v.component_div(&w)).collect());
    let f = unpack_hermitian(solution.as_slice(), n)?;
    let f = (&f + f.adjoint()) * Complex64::new(0.5, 0.0);
    let residual = first_order_residual(p, &f)?;
    let consistent = residual <= tol.tol_resid;

    let mut restrictions = Vec::new();
    if !consistent {
        restrictions.extend(trace_restrictions(p, tol)?);
        let mismatch = &sys.rhs - &sys.stacked_matrix * &solution;
        let scale = sys.rhs.norm().max(f64::MIN_POSITIVE);
        restrictions.extend(row_restrictions(&mismatch, n, scale, tol));
        if n == 2 && p.observables.len() == 2 {
            if let Ok(report) = two_level_from_problem(p, tol) {
                for check in report.ratios.iter().filter(|c| !c.consistent) {
                    restrictions.push(Restriction {
                        description: format!("ratio condition broken by {}", check.label),
                        slack: check.slack,
                    });
                }
            }
        }
    }

    Ok(PerturbativeSolution {
        f,
        residual,
        consistent,
        rank: solved.rank,
        kernel_dim: solved.nullspace_dim(),
        restrictions,
        kernel_basis,
    })
}

/// 1 for diagonal entries, √2 for off-diagonal ones, in packed order.
fn frobenius_weights(n: usize) -> RealVector {
    let root2 = std::f64::consts::SQRT_2;
    let sym = sym_positions(n).into_iter().map(|(i, j)| if i == j { 1.0 } else { root2 });
    let anti = std::iter::repeat_n(root2, antisym_dim(n));
    RealVector::from_iterator(n * n, sym.chain(anti))
}

/// Orthonormal basis of the span, each vector with its largest entry positive.
fn orthonormal_columns(vectors: Vec<RealVector>) -> Vec<RealVector> {
    if vectors.is_empty() {
        return vectors;
    }
    let q = RealMatrix::from_columns(&vectors).qr().q();
    q.column_iter()
        .map(|c| {
            let c = c.into_owned();
            let top = c.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() * (1.0 + 1e-12) { v } else { m });
            if top < 0.0 { -c } else { c }
        })
        .collect()
}

/// `Tr [A₀, F] = 0` forces `Tr R = 0` (at n = 2: `R_s11 = −R_s22`).
fn trace_restrictions(p: &PerturbativeProblem, tol: &ToleranceSet) -> Result<Vec<Restriction>> {
    let n = p.dim();
    let mut out = Vec::new();
    for (j, obs) in p.observables.iter().enumerate() {
        let r = rhs_hermitian(&obs.h1)?;
        let trace = r.trace().re;
        let slack = trace.abs() / r.norm().max(f64::MIN_POSITIVE);
        if slack > tol.tol_resid {
            let description = if n == 2 {
                format!("non-diagonality constraint R_s11 = -R_s22 violated for observable {j}")
            } else {
                format!("trace condition Tr R = 0 violated for observable {j}")
            };
            out.push(Restriction { description, slack });
        }
    }
    Ok(out)
}

fn row_restrictions(mismatch: &RealVector, n: usize, scale: f64, tol: &ToleranceSet) -> Vec<Restriction> {
    let nn = n * n;
    let v = sym_dim(n);
    let sym = sym_positions(n);
    let anti = antisym_positions(n);
    mismatch
        .iter()
        .enumerate()
        .filter(|(_, r)| r.abs() / scale > tol.tol_resid)
        .map(|(k, r)| {
            let (obs, row) = (k / nn, k % nn);
            let description = if row < v {
                let (i, j) = sym[row];
                format!("observable {obs}: symmetric row ({}, {}) unmatched", i + 1, j + 1)
            } else {
                let (i, j) = anti[row - v];
                format!("observable {obs}: antisymmetric row ({}, {}) unmatched", i + 1, j + 1)
            };
            Restriction {
                description,
                slack: r.abs() / scale,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_defect;
    use crate::random::{random_hermitian, random_nondegenerate_hermitian, stream_rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rhs_examples() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 2.0), c(0.5, -2.0), c(-1.0, 0.0)]);
        assert_eq!(rhs_hermitian(&h).unwrap().norm(), 0.0);
        let a1 = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let r = rhs_hermitian(&a1).unwrap();
        let expected = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        assert_eq!(r, expected);
        let r2 = rhs_hermitian(&(&h * I)).unwrap();
        assert!((r2 - h * c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hermitian_first_order_terms_give_zero() {
        let tol = ToleranceSet::default();
        let mut rng = stream_rng(4, 0);
        let a0 = random_nondegenerate_hermitian(3, &mut rng);
        let a1 = random_hermitian(3, &mut rng);
        let b0 = random_nondegenerate_hermitian(3, &mut rng);
        let b1 = random_hermitian(3, &mut rng);
        let p = PerturbativeProblem::pair(a0, a1, b0, b1, &tol).unwrap();
        let sys = assemble_joint_system(&p, &tol).unwrap();
        assert_eq!(sys.rhs.norm(), 0.0);
        let sol = solve_first_order(&p, &tol).unwrap();
        assert_eq!(sol.f.norm(), 0.0);
        assert!(sol.consistent);
    }

    #[test]
    fn stacked_action_matches_direct_commutators() {
        let tol = ToleranceSet::default();
        let mut rng = stream_rng(9, 0);
        let a0 = random_hermitian(3, &mut rng);
        let b0 = random_hermitian(3, &mut rng);
        let p = PerturbativeProblem::pair(a0.clone(), a0.clone(), b0.clone(), b0.clone(), &tol).unwrap();
        let sys = assemble_joint_system(&p, &tol).unwrap();
        let f = random_hermitian(3, &mut rng);
        let packed = &sys.stacked_matrix * pack_hermitian(&f);
        // [H₀, F] = −R_a' + iR_s'; packing it like an rhs gives the same vector.
        for (j, h0) in [a0, b0].iter().enumerate() {
            let direct = pack_rhs(&(commutator(h0, &f) * (-I)));
            let got = packed.rows(j * 9, 9);
            assert!((direct - got).norm() < 1e-13);
        }
    }

    #[test]
    fn oracle_round_trip() {
        let tol = ToleranceSet::default();
        let mut rng = stream_rng(11, 0);
        let a0 = random_nondegenerate_hermitian(4, &mut rng);
        let b0 = random_nondegenerate_hermitian(4, &mut rng);
        let f_star = random_hermitian(4, &mut rng);
        let a1 = commutator(&a0, &f_star) * c(0.5, 0.0);
        let b1 = commutator(&b0, &f_star) * c(0.5, 0.0);
        let p = PerturbativeProblem::pair(a0, a1, b0, b1, &tol).unwrap();
        let sol = solve_first_order(&p, &tol).unwrap();
        assert!(sol.residual <= 1e-10, "{}", sol.residual);
        assert!(hermitian_defect(&sol.f) < 1e-14);
        assert_eq!(sol.kernel_dim, 1);
        let diff = pack_hermitian(&(&sol.f - &f_star));
        let k = &sol.kernel_basis[0];
        assert!((&diff - k * k.dot(&diff)).norm() < 1e-9);
    }

    #[test]
    fn trace_violation_is_reported() {
        let tol = ToleranceSet::default();
        let a0 = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.2), c(0.3, -0.2), c(-0.5, 0.0)]);
        let r = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p = PerturbativeProblem::single(a0, perturbation_from_rhs(&r), &tol).unwrap();
        let sol = solve_first_order(&p, &tol).unwrap();
        assert!(!sol.consistent);
        assert!(sol.restrictions[0].description.contains("non-diagonality"));
    }

    #[test]
    fn rejects_non_hermitian_base() {
        let tol = ToleranceSet::default();
        let a0 = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        assert!(matches!(
            PerturbativeProblem::single(a0.clone(), a0, &tol),
            Err(Error::NotHermitian { .. })
        ));
    }
}
