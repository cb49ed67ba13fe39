//! Agreement between the first-order metric and the full shared-metric solver
//! as `ε → 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{solve_first_order, PerturbativeProblem, PerturbativeSolution, PerturbedObservable};
use crate::compat::{shared_metric_feasibility, CompatibilityProblem, FeasibilityStatus};
use crate::error::{Error, Result};
use crate::linalg::{commutator, hermitian_eigen, identity, loglog_slope, ComplexMatrix, ComplexVector, ToleranceSet};
use crate::random::{complex_gaussian, random_nondegenerate_hermitian, stream_rng};

#[derive(Debug, Clone, Serialize)]
pub struct ScalingPoint {
    pub epsilon: f64,
    pub status: FeasibilityStatus,
    /// `‖Θ(ε) − (I + εF)‖_F` with `Θ(ε)` scaled to unit trace-average.
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub first_order: PerturbativeSolution,
    pub points: Vec<ScalingPoint>,
    /// Log-log slope of deviation against ε.
    pub exponent: Option<f64>,
}

pub fn perturbative_vs_full_check(
    p: &PerturbativeProblem,
    epsilons: &[f64],
    tol: &ToleranceSet,
) -> Result<ScalingReport> {
    let n = p.dim();
    let first_order = solve_first_order(p, tol)?;
    let f = &first_order.f;
    let f_tl = f - identity(n) * (f.trace() / n as f64);

    let points = epsilons
        .par_iter()
        .map(|&eps| {
            let problem = CompatibilityProblem::new(p.at(eps), *tol)?;
            let report = shared_metric_feasibility(&problem)?;
            let deviation = report.witness.as_ref().map(|w| {
                let theta = &w.theta * Complex64::new(n as f64 / w.theta.trace().re, 0.0);
                let predicted = identity(n) + &f_tl * Complex64::new(eps, 0.0);
                (theta - predicted).norm()
            });
            Ok(ScalingPoint {
                epsilon: eps,
                status: report.status,
                deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let exponent = loglog_slope(
        points
            .iter()
            .filter_map(|pt| pt.deviation.filter(|&d| d > 0.0).map(|d| (pt.epsilon.abs(), d))),
    );
    Ok(ScalingReport {
        first_order,
        points,
        exponent,
    })
}

/// Two observables `A(ε) = Ω⁻¹ h_A Ω`, `B(ε) = Ω⁻¹ h_B Ω` with
/// `Ω = I + εG`, `G = u v†` nilpotent.
///
/// `h_A`, `h_B` are chosen with `v† h u = 0`, so `G h G = 0` and both curves
/// are exactly linear in ε. The shared metric is `Ω†Ω = I + ε(G + G†) + ε²G†G`.
#[derive(Debug, Clone)]
pub struct LinearFamily {
    pub problem: PerturbativeProblem,
    pub generator: ComplexMatrix,
}

impl LinearFamily {
    pub fn exact_metric(&self, epsilon: f64) -> ComplexMatrix {
        let n = self.generator.nrows();
        let omega = identity(n) + &self.generator * Complex64::new(epsilon, 0.0);
        omega.adjoint() * omega
    }

    /// `G + G†`.
    pub fn first_order_metric(&self) -> ComplexMatrix {
        &self.generator + self.generator.adjoint()
    }
}

pub fn compatible_linear_family(n: usize, seed: u64, tol: &ToleranceSet) -> Result<LinearFamily> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { n, min: 3 });
    }
    let mut rng = stream_rng(seed, 0);
    let u = unit(ComplexVector::from_fn(n, |_, _| complex_gaussian(&mut rng)));
    let w = ComplexVector::from_fn(n, |_, _| complex_gaussian(&mut rng));
    let v = unit(&w - &u * u.dotc(&w));
    let g = &u * v.adjoint();

    let mut draw = || loop {
        let h = random_nondegenerate_hermitian(n, &mut rng);
        let c = v.dotc(&(&h * &u));
        let h = h - (&v * u.adjoint()) * c - (&u * v.adjoint()) * c.conj();
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = hermitian_eigen(&h, tol).expect("Hermitian by construction");
        let spread = eig.eigenvalues[n - 1] - eig.eigenvalues[0];
        if eig.eigenvalues.windows(2).all(|p| p[1] - p[0] > 0.05 * spread) {
            return h;
        }
    };
    let ha = draw();
    let hb = draw();
    let observables = [ha, hb]
        .into_iter()
        .map(|h| {
            let h1 = commutator(&h, &g);
            PerturbedObservable { h0: h, h1 }
        })
        .collect();
    Ok(LinearFamily {
        problem: PerturbativeProblem::new(observables, tol)?,
        generator: g,
    })
}

fn unit(v: ComplexVector) -> ComplexVector {
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_hermitian;

    #[test]
    fn family_is_exactly_linear() {
        let tol = ToleranceSet::default();
        let fam = compatible_linear_family(4, 3, &tol).unwrap();
        let eps = 0.05;
        let omega = identity(4) + &fam.generator * Complex64::new(eps, 0.0);
        let omega_inv = identity(4) - &fam.generator * Complex64::new(eps, 0.0);
        for (obs, at) in fam.problem.observables.iter().zip(fam.problem.at(eps)) {
            let exact = &omega_inv * &obs.h0 * &omega;
            assert!((exact - at).norm() < 1e-14);
        }
    }

    #[test]
    fn compatible_family_scales_quadratically() {
        let tol = ToleranceSet::default();
        let fam = compatible_linear_family(3, 1, &tol).unwrap();
        let report = perturbative_vs_full_check(&fam.problem, &[1e-2, 1e-3, 1e-4], &tol).unwrap();
        assert!(report.points.iter().all(|p| p.status == FeasibilityStatus::Feasible));
        let exponent = report.exponent.unwrap();
        assert!((exponent - 2.0).abs() <= 0.3, "{exponent}");
    }

    #[test]
    fn hermitian_perturbations_keep_identity() {
        let tol = ToleranceSet::default();
        let mut rng = stream_rng(5, 0);
        let p = PerturbativeProblem::pair(
            random_nondegenerate_hermitian(3, &mut rng),
            random_hermitian(3, &mut rng),
            random_nondegenerate_hermitian(3, &mut rng),
            random_hermitian(3, &mut rng),
            &tol,
        )
        .unwrap();
        let report = perturbative_vs_full_check(&p, &[1e-2, 1e-3], &tol).unwrap();
        assert_eq!(report.first_order.f.norm(), 0.0);
        for pt in &report.points {
            assert!(pt.deviation.unwrap() < 1e-12);
        }
    }

    #[test]
    fn too_small_family_is_rejected() {
        assert!(matches!(
            compatible_linear_family(2, 0, &ToleranceSet::default()),
            Err(Error::DimensionTooSmall { n: 2, min: 3 })
        ));
    }
}
