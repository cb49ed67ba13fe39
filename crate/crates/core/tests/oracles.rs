mod common;

use common::{compatible_pair, grid_oracle, GridVerdict};
use num_complex::Complex64;
use qhmetric::compat::{
    shared_metric_feasibility, survey_pair, CompatibilityProblem, FeasibilityStatus,
    SurveyKind,
};
use qhmetric::linalg::{commutator, ComplexMatrix, ToleranceSet};
use qhmetric::perturb::{pack_hermitian, solve_first_order, PerturbativeProblem};
use qhmetric::random::{random_hermitian, random_nondegenerate_hermitian, stream_rng};

fn status(a: &ComplexMatrix, b: &ComplexMatrix) -> FeasibilityStatus {
    let p = CompatibilityProblem::new(vec![a.clone(), b.clone()], ToleranceSet::default()).unwrap();
    shared_metric_feasibility(&p).unwrap().status
}

#[test]
fn two_by_two_status_matches_grid_search() {
    let tol = ToleranceSet::default();
    let mut checked = 0;
    for trial in 0..100u64 {
        let (a, b) = if trial % 2 == 0 {
            survey_pair(2, 21, trial, SurveyKind::Independent, &tol).unwrap()
        } else {
            let pair = compatible_pair(2, 21, trial);
            (pair.a, pair.b)
        };
        let grid = grid_oracle(&a, &b, 400);
        match status(&a, &b) {
            FeasibilityStatus::Feasible => {
                assert_eq!(grid.verdict, GridVerdict::PossiblyFeasible, "trial {trial}: {grid:?}");
                checked += 1;
            }
            FeasibilityStatus::Infeasible => {
                assert_eq!(grid.verdict, GridVerdict::Infeasible, "trial {trial}: {grid:?}");
                checked += 1;
            }
            FeasibilityStatus::Marginal => {}
        }
    }
    assert!(checked >= 90, "{checked}");
}

#[test]
fn three_by_three_independent_pairs_are_grid_infeasible() {
    let tol = ToleranceSet::default();
    for trial in 0..5u64 {
        let (a, b) = survey_pair(3, 5, trial, SurveyKind::Independent, &tol).unwrap();
        assert_eq!(status(&a, &b), FeasibilityStatus::Infeasible);
        assert_eq!(grid_oracle(&a, &b, 60).verdict, GridVerdict::Infeasible);
    }
}

#[test]
fn first_order_round_trip_recovers_f_modulo_kernel() {
    let tol = ToleranceSet::default();
    for n in 2..=5 {
        for seed in 0..5u64 {
            let mut rng = stream_rng(100 + seed, n as u64);
            let a0 = random_nondegenerate_hermitian(n, &mut rng);
            let b0 = random_nondegenerate_hermitian(n, &mut rng);
            let f_star = random_hermitian(n, &mut rng);
            let half = Complex64::new(0.5, 0.0);
            let a1 = commutator(&a0, &f_star) * half;
            let b1 = commutator(&b0, &f_star) * half;
            let p = PerturbativeProblem::pair(a0, a1, b0, b1, &tol).unwrap();
            let sol = solve_first_order(&p, &tol).unwrap();
            assert!(sol.residual <= 1e-10, "n={n}: {}", sol.residual);
            let mut diff = pack_hermitian(&(&sol.f - &f_star));
            for k in &sol.kernel_basis {
                diff -= k * k.dot(&diff);
            }
            assert!(diff.norm() <= 1e-9 * f_star.norm(), "n={n}: {}", diff.norm());
        }
    }
}
