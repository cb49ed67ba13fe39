use rayon::prelude::*;
use serde::Serialize;

use super::{make_compatible_pair, shared_metric_feasibility, CompatibilityProblem, FeasibilityStatus};
use crate::error::Result;
use crate::linalg::{ComplexMatrix, ToleranceSet};
use crate::random::{random_nondegenerate_hermitian, real_spectrum_matrix, stream_rng, well_conditioned};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SurveyKind {
    /// Each observable is `S diag(d) S⁻¹` with its own `S`.
    Independent,
    /// Pairs from `make_compatible_pair` with a random Dyson map.
    Compatible,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurveyConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub kind: SurveyKind,
    pub tol: ToleranceSet,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub status: Option<FeasibilityStatus>,
    pub nullspace_dim: Option<usize>,
    pub best_min_component: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurveyReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub kind: SurveyKind,
    pub feasible: usize,
    pub infeasible: usize,
    pub marginal: usize,
    pub failed: usize,
    pub feasible_fraction: f64,
    pub records: Vec<TrialRecord>,
}

/// The pair examined in trial `index`; depends only on `(seed, index)`.
pub fn survey_pair(
    n: usize,
    seed: u64,
    index: u64,
    kind: SurveyKind,
    tol: &ToleranceSet,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let mut rng = stream_rng(seed, index);
    match kind {
        SurveyKind::Independent => {
            let a = real_spectrum_matrix(n, &mut rng);
            let b = real_spectrum_matrix(n, &mut rng);
            Ok((a, b))
        }
        SurveyKind::Compatible => {
            let h_a = random_nondegenerate_hermitian(n, &mut rng);
            let h_b = random_nondegenerate_hermitian(n, &mut rng);
            let omega = well_conditioned(n, &mut rng);
            let pair = make_compatible_pair(&h_a, &h_b, &omega, tol)?;
            Ok((pair.a, pair.b))
        }
    }
}

fn run_trial(cfg: &SurveyConfig, trial: usize) -> TrialRecord {
    let outcome = survey_pair(cfg.n, cfg.seed, trial as u64, cfg.kind, &cfg.tol)
        .and_then(|(a, b)| CompatibilityProblem::new(vec![a, b], cfg.tol))
        .and_then(|p| shared_metric_feasibility(&p));
    match outcome {
        Ok(rep) => TrialRecord {
            trial,
            status: Some(rep.status),
            nullspace_dim: Some(rep.nullspace_dim),
            best_min_component: Some(rep.best_min_component),
            error: None,
        },
        Err(e) => TrialRecord {
            trial,
            status: None,
            nullspace_dim: None,
            best_min_component: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs shared-metric feasibility on `trials` seeded random pairs.
///
/// Trials run in parallel; each owns the random stream `(seed, trial)`, so
/// the report does not depend on thread count or scheduling.
pub fn random_survey(cfg: &SurveyConfig) -> SurveyReport {
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect();
    let count = |s: FeasibilityStatus| records.iter().filter(|r| r.status == Some(s)).count();
    let feasible = count(FeasibilityStatus::Feasible);
    let infeasible = count(FeasibilityStatus::Infeasible);
    let marginal = count(FeasibilityStatus::Marginal);
    let failed = records.iter().filter(|r| r.status.is_none()).count();
    SurveyReport {
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        kind: cfg.kind,
        feasible,
        infeasible,
        marginal,
        failed,
        feasible_fraction: if cfg.trials == 0 {
            0.0
        } else {
            feasible as f64 / cfg.trials as f64
        },
        records,
    }
}
