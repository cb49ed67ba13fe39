//! Existence and ambiguity of one metric shared by several non-Hermitian
//! observables.
//!
//! Every metric that makes `Λ₀` self-adjoint is some `Θ(κ)` from its
//! biorthogonal family. Asking that the same `Θ(κ)` also satisfy
//! `Θ Λ_j = Λ_j† Θ` for `j ≥ 1` is linear in κ, so the shared metrics form
//! the positive part of a nullspace.

mod positivity;
mod survey;

pub use positivity::{maximize_min_component, PositivityOptions, PositivityResult, SearchMethod};
pub use survey::{random_survey, survey_pair, SurveyConfig, SurveyKind, SurveyReport, TrialRecord};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::json::{serde_matrix, serde_matrix_opt, Exact};
use crate::linalg::{
    ensure_hermitian, ensure_same_dim, hermitian_eigen, least_squares_with_nullspace,
    least_squares_with_reference,
    smallest_singular_value, validate_square, ComplexMatrix, RealMatrix, RealVector, ToleranceSet,
};
use crate::spectral::{
    biorthogonalize, metric_from_kappa, metric_matrix, require_real_nondegenerate,
    BiorthogonalSystem, MetricCandidate,
};

/// Packs an anti-Hermitian matrix into `n²` reals: for each row `i`, the
/// diagonal `Im M_ii` followed by `Re M_ij, Im M_ij` for `j > i`.
pub fn pack_antihermitian(m: &ComplexMatrix) -> RealVector {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m[(i, i)].im);
        for j in (i + 1)..n {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    RealVector::from_vec(out)
}

/// Inverse of [`pack_antihermitian`].
pub fn unpack_antihermitian(v: &RealVector, n: usize) -> Result<ComplexMatrix> {
    if v.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: format!("{} packed entries", n * n),
            found: format!("{}", v.len()),
        });
    }
    let mut m = ComplexMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = Complex64::new(0.0, v[k]);
        k += 1;
        for j in (i + 1)..n {
            let z = Complex64::new(v[k], v[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = -z.conj();
            k += 2;
        }
    }
    Ok(m)
}

/// Real `n² × n` matrix whose column `k` is the packed mismatch
/// `G_k B − B† G_k` with `G_k = |k⟩⟩⟨⟨k|`, so that the product with κ is the
/// packed `Θ(κ)B − B†Θ(κ)`.
pub fn kappa_constraint_matrix(sys: &BiorthogonalSystem, b: &ComplexMatrix) -> Result<RealMatrix> {
    let n = sys.n;
    ensure_same_dim(n, b)?;
    let b_adj = b.adjoint();
    let columns: Vec<RealVector> = (0..n)
        .map(|k| {
            let g = sys.generator(k);
            pack_antihermitian(&(&g * b - &b_adj * &g))
        })
        .collect();
    Ok(RealMatrix::from_columns(&columns))
}

/// Observables `Λ₀, …, Λ_jmax` that are to share a metric.
#[derive(Debug, Clone)]
pub struct CompatibilityProblem {
    pub observables: Vec<ComplexMatrix>,
    pub tol: ToleranceSet,
    pub search: PositivityOptions,
}

impl CompatibilityProblem {
    pub fn new(observables: Vec<ComplexMatrix>, tol: ToleranceSet) -> Result<Self> {
        tol.validate()?;
        if observables.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least two observables, got {}",
                observables.len()
            )));
        }
        let n = validate_square(&observables[0])?;
        for obs in &observables {
            ensure_same_dim(n, obs)?;
            require_real_nondegenerate(obs, &tol)?;
        }
        Ok(Self {
            observables,
            tol,
            search: PositivityOptions::default(),
        })
    }

    pub fn with_search(mut self, search: PositivityOptions) -> Self {
        self.search = search;
        self
    }

    pub fn dim(&self) -> usize {
        self.observables[0].nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    Marginal,
}

/// Verdict on a shared metric with constraint bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub status: FeasibilityStatus,
    /// Dimension of the κ-solution space before positivity.
    pub nullspace_dim: usize,
    pub best_min_component: f64,
    #[serde(skip)]
    pub witness: Option<MetricCandidate>,
    /// Best κ on the trace-normalised slice, when one exists.
    pub kappa: Option<Vec<Exact>>,
    pub constraint_rows: usize,
    pub constraint_rank: usize,
    pub unknowns: usize,
    pub search_method: SearchMethod,
    pub counting_note: String,
    #[serde(skip)]
    pub restart_values: Vec<f64>,
}

/// JSON face of a [`FeasibilityReport`].
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityJson {
    pub status: FeasibilityStatus,
    pub nullspace_dim: usize,
    pub best_min_component: f64,
    #[serde(skip_serializing_if = "Option::is_none", with = "serde_matrix_opt")]
    pub witness: Option<ComplexMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<Exact>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    pub residuals: Vec<(usize, f64)>,
    pub constraint_rows: usize,
    pub constraint_rank: usize,
    pub unknowns: usize,
    pub search_method: SearchMethod,
    pub counting_note: String,
}

impl FeasibilityReport {
    pub fn to_json(&self) -> FeasibilityJson {
        FeasibilityJson {
            status: self.status,
            nullspace_dim: self.nullspace_dim,
            best_min_component: self.best_min_component,
            witness: self.witness.as_ref().map(|w| w.theta.clone()),
            kappa: self.kappa.clone(),
            lambda_min: self.witness.as_ref().map(|w| w.lambda_min),
            residuals: self
                .witness
                .as_ref()
                .map(|w| w.quasi_residuals.clone())
                .unwrap_or_default(),
            constraint_rows: self.constraint_rows,
            constraint_rank: self.constraint_rank,
            unknowns: self.unknowns,
            search_method: self.search_method,
            counting_note: self.counting_note.clone(),
        }
    }
}

/// Stacks the per-observable κ constraints, each block scaled by
/// `1/‖Λ_j‖_F`.
pub fn stacked_constraints(sys: &BiorthogonalSystem, others: &[ComplexMatrix]) -> Result<RealMatrix> {
    let n = sys.n;
    let mut stacked = RealMatrix::zeros(others.len() * n * n, n);
    for (j, obs) in others.iter().enumerate() {
        let scale = obs.norm();
        let mut block = kappa_constraint_matrix(sys, obs)?;
        if scale > 0.0 {
            block.unscale_mut(scale);
        }
        stacked.view_mut((j * n * n, 0), (n * n, n)).copy_from(&block);
    }
    Ok(stacked)
}

/// Decides whether the observables admit a common positive-definite metric.
///
/// The κ family of `Λ₀` is intersected with the constraints of the remaining
/// observables; the positive part of the resulting nullspace is probed by
/// maximising `min κ_n` over the slice `Σκ_n = n`. A candidate is promoted to
/// `Feasible` only after its metric re-verifies against every observable.
pub fn shared_metric_feasibility(p: &CompatibilityProblem) -> Result<FeasibilityReport> {
    let tol = &p.tol;
    let n = p.dim();
    let sys = biorthogonalize(&p.observables[0], tol)?;
    let others = &p.observables[1..];
    let stacked = stacked_constraints(&sys, others)?;
    // Columns are at most ~‖G_k‖ per block; a commuting pair yields pure
    // round-off, which must not count towards the rank.
    let reference = (0..n)
        .map(|k| sys.generator(k).norm())
        .fold(0.0, f64::max)
        * (others.len() as f64).sqrt();
    let solved = least_squares_with_reference(
        &stacked,
        &RealVector::zeros(stacked.nrows()),
        tol.tol_resid,
        reference,
    )?;
    let nullspace_dim = solved.nullspace_dim();
    let search = maximize_min_component(&solved.nullspace_basis, &p.search);
    let best = search.best_min_component;

    let mut status = if best > tol.tol_pos {
        FeasibilityStatus::Feasible
    } else if best <= 0.0 {
        FeasibilityStatus::Infeasible
    } else {
        FeasibilityStatus::Marginal
    };

    let mut witness = None;
    if status == FeasibilityStatus::Feasible {
        let kappa = search.kappa.as_ref().expect("feasible search has a maximiser");
        let candidate = metric_from_kappa(&sys, kappa, tol)?.with_residuals(&p.observables)?;
        if candidate.is_certified(tol) {
            witness = Some(candidate);
        } else {
            status = FeasibilityStatus::Marginal;
        }
    }

    let counting = counting_report(n.max(2), others.len().max(1))?;
    let counting_note = format!(
        "{}; kept {} real rows ({} per extra observable), numerical rank {} of {} unknowns",
        counting.note,
        stacked.nrows(),
        n * n,
        solved.rank,
        n
    );

    Ok(FeasibilityReport {
        status,
        nullspace_dim,
        best_min_component: best,
        witness,
        kappa: search
            .kappa
            .map(|k| k.into_iter().map(Exact).collect()),
        constraint_rows: stacked.nrows(),
        constraint_rank: solved.rank,
        unknowns: n,
        search_method: search.method,
        counting_note,
        restart_values: search.restart_values,
    })
}

/// Outcome of the unitary-diagonalisation route at a given `α`.
#[derive(Debug, Clone, Serialize)]
pub struct RouteCrosscheck {
    /// B-family coordinates read from the diagonal conditions.
    pub beta: Vec<f64>,
    /// Frobenius norm of the strict upper triangle of `U Θ_B(β) U†`,
    /// relative to `‖Θ_A(α)‖_F`.
    pub offdiag_residual: f64,
    pub beta_positive: bool,
    /// Eigenvalues `θ_n` of `Θ_A(α)`, ascending.
    pub theta_eigenvalues: Vec<f64>,
}

/// Diagonalises `Θ_A(α)` by a unitary `U`, solves the `n` diagonal conditions
/// `θ_n = [U Θ_B(β) U†]_nn` for β and returns what is left off the diagonal.
pub fn paper_route_crosscheck(
    sys_a: &BiorthogonalSystem,
    b: &ComplexMatrix,
    alpha: &[f64],
    tol: &ToleranceSet,
) -> Result<RouteCrosscheck> {
    let n = sys_a.n;
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("alpha of length {n}"),
            found: format!("length {}", alpha.len()),
        });
    }
    if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidArgument("alpha must be strictly positive".into()));
    }
    let theta_a = metric_matrix(sys_a, alpha);
    let eig = hermitian_eigen(&theta_a, tol)?;
    // U = V†, so that U Θ_A U† = diag(θ).
    let u = eig.vectors.adjoint();
    let sys_b = biorthogonalize(b, tol)?;

    let diag = RealMatrix::from_fn(n, n, |row, k| {
        let proj = (u.row(row) * sys_b.left(k))[(0, 0)];
        proj.norm_sqr()
    });
    let theta = RealVector::from_vec(eig.eigenvalues.clone());
    let solved = least_squares_with_nullspace(&diag, &theta, tol.tol_resid)?;
    if solved.rank < n {
        return Err(Error::SingularDiagonalSystem {
            rank: solved.rank,
            n,
        });
    }
    let beta: Vec<f64> = solved.solution.iter().copied().collect();
    let rotated = &u * metric_matrix(&sys_b, &beta) * u.adjoint();
    let mut upper = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            upper += rotated[(i, j)].norm_sqr();
        }
    }
    let scale = theta_a.norm().max(f64::MIN_POSITIVE);
    Ok(RouteCrosscheck {
        beta_positive: beta.iter().all(|&b| b > 0.0),
        beta,
        offdiag_residual: upper.sqrt() / scale,
        theta_eigenvalues: eig.eigenvalues,
    })
}

/// A pair that is quasi-Hermitian with respect to a known metric.
#[derive(Debug, Clone, Serialize)]
pub struct CompatiblePair {
    #[serde(with = "serde_matrix")]
    pub a: ComplexMatrix,
    #[serde(with = "serde_matrix")]
    pub b: ComplexMatrix,
    #[serde(with = "serde_matrix")]
    pub theta: ComplexMatrix,
}

/// `A = Ω⁻¹ h_A Ω`, `B = Ω⁻¹ h_B Ω`; both are self-adjoint under `Θ = Ω†Ω`.
pub fn make_compatible_pair(
    h_a: &ComplexMatrix,
    h_b: &ComplexMatrix,
    omega: &ComplexMatrix,
    tol: &ToleranceSet,
) -> Result<CompatiblePair> {
    let n = validate_square(omega)?;
    ensure_same_dim(n, h_a)?;
    ensure_same_dim(n, h_b)?;
    ensure_hermitian(h_a, tol)?;
    ensure_hermitian(h_b, tol)?;
    let sigma_min = smallest_singular_value(omega);
    if sigma_min <= tol.tol_pos {
        return Err(Error::SingularOmega { sigma_min });
    }
    let inv = omega
        .clone()
        .try_inverse()
        .ok_or(Error::SingularOmega { sigma_min })?;
    let theta = omega.adjoint() * omega;
    Ok(CompatiblePair {
        a: &inv * h_a * omega,
        b: &inv * h_b * omega,
        theta: (&theta + theta.adjoint()).scale(0.5),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingVerdict {
    /// Constraints do not outnumber unknowns.
    MarginalSolvable,
    GenericallyInfeasible,
}

/// Naive equation count for the off-diagonal conditions.
#[derive(Debug, Clone, Serialize)]
pub struct CountingReport {
    pub n: usize,
    pub j_extra: usize,
    pub unknowns: usize,
    pub nominal_constraints: usize,
    pub verdict: CountingVerdict,
    pub note: String,
}

/// Counts `j_extra · n(n−1)` real off-diagonal constraints against the `n`
/// unknown κ coordinates.
pub fn counting_report(n: usize, j_extra: usize) -> Result<CountingReport> {
    if n < 2 || j_extra < 1 {
        return Err(Error::InvalidArgument(format!(
            "counting needs n >= 2 and j_extra >= 1 (got n = {n}, j_extra = {j_extra})"
        )));
    }
    let nominal = j_extra * n * (n - 1);
    let verdict = if nominal <= n {
        CountingVerdict::MarginalSolvable
    } else {
        CountingVerdict::GenericallyInfeasible
    };
    let label = match verdict {
        CountingVerdict::MarginalSolvable => "marginal/solvable",
        CountingVerdict::GenericallyInfeasible => "generically infeasible",
    };
    Ok(CountingReport {
        n,
        j_extra,
        unknowns: n,
        nominal_constraints: nominal,
        verdict,
        note: format!("counting: {nominal} real constraints vs {n} unknowns, {label}"),
    })
}
