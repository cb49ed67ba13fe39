use num_complex::Complex64;
use serde::Serialize;

use super::symbolic::{self, Poly};
use super::{build_basis, check_epsilon, InteriorProjector, QDeformedModel};
use crate::error::{Error, Result};
use crate::linalg::{identity, loglog_slope, ComplexMatrix, ToleranceSet, I};

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn slope(epsilons: &[f64], norms: &[f64]) -> Option<f64> {
    loglog_slope(
        epsilons
            .iter()
            .zip(norms)
            .filter(|(e, n)| **e != 0.0 && **n > 0.0)
            .map(|(&e, &n)| (e.abs(), n)),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct QCommutatorReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub buffer: usize,
    pub interior_size: usize,
    /// `‖P(ââ† − qâ†â − 1)P‖` at `epsilon`.
    pub norm: f64,
    /// Same residual without projection; dominated by the truncation edge.
    pub edge_norm: f64,
    pub epsilons: Vec<f64>,
    pub norms: Vec<f64>,
    pub exponent: Option<f64>,
    pub verdict: String,
}

fn q_residual(a: &ComplexMatrix, adag: &ComplexMatrix, epsilon: f64) -> ComplexMatrix {
    let n = a.nrows();
    let ahat = a + adag * a * a * re(0.25 * epsilon);
    let ahat_dag = ahat.adjoint();
    &ahat * &ahat_dag - &ahat_dag * &ahat * re(1.0 + epsilon) - identity(n)
}

/// Residual of `[â, â†]_q = 1` for `â = a + ¼εa†a²`, `q = 1 + ε`, with its
/// scaling over `ε, ε/2, ε/4`.
pub fn qcommutator_check(n: usize, epsilon: f64, proj: &InteriorProjector) -> Result<QCommutatorReport> {
    check_epsilon(epsilon)?;
    let basis = build_basis(n)?;
    let epsilons = vec![epsilon, epsilon / 2.0, epsilon / 4.0];
    let residuals: Vec<ComplexMatrix> = epsilons
        .iter()
        .map(|&e| q_residual(&basis.a, &basis.adag, e))
        .collect();
    let norms: Vec<f64> = residuals.iter().map(|r| proj.norm(r)).collect();
    let exponent = slope(&epsilons, &norms);
    let verdict = match exponent {
        None => "no deformation".to_string(),
        Some(e) if e >= 1.8 => "q-commutator holds to first order".to_string(),
        Some(_) => "q-commutator fails at first order".to_string(),
    };
    Ok(QCommutatorReport {
        n,
        epsilon,
        buffer: proj.buffer,
        interior_size: proj.size,
        norm: norms[0],
        edge_norm: residuals[0].norm(),
        epsilons,
        norms,
        exponent,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct XMetricReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub buffer: usize,
    pub interior_size: usize,
    /// `‖P(Θ₀X_q − X_q†Θ₀)P‖` at `epsilon`.
    pub norm: f64,
    pub epsilons: Vec<f64>,
    pub norms: Vec<f64>,
    pub exponent: Option<f64>,
    /// `holds` for exponent near 2, `fails` near 1.
    pub numeric_verdict: Option<String>,
    pub symbolic_verdict: String,
    /// Normal form of `[f, x] + X₁ − X₁†`.
    pub symbolic_condition: String,
    pub verdicts_agree: Option<bool>,
    pub verdict: String,
}

fn x_defect(m: &QDeformedModel) -> ComplexMatrix {
    &m.theta0 * &m.xq - m.xq.adjoint() * &m.theta0
}

/// How far `Θ₀` is from making `X_q` quasi-Hermitian, checked numerically and
/// against the exact normal-ordered first-order condition.
pub fn x_metric_residual(
    model: &QDeformedModel,
    proj: &InteriorProjector,
    tol: &ToleranceSet,
) -> Result<XMetricReport> {
    let eps = model.epsilon;
    let epsilons = vec![eps, eps / 2.0, eps / 4.0];
    let mut norms = vec![proj.norm(&x_defect(model))];
    for &e in &epsilons[1..] {
        norms.push(proj.norm(&x_defect(&model.rebuilt(e, tol)?)));
    }
    let exponent = slope(&epsilons, &norms);
    let numeric_verdict = exponent.map(|e| if e >= 1.5 { "holds" } else { "fails" }.to_string());
    let condition = symbolic::x_condition();
    let symbolic_verdict = if condition.is_zero() { "holds" } else { "fails" }.to_string();
    let verdicts_agree = numeric_verdict.as_ref().map(|v| *v == symbolic_verdict);
    let verdict = match verdicts_agree {
        Some(true) => format!("first-order X condition {symbolic_verdict}; numeric and symbolic agree"),
        Some(false) => format!("numeric and symbolic verdicts disagree (symbolic: {symbolic_verdict})"),
        None => format!("no deformation; symbolic condition {symbolic_verdict}"),
    };
    Ok(XMetricReport {
        n: model.n(),
        epsilon: eps,
        buffer: proj.buffer,
        interior_size: proj.size,
        norm: norms[0],
        epsilons,
        norms,
        exponent,
        numeric_verdict,
        symbolic_verdict,
        symbolic_condition: condition.to_string(),
        verdicts_agree,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HermitizationReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub buffer: usize,
    pub interior_size: usize,
    /// `‖PΔP‖` with `Δ = 𝔥₀ − 𝔥₀†`, `𝔥₀ = Ω₀H_qΩ₀⁻¹`.
    pub norm: f64,
    pub norm_over_epsilon: f64,
    pub epsilons: Vec<f64>,
    pub scaled_norms: Vec<f64>,
    pub exponent: Option<f64>,
    /// Relative change of `‖PΔP‖/ε` between `ε` and `ε/2`.
    pub halving_change: Option<f64>,
    /// `10⁻² ‖PH₁P‖/8`.
    pub threshold: f64,
    pub nonzero: bool,
    /// Relative interior gap between `Δ/ε` at the smallest ε and the normal
    /// form of `(H₁ − H₁†)/8 + 2[g, H₀]`.
    pub first_order_gap: Option<f64>,
    pub verdict: String,
}

fn hermitization_delta(m: &QDeformedModel, tol: &ToleranceSet) -> Result<ComplexMatrix> {
    let sv = crate::linalg::svd(&m.omega0).singular_values;
    let (smin, smax) = (sv.min(), sv.max());
    if smin <= tol.tol_resid * smax {
        return Err(Error::SingularOmega { sigma_min: smin });
    }
    let inv = m
        .omega0
        .clone()
        .try_inverse()
        .ok_or(Error::SingularOmega { sigma_min: smin })?;
    let h = &m.omega0 * &m.hq * inv;
    Ok(&h - h.adjoint())
}

/// Tests whether `Ω₀ = 1 + εg` maps `H_q` to a Hermitian operator.
pub fn hermitization_defect(
    model: &QDeformedModel,
    proj: &InteriorProjector,
    tol: &ToleranceSet,
) -> Result<HermitizationReport> {
    let eps = model.epsilon;
    let threshold = 1e-2 * proj.norm(&model.h1) / 8.0;
    let base = HermitizationReport {
        n: model.n(),
        epsilon: eps,
        buffer: proj.buffer,
        interior_size: proj.size,
        norm: 0.0,
        norm_over_epsilon: 0.0,
        epsilons: vec![eps],
        scaled_norms: vec![0.0],
        exponent: None,
        halving_change: None,
        threshold,
        nonzero: false,
        first_order_gap: None,
        verdict: "no deformation".into(),
    };
    if eps == 0.0 {
        hermitization_delta(model, tol)?;
        return Ok(base);
    }

    let epsilons = vec![eps, eps / 10.0, eps / 100.0];
    let mut deltas = vec![hermitization_delta(model, tol)?];
    for &e in &epsilons[1..] {
        deltas.push(hermitization_delta(&model.rebuilt(e, tol)?, tol)?);
    }
    let norms: Vec<f64> = deltas.iter().map(|d| proj.norm(d)).collect();
    let scaled_norms: Vec<f64> = norms.iter().zip(&epsilons).map(|(n, e)| n / e.abs()).collect();
    let half = proj.norm(&hermitization_delta(&model.rebuilt(eps / 2.0, tol)?, tol)?) / (eps / 2.0).abs();
    let halving_change = Some((half - scaled_norms[0]).abs() / scaled_norms[0].max(f64::MIN_POSITIVE));

    let oracle = symbolic::hermitization_first_order().to_matrix(&model.basis);
    let limit = deltas[2].map(|z| z / epsilons[2]);
    let first_order_gap = Some(proj.norm(&(limit - &oracle)) / proj.norm(&oracle).max(f64::MIN_POSITIVE));

    let nonzero = scaled_norms[0] > threshold;
    let verdict = if nonzero {
        "Omega0 does not Hermitize H_q: defect is first order".to_string()
    } else {
        "defect below first-order threshold".to_string()
    };
    Ok(HermitizationReport {
        norm: norms[0],
        norm_over_epsilon: scaled_norms[0],
        exponent: slope(&epsilons, &norms),
        epsilons,
        scaled_norms,
        halving_change,
        nonzero,
        first_order_gap,
        verdict,
        ..base
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct A24Report {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub buffer: usize,
    pub interior_size: usize,
    /// `‖P[(X_q† − X_q) − displayed]P‖`.
    pub norm: f64,
    /// `‖P(ε/8)(−2ix²)P‖`.
    pub missing_term_norm: f64,
    /// `‖P[difference − (ε/8)(−2ix²)]P‖ / ‖P(ε/8)(−2ix²)P‖`.
    pub relative_gap: Option<f64>,
    /// Normal form of `8(X₁† − X₁) − displayed/(ε/8)`.
    pub leading_missing_term: String,
    pub verdict: String,
}

fn displayed(m: &QDeformedModel) -> ComplexMatrix {
    let (x, p) = (&m.basis.x, &m.basis.p);
    let xx = x * x;
    let pp = p * p;
    (x * &pp * re(2.0) - &xx * p * I - &pp * p * (I * 2.0) - &pp * x * re(2.0) - p * &xx * I)
        * re(m.epsilon / 8.0)
}

/// Compares `X_q† − X_q` with its displayed closed form.
pub fn a24_crosscheck(model: &QDeformedModel, proj: &InteriorProjector) -> A24Report {
    let direct = model.xq.adjoint() - &model.xq;
    let diff = direct - displayed(model);
    let x = &model.basis.x;
    let missing = x * x * Complex64::new(0.0, -2.0 * model.epsilon / 8.0);
    let missing_term_norm = proj.norm(&missing);
    let relative_gap =
        (missing_term_norm > 0.0).then(|| proj.norm(&(&diff - &missing)) / missing_term_norm);

    let x1 = symbolic::x1();
    let symbolic_gap: Poly =
        &(&x1.adjoint() - &x1).scale(re(8.0)) - &symbolic::displayed_xq_defect();
    let leading_missing_term = if symbolic_gap.is_zero() {
        "none".to_string()
    } else {
        format!("(epsilon/8)({symbolic_gap})")
    };
    let verdict = if symbolic_gap.is_zero() {
        "displayed adjoint matches".to_string()
    } else {
        format!("displayed adjoint omits {leading_missing_term}")
    };
    A24Report {
        n: model.n(),
        epsilon: model.epsilon,
        buffer: proj.buffer,
        interior_size: proj.size,
        norm: proj.norm(&diff),
        missing_term_norm,
        relative_gap,
        leading_missing_term,
        verdict,
    }
}
