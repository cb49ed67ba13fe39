//! Closed-form analysis of the 2×2 two-observable first-order system.
//!
//! With `H₀ = [[a, c+id], [c−id, b]]` and `f = (x, z, y, p)` the rows of one
//! observable read
//!
//! ```text
//!   ( 0, 2d, 0, −2c) f = r₁      ( 0, −2d, 0, 2c) f = r₃
//!   (−d,  0, d, a−b) f = r₂      (−c, a−b, c,  0) f = r⁽¹⁾
//! ```
//!
//! The first rows of both observables fix `(z, p)`; the remaining four rows
//! then only see `y − x`.

use serde::Serialize;

use super::{rhs_hermitian, PerturbativeProblem};
use crate::error::{Error, Result};
use crate::linalg::{ensure_hermitian, ComplexMatrix, ToleranceSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl TwoLevelCoefficients {
    pub fn from_hermitian(h: &ComplexMatrix, tol: &ToleranceSet) -> Result<Self> {
        ensure_two(h)?;
        ensure_hermitian(h, tol)?;
        Ok(Self {
            a: h[(0, 0)].re,
            b: h[(1, 1)].re,
            c: h[(0, 1)].re,
            d: h[(0, 1)].im,
        })
    }
}

/// Packed right-hand side of one observable: `r₁ = R_s11`, `r₂ = R_s12`,
/// `r₃ = R_s22` and `r⁽¹⁾ = −R_a12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelRhs {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r_anti: f64,
}

impl TwoLevelRhs {
    pub fn from_rhs_matrix(r: &ComplexMatrix) -> Result<Self> {
        ensure_two(r)?;
        Ok(Self {
            r1: r[(0, 0)].re,
            r2: r[(0, 1)].re,
            r3: r[(1, 1)].re,
            r_anti: -r[(0, 1)].im,
        })
    }

    fn max_abs(&self) -> f64 {
        [self.r1, self.r2, self.r3, self.r_anti]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn ensure_two(m: &ComplexMatrix) -> Result<()> {
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// One of the four slope equations `coefficient · (y − x) = rhs_hat`.
#[derive(Debug, Clone, Serialize)]
pub struct RatioCheck {
    pub label: String,
    pub coefficient: f64,
    pub rhs_hat: f64,
    pub ratio: Option<f64>,
    pub slack: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoLevelReport {
    pub z: f64,
    pub p: f64,
    /// Common value of `y − x`, when any slope row has a nonzero coefficient.
    pub delta: Option<f64>,
    pub ratios: Vec<RatioCheck>,
    /// Relative sizes of `r₁ + r₃` and `s₁ + s₃`.
    pub nondiagonality_slack: [f64; 2],
    pub broken: Vec<String>,
    pub solvable: bool,
    pub elimination_order: [&'static str; 2],
}

/// Eliminates `(z, p)` and checks the four remaining slope equations for a
/// common `y − x`.
pub fn two_level_restrictions(
    ca: &TwoLevelCoefficients,
    cb: &TwoLevelCoefficients,
    r: &TwoLevelRhs,
    s: &TwoLevelRhs,
    tol: &ToleranceSet,
) -> Result<TwoLevelReport> {
    let coef_scale = [ca.c, ca.d, cb.c, cb.d]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if coef_scale == 0.0 {
        return Err(Error::InvalidArgument(
            "off-diagonal coefficients c, d of both observables vanish".into(),
        ));
    }
    let (z, p) = eliminate_zp(ca, cb, r.r1, s.r1, coef_scale, tol)?;

    let rows = [
        ("r2_hat/d", ca.d, r.r2 - (ca.a - ca.b) * p),
        ("r1_hat/c", ca.c, r.r_anti - (ca.a - ca.b) * z),
        ("s2_hat/d~", cb.d, s.r2 - (cb.a - cb.b) * p),
        ("s1_hat/c~", cb.c, s.r_anti - (cb.a - cb.b) * z),
    ];
    let rhs_scale = r.max_abs().max(s.max_abs()).max(f64::MIN_POSITIVE);
    let live = |coef: f64| coef.abs() > tol.tol_resid * coef_scale;
    let slacks_for = |delta: f64| -> Vec<f64> {
        rows.iter()
            .map(|&(_, coef, hat)| (hat - coef * delta).abs() / rhs_scale)
            .collect()
    };

    // Consensus: the candidate ratio that the most rows agree with.
    let candidates: Vec<f64> = rows
        .iter()
        .filter(|&&(_, coef, _)| live(coef))
        .map(|&(_, coef, hat)| hat / coef)
        .collect();
    let mut delta = None;
    let mut best_count = 0;
    for &cand in &candidates {
        let count = slacks_for(cand).iter().filter(|&&sl| sl <= tol.tol_resid).count();
        if count > best_count {
            best_count = count;
            delta = Some(cand);
        }
    }
    let no_consensus = candidates.len() > 1 && best_count == 1;
    let slacks = slacks_for(delta.unwrap_or(0.0));

    let ratios: Vec<RatioCheck> = rows
        .iter()
        .zip(&slacks)
        .map(|(&(label, coef, hat), &slack)| RatioCheck {
            label: label.to_string(),
            coefficient: coef,
            rhs_hat: hat,
            ratio: live(coef).then(|| hat / coef),
            slack,
            consistent: !no_consensus && slack <= tol.tol_resid,
        })
        .collect();

    let nondiagonality_slack = [(r.r1 + r.r3).abs() / rhs_scale, (s.r1 + s.r3).abs() / rhs_scale];
    let mut broken: Vec<String> = ratios
        .iter()
        .filter(|c| !c.consistent)
        .map(|c| c.label.clone())
        .collect();
    for (k, sl) in nondiagonality_slack.iter().enumerate() {
        if *sl > tol.tol_resid {
            broken.push(format!("non-diagonality r1 = -r3 (observable {k})"));
        }
    }
    let solvable = broken.is_empty();

    Ok(TwoLevelReport {
        z,
        p,
        delta,
        ratios,
        nondiagonality_slack,
        broken,
        solvable,
        elimination_order: ["z", "p"],
    })
}

/// Gaussian elimination on `2d z − 2c p = r₁`, `2d̃ z − 2c̃ p = s₁`, removing
/// `z` first with partial pivoting.
fn eliminate_zp(
    ca: &TwoLevelCoefficients,
    cb: &TwoLevelCoefficients,
    r1: f64,
    s1: f64,
    coef_scale: f64,
    tol: &ToleranceSet,
) -> Result<(f64, f64)> {
    let det = 4.0 * (ca.c * cb.d - ca.d * cb.c);
    if det.abs() <= tol.tol_resid * 4.0 * coef_scale * coef_scale {
        return Err(Error::DegenerateElimination { det });
    }
    let mut top = [2.0 * ca.d, -2.0 * ca.c, r1];
    let mut bottom = [2.0 * cb.d, -2.0 * cb.c, s1];
    if bottom[0].abs() > top[0].abs() {
        std::mem::swap(&mut top, &mut bottom);
    }
    let factor = bottom[0] / top[0];
    let p = (bottom[2] - factor * top[2]) / (bottom[1] - factor * top[1]);
    let z = (top[2] - top[1] * p) / top[0];
    Ok((z, p))
}

/// Runs [`two_level_restrictions`] on a 2×2 two-observable problem.
pub fn two_level_from_problem(p: &PerturbativeProblem, tol: &ToleranceSet) -> Result<TwoLevelReport> {
    if p.dim() != 2 || p.observables.len() != 2 {
        return Err(Error::InvalidArgument(
            "two-level analysis needs two 2x2 observables".into(),
        ));
    }
    let a = &p.observables[0];
    let b = &p.observables[1];
    two_level_restrictions(
        &TwoLevelCoefficients::from_hermitian(&a.h0, tol)?,
        &TwoLevelCoefficients::from_hermitian(&b.h0, tol)?,
        &TwoLevelRhs::from_rhs_matrix(&rhs_hermitian(&a.h1)?)?,
        &TwoLevelRhs::from_rhs_matrix(&rhs_hermitian(&b.h1)?)?,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator;
    use crate::perturb::{perturbation_from_rhs, solve_first_order};
    use num_complex::Complex64;

    fn herm(a: f64, b: f64, c: f64, d: f64) -> ComplexMatrix {
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(a, 0.0),
                Complex64::new(c, d),
                Complex64::new(c, -d),
                Complex64::new(b, 0.0),
            ],
        )
    }

    fn consistent_problem() -> (PerturbativeProblem, ComplexMatrix) {
        let tol = ToleranceSet::default();
        let a0 = herm(1.0, -0.5, 0.3, 0.7);
        let b0 = herm(0.2, 1.1, -0.9, 0.4);
        let f = herm(0.25, 1.5, -0.6, 0.35);
        let r = commutator(&a0, &f) * Complex64::new(0.0, -1.0);
        let s = commutator(&b0, &f) * Complex64::new(0.0, -1.0);
        let p = PerturbativeProblem::pair(a0, perturbation_from_rhs(&r), b0, perturbation_from_rhs(&s), &tol)
            .unwrap();
        (p, f)
    }

    #[test]
    fn consistent_data_recover_offdiagonal_and_shift() {
        let tol = ToleranceSet::default();
        let (p, f) = consistent_problem();
        let report = two_level_from_problem(&p, &tol).unwrap();
        assert!(report.solvable, "{:?}", report.broken);
        assert!((report.z - f[(0, 1)].re).abs() < 1e-12);
        assert!((report.p - f[(0, 1)].im).abs() < 1e-12);
        let delta = report.delta.unwrap();
        assert!((delta - (f[(1, 1)].re - f[(0, 0)].re)).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_leaves_only_the_diagonal_shift() {
        let tol = ToleranceSet::default();
        let zero = TwoLevelRhs { r1: 0.0, r2: 0.0, r3: 0.0, r_anti: 0.0 };
        let ca = TwoLevelCoefficients { a: 1.0, b: 2.0, c: 0.5, d: 0.25 };
        let cb = TwoLevelCoefficients { a: 0.0, b: 1.0, c: -0.3, d: 0.8 };
        let report = two_level_restrictions(&ca, &cb, &zero, &zero, &tol).unwrap();
        assert!(report.solvable);
        assert_eq!((report.z, report.p, report.delta), (0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn each_perturbed_ratio_is_named() {
        let tol = ToleranceSet::default();
        let (p, _) = consistent_problem();
        let r = TwoLevelRhs::from_rhs_matrix(&rhs_hermitian(&p.observables[0].h1).unwrap()).unwrap();
        let s = TwoLevelRhs::from_rhs_matrix(&rhs_hermitian(&p.observables[1].h1).unwrap()).unwrap();
        let ca = TwoLevelCoefficients::from_hermitian(&p.observables[0].h0, &tol).unwrap();
        let cb = TwoLevelCoefficients::from_hermitian(&p.observables[1].h0, &tol).unwrap();
        let labels = ["r2_hat/d", "r1_hat/c", "s2_hat/d~", "s1_hat/c~"];
        for (k, label) in labels.iter().enumerate() {
            let (mut r2, mut s2) = (r, s);
            match k {
                0 => r2.r2 += 1e-3,
                1 => r2.r_anti += 1e-3,
                2 => s2.r2 += 1e-3,
                _ => s2.r_anti += 1e-3,
            }
            let report = two_level_restrictions(&ca, &cb, &r2, &s2, &tol).unwrap();
            assert_eq!(report.broken, vec![label.to_string()]);
        }
    }

    #[test]
    fn singular_zp_block_is_degenerate() {
        let tol = ToleranceSet::default();
        let zero = TwoLevelRhs { r1: 0.0, r2: 0.0, r3: 0.0, r_anti: 0.0 };
        let ca = TwoLevelCoefficients { a: 1.0, b: 2.0, c: 0.5, d: 0.25 };
        let cb = TwoLevelCoefficients { a: 3.0, b: 0.0, c: 1.0, d: 0.5 };
        assert!(matches!(
            two_level_restrictions(&ca, &cb, &zero, &zero, &tol),
            Err(Error::DegenerateElimination { .. })
        ));
    }

    #[test]
    fn broken_ratio_makes_solver_inconsistent() {
        let tol = ToleranceSet::default();
        let (mut p, _) = consistent_problem();
        let mut r = rhs_hermitian(&p.observables[0].h1).unwrap();
        r[(0, 1)].re += 1e-3;
        r[(1, 0)].re += 1e-3;
        p.observables[0].h1 = perturbation_from_rhs(&r);
        let sol = solve_first_order(&p, &tol).unwrap();
        assert!(sol.residual > tol.tol_resid);
        assert!(sol.restrictions.iter().any(|x| x.description.contains("r2_hat/d")));
    }
}
