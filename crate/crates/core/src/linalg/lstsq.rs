
use nalgebra::{ComplexField, DMatrix, SVD};

use super::{RealMatrix, RealVector};
use crate::error::{Error, Result};

/// Full SVD with a reconstruction check.
///
/// nalgebra's default deflation threshold (machine epsilon) can stop on
/// singular values that are wrong in the third digit, so a slightly looser
/// threshold is tried first and the factorization is verified.
pub fn svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> SVD<T, nalgebra::Dyn, nalgebra::Dyn> {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let bound = 1e3 * f64::EPSILON * scale * (m.nrows().max(m.ncols()) as f64).sqrt();
    let mut best: Option<(f64, SVD<T, nalgebra::Dyn, nalgebra::Dyn>)> = None;
    for eps in [1e-14, 1e-12, 1e-10] {
        let Some(f) = m.clone().try_svd(true, true, eps, 0) else {
            continue;
        };
        let err = reconstruction_error(m, &f);
        if err <= bound {
            return f;
        }
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, f));
        }
    }
    best.map(|(_, f)| f).unwrap_or_else(|| m.clone().svd(true, true))
}

fn reconstruction_error<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, f: &SVD<T, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let (Some(u), Some(v_t)) = (&f.u, &f.v_t) else {
        return f64::INFINITY;
    };
    let sigma = f.singular_values.map(T::from_real);
    (m - u * DMatrix::from_diagonal(&sigma) * v_t).norm()
}

/// Minimum-norm least-squares solution together with rank bookkeeping.
#[derive(Debug, Clone)]
pub struct RankedLinearSolution {
    pub solution: RealVector,
    pub residual_norm: f64,
    pub rank: usize,
    /// Orthonormal basis of the kernel of the system matrix.
    pub nullspace_basis: Vec<RealVector>,
    pub singular_values: Vec<f64>,
}

impl RankedLinearSolution {
    pub fn nullspace_dim(&self) -> usize {
        self.nullspace_basis.len()
    }
}

/// Solves `A x ≈ b` in the minimum-norm least-squares sense through an SVD.
///
/// Singular values at or below `rank_rtol · σ_max` are treated as zero; the
/// matching right singular vectors form the returned kernel basis.
pub fn least_squares_with_nullspace(
    a: &RealMatrix,
    b: &RealVector,
    rank_rtol: f64,
) -> Result<RankedLinearSolution> {
    least_squares_with_reference(a, b, rank_rtol, 0.0)
}

/// As [`least_squares_with_nullspace`], but the cutoff is
/// `rank_rtol · max(σ_max, reference)`. A matrix that is pure round-off
/// relative to `reference` then has rank zero.
pub fn least_squares_with_reference(
    a: &RealMatrix,
    b: &RealVector,
    rank_rtol: f64,
    reference: f64,
) -> Result<RankedLinearSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("rhs of length {m}"),
            found: format!("length {}", b.len()),
        });
    }
    if n == 0 {
        return Ok(RankedLinearSolution {
            solution: RealVector::zeros(0),
            residual_norm: b.norm(),
            rank: 0,
            nullspace_basis: Vec::new(),
            singular_values: Vec::new(),
        });
    }

    // A thin SVD only exposes min(m, n) right singular vectors; zero rows keep
    // the kernel and the least-squares solution unchanged.
    let rows = m.max(n);
    let mut padded = RealMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let mut rhs = RealVector::zeros(rows);
    rhs.rows_mut(0, m).copy_from(b);

    let svd = svd(&padded);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma = &svd.singular_values;

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let sigma_max = sigma[order[0]];
    let cutoff = rank_rtol * sigma_max.max(reference);

    let mut solution = RealVector::zeros(n);
    let mut rank = 0;
    let mut nullspace_basis = Vec::new();
    for &k in &order {
        let v = v_t.row(k).transpose();
        if sigma[k] > 0.0 && sigma[k] > cutoff {
            rank += 1;
            let coeff = u.column(k).dot(&rhs) / sigma[k];
            solution.axpy(coeff, &v, 1.0);
        } else {
            nullspace_basis.push(fix_sign(v));
        }
    }

    let residual_norm = (a * &solution - b).norm();
    Ok(RankedLinearSolution {
        solution,
        residual_norm,
        rank,
        nullspace_basis,
        singular_values: order.iter().map(|&k| sigma[k]).collect(),
    })
}

/// Makes the largest-magnitude component (first on ties) positive.
fn fix_sign(mut v: RealVector) -> RealVector {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
    v
}
