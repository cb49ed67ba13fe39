//! Row-wise upper-triangular packing of real symmetric/antisymmetric
//! matrices and the commutator blocks that act on the packed form.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::json::serde_real_matrix;
use crate::linalg::{real_commutator, real_imag_split, ComplexMatrix, RealMatrix, RealVector, ToleranceSet};

/// `V = n(n+1)/2`.
pub fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// `M = n(n−1)/2`.
pub fn antisym_dim(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn relative_defect(defect: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        defect
    } else {
        defect / scale
    }
}

/// Packs a symmetric matrix by scanning rows of its upper triangle, diagonal
/// included. For n = 2 the order is `(S₁₁, S₁₂, S₂₂)`.
pub fn pack_sym(s: &RealMatrix, tol: &ToleranceSet) -> Result<RealVector> {
    let defect = relative_defect((s - s.transpose()).norm(), s.norm());
    if !s.is_square() || defect > tol.tol_resid {
        return Err(Error::NotSymmetric { defect });
    }
    Ok(pack_upper_sym(s))
}

/// Packs the strict upper triangle of an antisymmetric matrix row by row.
pub fn pack_antisym(a: &RealMatrix, tol: &ToleranceSet) -> Result<RealVector> {
    let defect = relative_defect((a + a.transpose()).norm(), a.norm());
    if !a.is_square() || defect > tol.tol_resid {
        return Err(Error::NotAntisymmetric { defect });
    }
    Ok(pack_upper_antisym(a))
}

pub(crate) fn pack_upper_sym(s: &RealMatrix) -> RealVector {
    let n = s.nrows();
    let mut out = Vec::with_capacity(sym_dim(n));
    for i in 0..n {
        for j in i..n {
            out.push(s[(i, j)]);
        }
    }
    RealVector::from_vec(out)
}

pub(crate) fn pack_upper_antisym(a: &RealMatrix) -> RealVector {
    let n = a.nrows();
    let mut out = Vec::with_capacity(antisym_dim(n));
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(a[(i, j)]);
        }
    }
    RealVector::from_vec(out)
}

pub fn unpack_sym(v: &[f64], n: usize) -> Result<RealMatrix> {
    if v.len() != sym_dim(n) {
        return Err(Error::DimensionMismatch {
            expected: format!("{} packed entries", sym_dim(n)),
            found: v.len().to_string(),
        });
    }
    let mut s = RealMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            s[(i, j)] = v[k];
            s[(j, i)] = v[k];
            k += 1;
        }
    }
    Ok(s)
}

pub fn unpack_antisym(v: &[f64], n: usize) -> Result<RealMatrix> {
    if v.len() != antisym_dim(n) {
        return Err(Error::DimensionMismatch {
            expected: format!("{} packed entries", antisym_dim(n)),
            found: v.len().to_string(),
        });
    }
    let mut a = RealMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            a[(i, j)] = v[k];
            a[(j, i)] = -v[k];
            k += 1;
        }
    }
    Ok(a)
}

/// Index pairs `(i, j)` in symmetric packing order.
pub fn sym_positions(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// Index pairs `(i, j)` in antisymmetric packing order.
pub fn antisym_positions(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// The four real blocks of `F ↦ [H₀, F]` for Hermitian `H₀ = H_s + iH_a`
/// acting on `F = F_s + iF_a`:
///
/// * `vv`: `F_s ↦ sym([H_a, F_s])`, `vm`: `F_a ↦ sym([H_s, F_a])`
/// * `mv`: `F_s ↦ anti([H_s, F_s])`, `mm`: `F_a ↦ anti([H_a, F_a])`
#[derive(Debug, Clone, Serialize)]
pub struct CommutatorBlocks {
    #[serde(with = "serde_real_matrix")]
    pub vv: RealMatrix,
    #[serde(with = "serde_real_matrix")]
    pub vm: RealMatrix,
    #[serde(with = "serde_real_matrix")]
    pub mv: RealMatrix,
    #[serde(with = "serde_real_matrix")]
    pub mm: RealMatrix,
}

impl CommutatorBlocks {
    /// `[[vv, vm], [mv, −mm]]`: the symmetric rows give the imaginary part
    /// of `[H₀, F]`, the antisymmetric rows its real part.
    pub fn system_matrix(&self) -> RealMatrix {
        let v = self.vv.nrows();
        let m = self.mm.nrows();
        let mut out = RealMatrix::zeros(v + m, v + m);
        out.view_mut((0, 0), (v, v)).copy_from(&self.vv);
        out.view_mut((0, v), (v, m)).copy_from(&self.vm);
        out.view_mut((v, 0), (m, v)).copy_from(&self.mv);
        out.view_mut((v, v), (m, m)).copy_from(&(-&self.mm));
        out
    }
}

/// Builds the commutator blocks by probing with packed unit vectors.
pub fn commutator_blocks(h0: &ComplexMatrix, tol: &ToleranceSet) -> Result<CommutatorBlocks> {
    let (hs, ha) = real_imag_split(h0, tol)?;
    let n = h0.nrows();
    let (v, m) = (sym_dim(n), antisym_dim(n));
    let mut vv = RealMatrix::zeros(v, v);
    let mut mv = RealMatrix::zeros(m, v);
    let mut unit = vec![0.0; v];
    for k in 0..v {
        unit[k] = 1.0;
        let fs = unpack_sym(&unit, n)?;
        unit[k] = 0.0;
        vv.set_column(k, &pack_upper_sym(&real_commutator(&ha, &fs)));
        mv.set_column(k, &pack_upper_antisym(&real_commutator(&hs, &fs)));
    }
    let mut vm = RealMatrix::zeros(v, m);
    let mut mm = RealMatrix::zeros(m, m);
    let mut unit = vec![0.0; m];
    for k in 0..m {
        unit[k] = 1.0;
        let fa = unpack_antisym(&unit, n)?;
        unit[k] = 0.0;
        vm.set_column(k, &pack_upper_sym(&real_commutator(&hs, &fa)));
        mm.set_column(k, &pack_upper_antisym(&real_commutator(&ha, &fa)));
    }
    Ok(CommutatorBlocks { vv, vm, mv, mm })
}
