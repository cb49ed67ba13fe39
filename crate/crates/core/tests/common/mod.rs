#![allow(dead_code)]

use num_complex::Complex64;
use qhmetric::compat::{make_compatible_pair, CompatiblePair};
use qhmetric::linalg::{eigensolve_general, ComplexMatrix, RealMatrix, ToleranceSet};
use qhmetric::random::{random_nondegenerate_hermitian, stream_rng, well_conditioned};

pub fn compatible_pair(n: usize, seed: u64, index: u64) -> CompatiblePair {
    let tol = ToleranceSet::default();
    let mut rng = stream_rng(seed, index);
    let ha = random_nondegenerate_hermitian(n, &mut rng);
    let hb = random_nondegenerate_hermitian(n, &mut rng);
    let omega = well_conditioned(n, &mut rng);
    make_compatible_pair(&ha, &hb, &omega, &tol).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridVerdict {
    /// Some grid point is within the Lipschitz bound of a zero residual.
    PossiblyFeasible,
    /// Every grid point is farther from zero than the bound allows.
    Infeasible,
}

#[derive(Debug, Clone, Copy)]
pub struct GridResult {
    pub verdict: GridVerdict,
    pub min_residual: f64,
    pub bound: f64,
}

/// Left eigenvectors from an eigensolve of `A†`, paired with the right ones by
/// eigenvalue and scaled so that `⟨⟨k|k⟩ = 1`.
fn left_vectors(a: &ComplexMatrix) -> Vec<nalgebra::DVector<Complex64>> {
    let right = eigensolve_general(a).unwrap();
    let left = eigensolve_general(&a.adjoint()).unwrap();
    let n = a.nrows();
    (0..n)
        .map(|k| {
            let target = right.eigenvalues[k].conj();
            let j = (0..n)
                .min_by(|&i, &j| {
                    (left.eigenvalues[i] - target)
                        .norm()
                        .total_cmp(&(left.eigenvalues[j] - target).norm())
                })
                .unwrap();
            let l = left.vectors.column(j).into_owned();
            let r = right.vectors.column(k).into_owned();
            let overlap = l.dotc(&r);
            l / overlap.conj()
        })
        .collect()
}

/// Brute-force search of `κ ∈ (0, 1]ⁿ` on a uniform grid for a κ with
/// `Σ κ_k (G_k B − B† G_k) = 0`, `G_k = |k⟩⟩⟨⟨k|` built from `a`.
///
/// The residual is divided by `max κ_k`, so each ray is judged by its point
/// on the face `max κ = 1`; a feasible ray has a grid point within `h√n` of
/// that point.
pub fn grid_oracle(a: &ComplexMatrix, b: &ComplexMatrix, steps: usize) -> GridResult {
    let n = a.nrows();
    let lefts = left_vectors(a);
    let mut cols = Vec::with_capacity(n);
    for l in &lefts {
        let g = l * l.adjoint();
        let m = &g * b - b.adjoint() * &g;
        let m = m.unscale(b.norm());
        cols.push(m.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<f64>>());
    }
    let rows = cols[0].len();
    let a_real = RealMatrix::from_fn(rows, n, |i, j| cols[j][i]);
    let lipschitz = a_real.clone().singular_values().max();
    let h = 1.0 / steps as f64;
    let bound = lipschitz * h * (n as f64).sqrt() / (1.0 - h) * (1.0 + 1e-9);

    let mut idx = vec![0usize; n];
    let mut acc = vec![0.0; rows];
    let mut min_residual = f64::INFINITY;
    'outer: loop {
        acc.iter_mut().for_each(|v| *v = 0.0);
        let top = (*idx.iter().max().unwrap() + 1) as f64 * h;
        for (k, &i) in idx.iter().enumerate() {
            let kappa = (i + 1) as f64 * h;
            for (r, v) in acc.iter_mut().enumerate() {
                *v += kappa * cols[k][r];
            }
        }
        let u = acc.iter().map(|v| v * v).sum::<f64>().sqrt() / top;
        min_residual = min_residual.min(u);
        for i in idx.iter_mut() {
            *i += 1;
            if *i < steps {
                continue 'outer;
            }
            *i = 0;
        }
        break;
    }
    GridResult {
        verdict: if min_residual <= bound {
            GridVerdict::PossiblyFeasible
        } else {
            GridVerdict::Infeasible
        },
        min_residual,
        bound,
    }
}
