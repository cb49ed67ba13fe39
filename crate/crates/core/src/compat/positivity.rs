//! Search for a strictly positive vector in a linear subspace.
//!
//! The subspace is cut by the slice `Σκ_n = n` and `φ(κ) = min_n κ_n` is
//! maximised over it. `φ` is concave and piecewise linear, so any local
//! maximum is global.

use itertools::Itertools;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{least_squares_with_nullspace, RealMatrix, RealVector};
use crate::random::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Step constant `c` in the `c / √t` schedule.
    pub step: f64,
    pub seed: u64,
}

impl Default for PositivityOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            iterations: 5000,
            step: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    /// Zero-dimensional subspace.
    Empty,
    /// The subspace misses the slice: every nonzero member has a negative
    /// component.
    SliceEmpty,
    /// One-dimensional subspace: a single slice point.
    Ray,
    /// Two-dimensional subspace: breakpoints of a concave polyline.
    Segment,
    /// Supergradient ascent followed by vertex polishing.
    Ascent,
}

#[derive(Debug, Clone)]
pub struct PositivityResult {
    /// Maximiser on the slice (absent when the slice is empty).
    pub kappa: Option<Vec<f64>>,
    pub best_min_component: f64,
    pub method: SearchMethod,
    /// Best value reached from each restart (ascent only).
    pub restart_values: Vec<f64>,
}

/// Maximises `min_n κ_n` over `{κ ∈ span(basis), Σκ_n = n}`.
///
/// `basis` must be orthonormal.
pub fn maximize_min_component(basis: &[RealVector], opts: &PositivityOptions) -> PositivityResult {
    let d = basis.len();
    if d == 0 {
        return PositivityResult {
            kappa: None,
            best_min_component: 0.0,
            method: SearchMethod::Empty,
            restart_values: Vec::new(),
        };
    }
    let n = basis[0].len();
    let z = RealMatrix::from_columns(basis);
    let w = z.transpose() * RealVector::from_element(n, 1.0);
    let w_norm2 = w.norm_squared();
    if w_norm2 <= 1e-24 * n as f64 {
        return PositivityResult {
            kappa: None,
            best_min_component: 0.0,
            method: SearchMethod::SliceEmpty,
            restart_values: Vec::new(),
        };
    }
    let center = &w * (n as f64 / w_norm2);
    let offset = &z * &center;
    if d == 1 {
        let kappa: Vec<f64> = offset.iter().copied().collect();
        return PositivityResult {
            best_min_component: min_of(&kappa),
            kappa: Some(kappa),
            method: SearchMethod::Ray,
            restart_values: Vec::new(),
        };
    }

    // Orthonormal directions inside the slice.
    let w_row = RealMatrix::from_row_slice(1, d, w.as_slice());
    let tangent = least_squares_with_nullspace(&w_row, &RealVector::zeros(1), 1e-12)
        .expect("consistent dimensions")
        .nullspace_basis;
    let slope = &z * RealMatrix::from_columns(&tangent);
    let objective = SliceObjective {
        offset,
        slope,
    };

    if d == 2 {
        let t = objective.best_on_line();
        let kappa = objective.point(&t);
        return PositivityResult {
            best_min_component: min_of(kappa.as_slice()),
            kappa: Some(kappa.iter().copied().collect()),
            method: SearchMethod::Segment,
            restart_values: Vec::new(),
        };
    }

    let m = d - 1;
    let mut rng = stream_rng(opts.seed, 0x5eed);
    let mut best_t = RealVector::zeros(m);
    let mut best_value = objective.value(&best_t);
    let mut restart_values = Vec::with_capacity(opts.restarts);
    for _ in 0..opts.restarts.max(1) {
        let start = RealVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let t = objective.ascend(start, opts);
        let t = objective.polish(t);
        let value = objective.value(&t);
        restart_values.push(value);
        if value > best_value {
            best_value = value;
            best_t = t;
        }
    }
    let kappa = objective.point(&best_t);
    PositivityResult {
        best_min_component: min_of(kappa.as_slice()),
        kappa: Some(kappa.iter().copied().collect()),
        method: SearchMethod::Ascent,
        restart_values,
    }
}

fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `φ(t) = min_i (offset_i + slope_i · t)` on slice coordinates `t`.
struct SliceObjective {
    offset: RealVector,
    slope: RealMatrix,
}

impl SliceObjective {
    fn point(&self, t: &RealVector) -> RealVector {
        &self.offset + &self.slope * t
    }

    fn value(&self, t: &RealVector) -> f64 {
        min_of(self.point(t).as_slice())
    }

    fn argmin(&self, t: &RealVector) -> usize {
        self.point(t).argmin().0
    }

    /// Exact maximiser when the slice is a line: the optimum sits at the
    /// crossing of two component lines.
    fn best_on_line(&self) -> RealVector {
        let n = self.offset.len();
        let mut best_t = 0.0;
        let mut best_value = self.value(&RealVector::from_element(1, 0.0));
        for i in 0..n {
            for j in (i + 1)..n {
                let dq = self.slope[(i, 0)] - self.slope[(j, 0)];
                if dq.abs() <= 1e-14 {
                    continue;
                }
                let t = (self.offset[j] - self.offset[i]) / dq;
                let value = self.value(&RealVector::from_element(1, t));
                if value > best_value {
                    best_value = value;
                    best_t = t;
                }
            }
        }
        RealVector::from_element(1, best_t)
    }

    fn ascend(&self, mut t: RealVector, opts: &PositivityOptions) -> RealVector {
        let mut best_t = t.clone();
        let mut best_value = self.value(&t);
        for k in 1..=opts.iterations {
            let i = self.argmin(&t);
            let g = self.slope.row(i).transpose();
            let g_norm = g.norm();
            if g_norm == 0.0 {
                break;
            }
            t.axpy(opts.step / (k as f64).sqrt() / g_norm, &g, 1.0);
            let value = self.value(&t);
            if value > best_value {
                best_value = value;
                best_t.copy_from(&t);
            }
        }
        best_t
    }

    /// Snaps a near-optimal point onto the vertex cut out by its lowest
    /// components, keeping the improvement only if the true objective rises.
    fn polish(&self, t: RealVector) -> RealVector {
        let m = t.len();
        let n = self.offset.len();
        let point = self.point(&t);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| point[a].total_cmp(&point[b]));
        let pool = &order[..(m + 3).min(n)];

        let mut best_t = t.clone();
        let mut best_value = self.value(&t);
        for active in pool.iter().copied().combinations(m + 1) {
            // slope_i · t − s = −offset_i over the active set.
            let system = RealMatrix::from_fn(m + 1, m + 1, |r, c| {
                if c < m {
                    self.slope[(active[r], c)]
                } else {
                    -1.0
                }
            });
            let rhs = RealVector::from_fn(m + 1, |r, _| -self.offset[active[r]]);
            let Some(solution) = system.lu().solve(&rhs) else {
                continue;
            };
            if !solution.iter().all(|v| v.is_finite()) {
                continue;
            }
            let candidate = solution.rows(0, m).into_owned();
            let value = self.value(&candidate);
            if value > best_value {
                best_value = value;
                best_t = candidate;
            }
        }
        best_t
    }
}
