//! Multivariate normal restricted to a polyhedral cone.
//!
//! The constrained coordinates are split into blocks, each restricted by a
//! square invertible matrix `D_j` through `sign_j * D_j v_j >= 0`. After the
//! change of variables `w_j = sign_j * D_j v_j` the support is an orthant,
//! where exact one-dimensional truncated normal updates are available.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::samplers::{cholesky_with_jitter, std_normal, truncated_normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSign {
    NonNegative,
    NonPositive,
}

impl ConeSign {
    fn factor(self) -> f64 {
        match self {
            ConeSign::NonNegative => 1.0,
            ConeSign::NonPositive => -1.0,
        }
    }
}

/// One constrained block: `sign * matrix * v >= 0` for the next
/// `matrix.nrows()` coordinates.
#[derive(Debug, Clone)]
pub struct ConeConstraint {
    pub matrix: DMatrix<f64>,
    pub sign: ConeSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeOptions {
    /// Unconstrained proposals tried before falling back to Gibbs.
    pub rejection_attempts: usize,
    /// Gibbs sweeps in the fallback.
    pub gibbs_sweeps: usize,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self {
            rejection_attempts: 20,
            gibbs_sweeps: 1,
        }
    }
}

/// Draw from `N(mean, precision^{-1})` restricted to the cone, or move along
/// a Markov chain that leaves it invariant.
///
/// The first `free` coordinates are unconstrained; the rest are covered by
/// `constraints` in order. `current` must satisfy the constraints and seeds
/// the Gibbs fallback. Up to `rejection_attempts` exact unconstrained draws
/// are tried first; when all fall outside the cone a Gibbs sweep in the
/// orthant coordinates is used instead. Both branches leave the target
/// invariant, and the rejection branch does not depend on `current`, so the
/// mixture is a valid kernel.
pub fn truncated_mvn_cone<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision: &DMatrix<f64>,
    free: usize,
    constraints: &[ConeConstraint],
    current: &DVector<f64>,
    options: ConeOptions,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let dim = mean.len();
    let constrained: usize = constraints.iter().map(|c| c.matrix.nrows()).sum();
    if precision.nrows() != dim || precision.ncols() != dim || current.len() != dim {
        return Err(invalid("cone sampler dimension mismatch"));
    }
    if free + constrained != dim {
        return Err(invalid(format!(
            "{free} free + {constrained} constrained coordinates != {dim}"
        )));
    }
    if constraints.iter().any(|c| !c.matrix.is_square()) {
        return Err(invalid("cone constraint matrices must be square"));
    }
    if !feasible(current, free, constraints, 1e-9) {
        return Err(invalid("current point is outside the cone"));
    }

    let chol = cholesky_with_jitter(precision)?;
    for _ in 0..options.rejection_attempts {
        let z = DVector::from_fn(dim, |_, _| std_normal(rng));
        let dev = chol
            .l()
            .tr_solve_lower_triangular(&z)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        let x = mean + dev;
        if feasible(&x, free, constraints, 0.0) {
            return Ok(x);
        }
    }
    gibbs(mean, precision, free, constraints, current, options.gibbs_sweeps.max(1), rng)
}

fn feasible(x: &DVector<f64>, free: usize, constraints: &[ConeConstraint], tol: f64) -> bool {
    let mut start = free;
    for c in constraints {
        let k = c.matrix.nrows();
        let v = x.rows(start, k);
        let w = &c.matrix * v * c.sign.factor();
        let scale = v.amax().max(1.0);
        if w.iter().any(|wi| *wi < -tol * scale) {
            return false;
        }
        start += k;
    }
    true
}

/// Block-diagonal map `y = L x` with identity on the free block and
/// `sign_j D_j` on each constrained block, plus its inverse.
fn transform(
    dim: usize,
    free: usize,
    constraints: &[ConeConstraint],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut l = DMatrix::zeros(dim, dim);
    let mut linv = DMatrix::zeros(dim, dim);
    for i in 0..free {
        l[(i, i)] = 1.0;
        linv[(i, i)] = 1.0;
    }
    let mut start = free;
    for c in constraints {
        let k = c.matrix.nrows();
        let block = &c.matrix * c.sign.factor();
        let inv = block
            .clone()
            .try_inverse()
            .ok_or_else(|| invalid("cone constraint matrix is singular"))?;
        l.view_mut((start, start), (k, k)).copy_from(&block);
        linv.view_mut((start, start), (k, k)).copy_from(&inv);
        start += k;
    }
    Ok((l, linv))
}

fn gibbs<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision: &DMatrix<f64>,
    free: usize,
    constraints: &[ConeConstraint],
    current: &DVector<f64>,
    sweeps: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let dim = mean.len();
    let (l, linv) = transform(dim, free, constraints)?;
    // precision and mean in the orthant coordinates
    let q = linv.transpose() * precision * &linv;
    let m = &l * mean;
    let mut y = &l * current;
    for j in free..dim {
        // tolerance-level negatives come from roundoff in the transform
        y[j] = y[j].max(0.0);
    }

    let free_chol = if free > 0 {
        Some(cholesky_with_jitter(&q.view((0, 0), (free, free)).into_owned())?)
    } else {
        None
    };

    for _ in 0..sweeps {
        if let Some(chol) = &free_chol {
            let cons = dim - free;
            let q_fw = q.view((0, free), (free, cons));
            let dw = y.rows(free, cons) - m.rows(free, cons);
            let shift = chol.solve(&(q_fw * dw));
            let z = DVector::from_fn(free, |_, _| std_normal(rng));
            let dev = chol
                .l()
                .tr_solve_lower_triangular(&z)
                .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
            let u = m.rows(0, free) - shift + dev;
            y.rows_mut(0, free).copy_from(&u);
        }
        for j in free..dim {
            let qjj = q[(j, j)];
            if !(qjj > 0.0) {
                return Err(Error::Numerical("non-positive conditional precision".into()));
            }
            let mut acc = 0.0;
            for k in 0..dim {
                if k != j {
                    acc += q[(j, k)] * (y[k] - m[k]);
                }
            }
            let cm = m[j] - acc / qjj;
            y[j] = truncated_normal(cm, 1.0 / qjj, 0.0, f64::INFINITY, rng)?;
        }
    }
    Ok(&linv * y)
}
