use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::samplers::std_normal;

const JITTER_STEPS: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Cholesky factor of a symmetric positive-definite matrix, retrying with a
/// growing diagonal jitter (relative to the mean diagonal) when the plain
/// factorisation fails.
pub fn cholesky_with_jitter(q: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in precision matrix".into()));
    }
    if let Some(c) = Cholesky::new(q.clone()) {
        return Ok(c);
    }
    let n = q.nrows();
    let scale = (q.diagonal().iter().map(|d| d.abs()).sum::<f64>() / n.max(1) as f64).max(1e-300);
    for eps in JITTER_STEPS {
        let mut m = q.clone();
        for i in 0..n {
            m[(i, i)] += eps * scale;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok(c);
        }
    }
    Err(Error::Numerical(format!(
        "{n}x{n} precision matrix not positive definite even with jitter"
    )))
}

/// Draw from `N(Q^{-1} b, Q^{-1})`. Returns `(mean, draw)`.
pub fn sample_gaussian_precision<R: Rng + ?Sized>(
    precision: &DMatrix<f64>,
    linear: &DVector<f64>,
    rng: &mut R,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let chol = cholesky_with_jitter(precision)?;
    let mean = chol.solve(linear);
    let z = DVector::from_fn(linear.len(), |_, _| std_normal(rng));
    let l = chol.l();
    let dev = l
        .tr_solve_lower_triangular(&z)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let draw = &mean + dev;
    if draw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Gaussian draw".into()));
    }
    Ok((mean, draw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_target_moments() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let cov = q.clone().try_inverse().unwrap();
        let mu = &cov * &b;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut sum = DVector::zeros(2);
        let mut sq = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let (_, x) = sample_gaussian_precision(&q, &b, &mut rng).unwrap();
            sum += &x;
            sq += &x * x.transpose();
        }
        let m = sum / n as f64;
        let c = sq / n as f64 - &m * m.transpose();
        assert!((m - mu).amax() < 0.01);
        assert!((c - cov).amax() < 0.01);
    }

    #[test]
    fn jitter_rescues_semidefinite() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky_with_jitter(&q).is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(cholesky_with_jitter(&bad).is_err());
    }
}
