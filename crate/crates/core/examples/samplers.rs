//! The hand-written random variate generators: generalized inverse
//! Gaussian, truncated normal, and a Gaussian restricted to a shape cone.

use nalgebra::{DMatrix, DVector};
use perftraj::bernstein::convexity_matrix;
use perftraj::samplers::{gig_sample, truncated_mvn_cone, truncated_normal, ConeConstraint, ConeOptions, ConeSign};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn main() -> perftraj::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;

    // GIG(-1/2, 1, 1) is the inverse Gaussian with mean 1
    let gig: Vec<f64> = (0..n).map(|_| gig_sample(-0.5, 1.0, 1.0, &mut rng)).collect::<Result<_, _>>()?;
    println!("GIG(-1/2, 1, 1): sample mean {:.4} (exact 1)", mean(&gig));

    let tn: Vec<f64> = (0..n)
        .map(|_| truncated_normal(0.0, 1.0, 2.0, f64::INFINITY, &mut rng))
        .collect::<Result<_, _>>()?;
    println!("N(0,1) above 2: sample mean {:.4} (exact 2.3732)", mean(&tn));

    // an order-4 coefficient block with the end coefficients pinned at zero
    // must have non-negative second differences
    let d4 = convexity_matrix(4)?;
    let constraint = ConeConstraint { matrix: d4.clone(), sign: ConeSign::NonNegative };
    let mu = DVector::from_vec(vec![0.0, 1.0, 0.0]);
    let precision = DMatrix::identity(3, 3);
    let mut x = DVector::from_vec(vec![-1.0, -1.5, -1.0]);
    let mut inside = 0;
    for _ in 0..10_000 {
        x = truncated_mvn_cone(&mu, &precision, 0, std::slice::from_ref(&constraint), &x, ConeOptions::default(), &mut rng)?;
        if (&d4 * &x).iter().all(|v| *v >= 0.0) {
            inside += 1;
        }
    }
    println!("cone-restricted Gaussian: {inside} of 10000 draws satisfy the constraint; last draw {:.3?}", x.as_slice());
    Ok(())
}
