//! Restricted Bernstein polynomials: evaluation, closed-form integrals and
//! the shape check used for the population within-season curve.

use perftraj::bernstein::{
    basis_integral, convexity_matrix, cross_integral, eval_basis, integral_of_square, integral_of_sum, order_index,
    satisfies_shape, ImprovementDirection, RbpCoefficientSet,
};

fn main() -> perftraj::Result<()> {
    println!("b(4,2) on a coarse grid:");
    for k in 0..=4 {
        let z = k as f64 / 4.0;
        println!("  z = {z:.2}  {:.4}", eval_basis(4, 2, z)?);
    }
    println!("integral of b(5,v) = {:.4}", basis_integral(5)?);
    println!("integral of b(3,1) b(2,1) = {:.4}", cross_integral(3, 1, 2, 1)?);

    // a dip in the middle of the season: convex, so it satisfies the
    // lower-is-better shape
    let mut dip = RbpCoefficientSet::zeros(4)?;
    for j in 0..dip.len() {
        let (n, v) = order_index(j);
        if n == 4 {
            dip.set(n, v, -1.0)?;
        }
    }
    println!("coefficients by (order, index):");
    for j in 0..dip.len() {
        let (n, v) = order_index(j);
        println!("  ({n},{v}) {:+.1}", dip.as_slice()[j]);
    }
    for z in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("  h({z:.2}) = {:+.4}", dip.eval(z));
    }
    println!("mean level {:+.4}", integral_of_sum(&dip));
    println!("integrated square {:.4}", integral_of_square(&dip, &dip)?);
    println!("second differences D4 =\n{}", convexity_matrix(4)?);
    println!(
        "shape ok for lower-is-better: {}, for higher-is-better: {}",
        satisfies_shape(&dip, ImprovementDirection::Negative),
        satisfies_shape(&dip, ImprovementDirection::Positive)
    );
    Ok(())
}
