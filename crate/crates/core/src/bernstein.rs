//! Restricted Bernstein polynomials.
//!
//! An order-`n` restricted Bernstein polynomial drops the two endpoint basis
//! functions, so that every member vanishes at `z = 0` and `z = 1`:
//!
//! ```text
//! b_{n,v}(z) = C(n, v) z^v (1 - z)^(n - v),   v = 1..n-1
//! h(z)       = sum_{n=2}^{N} sum_{v=1}^{n-1} beta_{n,v} b_{n,v}(z)
//! ```
//!
//! Coefficients for all orders `2..=N` are stored in one flat vector ordered
//! `(2,1), (3,1), (3,2), (4,1), ...`. [`flat_index`] is the only place that
//! ordering is defined; the design matrices in [`crate::mcmc`] use it too.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{invalid, Result};

/// Sign of a better performance, which fixes the population shape constraint.
///
/// Timed events (lower is better) are `Negative` and get a convex population
/// within-season curve; distance/weight events are `Positive` and get a
/// concave one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ImprovementDirection {
    Positive,
    #[default]
    Negative,
}

/// Number of coefficients in a sum of restricted Bernstein polynomials of
/// orders `2..=max_order`.
pub fn num_coeffs(max_order: usize) -> usize {
    if max_order < 2 {
        0
    } else {
        max_order * (max_order - 1) / 2
    }
}

/// Position of `(order, index)` in the flat coefficient vector.
pub fn flat_index(order: usize, index: usize) -> usize {
    debug_assert!(order >= 2 && index >= 1 && index < order);
    (order - 1) * (order - 2) / 2 + (index - 1)
}

/// Inverse of [`flat_index`].
pub fn order_index(flat: usize) -> (usize, usize) {
    let mut n = 2;
    let mut start = 0;
    while start + (n - 1) <= flat {
        start += n - 1;
        n += 1;
    }
    (n, flat - start + 1)
}

fn check_index(order: usize, index: usize) -> Result<()> {
    if order < 2 || index < 1 || index >= order {
        return Err(invalid(format!(
            "basis index (n={order}, v={index}) outside 2 <= n, 1 <= v <= n-1"
        )));
    }
    Ok(())
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

fn binomial(n: usize, k: usize) -> f64 {
    ln_binomial(n, k).exp().round()
}

/// Value of `b_{n,v}(z)`.
pub fn eval_basis(order: usize, index: usize, z: f64) -> Result<f64> {
    check_index(order, index)?;
    if !(0.0..=1.0).contains(&z) {
        return Err(invalid(format!("location {z} outside [0, 1]")));
    }
    Ok(basis_unchecked(order, index, z))
}

#[inline]
fn basis_unchecked(order: usize, index: usize, z: f64) -> f64 {
    binomial(order, index) * z.powi(index as i32) * (1.0 - z).powi((order - index) as i32)
}

/// All basis values at `z` in flat order; this is one row of the seasonal
/// design matrix.
pub fn basis_row(max_order: usize, z: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(num_coeffs(max_order));
    for n in 2..=max_order {
        for v in 1..n {
            row.push(basis_unchecked(n, v, z));
        }
    }
    row
}

/// `∫_0^1 b_{n,v}(z) dz`, which is `1/(n+1)` for every `v`.
pub fn basis_integral(order: usize) -> Result<f64> {
    if order < 2 {
        return Err(invalid(format!("order {order} < 2")));
    }
    Ok(1.0 / (order as f64 + 1.0))
}

/// `∫_0^1 b_{n1,v1}(z) b_{n2,v2}(z) dz`.
pub fn cross_integral(n1: usize, v1: usize, n2: usize, v2: usize) -> Result<f64> {
    check_index(n1, v1)?;
    check_index(n2, v2)?;
    Ok(cross_unchecked(n1, v1, n2, v2))
}

fn cross_unchecked(n1: usize, v1: usize, n2: usize, v2: usize) -> f64 {
    let ln = ln_binomial(n1, v1)
        + ln_binomial(n2, v2)
        + ln_factorial((v1 + v2) as u64)
        + ln_factorial((n1 + n2 - v1 - v2) as u64)
        - ln_factorial((n1 + n2 + 1) as u64);
    ln.exp()
}

/// Gram matrix of the basis under the `L2[0,1]` inner product, flat order.
pub fn gram_matrix(max_order: usize) -> DMatrix<f64> {
    let g = num_coeffs(max_order);
    DMatrix::from_fn(g, g, |a, b| {
        let (n1, v1) = order_index(a);
        let (n2, v2) = order_index(b);
        cross_unchecked(n1, v1, n2, v2)
    })
}

/// Tridiagonal `(n-1) x (n-1)` matrix with `-2` on the diagonal and `1` on the
/// off-diagonals. `D_n beta_n >= 0` makes the order-`n` term convex.
pub fn convexity_matrix(order: usize) -> Result<DMatrix<f64>> {
    if order < 2 {
        return Err(invalid(format!("order {order} < 2")));
    }
    let k = order - 1;
    Ok(DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            -2.0
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    }))
}

/// Coefficients of a sum of restricted Bernstein polynomials of orders
/// `2..=max_order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbpCoefficientSet {
    max_order: usize,
    coeffs: Vec<f64>,
}

impl RbpCoefficientSet {
    /// All-zero coefficients.
    pub fn zeros(max_order: usize) -> Result<Self> {
        if max_order < 2 {
            return Err(invalid(format!("max order {max_order} < 2")));
        }
        Ok(Self {
            max_order,
            coeffs: vec![0.0; num_coeffs(max_order)],
        })
    }

    pub fn from_vec(max_order: usize, coeffs: Vec<f64>) -> Result<Self> {
        if max_order < 2 {
            return Err(invalid(format!("max order {max_order} < 2")));
        }
        if coeffs.len() != num_coeffs(max_order) {
            return Err(invalid(format!(
                "expected {} coefficients for N={max_order}, got {}",
                num_coeffs(max_order),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite coefficient"));
        }
        Ok(Self { max_order, coeffs })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, order: usize, index: usize) -> Result<f64> {
        check_index(order, index)?;
        if order > self.max_order {
            return Err(invalid(format!("order {order} > N={}", self.max_order)));
        }
        Ok(self.coeffs[flat_index(order, index)])
    }

    pub fn set(&mut self, order: usize, index: usize, value: f64) -> Result<()> {
        check_index(order, index)?;
        if order > self.max_order {
            return Err(invalid(format!("order {order} > N={}", self.max_order)));
        }
        if !value.is_finite() {
            return Err(invalid("non-finite coefficient"));
        }
        self.coeffs[flat_index(order, index)] = value;
        Ok(())
    }

    /// Coefficients of the order-`n` term, `(beta_{n,1}, ..., beta_{n,n-1})`.
    pub fn order_block(&self, order: usize) -> &[f64] {
        let start = flat_index(order, 1);
        &self.coeffs[start..start + order - 1]
    }

    /// Value of the polynomial sum at `z`.
    pub fn eval(&self, z: f64) -> f64 {
        let mut total = 0.0;
        for n in 2..=self.max_order {
            for v in 1..n {
                total += self.coeffs[flat_index(n, v)] * basis_unchecked(n, v, z);
            }
        }
        total
    }
}

/// Value of the polynomial sum at `z`.
pub fn eval_rbp(coeffs: &RbpCoefficientSet, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(invalid(format!("location {z} outside [0, 1]")));
    }
    Ok(coeffs.eval(z))
}

/// `∫_0^1 h(z) dz` for the polynomial sum with the given coefficients.
pub fn integral_of_sum(coeffs: &RbpCoefficientSet) -> f64 {
    (2..=coeffs.max_order)
        .map(|n| coeffs.order_block(n).iter().sum::<f64>() / (n as f64 + 1.0))
        .sum()
}

/// `∫_0^1 h_A(z) h_B(z) dz`; with `a == b` this is the integrated square.
pub fn integral_of_square(a: &RbpCoefficientSet, b: &RbpCoefficientSet) -> Result<f64> {
    if a.max_order != b.max_order {
        return Err(invalid(format!(
            "coefficient sets have N={} and N={}",
            a.max_order, b.max_order
        )));
    }
    let g = a.len();
    let mut total = 0.0;
    for i in 0..g {
        if a.coeffs[i] == 0.0 {
            continue;
        }
        let (n1, v1) = order_index(i);
        for j in 0..g {
            let (n2, v2) = order_index(j);
            total += a.coeffs[i] * b.coeffs[j] * cross_unchecked(n1, v1, n2, v2);
        }
    }
    Ok(total)
}

/// Second differences `D_n beta_n` for one order block, computed without
/// forming the matrix.
pub fn second_differences(block: &[f64]) -> Vec<f64> {
    let k = block.len();
    (0..k)
        .map(|j| {
            let left = if j > 0 { block[j - 1] } else { 0.0 };
            let right = if j + 1 < k { block[j + 1] } else { 0.0 };
            left - 2.0 * block[j] + right
        })
        .collect()
}

/// Whether every order block lies in the shape cone for `direction`:
/// `D_n beta_n >= 0` (convex) for a negative direction, `<= 0` (concave) for a
/// positive one. The cone boundary counts as inside.
pub fn satisfies_shape(coeffs: &RbpCoefficientSet, direction: ImprovementDirection) -> bool {
    (2..=coeffs.max_order).all(|n| {
        second_differences(coeffs.order_block(n))
            .into_iter()
            .all(|d| match direction {
                ImprovementDirection::Negative => d >= 0.0,
                ImprovementDirection::Positive => d <= 0.0,
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Adaptive Simpson; kept independent of the closed forms above.
    fn quad<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            let m = 0.5 * (a + b);
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        }
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, left, tol / 2.0, depth - 1) + rec(f, m, b, right, tol / 2.0, depth - 1)
        }
        rec(f, a, b, simpson(f, a, b), tol, 40)
    }

    fn raw_basis(n: usize, v: usize, z: f64) -> f64 {
        let mut c = 1.0;
        for k in 0..v {
            c *= (n - k) as f64 / (k + 1) as f64;
        }
        c * z.powi(v as i32) * (1.0 - z).powi((n - v) as i32)
    }

    #[test]
    fn basis_examples() {
        assert_eq!(eval_basis(2, 1, 0.5).unwrap(), 0.5);
        assert_eq!(eval_basis(3, 1, 0.0).unwrap(), 0.0);
        assert!((eval_basis(4, 2, 0.3).unwrap() - 0.2646).abs() < 1e-12);
        assert!(eval_basis(3, 3, 0.5).is_err());
        assert!(eval_basis(3, 0, 0.5).is_err());
        assert!(eval_basis(1, 1, 0.5).is_err());
    }

    #[test]
    fn flat_index_round_trip() {
        for flat in 0..num_coeffs(12) {
            let (n, v) = order_index(flat);
            assert_eq!(flat_index(n, v), flat);
        }
        assert_eq!(order_index(0), (2, 1));
        assert_eq!(order_index(2), (3, 2));
        assert_eq!(order_index(3), (4, 1));
    }

    #[test]
    fn rbp_examples() {
        let zero = RbpCoefficientSet::zeros(5).unwrap();
        assert_eq!(eval_rbp(&zero, 0.37).unwrap(), 0.0);
        let one = RbpCoefficientSet::from_vec(2, vec![1.0]).unwrap();
        assert_eq!(eval_rbp(&one, 0.5).unwrap(), 0.5);
        let three = RbpCoefficientSet::from_vec(3, vec![1.0, 1.0, -1.0]).unwrap();
        assert!((eval_rbp(&three, 0.25).unwrap() - 0.65625).abs() < 1e-14);
    }

    #[test]
    fn integral_examples() {
        assert!((basis_integral(2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((basis_integral(5).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(basis_integral(1).is_err());
        let q = quad(&|z| raw_basis(2, 1, z), 0.0, 1.0, 1e-14);
        assert!((q - basis_integral(2).unwrap()).abs() < 1e-12);

        assert!((cross_integral(2, 1, 2, 1).unwrap() - 2.0 / 15.0).abs() < 1e-14);
        assert!((cross_integral(3, 1, 2, 1).unwrap() - 0.1).abs() < 1e-14);
        assert_eq!(
            cross_integral(5, 2, 3, 1).unwrap(),
            cross_integral(3, 1, 5, 2).unwrap()
        );
        assert!(cross_integral(2, 2, 2, 1).is_err());

        let three = RbpCoefficientSet::from_vec(2, vec![3.0]).unwrap();
        assert!((integral_of_sum(&three) - 1.0).abs() < 1e-15);
        let one = RbpCoefficientSet::from_vec(2, vec![1.0]).unwrap();
        assert!((integral_of_square(&one, &one).unwrap() - 2.0 / 15.0).abs() < 1e-15);
        let other = RbpCoefficientSet::zeros(3).unwrap();
        assert!(integral_of_square(&one, &other).is_err());
    }

    #[test]
    fn cross_integral_matches_quadrature_to_order_8() {
        for n1 in 2..=8 {
            for v1 in 1..n1 {
                for n2 in 2..=8 {
                    for v2 in 1..n2 {
                        let q = quad(
                            &|z| raw_basis(n1, v1, z) * raw_basis(n2, v2, z),
                            0.0,
                            1.0,
                            1e-15,
                        );
                        let c = cross_integral(n1, v1, n2, v2).unwrap();
                        assert!((q - c).abs() < 1e-10, "({n1},{v1},{n2},{v2}) {q} vs {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn convexity_matrix_examples() {
        let d3 = convexity_matrix(3).unwrap();
        assert_eq!(d3, DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]));
        assert_eq!(convexity_matrix(2).unwrap(), DMatrix::from_element(1, 1, -2.0));
        let d5 = convexity_matrix(5).unwrap();
        assert_eq!(d5.nrows(), 4);
        assert_eq!(d5[(0, 1)], 1.0);
        assert_eq!(d5[(0, 2)], 0.0);
        assert!(convexity_matrix(1).is_err());
        // Matrix form agrees with the direct second differences.
        let block = [0.3, -1.2, 0.7, 2.0];
        let via_matrix = &d5 * nalgebra::DVector::from_column_slice(&block);
        let direct = second_differences(&block);
        for (a, b) in via_matrix.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn convexity_matrix_tracks_second_derivative() {
        // For a single order block D_n beta_n >= 0 must give a convex curve.
        let beta = RbpCoefficientSet::from_vec(5, {
            let mut c = vec![0.0; num_coeffs(5)];
            // order-5 block: a discrete convex sequence
            let start = flat_index(5, 1);
            c[start..start + 4].copy_from_slice(&[-1.0, -1.5, -1.5, -1.0]);
            c
        })
        .unwrap();
        assert!(satisfies_shape(&beta, ImprovementDirection::Negative));
        let h = 1e-3;
        let mut z = h;
        while z < 1.0 - h {
            let d2 = beta.eval(z + h) - 2.0 * beta.eval(z) + beta.eval(z - h);
            assert!(d2 >= -1e-10, "z={z} d2={d2}");
            z += 0.01;
        }
    }

    #[test]
    fn shape_examples() {
        let zero = RbpCoefficientSet::zeros(4).unwrap();
        assert!(satisfies_shape(&zero, ImprovementDirection::Negative));
        assert!(satisfies_shape(&zero, ImprovementDirection::Positive));
        let convex = RbpCoefficientSet::from_vec(3, vec![-1.0, -1.0, -1.0]).unwrap();
        assert!(satisfies_shape(&convex, ImprovementDirection::Negative));
        let concave = RbpCoefficientSet::from_vec(2, vec![1.0]).unwrap();
        assert!(!satisfies_shape(&concave, ImprovementDirection::Negative));
        assert!(satisfies_shape(&concave, ImprovementDirection::Positive));
    }

    fn coeff_set(max_order: usize) -> impl Strategy<Value = RbpCoefficientSet> {
        prop::collection::vec(-5.0f64..5.0, num_coeffs(max_order))
            .prop_map(move |c| RbpCoefficientSet::from_vec(max_order, c).unwrap())
    }

    proptest! {
        #[test]
        fn endpoints_vanish(set in (2usize..9).prop_flat_map(coeff_set)) {
            prop_assert_eq!(set.eval(0.0), 0.0);
            prop_assert_eq!(set.eval(1.0), 0.0);
        }

        #[test]
        fn square_integral_nonnegative(set in (2usize..9).prop_flat_map(coeff_set)) {
            prop_assert!(integral_of_square(&set, &set).unwrap() >= 0.0);
        }

        #[test]
        fn integrals_match_quadrature(set in coeff_set(5)) {
            let q = quad(&|z| set.eval(z), 0.0, 1.0, 1e-14);
            prop_assert!((q - integral_of_sum(&set)).abs() < 1e-10);
            let q2 = quad(&|z| set.eval(z).powi(2), 0.0, 1.0, 1e-14);
            prop_assert!((q2 - integral_of_square(&set, &set).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn convex_sets_have_nonnegative_second_difference(
            raw in prop::collection::vec(0.0f64..2.0, num_coeffs(5))
        ) {
            // Build each order block from nonnegative second differences, which
            // lands inside the convex cone by construction.
            let mut coeffs = vec![0.0; num_coeffs(5)];
            for n in 2..=5usize {
                let k = n - 1;
                let d = nalgebra::DMatrix::from_fn(k, k, |i, j| {
                    if i == j { -2.0 } else if i.abs_diff(j) == 1 { 1.0 } else { 0.0 }
                });
                let start = flat_index(n, 1);
                let w = nalgebra::DVector::from_column_slice(&raw[start..start + k]);
                let b = d.lu().solve(&w).unwrap();
                coeffs[start..start + k].copy_from_slice(b.as_slice());
            }
            let set = RbpCoefficientSet::from_vec(5, coeffs).unwrap();
            // roundoff can leave a -1e-16 second difference
            let near_cone = (2..=5)
                .all(|n| second_differences(set.order_block(n)).iter().all(|d| *d > -1e-12));
            prop_assert!(satisfies_shape(&set, ImprovementDirection::Negative) || near_cone);
            let h = 1e-3;
            for k in 1..999 {
                let z = k as f64 * 1e-3;
                let d2 = set.eval(z + h) - 2.0 * set.eval(z) + set.eval(z - h);
                prop_assert!(d2 >= -1e-8);
            }
        }
    }
}
