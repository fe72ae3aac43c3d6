use rand::Rng;
use rand_distr::{Distribution, Exp1};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{invalid, Result};

/// Standardised truncation points beyond this use tail rejection instead of
/// the inverse CDF.
const TAIL_CROSSOVER: f64 = 4.0;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Log of the standard normal CDF, accurate far into the lower tail.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > -20.0 {
        normal_cdf(x).ln()
    } else {
        // Mills-ratio expansion
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Draw from `N(mean, variance)` restricted to `[lower, upper]`. Either bound
/// may be infinite.
pub fn truncated_normal<R: Rng + ?Sized>(
    mean: f64,
    variance: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(variance > 0.0 && variance.is_finite()) || !mean.is_finite() {
        return Err(invalid(format!("truncated normal N({mean}, {variance})")));
    }
    if !(lower < upper) {
        return Err(invalid(format!("empty truncation interval [{lower}, {upper}]")));
    }
    let sd = variance.sqrt();
    let a = (lower - mean) / sd;
    let b = (upper - mean) / sd;
    let x = standard(a, b, rng);
    Ok((mean + sd * x).clamp(lower, upper))
}

fn standard<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a >= TAIL_CROSSOVER {
        right_tail(a, b, rng)
    } else if b <= -TAIL_CROSSOVER {
        -right_tail(-b, -a, rng)
    } else {
        let u: f64 = rng.random();
        let x = if a > 0.0 {
            // upper-tail probabilities keep precision for positive a
            let qa = normal_cdf(-a);
            let qb = normal_cdf(-b);
            -normal_quantile(qb + u * (qa - qb))
        } else {
            let pa = normal_cdf(a);
            let pb = normal_cdf(b);
            normal_quantile(pa + u * (pb - pa))
        };
        x.clamp(a, b)
    }
}

/// `N(0,1)` restricted to `[a, b]` with `a >= TAIL_CROSSOVER`.
fn right_tail<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b - a < 1.0 / a {
        // narrow slab: uniform proposal, acceptance >= exp(-1)
        loop {
            let x = a + (b - a) * rng.random::<f64>();
            if rng.random::<f64>() <= (-0.5 * (x * x - a * a)).exp() {
                return x;
            }
        }
    }
    // exponential proposal with the optimal rate
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = Exp1.sample(rng);
        let x = a + e / rate;
        if x > b {
            continue;
        }
        if rng.random::<f64>() <= (-0.5 * (x - rate) * (x - rate)).exp() {
            return x;
        }
    }
}
