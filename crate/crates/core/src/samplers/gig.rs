//! Generalized inverse Gaussian variates.
//!
//! Density proportional to `x^(lambda-1) exp(-(chi/x + psi x)/2)` on `x > 0`.
//! The sampler follows the ratio-of-uniforms and hat-function methods of
//! Hörmann and Leydold, choosing between them by `lambda` and
//! `omega = sqrt(chi psi)`.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::samplers::gamma;

/// Below this `omega` the distribution is numerically a (inverse) gamma.
const OMEGA_ZERO: f64 = 10.0 * f64::EPSILON;

/// Draw from `GIG(lambda, chi, psi)`.
///
/// `chi = 0` requires `lambda > 0` (gamma limit) and `psi = 0` requires
/// `lambda < 0` (inverse gamma limit).
pub fn gig_sample<R: Rng + ?Sized>(lambda: f64, chi: f64, psi: f64, rng: &mut R) -> Result<f64> {
    if !lambda.is_finite() || !(chi >= 0.0) || !(psi >= 0.0) || !chi.is_finite() || !psi.is_finite() {
        return Err(invalid(format!("GIG({lambda}, {chi}, {psi})")));
    }
    if chi == 0.0 && psi == 0.0 {
        return Err(invalid("GIG with chi = psi = 0 is improper"));
    }
    let omega = (chi * psi).sqrt();
    if omega < OMEGA_ZERO {
        return if lambda > 0.0 && psi > 0.0 {
            Ok(gamma(lambda, psi / 2.0, rng))
        } else if lambda < 0.0 && chi > 0.0 {
            Ok(1.0 / gamma(-lambda, chi / 2.0, rng))
        } else {
            Err(invalid(format!(
                "GIG({lambda}, {chi}, {psi}) is improper in the degenerate limit"
            )))
        };
    }
    let scale = (chi / psi).sqrt();
    let y = if lambda < 0.0 {
        1.0 / standard(-lambda, omega, rng)
    } else {
        standard(lambda, omega, rng)
    };
    Ok(scale * y)
}

/// Draw from the density proportional to `x^(lambda-1) exp(-omega (x + 1/x) / 2)`
/// for `lambda >= 0`, `omega > 0`.
fn standard<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_no_shift(lambda, omega, rng)
    } else {
        hat_concave(lambda, omega, rng)
    }
}

fn mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn rou_no_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v: f64 = rng.random();
        let x = u / v;
        if x > 0.0 && x.is_finite() && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // extremes of u(x) = (x - xm) sqrt(f(x)) are roots of a cubic
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let phi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (phi / 3.0).cos() - a / 3.0;
    let y2 = fak * (phi / 3.0 + 4.0 / 3.0 * PI).cos() - a / 3.0;
    let u_plus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let u_minus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();

    loop {
        let u = u_minus + rng.random::<f64>() * (u_plus - u_minus);
        let v: f64 = rng.random();
        let x = u / v + xm;
        if x <= 0.0 || !x.is_finite() {
            continue;
        }
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Three-piece hat for `0 <= lambda < 1` and small `omega`, where the
/// density is log-concave only near the origin.
fn hat_concave<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;

    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let start = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * start).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        if !(x > 0.0 && x.is_finite()) {
            continue;
        }
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// CDF of `GIG(lambda, chi, psi)` on a fine log grid, by trapezoid
    /// integration of the unnormalised density.
    fn numeric_cdf(lambda: f64, chi: f64, psi: f64) -> (Vec<f64>, Vec<f64>) {
        let logf = |x: f64| (lambda - 1.0) * x.ln() - 0.5 * (chi / x + psi * x);
        // locate the bulk via the mode
        let root = ((lambda - 1.0).powi(2) + chi * psi).sqrt();
        let m = if lambda >= 1.0 {
            ((lambda - 1.0) + root) / psi
        } else {
            chi / (root - (lambda - 1.0))
        };
        let m = m.max(1e-12);
        let (lo, hi) = ((m.ln() - 25.0), (m.ln() + 25.0));
        let n = 400_000;
        let h = (hi - lo) / n as f64;
        let xs: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * h).exp()).collect();
        let peak = xs.iter().map(|&x| logf(x) + x.ln()).fold(f64::NEG_INFINITY, f64::max);
        let g: Vec<f64> = xs.iter().map(|&x| (logf(x) + x.ln() - peak).exp()).collect();
        let mut cdf = vec![0.0; n + 1];
        for i in 1..=n {
            cdf[i] = cdf[i - 1] + 0.5 * h * (g[i] + g[i - 1]);
        }
        let total = cdf[n];
        cdf.iter_mut().for_each(|c| *c /= total);
        (xs, cdf)
    }

    fn chi_square_stat(lambda: f64, chi: f64, psi: f64, seed: u64) -> f64 {
        let bins = 20;
        let draws = 40_000;
        let (xs, cdf) = numeric_cdf(lambda, chi, psi);
        let mut edges = Vec::new();
        for b in 1..bins {
            let target = b as f64 / bins as f64;
            let i = cdf.partition_point(|c| *c < target);
            edges.push(xs[i.min(xs.len() - 1)]);
        }
        let mut counts = vec![0usize; bins];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..draws {
            let x = gig_sample(lambda, chi, psi, &mut rng).unwrap();
            assert!(x > 0.0 && x.is_finite());
            counts[edges.partition_point(|e| *e < x)] += 1;
        }
        let expected = draws as f64 / bins as f64;
        counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum()
    }

    #[test]
    fn goodness_of_fit_across_regimes() {
        // 19 degrees of freedom: the 0.999 quantile is 43.82
        let cases = [
            (0.5, 1.0, 2.0),     // no-shift ROU
            (0.5, 1.0, 1.0),     // no-shift ROU
            (3.0, 2.0, 5.0),     // shifted ROU
            (0.3, 0.01, 0.5),    // concave hat, small omega
            (0.0, 0.02, 0.02),   // concave hat, lambda = 0
            (-2.5, 4.0, 0.3),    // reciprocal path
            (-30.0, 12.0, 2.0),  // strongly negative, as in the shrinkage updates
            (1.0, 1e-20, 3.0),   // gamma limit
            (-4.0, 2.0, 1e-30),  // inverse gamma limit
            (25.0, 400.0, 0.01), // large omega
        ];
        for (i, &(l, c, p)) in cases.iter().enumerate() {
            let stat = chi_square_stat(l, c, p, 100 + i as u64);
            assert!(stat < 43.82, "GIG({l},{c},{p}): chi2 = {stat}");
        }
    }

    #[test]
    fn half_order_mean_closed_form() {
        // K_{3/2}(w) = K_{1/2}(w) (1 + 1/w), so GIG(1/2, 1, 1) has mean 2
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 400_000;
        let m = (0..n).map(|_| gig_sample(0.5, 1.0, 1.0, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m - 2.0).abs() < 0.02, "{m}");
    }

    fn numeric_mean(lambda: f64, chi: f64, psi: f64) -> f64 {
        let (xs, cdf) = numeric_cdf(lambda, chi, psi);
        // E[X] = integral of (1 - F)
        let mut m = 0.0;
        for i in 1..xs.len() {
            m += 0.5 * ((1.0 - cdf[i]) + (1.0 - cdf[i - 1])) * (xs[i] - xs[i - 1]);
        }
        m
    }

    fn sample_mean(lambda: f64, chi: f64, psi: f64, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| gig_sample(lambda, chi, psi, &mut rng).unwrap()).sum::<f64>() / n as f64
    }

    #[test]
    fn bessel_ratio_mean() {
        let oracle = numeric_mean(1.0, 2.0, 2.0);
        // K_2(2) / K_1(2) = 0.25376 / 0.13987 from tables
        assert!((oracle - 1.8143).abs() < 2e-3, "{oracle}");
        let m = sample_mean(1.0, 2.0, 2.0, 1_000_000, 9);
        assert!((m / oracle - 1.0).abs() < 0.01, "{m} vs {oracle}");
    }

    #[test]
    fn boundary_reductions() {
        // GIG(a, 0, 2b) = Ga(a, b): mean a / b
        let m = sample_mean(3.0, 0.0, 4.0, 200_000, 10);
        assert!((m - 1.5).abs() < 0.01, "{m}");
        // GIG(-a, 2b, 0) = IG(a, b): mean b / (a - 1)
        let m = sample_mean(-4.0, 6.0, 0.0, 200_000, 11);
        assert!((m - 1.0).abs() < 0.01, "{m}");
    }

    #[test]
    fn rejects_improper() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(gig_sample(1.0, 0.0, 0.0, &mut rng).is_err());
        assert!(gig_sample(-1.0, 0.0, 1.0, &mut rng).is_err());
        assert!(gig_sample(1.0, 1.0, 0.0, &mut rng).is_err());
        assert!(gig_sample(1.0, -1.0, 1.0, &mut rng).is_err());
    }
}
