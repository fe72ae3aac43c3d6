//! The skewed heavy-tailed error law and its scale-mixture construction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::skew_loading;
use crate::samplers::{inv_gamma, std_normal};

/// Error distribution `eps = eps* + a kappa` with `eps* ~ N(0, omega sigma2)`,
/// `kappa ~ N+(0, phi sigma2)`, `a = alpha / sqrt(1 + alpha^2)` and
/// `omega ~ IG(nu1/2, nu1/2)`, `phi ~ IG(nu2/2, nu2/2)`.
///
/// An infinite degree of freedom fixes the matching mixing variable at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorLaw {
    pub alpha: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub sigma2: f64,
}

impl ErrorLaw {
    pub fn new(alpha: f64, nu1: f64, nu2: f64, sigma2: f64) -> Result<Self> {
        if !alpha.is_finite() || !(nu1 > 0.0) || !(nu2 > 0.0) || !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!(
                "error law needs finite alpha and positive nu1, nu2, sigma2 (got {alpha}, {nu1}, {nu2}, {sigma2})"
            )));
        }
        Ok(Self { alpha, nu1, nu2, sigma2 })
    }

    /// One draw with independent mixing variables for the symmetric and the
    /// skewing parts.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let omega = mixing(self.nu1, rng);
        let phi = mixing(self.nu2, rng);
        self.combine(omega, phi, rng)
    }

    /// One draw with a single mixing variable (`nu1`) shared by both parts.
    /// Equal degrees of freedom in this form give the skew-t law.
    pub fn sample_shared_scale<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let omega = mixing(self.nu1, rng);
        self.combine(omega, omega, rng)
    }

    fn combine<R: Rng + ?Sized>(&self, omega: f64, phi: f64, rng: &mut R) -> f64 {
        let sd = self.sigma2.sqrt();
        let sym = (omega).sqrt() * sd * std_normal(rng);
        let kappa = phi.sqrt() * sd * std_normal(rng).abs();
        sym + skew_loading(self.alpha) * kappa
    }
}

fn mixing<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> f64 {
    if nu.is_infinite() {
        1.0
    } else {
        inv_gamma(nu / 2.0, nu / 2.0, rng)
    }
}

/// One draw from the error law with independent mixing variables.
pub fn sample_error<R: Rng + ?Sized>(alpha: f64, nu1: f64, nu2: f64, sigma2: f64, rng: &mut R) -> Result<f64> {
    Ok(ErrorLaw::new(alpha, nu1, nu2, sigma2)?.sample(rng))
}
