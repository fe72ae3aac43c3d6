//! Random-variate generators and sampling kernels used by the Gibbs sampler.
//!
//! Every function takes an explicit generator; nothing here holds global
//! state.

mod adaptive;
mod gaussian;
mod gig;
mod tmvn;
mod truncnorm;

pub use adaptive::{AdaptiveMhConfig, AdaptiveMhState};
pub use gaussian::{cholesky_with_jitter, sample_gaussian_precision};
pub use gig::gig_sample;
pub use tmvn::{truncated_mvn_cone, ConeConstraint, ConeOptions, ConeSign};
pub use truncnorm::{log_normal_cdf, normal_cdf, normal_quantile, truncated_normal};

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

#[inline]
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `Ga(shape, rate)` draw.
pub fn gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && rate > 0.0, "gamma({shape}, {rate})");
    Gamma::new(shape, 1.0 / rate)
        .expect("positive gamma parameters")
        .sample(rng)
}

/// `IG(shape, scale)` draw: the reciprocal of a `Ga(shape, scale)` draw.
pub fn inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && scale > 0.0, "inv_gamma({shape}, {scale})");
    let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    scale / g
}
