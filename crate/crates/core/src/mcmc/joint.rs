//! Forward simulation from the prior and the likelihood, used to check the
//! sampler against the joint distribution.

use rand::Rng;

use crate::bernstein::{satisfies_shape, RbpCoefficientSet};
use crate::error::{invalid, Result};
use crate::model::{Dataset, ParamState, PriorConfig, StateDims};
use crate::samplers::{gamma, inv_gamma, std_normal, truncated_normal};

/// Draw every parameter and latent from the prior. Needs proper priors on
/// the fixed effects.
pub fn sample_prior<R: Rng + ?Sized>(dims: &StateDims, prior: &PriorConfig, rng: &mut R) -> Result<ParamState> {
    if prior.delta_prior_precision <= 0.0 || (dims.num_confounders > 0 && prior.zeta_prior_precision <= 0.0) {
        return Err(invalid("prior simulation needs proper fixed-effect priors"));
    }
    let mut s = ParamState::baseline(dims);
    let m = dims.num_athletes();
    let g = dims.num_coeffs();
    let ig = |p: crate::model::InvGammaPrior, rng: &mut R| inv_gamma(p.shape, p.scale, rng);
    let ga = |p: crate::model::GammaPrior, rng: &mut R| gamma(p.shape, p.rate, rng);

    let sd_delta = prior.delta_prior_precision.powf(-0.5);
    s.delta.iter_mut().for_each(|v| *v = sd_delta * std_normal(rng));
    if dims.num_confounders > 0 {
        let sd_zeta = prior.zeta_prior_precision.powf(-0.5);
        s.zeta.iter_mut().for_each(|v| *v = sd_zeta * std_normal(rng));
    }
    s.alpha = prior.alpha_prior_variance.sqrt() * std_normal(rng);
    s.nu1 = ga(prior.nu_prior, rng);
    s.nu2 = ga(prior.nu_prior, rng);
    s.nu_mu = ga(prior.nu_prior, rng);
    s.nu_eta = ga(prior.nu_prior, rng);

    s.sigma2_a = ig(prior.sigma2_a_prior, rng);
    s.sigma2_m = ig(prior.sigma2_m_prior, rng);
    for v in s.sigma2.iter_mut() {
        *v = inv_gamma(s.sigma2_a, s.sigma2_a / s.sigma2_m, rng);
    }
    s.sigma2_mu = ig(prior.sigma2_mu_prior, rng);
    s.sigma2_eta = ig(prior.sigma2_eta_prior, rng);

    s.lambda0 = ga(prior.lambda0_prior, rng);
    s.lambda1 = ig(prior.lambda1_prior, rng);
    s.tau0 = ga(prior.tau0_prior, rng);
    s.tau1 = ig(prior.tau1_prior, rng);
    for i in 0..m {
        s.lambda2[i] = gamma(s.lambda0, s.lambda0 / s.lambda1, rng);
        s.tau2[i] = gamma(s.tau0, s.tau0 / s.tau1, rng);
    }
    for j in 0..g {
        s.c2[j] = ga(prior.c2_prior, rng);
        s.d2[j] = ga(prior.d2_prior, rng);
    }

    // (sigma2_beta, beta) jointly by rejection into the shape cone
    let mut tries = 0usize;
    loop {
        tries += 1;
        if tries > 1_000_000 {
            return Err(invalid("shape cone has negligible prior mass"));
        }
        let var: Vec<f64> = (0..g).map(|_| ig(prior.sigma2_beta_prior, rng)).collect();
        let coeffs: Vec<f64> = var.iter().map(|v| v.sqrt() * std_normal(rng)).collect();
        let set = RbpCoefficientSet::from_vec(dims.max_order, coeffs)?;
        if satisfies_shape(&set, prior.direction) {
            s.sigma2_beta = var;
            s.beta = set;
            break;
        }
    }
    for i in 0..m {
        for j in 0..g {
            let v = s.beta.as_slice()[j] + (s.tau2[i] * s.d2[j]).sqrt() * std_normal(rng);
            s.beta_athlete[i].as_mut_slice()[j] = v;
        }
        for b in s.beta_season[i].iter_mut() {
            for j in 0..g {
                b.as_mut_slice()[j] = s.beta_athlete[i].as_slice()[j] + (s.lambda2[i] * s.c2[j]).sqrt() * std_normal(rng);
            }
        }
        s.omega_mu[i] = inv_gamma(s.nu_mu / 2.0, s.nu_mu / 2.0, rng);
        let knots = &mut s.knots[i];
        knots[0] = (s.sigma2_mu * s.omega_mu[i]).sqrt() * std_normal(rng);
        for k in 1..knots.len() {
            let w = inv_gamma(s.nu_eta / 2.0, s.nu_eta / 2.0, rng);
            s.omega_eta[i][k - 1] = w;
            knots[k] = knots[k - 1] + (s.sigma2_eta * w).sqrt() * std_normal(rng);
        }
        for k in 0..s.kappa[i].len() {
            s.omega[i][k] = inv_gamma(s.nu1 / 2.0, s.nu1 / 2.0, rng);
            s.phi[i][k] = inv_gamma(s.nu2 / 2.0, s.nu2 / 2.0, rng);
            s.kappa[i][k] = truncated_normal(0.0, s.sigma2[i] * s.phi[i][k], 0.0, f64::INFINITY, rng)?;
        }
    }
    Ok(s)
}

/// Replace every performance value by a draw from the likelihood given all
/// parameters and latents.
pub fn simulate_responses<R: Rng + ?Sized>(
    template: &Dataset,
    prior: &PriorConfig,
    state: &ParamState,
    rng: &mut R,
) -> Dataset {
    let mut ds = template.clone();
    for (i, a) in ds.athletes.iter_mut().enumerate() {
        for k in 0..a.performances.len() {
            let mean = state.mean_response(template, prior, i, k);
            let sd = (state.sigma2[i] * state.omega[i][k]).sqrt();
            a.performances[k].value = mean + sd * std_normal(rng);
        }
    }
    ds
}
