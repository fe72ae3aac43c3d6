//! Full-conditional updates of the Gibbs sampler.
//!
//! Each function redraws one block of [`ParamState`] given everything else.
//! Location blocks are Gaussian, and the population block is Gaussian restricted
//! to the shape cone. Variance blocks are (generalized) inverse gamma. Parameters
//! without a standard conditional use adaptive random-walk Metropolis.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bernstein::{convexity_matrix, satisfies_shape, ImprovementDirection};
use crate::error::{Error, Result};
use crate::mcmc::design::{AthleteDesign, DesignCache};
use crate::model::{Dataset, ParamState, PriorConfig};
use crate::samplers::{
    cholesky_with_jitter, gig_sample, inv_gamma, log_normal_cdf, sample_gaussian_precision, truncated_mvn_cone,
    truncated_normal, AdaptiveMhConfig, AdaptiveMhState, ConeConstraint, ConeOptions, ConeSign,
};

/// Everything the updates read but never modify.
#[derive(Debug, Clone, Copy)]
pub struct ModelContext<'a> {
    pub dataset: &'a Dataset,
    pub prior: &'a PriorConfig,
    pub design: &'a DesignCache,
}

/// Adaptive Metropolis states, one per non-conjugate parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tuners {
    pub sigma2_a: AdaptiveMhState,
    pub lambda0: AdaptiveMhState,
    pub tau0: AdaptiveMhState,
    pub nu1: AdaptiveMhState,
    pub nu2: AdaptiveMhState,
    pub nu_mu: AdaptiveMhState,
    pub nu_eta: AdaptiveMhState,
    pub alpha: AdaptiveMhState,
}

impl Tuners {
    pub fn new(config: AdaptiveMhConfig) -> Self {
        let t = || AdaptiveMhState::new(1, config);
        Self {
            sigma2_a: t(),
            lambda0: t(),
            tau0: t(),
            nu1: t(),
            nu2: t(),
            nu_mu: t(),
            nu_eta: t(),
            alpha: t(),
        }
    }

    fn all_mut(&mut self) -> [&mut AdaptiveMhState; 8] {
        [
            &mut self.sigma2_a,
            &mut self.lambda0,
            &mut self.tau0,
            &mut self.nu1,
            &mut self.nu2,
            &mut self.nu_mu,
            &mut self.nu_eta,
            &mut self.alpha,
        ]
    }

    pub fn freeze(&mut self) {
        self.all_mut().into_iter().for_each(AdaptiveMhState::freeze);
    }

    pub fn reset_counts(&mut self) {
        self.all_mut().into_iter().for_each(AdaptiveMhState::reset_counts);
    }

    /// Acceptance rates by parameter name.
    pub fn acceptance(&self) -> Vec<(String, f64)> {
        [
            ("sigma2_a", &self.sigma2_a),
            ("lambda0", &self.lambda0),
            ("tau0", &self.tau0),
            ("nu1", &self.nu1),
            ("nu2", &self.nu2),
            ("nu_mu", &self.nu_mu),
            ("nu_eta", &self.nu_eta),
            ("alpha", &self.alpha),
        ]
        .into_iter()
        .map(|(n, t)| (n.to_string(), t.acceptance_rate()))
        .collect()
    }
}

/// Log-scale Metropolis step for a positive parameter; `log_density` is on
/// the natural scale and the Jacobian is added here.
fn positive_mh<R, F>(tuner: &mut AdaptiveMhState, current: f64, log_density: F, rng: &mut R) -> f64
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    let u = tuner.step_scalar(
        current.ln(),
        |u| {
            let x = u.exp();
            if !(x > 0.0 && x.is_finite()) {
                return f64::NEG_INFINITY;
            }
            log_density(x) + u
        },
        rng,
    );
    u.exp()
}

/// Fitted values `h*_{i,s}(z)` for every row of athlete `i`.
fn seasonal_fit(state: &ParamState, a: &AthleteDesign, i: usize) -> DVector<f64> {
    let mut out = DVector::zeros(a.len());
    for (s, rows) in a.season_rows.iter().enumerate() {
        let coef = DVector::from_column_slice(state.beta_season[i][s].as_slice());
        for r in rows.clone() {
            out[r] = a.rbp.row(r).transpose().dot(&coef);
        }
    }
    out
}

fn fixed_fit(state: &ParamState, a: &AthleteDesign) -> DVector<f64> {
    let delta = DVector::from_column_slice(&state.delta);
    let zeta = DVector::from_column_slice(&state.zeta);
    let mut f = &a.poly * delta;
    if !state.zeta.is_empty() {
        f += &a.confounders * zeta;
    }
    f
}

/// `y - location`, the part of each performance explained by the skewing
/// component and the symmetric error.
pub fn skew_residuals(state: &ParamState, ctx: &ModelContext, i: usize) -> DVector<f64> {
    let a = &ctx.design.athletes[i];
    let knots = DVector::from_column_slice(&state.knots[i]);
    &a.response - fixed_fit(state, a) - &a.interp * knots - seasonal_fit(state, a, i)
}

/// Symmetric-error residuals `y - location - a kappa`.
pub fn error_residuals(state: &ParamState, ctx: &ModelContext, i: usize) -> DVector<f64> {
    let c = state.skew_loading();
    let mut r = skew_residuals(state, ctx, i);
    for (k, v) in r.iter_mut().enumerate() {
        *v -= c * state.kappa[i][k];
    }
    r
}

/// Prior precision `Phi^T Psi^{-1} Phi` of the knots of athlete `i`.
fn knot_prior_precision(state: &ParamState, a: &AthleteDesign, i: usize) -> DMatrix<f64> {
    let kf = a.seasons() + 1;
    let mut w = DVector::zeros(kf);
    w[0] = 1.0 / (state.sigma2_mu * state.omega_mu[i]);
    for s in 0..a.seasons() {
        w[s + 1] = 1.0 / (state.sigma2_eta * state.omega_eta[i][s]);
    }
    a.rw.transpose() * DMatrix::from_diagonal(&w) * &a.rw
}

fn symmetrize(q: &mut DMatrix<f64>) {
    let n = q.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (q[(i, j)] + q[(j, i)]);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
}

/// Joint draw of the athlete-level coefficients and trend knots with the
/// season coefficients integrated out, followed by each season's
/// coefficients given the new values.
pub fn update_athlete_block<R: Rng + ?Sized>(
    state: &mut ParamState,
    ctx: &ModelContext,
    i: usize,
    rng: &mut R,
) -> Result<()> {
    let a = &ctx.design.athletes[i];
    let g = ctx.design.num_coeffs;
    let kf = a.seasons() + 1;
    let dim = g + kf;
    let sigma2 = state.sigma2[i];
    let lambda2 = state.lambda2[i];
    let tau2 = state.tau2[i];
    let c = state.skew_loading();

    let mut r = &a.response - fixed_fit(state, a);
    for (k, v) in r.iter_mut().enumerate() {
        *v -= c * state.kappa[i][k];
    }

    let mut q = DMatrix::zeros(dim, dim);
    let mut b = DVector::zeros(dim);
    for j in 0..g {
        let prec = 1.0 / (tau2 * state.d2[j]);
        q[(j, j)] = prec;
        b[j] = prec * state.beta.as_slice()[j];
    }
    let knot_prior = knot_prior_precision(state, a, i);
    let mut block = q.view_mut((g, g), (kf, kf));
    block += &knot_prior;

    let c2 = DVector::from_column_slice(&state.c2);
    for rows in &a.season_rows {
        let ns = rows.len();
        if ns == 0 {
            continue;
        }
        let bs = a.rbp.rows(rows.start, ns);
        let zs = a.interp.rows(rows.start, ns);
        let mut v = &bs * DMatrix::from_diagonal(&(&c2 * lambda2)) * bs.transpose();
        for (k, row) in rows.clone().enumerate() {
            v[(k, k)] += sigma2 * state.omega[i][row];
        }
        let chol = cholesky_with_jitter(&v)?;
        let mut u = DMatrix::zeros(ns, dim);
        u.view_mut((0, 0), (ns, g)).copy_from(&bs);
        u.view_mut((0, g), (ns, kf)).copy_from(&zs);
        let vinv_u = chol.solve(&u);
        let vinv_r = chol.solve(&r.rows(rows.start, ns).into_owned());
        q += u.transpose() * vinv_u;
        b += u.transpose() * vinv_r;
    }
    symmetrize(&mut q);
    let (_, theta) = sample_gaussian_precision(&q, &b, rng)?;
    state.beta_athlete[i]
        .as_mut_slice()
        .copy_from_slice(theta.rows(0, g).as_slice());
    state.knots[i].copy_from_slice(theta.rows(g, kf).as_slice());

    let knots = theta.rows(g, kf).into_owned();
    let trend = &a.interp * knots;
    for (s, rows) in a.season_rows.iter().enumerate() {
        let mut q2 = DMatrix::zeros(g, g);
        let mut b2 = DVector::zeros(g);
        for j in 0..g {
            let prec = 1.0 / (lambda2 * state.c2[j]);
            q2[(j, j)] = prec;
            b2[j] = prec * theta[j];
        }
        for row in rows.clone() {
            let w = 1.0 / (sigma2 * state.omega[i][row]);
            let x = a.rbp.row(row).transpose();
            q2 += &x * x.transpose() * w;
            b2 += &x * (w * (r[row] - trend[row]));
        }
        let (_, draw) = sample_gaussian_precision(&q2, &b2, rng)?;
        state.beta_season[i][s].as_mut_slice().copy_from_slice(draw.as_slice());
    }
    Ok(())
}

/// Redraw every half-normal skewing latent.
pub fn update_kappa<R: Rng + ?Sized>(state: &mut ParamState, ctx: &ModelContext, rng: &mut R) -> Result<()> {
    let c = state.skew_loading();
    for i in 0..state.num_athletes() {
        let e = skew_residuals(state, ctx, i);
        let sigma2 = state.sigma2[i];
        for k in 0..e.len() {
            let (mean, var) = kappa_conditional(c, e[k], state.omega[i][k], state.phi[i][k], sigma2);
            state.kappa[i][k] = truncated_normal(mean, var, 0.0, f64::INFINITY, rng)?;
        }
    }
    Ok(())
}

/// Mean and variance of the untruncated normal behind the conditional of one
/// skewing latent, given its residual `y - location`.
pub fn kappa_conditional(loading: f64, residual: f64, omega: f64, phi: f64, sigma2: f64) -> (f64, f64) {
    let prec = loading * loading / omega + 1.0 / phi;
    ((loading * residual / omega) / prec, sigma2 / prec)
}

/// Cone constraints on the population coefficient block for a prior.
pub fn shape_constraints(prior: &PriorConfig) -> Vec<ConeConstraint> {
    let sign = match prior.direction {
        ImprovementDirection::Negative => ConeSign::NonNegative,
        ImprovementDirection::Positive => ConeSign::NonPositive,
    };
    (2..=prior.max_order)
        .map(|n| ConeConstraint {
            matrix: convexity_matrix(n).expect("order >= 2"),
            sign,
        })
        .collect()
}

/// Cone-restricted joint draw of `(delta, zeta, beta)` with every trend
/// integrated out, then each trend given the new values, then the shift of
/// every lower-level coefficient by the change in `beta`.
pub fn update_population_block<R: Rng + ?Sized>(
    state: &mut ParamState,
    ctx: &ModelContext,
    cone: ConeOptions,
    rng: &mut R,
) -> Result<()> {
    let prior = ctx.prior;
    let d1 = ctx.design.degree + 1;
    let p = ctx.design.num_confounders;
    let g = ctx.design.num_coeffs;
    let width = d1 + p + g;
    let c = state.skew_loading();

    let mut q = DMatrix::zeros(width, width);
    let mut b = DVector::zeros(width);
    for j in 0..d1 {
        q[(j, j)] = prior.delta_prior_precision;
    }
    for j in 0..p {
        q[(d1 + j, d1 + j)] = prior.zeta_prior_precision;
    }
    for j in 0..g {
        q[(d1 + p + j, d1 + p + j)] = 1.0 / state.sigma2_beta[j];
    }

    struct Trend {
        chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
        cross: DMatrix<f64>,
        data: DVector<f64>,
    }
    let mut trends = Vec::with_capacity(state.num_athletes());
    let beta_old = DVector::from_column_slice(state.beta.as_slice());
    for (i, a) in ctx.design.athletes.iter().enumerate() {
        let n = a.len();
        let kf = a.seasons() + 1;
        // response net of the skewing part and the season deviations from beta
        let mut rr = a.response.clone();
        for (s, rows) in a.season_rows.iter().enumerate() {
            let dev = DVector::from_column_slice(state.beta_season[i][s].as_slice()) - &beta_old;
            for row in rows.clone() {
                rr[row] -= a.rbp.row(row).transpose().dot(&dev);
            }
        }
        for k in 0..n {
            rr[k] -= c * state.kappa[i][k];
        }
        let w = DVector::from_fn(n, |k, _| 1.0 / (state.sigma2[i] * state.omega[i][k]));
        let mut u = DMatrix::zeros(n, width);
        u.view_mut((0, 0), (n, d1)).copy_from(&a.poly);
        u.view_mut((0, d1), (n, p)).copy_from(&a.confounders);
        u.view_mut((0, d1 + p), (n, g)).copy_from(&a.rbp);
        let wu = DMatrix::from_diagonal(&w) * &u;
        let wz = DMatrix::from_diagonal(&w) * &a.interp;
        let wr = rr.component_mul(&w);

        let mut psi_star = knot_prior_precision(state, a, i) + a.interp.transpose() * &wz;
        symmetrize(&mut psi_star);
        let cross = a.interp.transpose() * &wu;
        let data = a.interp.transpose() * &wr;
        let chol = cholesky_with_jitter(&psi_star)?;
        let sol_cross = chol.solve(&cross);
        let sol_data = chol.solve(&data);
        q += u.transpose() * &wu - cross.transpose() * sol_cross;
        b += u.transpose() * &wr - cross.transpose() * sol_data;
        debug_assert_eq!(cross.nrows(), kf);
        trends.push(Trend { chol, cross, data });
    }
    symmetrize(&mut q);
    let chol = cholesky_with_jitter(&q)?;
    let mean = chol.solve(&b);

    let mut current = DVector::zeros(width);
    current.rows_mut(0, d1).copy_from_slice(&state.delta);
    current.rows_mut(d1, p).copy_from_slice(&state.zeta);
    current.rows_mut(d1 + p, g).copy_from(&beta_old);
    let constraints = shape_constraints(prior);

    let mut theta = None;
    for _ in 0..8 {
        let draw = truncated_mvn_cone(&mean, &q, d1 + p, &constraints, &current, cone, rng)?;
        let set = crate::bernstein::RbpCoefficientSet::from_vec(prior.max_order, draw.rows(d1 + p, g).iter().copied().collect())?;
        // roundoff in the orthant transform can put a boundary draw a hair outside
        if satisfies_shape(&set, prior.direction) {
            theta = Some(draw);
            break;
        }
    }
    let theta = theta.ok_or_else(|| Error::Invariant("population coefficients left the shape cone".into()))?;

    state.delta.copy_from_slice(theta.rows(0, d1).as_slice());
    state.zeta.copy_from_slice(theta.rows(d1, p).as_slice());
    let beta_new = theta.rows(d1 + p, g).into_owned();
    state.beta.as_mut_slice().copy_from_slice(beta_new.as_slice());

    for (i, t) in trends.iter().enumerate() {
        let lin = &t.data - &t.cross * &theta;
        let mean = t.chol.solve(&lin);
        let z = DVector::from_fn(mean.len(), |_, _| crate::samplers::std_normal(rng));
        let dev = t
            .chol
            .l()
            .tr_solve_lower_triangular(&z)
            .ok_or_else(|| Error::Numerical("singular trend factor".into()))?;
        state.knots[i].copy_from_slice((mean + dev).as_slice());
    }

    let shift = beta_new - beta_old;
    interweave_shift(state, shift.as_slice());
    Ok(())
}

/// Add `shift` to every athlete-level and season-level coefficient set.
pub fn interweave_shift(state: &mut ParamState, shift: &[f64]) {
    for set in state.beta_athlete.iter_mut().chain(state.beta_season.iter_mut().flatten()) {
        for (v, s) in set.as_mut_slice().iter_mut().zip(shift) {
            *v += s;
        }
    }
}

/// Observation scales `sigma_i^2` and their hyperparameters.
pub fn update_error_scales<R: Rng + ?Sized>(
    state: &mut ParamState,
    ctx: &ModelContext,
    tuners: &mut Tuners,
    rng: &mut R,
) -> Result<()> {
    let prior = ctx.prior;
    for i in 0..state.num_athletes() {
        let e = error_residuals(state, ctx, i);
        let mut ss = 0.0;
        for k in 0..e.len() {
            ss += e[k] * e[k] / state.omega[i][k] + state.kappa[i][k].powi(2) / state.phi[i][k];
        }
        let (shape, scale) = sigma2_conditional(state.sigma2_a, state.sigma2_m, e.len(), ss);
        state.sigma2[i] = inv_gamma(shape, scale, rng);
    }

    let m = state.num_athletes() as f64;
    let sum_ln: f64 = state.sigma2.iter().map(|s| s.ln()).sum();
    let sum_inv: f64 = state.sigma2.iter().map(|s| 1.0 / s).sum();
    let sigma2_m = state.sigma2_m;
    let hyper = prior.sigma2_a_prior;
    state.sigma2_a = positive_mh(
        &mut tuners.sigma2_a,
        state.sigma2_a,
        |a| {
            m * (a * (a / sigma2_m).ln() - ln_gamma(a)) - a * sum_ln - a * sum_inv / sigma2_m
                + hyper.log_density(a)
        },
        rng,
    );

    let (shape, scale) = sigma2_m_conditional(prior.sigma2_m_prior, state.sigma2_a, &state.sigma2);
    state.sigma2_m = inv_gamma(shape, scale, rng);
    Ok(())
}

/// Inverse gamma `(shape, scale)` of one athlete's observation scale given
/// `n` observations with weighted sum of squares `ss` (skew latents included).
pub fn sigma2_conditional(sigma2_a: f64, sigma2_m: f64, n: usize, ss: f64) -> (f64, f64) {
    (sigma2_a + n as f64, sigma2_a / sigma2_m + 0.5 * ss)
}

/// Inverse gamma `(shape, scale)` of the mean observation scale given the
/// per-athlete scales.
pub fn sigma2_m_conditional(prior: crate::model::InvGammaPrior, sigma2_a: f64, sigma2: &[f64]) -> (f64, f64) {
    let m = sigma2.len() as f64;
    let sum_inv: f64 = sigma2.iter().map(|s| 1.0 / s).sum();
    (prior.shape + m * sigma2_a, prior.scale + sigma2_a * sum_inv)
}

/// Prior variances of `beta` and of the trend random walk.
pub fn update_prior_scales<R: Rng + ?Sized>(state: &mut ParamState, ctx: &ModelContext, rng: &mut R) {
    let prior = ctx.prior;
    let hb = prior.sigma2_beta_prior;
    for j in 0..state.sigma2_beta.len() {
        let bj = state.beta.as_slice()[j];
        state.sigma2_beta[j] = inv_gamma(hb.shape + 0.5, hb.scale + 0.5 * bj * bj, rng);
    }

    let m = state.num_athletes();
    let mut ss_mu = 0.0;
    let mut ss_eta = 0.0;
    let mut increments = 0usize;
    for i in 0..m {
        let f = &state.knots[i];
        ss_mu += f[0] * f[0] / state.omega_mu[i];
        for s in 1..f.len() {
            ss_eta += (f[s] - f[s - 1]).powi(2) / state.omega_eta[i][s - 1];
        }
        increments += f.len() - 1;
    }
    let hm = prior.sigma2_mu_prior;
    state.sigma2_mu = inv_gamma(hm.shape + 0.5 * m as f64, hm.scale + 0.5 * ss_mu, rng);
    let he = prior.sigma2_eta_prior;
    state.sigma2_eta = inv_gamma(he.shape + 0.5 * increments as f64, he.scale + 0.5 * ss_eta, rng);
}

/// Every variance of the model except the shrinkage family: the observation
/// scales, then the coefficient and trend prior variances.
pub fn update_scale_family<R: Rng + ?Sized>(
    state: &mut ParamState,
    ctx: &ModelContext,
    tuners: &mut Tuners,
    rng: &mut R,
) -> Result<()> {
    update_error_scales(state, ctx, tuners, rng)?;
    update_prior_scales(state, ctx, rng);
    Ok(())
}

fn sq_dev(a: &[f64], b: &[f64], scale: &[f64]) -> f64 {
    a.iter().zip(b).zip(scale).map(|((x, y), s)| (x - y).powi(2) / s).sum()
}

/// Local (`lambda_i^2`, `tau_i^2`) and global (`c^2`, `d^2`) shrinkage
/// scales, their working-parameter rescalings, and the hyperparameters.
pub fn update_shrinkage_family<R: Rng + ?Sized>(
    state: &mut ParamState,
    ctx: &ModelContext,
    tuners: &mut Tuners,
    rng: &mut R,
) -> Result<()> {
    let prior = ctx.prior;
    let m = state.num_athletes();
    let g = state.c2.len();
    let mf = m as f64;
    let gf = g as f64;

    // season-level spread around the athlete-level coefficients
    for i in 0..m {
        let s_i = state.beta_season[i].len();
        let chi: f64 = state.beta_season[i]
            .iter()
            .map(|bs| sq_dev(bs.as_slice(), state.beta_athlete[i].as_slice(), &state.c2))
            .sum();
        let (p, a, b) = local_scale_conditional(state.lambda0, state.lambda1, g * s_i, chi);
        state.lambda2[i] = gig_sample(p, a, b, rng)?;
    }
    let total_seasons: usize = state.beta_season.iter().map(Vec::len).sum();
    let cp = prior.c2_prior;
    for j in 0..g {
        let mut chi = 0.0;
        for i in 0..m {
            let bi = state.beta_athlete[i].as_slice()[j];
            for bs in &state.beta_season[i] {
                chi += (bs.as_slice()[j] - bi).powi(2) / state.lambda2[i];
            }
        }
        state.c2[j] = gig_sample(cp.shape - total_seasons as f64 / 2.0, chi, 2.0 * cp.rate, rng)?;
    }
    let w = gig_sample(
        mf * state.lambda0 - gf * cp.shape,
        2.0 * cp.rate * state.c2.iter().sum::<f64>(),
        2.0 * state.lambda0 / state.lambda1 * state.lambda2.iter().sum::<f64>(),
        rng,
    )?;
    rescale(&mut state.lambda2, &mut state.c2, w);

    // athlete-level spread around the population coefficients
    for i in 0..m {
        let chi = sq_dev(state.beta_athlete[i].as_slice(), state.beta.as_slice(), &state.d2);
        let (p, a, b) = local_scale_conditional(state.tau0, state.tau1, g, chi);
        state.tau2[i] = gig_sample(p, a, b, rng)?;
    }
    let dp = prior.d2_prior;
    for j in 0..g {
        let bj = state.beta.as_slice()[j];
        let chi: f64 = (0..m)
            .map(|i| (state.beta_athlete[i].as_slice()[j] - bj).powi(2) / state.tau2[i])
            .sum();
        state.d2[j] = gig_sample(dp.shape - mf / 2.0, chi, 2.0 * dp.rate, rng)?;
    }
    let w = gig_sample(
        mf * state.tau0 - gf * dp.shape,
        2.0 * dp.rate * state.d2.iter().sum::<f64>(),
        2.0 * state.tau0 / state.tau1 * state.tau2.iter().sum::<f64>(),
        rng,
    )?;
    rescale(&mut state.tau2, &mut state.d2, w);

    let (l0, l1) = shape_rate_update(
        &mut tuners.lambda0,
        state.lambda0,
        state.lambda1,
        &state.lambda2,
        prior.lambda0_prior,
        prior.lambda1_prior,
        rng,
    );
    state.lambda0 = l0;
    state.lambda1 = l1;
    let (t0, t1) = shape_rate_update(
        &mut tuners.tau0,
        state.tau0,
        state.tau1,
        &state.tau2,
        prior.tau0_prior,
        prior.tau1_prior,
        rng,
    );
    state.tau0 = t0;
    state.tau1 = t1;
    Ok(())
}

/// GIG `(lambda, chi, psi)` of a local scale with gamma prior
/// `Ga(shape, shape / mean)`, given `terms` squared deviations whose sum,
/// each divided by its global scale, is `chi`.
pub fn local_scale_conditional(shape: f64, mean: f64, terms: usize, chi: f64) -> (f64, f64, f64) {
    (shape - terms as f64 / 2.0, chi, 2.0 * shape / mean)
}

/// Working-parameter move: local scales times `w`, global scales over `w`.
/// Every product of a local and a global scale is unchanged.
pub fn rescale(local: &mut [f64], global: &mut [f64], w: f64) {
    local.iter_mut().for_each(|v| *v *= w);
    global.iter_mut().for_each(|v| *v /= w);
}

/// Hyperparameters of `x_i ~ Ga(shape, shape / mean)`: the shape by
/// Metropolis, then the mean (inverse gamma prior) by Gibbs.
fn shape_rate_update<R: Rng + ?Sized>(
    tuner: &mut AdaptiveMhState,
    shape: f64,
    mean: f64,
    xs: &[f64],
    shape_prior: crate::model::GammaPrior,
    mean_prior: crate::model::InvGammaPrior,
    rng: &mut R,
) -> (f64, f64) {
    let m = xs.len() as f64;
    let sum: f64 = xs.iter().sum();
    let sum_ln: f64 = xs.iter().map(|x| x.ln()).sum();
    let shape = positive_mh(
        tuner,
        shape,
        |l| m * l * (l / mean).ln() - m * ln_gamma(l) + (l - 1.0) * sum_ln - l * sum / mean + shape_prior.log_density(l),
        rng,
    );
    let mean = inv_gamma(mean_prior.shape + m * shape, mean_prior.scale + shape * sum, rng);
    (shape, mean)
}

/// Log density (up to a constant) of the degrees of freedom given
/// standardised squares `u_k = x_k^2 / scale`, with the mixing variables
/// integrated out.
pub fn t_marginal_log_density(nu: f64, standardized_squares: &[f64]) -> f64 {
    let n = standardized_squares.len() as f64;
    let per = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) + 0.5 * nu * nu.ln();
    n * per - 0.5 * (nu + 1.0) * standardized_squares.iter().map(|u| (nu + u).ln()).sum::<f64>()
}

fn nu_and_mixing<R: Rng + ?Sized>(
    tuner: &mut AdaptiveMhState,
    nu: f64,
    u: &[f64],
    prior: crate::model::GammaPrior,
    rng: &mut R,
) -> (f64, Vec<f64>) {
    let nu = positive_mh(tuner, nu, |v| t_marginal_log_density(v, u) + prior.log_density(v), rng);
    let mix = u
        .iter()
        .map(|&uk| {
            let (shape, scale) = mixing_conditional(nu, uk);
            inv_gamma(shape, scale, rng)
        })
        .collect();
    (nu, mix)
}

/// Inverse gamma `(shape, scale)` of a t mixing variable given its
/// standardised square.
pub fn mixing_conditional(nu: f64, standardized_square: f64) -> (f64, f64) {
    (0.5 * (nu + 1.0), 0.5 * (nu + standardized_square))
}

/// Sufficient statistics of the skewness parameter's conditional:
/// `(sum r^2 w, sum r kappa w, sum kappa^2 w)` with `w = 1/(sigma^2 omega)`.
pub fn alpha_statistics(state: &ParamState, ctx: &ModelContext) -> (f64, f64, f64) {
    let mut s = (0.0, 0.0, 0.0);
    for i in 0..state.num_athletes() {
        let r = skew_residuals(state, ctx, i);
        for k in 0..r.len() {
            let w = 1.0 / (state.sigma2[i] * state.omega[i][k]);
            let kap = state.kappa[i][k];
            s.0 += r[k] * r[k] * w;
            s.1 += r[k] * kap * w;
            s.2 += kap * kap * w;
        }
    }
    s
}

/// Log conditional density of `alpha` (up to a constant).
pub fn alpha_log_density(alpha: f64, stats: (f64, f64, f64), prior_variance: f64) -> f64 {
    let c = crate::model::skew_loading(alpha);
    -0.5 * (stats.0 - 2.0 * c * stats.1 + c * c * stats.2) - alpha * alpha / (2.0 * prior_variance)
}

/// Derivative of [`alpha_log_density`] in `alpha`.
pub fn alpha_log_density_gradient(alpha: f64, stats: (f64, f64, f64), prior_variance: f64) -> f64 {
    let c = crate::model::skew_loading(alpha);
    let dc = (1.0 + alpha * alpha).powf(-1.5);
    (stats.1 - c * stats.2) * dc - alpha / prior_variance
}

/// Metropolis move of `alpha` along the ridge it shares with the intercept
/// and the observation scales, with the half-normal latents integrated out.
///
/// A change of `alpha` moves both the mean and the variance of the errors.
/// The move keeps `delta0 + E[c kappa]` fixed and rescales every `sigma_i^2`
/// (and `sigma2_m` inversely) so that the average error variance is
/// unchanged. In those coordinates it is an exact Metropolis step; the
/// Jacobian contributes `(M - 1) ln r`.
fn alpha_ridge_move<R: Rng + ?Sized>(
    state: &mut ParamState,
    ctx: &ModelContext,
    tuner: &mut AdaptiveMhState,
    rng: &mut R,
) {
    let prior = ctx.prior;
    let terms = skew_terms(state, ctx);
    if terms.is_empty() {
        return;
    }
    let n = terms.len() as f64;
    let m = state.num_athletes() as f64;
    let omega_bar = state.omega.iter().flatten().sum::<f64>() / n;
    let phi_bar = state.phi.iter().flatten().sum::<f64>() / n;
    let k = 1.0 - 2.0 / std::f64::consts::PI;
    let offset = mean_skew_offset(&terms);
    let (alpha0, delta0, sigma2_m0) = (state.alpha, state.delta[0], state.sigma2_m);
    let c0 = state.skew_loading();
    let spread = |c: f64| omega_bar + c * c * phi_bar * k;
    let ratio = |c: f64| spread(c0) / spread(c);
    let intercept = |c: f64| delta0 - (c * ratio(c).sqrt() - c0) * offset;

    let var = prior.alpha_prior_variance;
    let precision = prior.delta_prior_precision;
    let hp = prior.sigma2_m_prior;
    let mut moved = terms.clone();
    let alpha = tuner.step_scalar(
        alpha0,
        |a| {
            let c = crate::model::skew_loading(a);
            let r = ratio(c);
            let d = intercept(c);
            let shift = delta0 - d;
            for (t, s) in moved.iter_mut().zip(&terms) {
                t.residual = s.residual + shift;
                t.sym_var = s.sym_var * r;
                t.skew_var = s.skew_var * r;
            }
            alpha_collapsed_log_density(a, &moved, var) - 0.5 * precision * d * d
                + hp.log_density(sigma2_m0 / r)
                - m * r.ln()
                + (m - 1.0) * r.ln()
        },
        rng,
    );
    let c = crate::model::skew_loading(alpha);
    let r = ratio(c);
    state.alpha = alpha;
    state.delta[0] = intercept(c);
    state.sigma2.iter_mut().for_each(|v| *v *= r);
    state.sigma2_m = sigma2_m0 / r;
}

/// One skew residual with its symmetric and skewing variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewTerm {
    pub residual: f64,
    pub sym_var: f64,
    pub skew_var: f64,
}

/// Skew terms of every observation, `y - location` with the half-normal
/// latents left out.
pub fn skew_terms(state: &ParamState, ctx: &ModelContext) -> Vec<SkewTerm> {
    let mut out = Vec::with_capacity(ctx.design.num_observations());
    for i in 0..state.num_athletes() {
        let r = skew_residuals(state, ctx, i);
        for k in 0..r.len() {
            out.push(SkewTerm {
                residual: r[k],
                sym_var: state.sigma2[i] * state.omega[i][k],
                skew_var: state.sigma2[i] * state.phi[i][k],
            });
        }
    }
    out
}

/// Mean of `E[kappa]` over the observations, given the skewing variances.
pub fn mean_skew_offset(terms: &[SkewTerm]) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    let half_normal_mean = (2.0 / std::f64::consts::PI).sqrt();
    half_normal_mean * terms.iter().map(|t| t.skew_var.sqrt()).sum::<f64>() / terms.len() as f64
}

/// Log density (up to a constant) of `alpha` with the half-normal latents
/// integrated out: each residual is a normal plus a scaled half-normal.
pub fn alpha_collapsed_log_density(alpha: f64, terms: &[SkewTerm], prior_variance: f64) -> f64 {
    let c = crate::model::skew_loading(alpha);
    let mut total = -alpha * alpha / (2.0 * prior_variance);
    for t in terms {
        let s2 = t.sym_var + c * c * t.skew_var;
        let slope = c * (t.skew_var / (t.sym_var * s2)).sqrt();
        total += -0.5 * s2.ln() - t.residual * t.residual / (2.0 * s2) + log_normal_cdf(slope * t.residual);
    }
    total
}

/// Degrees of freedom with their mixing variables, then the skewness with
/// the half-normal latents integrated out, then fresh latents.
pub fn update_tail_family<R: Rng + ?Sized>(
    state: &mut ParamState,
    ctx: &ModelContext,
    tuners: &mut Tuners,
    rng: &mut R,
) -> Result<()> {
    let prior = ctx.prior;
    let m = state.num_athletes();

    let mut u_eps = Vec::new();
    let mut u_kappa = Vec::new();
    for i in 0..m {
        let e = error_residuals(state, ctx, i);
        u_eps.extend(e.iter().map(|v| v * v / state.sigma2[i]));
        u_kappa.extend(state.kappa[i].iter().map(|v| v * v / state.sigma2[i]));
    }
    let (nu1, omega) = nu_and_mixing(&mut tuners.nu1, state.nu1, &u_eps, prior.nu_prior, rng);
    let (nu2, phi) = nu_and_mixing(&mut tuners.nu2, state.nu2, &u_kappa, prior.nu_prior, rng);
    state.nu1 = nu1;
    state.nu2 = nu2;
    let mut pos = 0;
    for i in 0..m {
        let n = state.omega[i].len();
        state.omega[i].copy_from_slice(&omega[pos..pos + n]);
        state.phi[i].copy_from_slice(&phi[pos..pos + n]);
        pos += n;
    }

    let u_mu: Vec<f64> = state.knots.iter().map(|f| f[0] * f[0] / state.sigma2_mu).collect();
    let (nu_mu, omega_mu) = nu_and_mixing(&mut tuners.nu_mu, state.nu_mu, &u_mu, prior.nu_prior, rng);
    state.nu_mu = nu_mu;
    state.omega_mu = omega_mu;

    let u_eta: Vec<f64> = state
        .knots
        .iter()
        .flat_map(|f| f.windows(2).map(|w| (w[1] - w[0]).powi(2) / state.sigma2_eta))
        .collect();
    let (nu_eta, omega_eta) = nu_and_mixing(&mut tuners.nu_eta, state.nu_eta, &u_eta, prior.nu_prior, rng);
    state.nu_eta = nu_eta;
    let mut pos = 0;
    for v in state.omega_eta.iter_mut() {
        let n = v.len();
        v.copy_from_slice(&omega_eta[pos..pos + n]);
        pos += n;
    }

    alpha_ridge_move(state, ctx, &mut tuners.alpha, rng);
    update_kappa(state, ctx, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::design::build_design;
    use crate::mcmc::init::{init_state, tests::small_dataset};
    use crate::model::{skew_loading, InvGammaPrior};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture() -> (Dataset, PriorConfig) {
        let ds = small_dataset();
        let prior = PriorConfig { degree: 2, ..Default::default() }.with_mean_age_from(&ds);
        (ds, prior)
    }

    fn close(a: f64, b: f64, rel: f64) {
        assert!((a - b).abs() <= rel * b.abs().max(1e-300), "{a} vs {b}");
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn kappa_conditional_at_zero_residual() {
        let (mean, var) = kappa_conditional(skew_loading(3.0), 0.0, 1.0, 1.0, 1.0);
        assert_eq!(mean, 0.0);
        close(var, 1.0 / (1.0 + 0.9), 1e-12);
        let (mean, var) = kappa_conditional(skew_loading(0.0), 2.5, 1.0, 1.0, 1.0);
        assert_eq!(mean, 0.0);
        assert_eq!(var, 1.0);
    }

    #[test]
    fn sigma2_m_single_athlete() {
        let (shape, scale) = sigma2_m_conditional(InvGammaPrior::new(0.001, 0.001), 2.0, &[4.0]);
        close(shape, 2.001, 1e-12);
        close(scale, 0.501, 1e-12);
    }

    #[test]
    fn mixing_conditionals() {
        assert_eq!(mixing_conditional(30.0, 0.0), (15.5, 15.0));
        // kappa^2 equal to the scale gives a unit standardised square
        assert_eq!(mixing_conditional(7.0, 1.0), (4.0, 4.0));
    }

    #[test]
    fn zero_coefficient_gives_prior_plus_half() {
        let (ds, prior) = fixture();
        let design = build_design(&ds, &prior).unwrap();
        let ctx = ModelContext { dataset: &ds, prior: &prior, design: &design };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = init_state(&ds, &prior, &mut rng).unwrap();
        state.beta.as_mut_slice()[0] = 0.0;
        let draws: Vec<f64> = (0..40_000)
            .map(|_| {
                update_prior_scales(&mut state, &ctx, &mut rng);
                state.sigma2_beta[0]
            })
            .collect();
        // IG(5.5, 5): mean 5/4.5, variance 25/(4.5^2 * 3.5)
        let (m, v) = mean_var(&draws);
        close(m, 5.0 / 4.5, 0.01);
        close(v, 25.0 / (4.5 * 4.5 * 3.5), 0.05);
    }

    #[test]
    fn alpha_gradient_matches_finite_difference() {
        let (ds, prior) = fixture();
        let design = build_design(&ds, &prior).unwrap();
        let ctx = ModelContext { dataset: &ds, prior: &prior, design: &design };
        let state = init_state(&ds, &prior, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let stats = alpha_statistics(&state, &ctx);
        for alpha in [-2.0, 0.0, 1.0, 4.0] {
            let h = 1e-5;
            let fd = (alpha_log_density(alpha + h, stats, 9.0) - alpha_log_density(alpha - h, stats, 9.0)) / (2.0 * h);
            let an = alpha_log_density_gradient(alpha, stats, 9.0);
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "alpha {alpha}: {fd} vs {an}");
        }
    }

    #[test]
    fn collapsed_alpha_matches_integrating_out_latents() {
        let terms = [
            SkewTerm { residual: 0.7, sym_var: 0.5, skew_var: 1.3 },
            SkewTerm { residual: -1.9, sym_var: 0.8, skew_var: 0.4 },
        ];
        // brute-force integral over the half-normal latent
        let by_quadrature = |alpha: f64| -> f64 {
            let c = skew_loading(alpha);
            terms
                .iter()
                .map(|t| {
                    let h = 1e-3;
                    let mut acc = 0.0;
                    for k in 0..20_000 {
                        let kap = (k as f64 + 0.5) * h;
                        let e = t.residual - c * kap;
                        acc += (-e * e / (2.0 * t.sym_var)).exp() / t.sym_var.sqrt()
                            * (-kap * kap / (2.0 * t.skew_var)).exp()
                            / t.skew_var.sqrt()
                            * h;
                    }
                    acc.ln()
                })
                .sum::<f64>()
                - alpha * alpha / 18.0
        };
        let base = alpha_collapsed_log_density(0.0, &terms, 9.0) - by_quadrature(0.0);
        for alpha in [-3.0, -0.5, 1.0, 4.0] {
            let diff = alpha_collapsed_log_density(alpha, &terms, 9.0) - by_quadrature(alpha);
            assert!((diff - base).abs() < 1e-6, "alpha {alpha}: {diff} vs {base}");
        }
    }

    #[test]
    fn t_marginal_prefers_matching_tails() {
        // squares of t_3 draws favour small degrees of freedom
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u: Vec<f64> = (0..5000)
            .map(|_| {
                let z = crate::samplers::std_normal(&mut rng);
                let w = inv_gamma(1.5, 1.5, &mut rng);
                z * z * w
            })
            .collect();
        let best = [1.0, 2.0, 3.0, 5.0, 10.0, 30.0]
            .into_iter()
            .max_by(|a, b| t_marginal_log_density(*a, &u).total_cmp(&t_marginal_log_density(*b, &u)))
            .unwrap();
        assert!((2.0..=5.0).contains(&best), "best {best}");
    }

    #[test]
    fn interweave_shift_identities() {
        let (ds, prior) = fixture();
        let mut state = init_state(&ds, &prior, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let before = state.clone();
        let g = state.beta.len();
        interweave_shift(&mut state, &vec![0.0; g]);
        assert_eq!(state, before);

        let shift: Vec<f64> = (0..g).map(|j| 0.5 - j as f64).collect();
        interweave_shift(&mut state, &shift);
        for i in 0..state.num_athletes() {
            let a = state.beta_athlete[i].as_slice();
            let a0 = before.beta_athlete[i].as_slice();
            for (bs, bs0) in state.beta_season[i].iter().zip(&before.beta_season[i]) {
                for j in 0..g {
                    let d = bs.as_slice()[j] - a[j];
                    let d0 = bs0.as_slice()[j] - a0[j];
                    assert!((d - d0).abs() < 1e-12);
                }
            }
            for j in 0..g {
                assert!((a[j] - a0[j] - shift[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_term_local_scale() {
        assert_eq!(local_scale_conditional(1.0, 1.0, 1, 1.0), (0.5, 1.0, 2.0));
    }

    #[test]
    fn rescale_keeps_products() {
        let mut local = vec![0.5, 2.0];
        let mut global = vec![3.0, 0.25, 8.0];
        let products: Vec<f64> = local.iter().flat_map(|l| global.iter().map(move |g| l * g)).collect();
        rescale(&mut local, &mut global, 7.3);
        let after: Vec<f64> = local.iter().flat_map(|l| global.iter().map(move |g| l * g)).collect();
        for (a, b) in products.iter().zip(&after) {
            close(*a, *b, 1e-14);
        }
    }

    #[test]
    fn zero_residuals_leave_prior_scale() {
        assert_eq!(sigma2_conditional(2.0, 4.0, 6, 0.0), (8.0, 0.5));
    }

    #[test]
    fn full_blocks_keep_state_valid() {
        let (ds, prior) = fixture();
        let design = build_design(&ds, &prior).unwrap();
        let ctx = ModelContext { dataset: &ds, prior: &prior, design: &design };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut state = init_state(&ds, &prior, &mut rng).unwrap();
        let mut tuners = Tuners::new(AdaptiveMhConfig::default());
        let cone = ConeOptions::default();
        for _ in 0..50 {
            update_population_block(&mut state, &ctx, cone, &mut rng).unwrap();
            for i in 0..state.num_athletes() {
                update_athlete_block(&mut state, &ctx, i, &mut rng).unwrap();
            }
            update_kappa(&mut state, &ctx, &mut rng).unwrap();
            update_scale_family(&mut state, &ctx, &mut tuners, &mut rng).unwrap();
            update_shrinkage_family(&mut state, &ctx, &mut tuners, &mut rng).unwrap();
            update_tail_family(&mut state, &ctx, &mut tuners, &mut rng).unwrap();
            state.validate(&prior).unwrap();
            assert!(satisfies_shape(&state.beta, prior.direction));
        }
    }
}
