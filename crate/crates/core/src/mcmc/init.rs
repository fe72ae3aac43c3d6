use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Result;
use crate::mcmc::design::build_design;
use crate::model::{Dataset, ParamState, PriorConfig, StateDims};
use crate::samplers::std_normal;

/// Starting state for a chain.
///
/// Fixed effects start at the least-squares fit of the population curve and
/// confounders; every trend starts at the athlete's mean residual plus a
/// small random offset so that chains start apart. Within-season
/// coefficients start at zero, the corner of the shape cone. Scales start
/// at data-based values where the prior mean does not exist, and at the
/// prior mean otherwise.
pub fn init_state<R: Rng + ?Sized>(dataset: &Dataset, prior: &PriorConfig, rng: &mut R) -> Result<ParamState> {
    let design = build_design(dataset, prior)?;
    let dims = StateDims::new(dataset, prior);
    let mut state = ParamState::baseline(&dims);
    let d1 = prior.degree + 1;
    let p = dataset.num_confounders();
    let width = d1 + p;

    let mut xtx = DMatrix::zeros(width, width);
    let mut xty = DVector::zeros(width);
    for a in &design.athletes {
        let mut x = DMatrix::zeros(a.len(), width);
        x.view_mut((0, 0), (a.len(), d1)).copy_from(&a.poly);
        x.view_mut((0, d1), (a.len(), p)).copy_from(&a.confounders);
        xtx += x.transpose() * &x;
        xty += x.transpose() * &a.response;
    }
    let ridge = 1e-8 * (xtx.trace() / width as f64).max(1e-12);
    for j in 0..width {
        xtx[(j, j)] += ridge;
    }
    let coef = xtx
        .cholesky()
        .map(|c| c.solve(&xty))
        .unwrap_or_else(|| DVector::zeros(width));
    state.delta.copy_from_slice(coef.rows(0, d1).as_slice());
    state.zeta.copy_from_slice(coef.rows(d1, p).as_slice());

    let mut means = Vec::with_capacity(design.num_athletes());
    let mut vars = Vec::with_capacity(design.num_athletes());
    let mut pooled = (0.0, 0usize);
    for a in &design.athletes {
        let mut x = DMatrix::zeros(a.len(), width);
        x.view_mut((0, 0), (a.len(), d1)).copy_from(&a.poly);
        x.view_mut((0, d1), (a.len(), p)).copy_from(&a.confounders);
        let r = &a.response - x * &coef;
        let mean = r.mean();
        let ss: f64 = r.iter().map(|v| (v - mean).powi(2)).sum();
        pooled.0 += ss;
        pooled.1 += a.len().saturating_sub(1);
        means.push(mean);
        vars.push(if a.len() > 1 { Some(ss / (a.len() - 1) as f64) } else { None });
    }
    let pooled_var = if pooled.1 > 0 { pooled.0 / pooled.1 as f64 } else { 1.0 };
    let floor = 1e-6 * pooled_var.max(1e-12);
    let pooled_var = pooled_var.max(floor);

    for (i, a) in design.athletes.iter().enumerate() {
        let v = vars[i].unwrap_or(pooled_var).max(floor);
        state.sigma2[i] = v;
        let sd = v.sqrt();
        for f in state.knots[i].iter_mut() {
            *f = means[i] + 0.1 * sd * std_normal(rng);
        }
        for k in state.kappa[i].iter_mut() {
            *k = 1e-3 * sd;
        }
        debug_assert_eq!(state.kappa[i].len(), a.len());
    }
    state.sigma2_m = state.sigma2.iter().map(|s| 1.0 / s).sum::<f64>() / state.sigma2.len() as f64;
    let spread = means.iter().map(|m| m * m).sum::<f64>() / means.len() as f64;
    state.sigma2_mu = spread.max(floor);
    state.sigma2_eta = (0.1 * pooled_var).max(floor);

    let nu_mean = prior.nu_prior.shape / prior.nu_prior.rate;
    state.nu1 = nu_mean;
    state.nu2 = nu_mean;
    state.nu_mu = nu_mean;
    state.nu_eta = nu_mean;
    state.lambda0 = prior.lambda0_prior.shape / prior.lambda0_prior.rate;
    state.tau0 = prior.tau0_prior.shape / prior.tau0_prior.rate;
    let c2 = prior.c2_prior.shape / prior.c2_prior.rate;
    let d2 = prior.d2_prior.shape / prior.d2_prior.rate;
    state.c2.iter_mut().for_each(|v| *v = c2);
    state.d2.iter_mut().for_each(|v| *v = d2);
    let sb = prior.sigma2_beta_prior;
    let sb_mean = if sb.shape > 1.0 { sb.scale / (sb.shape - 1.0) } else { 1.0 };
    state.sigma2_beta.iter_mut().for_each(|v| *v = sb_mean);
    state.validate(prior)?;
    Ok(state)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bernstein::satisfies_shape;
    use crate::model::{Athlete, Performance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn small_dataset() -> Dataset {
        let mut athletes = Vec::new();
        for i in 0..3 {
            let mut perfs = Vec::new();
            for s in 0..2 {
                for k in 0..3 {
                    let z = 0.1 + 0.3 * k as f64;
                    perfs.push(Performance {
                        value: 50.0 + i as f64 + 0.5 * s as f64 - 0.2 * k as f64,
                        age: 19.0 + i as f64 + s as f64 + z,
                        season: s,
                        season_fraction: z,
                        confounders: vec![(k % 2) as f64],
                    });
                }
            }
            athletes.push(Athlete { id: format!("a{i}"), seasons: 2, performances: perfs });
        }
        Dataset::new(athletes, 1.0, vec!["x".into()]).unwrap()
    }

    #[test]
    fn valid_and_reproducible() {
        let ds = small_dataset();
        let prior = PriorConfig { degree: 1, ..Default::default() }.with_mean_age_from(&ds);
        let a = init_state(&ds, &prior, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = init_state(&ds, &prior, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!(satisfies_shape(&a.beta, prior.direction));
        assert!(a.sigma2.iter().all(|s| *s > 0.0));
        assert!(a.kappa.iter().flatten().all(|k| *k > 0.0));
    }
}
