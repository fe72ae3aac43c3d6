//! Helpers shared by the integration test targets.

use perftraj::mcmc::{build_design, sample_prior, simulate_responses, ModelContext, Sampler};
use perftraj::model::{Athlete, Dataset, GammaPrior, InvGammaPrior, ParamState, Performance, PriorConfig, StateDims};
use perftraj::samplers::{AdaptiveMhConfig, ConeOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn template(rng: &mut ChaCha8Rng) -> Dataset {
    let mut athletes = Vec::new();
    for i in 0..2 {
        let mut perfs = Vec::new();
        for s in 0..2 {
            let mut zs: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
            zs.sort_by(f64::total_cmp);
            for z in zs {
                perfs.push(Performance {
                    value: 0.0,
                    age: 18.0 + 3.0 * i as f64 + s as f64 + z,
                    season: s,
                    season_fraction: z,
                    confounders: vec![rng.random::<f64>()],
                });
            }
        }
        athletes.push(Athlete { id: format!("a{i}"), seasons: 2, performances: perfs });
    }
    Dataset::new(athletes, 1.0, vec!["x".into()]).unwrap()
}

pub fn tight_prior(ds: &Dataset) -> PriorConfig {
    PriorConfig {
        degree: 1,
        max_order: 3,
        delta_prior_precision: 1.0,
        zeta_prior_precision: 1.0,
        alpha_prior_variance: 1.0,
        nu_prior: GammaPrior::new(40.0, 4.0),
        lambda0_prior: GammaPrior::new(20.0, 20.0),
        tau0_prior: GammaPrior::new(20.0, 20.0),
        lambda1_prior: InvGammaPrior::new(22.0, 21.0),
        tau1_prior: InvGammaPrior::new(22.0, 21.0),
        sigma2_a_prior: InvGammaPrior::new(22.0, 42.0),
        sigma2_m_prior: InvGammaPrior::new(22.0, 21.0),
        sigma2_mu_prior: InvGammaPrior::new(22.0, 21.0),
        sigma2_eta_prior: InvGammaPrior::new(22.0, 21.0),
        ..Default::default()
    }
    .with_mean_age_from(ds)
}

fn functions(s: &ParamState, ds: &Dataset) -> Vec<(&'static str, f64)> {
    let y0 = ds.athletes[0].performances[0].value;
    vec![
        ("delta0", s.delta[0]),
        ("delta1", s.delta[1]),
        ("zeta", s.zeta[0]),
        ("alpha", s.alpha),
        ("log sigma2_1", s.sigma2[0].ln()),
        ("log sigma2_a", s.sigma2_a.ln()),
        ("log sigma2_m", s.sigma2_m.ln()),
        ("beta_1", s.beta.as_slice()[0]),
        ("beta_3", s.beta.as_slice()[2]),
        ("beta_athlete", s.beta_athlete[0].as_slice()[1]),
        ("beta_season", s.beta_season[1][0].as_slice()[0]),
        ("knot_1", s.knots[0][0]),
        ("knot_3", s.knots[1][2]),
        ("log lambda2", s.lambda2[0].ln()),
        ("log tau2", s.tau2[1].ln()),
        ("log c2", s.c2[0].ln()),
        ("log d2", s.d2[2].ln()),
        ("log lambda0", s.lambda0.ln()),
        ("log tau1", s.tau1.ln()),
        ("log sigma2_beta", s.sigma2_beta[0].ln()),
        ("log sigma2_mu", s.sigma2_mu.ln()),
        ("log sigma2_eta", s.sigma2_eta.ln()),
        ("log nu1", s.nu1.ln()),
        ("log nu2", s.nu2.ln()),
        ("log nu_eta", s.nu_eta.ln()),
        ("kappa", s.kappa[0][1]),
        ("log omega", s.omega[1][2].ln()),
        ("y", y0),
        ("y^2", y0 * y0),
    ]
}

/// Standard error of a mean from batch means (robust to autocorrelation).
fn batch_se(xs: &[f64]) -> f64 {
    let batches = 50;
    let len = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let v = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (v / batches as f64).sqrt()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Geweke joint-distribution check: draws from the prior
/// (marginal-conditional) against draws from alternating a sweep and a fresh
/// response simulation (successive-conditional). Returns the z-score of
/// every test function.
pub fn geweke_scores(seed: u64, n: usize) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = template(&mut rng);
    let prior = tight_prior(&base);
    let dims = StateDims::new(&base, &prior);
    let mut marginal: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for _ in 0..n {
        let s = sample_prior(&dims, &prior, &mut rng).unwrap();
        let ds = simulate_responses(&base, &prior, &s, &mut rng);
        let f = functions(&s, &ds);
        names = f.iter().map(|(n, _)| *n).collect();
        marginal.push(f.into_iter().map(|(_, v)| v).collect());
    }

    let mut state = sample_prior(&dims, &prior, &mut rng).unwrap();
    let mut ds = simulate_responses(&base, &prior, &state, &mut rng);
    let adapt = AdaptiveMhConfig::default();
    let mut tuners = None;
    let mut successive: Vec<Vec<f64>> = Vec::new();
    for _ in 0..n {
        let design = build_design(&ds, &prior).unwrap();
        let ctx = ModelContext { dataset: &ds, prior: &prior, design: &design };
        let mut sampler = Sampler::new(ctx, adapt, ConeOptions::default());
        match tuners.take() {
            Some(t) => sampler.tuners = t,
            None => sampler.tuners.freeze(),
        }
        sampler.sweep(&mut state, &mut rng).unwrap();
        state.validate(&prior).unwrap();
        tuners = Some(sampler.tuners);
        ds = simulate_responses(&base, &prior, &state, &mut rng);
        successive.push(functions(&state, &ds).into_iter().map(|(_, v)| v).collect());
    }

    let mut scores = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let a: Vec<f64> = marginal.iter().map(|r| r[j]).collect();
        let b: Vec<f64> = successive.iter().map(|r| r[j]).collect();
        let (ma, sa) = mean_se(&a);
        let (mb, _) = mean_se(&b);
        let sb = batch_se(&b);
        scores.push((*name, (ma - mb) / (sa * sa + sb * sb).sqrt()));
    }
    scores
}
