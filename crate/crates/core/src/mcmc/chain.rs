use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::design::build_design;
use crate::mcmc::init::init_state;
use crate::mcmc::updates::{
    update_athlete_block, update_error_scales, update_kappa, update_population_block, update_prior_scales,
    update_shrinkage_family, update_tail_family, ModelContext, Tuners,
};
use crate::model::{Dataset, ParamState, PriorConfig, StateDims};
use crate::samplers::{AdaptiveMhConfig, ConeOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// Total iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
    pub adaptation: AdaptiveMhConfig,
    pub cone: ConeOptions,
    /// Keep the per-observation latents in the recorded draws.
    pub record_latents: bool,
    /// Validate the state after every sweep.
    pub check_invariants: bool,
    /// Where to write the offending state when a chain aborts.
    pub dump_dir: Option<PathBuf>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 50_000,
            burn_in: 30_000,
            thin: 20,
            chains: 2,
            seed: 1,
            adaptation: AdaptiveMhConfig::default(),
            cone: ConeOptions::default(),
            record_latents: false,
            check_invariants: true,
            dump_dir: None,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("need at least one chain".into()));
        }
        if self.burn_in > self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} exceeds total iterations {}",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    pub fn draws_per_chain(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Generator for chain `index`: one seed, a distinct stream per chain.
    pub fn chain_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// One full sweep of the sampler over every block, in a fixed order.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    pub ctx: ModelContext<'a>,
    pub tuners: Tuners,
    pub cone: ConeOptions,
}

impl<'a> Sampler<'a> {
    pub fn new(ctx: ModelContext<'a>, adaptation: AdaptiveMhConfig, cone: ConeOptions) -> Self {
        Self {
            ctx,
            tuners: Tuners::new(adaptation),
            cone,
        }
    }

    pub fn sweep<R: Rng + ?Sized>(&mut self, state: &mut ParamState, rng: &mut R) -> Result<()> {
        for i in 0..state.num_athletes() {
            update_athlete_block(state, &self.ctx, i, rng)?;
        }
        update_kappa(state, &self.ctx, rng)?;
        update_population_block(state, &self.ctx, self.cone, rng)?;
        update_error_scales(state, &self.ctx, &mut self.tuners, rng)?;
        update_shrinkage_family(state, &self.ctx, &mut self.tuners, rng)?;
        update_prior_scales(state, &self.ctx, rng);
        update_tail_family(state, &self.ctx, &mut self.tuners, rng)
    }
}

/// Thinned post-burn-in draws of one chain, each a flattened [`ParamState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    pub index: usize,
    pub draws: Vec<Vec<f64>>,
    /// Post-burn-in acceptance rate of each Metropolis-updated parameter.
    pub acceptance: Vec<(String, f64)>,
}

/// Posterior draws of every chain plus what is needed to interpret them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub prior: PriorConfig,
    pub season_length: f64,
    pub athlete_ids: Vec<String>,
    /// Age of each athlete at the start of their first season.
    #[serde(default)]
    pub start_ages: Vec<f64>,
    pub dims: StateDims,
    pub with_latents: bool,
    pub chains: Vec<ChainDraws>,
}

impl PosteriorDraws {
    pub fn num_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn draws_per_chain(&self) -> usize {
        self.chains.iter().map(|c| c.draws.len()).min().unwrap_or(0)
    }

    pub fn total_draws(&self) -> usize {
        self.chains.iter().map(|c| c.draws.len()).sum()
    }

    pub fn names(&self) -> Vec<String> {
        self.dims.names(self.with_latents).into_iter().map(|(n, _)| n).collect()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.dims.names(self.with_latents).iter().position(|(n, _)| n == name)
    }

    /// Trace of one flattened coordinate, one vector per chain.
    pub fn trace(&self, index: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.draws.iter().map(|d| d[index]).collect())
            .collect()
    }

    pub fn state(&self, chain: usize, draw: usize) -> Result<ParamState> {
        let flat = self
            .chains
            .get(chain)
            .and_then(|c| c.draws.get(draw))
            .ok_or_else(|| Error::OutOfRange(format!("draw {draw} of chain {chain}")))?;
        ParamState::unflatten(&self.dims, self.with_latents, flat)
    }

    /// Every recorded state, chains in order.
    pub fn states(&self) -> impl Iterator<Item = Result<ParamState>> + '_ {
        self.chains.iter().flat_map(move |c| {
            c.draws
                .iter()
                .map(move |d| ParamState::unflatten(&self.dims, self.with_latents, d))
        })
    }

    pub fn athlete_index(&self, id: &str) -> Option<usize> {
        self.athlete_ids.iter().position(|a| a == id)
    }
}

/// Run `chain.chains` independent chains in parallel and collect their
/// thinned post-burn-in draws.
pub fn run_chain(dataset: &Dataset, prior: &PriorConfig, chain: &ChainConfig) -> Result<PosteriorDraws> {
    dataset.validate()?;
    prior.validate()?;
    chain.validate()?;
    let design = build_design(dataset, prior)?;
    let ctx = ModelContext {
        dataset,
        prior,
        design: &design,
    };
    let chains = (0..chain.chains)
        .into_par_iter()
        .map(|c| run_one(ctx, chain, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorDraws {
        prior: prior.clone(),
        season_length: dataset.season_length,
        athlete_ids: dataset.athletes.iter().map(|a| a.id.clone()).collect(),
        start_ages: dataset
            .athletes
            .iter()
            .map(|a| a.start_age(dataset.season_length))
            .collect(),
        dims: StateDims::new(dataset, prior),
        with_latents: chain.record_latents,
        chains,
    })
}

fn run_one(ctx: ModelContext, cfg: &ChainConfig, index: usize) -> Result<ChainDraws> {
    let mut rng = cfg.chain_rng(index);
    let mut state = init_state(ctx.dataset, ctx.prior, &mut rng)?;
    let mut sampler = Sampler::new(ctx, cfg.adaptation, cfg.cone);
    if cfg.burn_in == 0 {
        sampler.tuners.freeze();
    }
    let mut draws = Vec::with_capacity(cfg.draws_per_chain());
    for it in 0..cfg.iterations {
        let step = sampler.sweep(&mut state, &mut rng).and_then(|_| {
            if cfg.check_invariants {
                state.validate(ctx.prior)
            } else {
                Ok(())
            }
        });
        if let Err(e) = step {
            return Err(abort(cfg, index, it, &state, e));
        }
        if it + 1 == cfg.burn_in {
            sampler.tuners.freeze();
            sampler.tuners.reset_counts();
        }
        if it >= cfg.burn_in && (it + 1 - cfg.burn_in) % cfg.thin == 0 {
            draws.push(state.flatten(cfg.record_latents));
        }
    }
    Ok(ChainDraws {
        index,
        draws,
        acceptance: sampler.tuners.acceptance(),
    })
}

fn abort(cfg: &ChainConfig, chain: usize, iteration: usize, state: &ParamState, err: Error) -> Error {
    let mut msg = format!("chain {chain} aborted at iteration {}: {err}", iteration + 1);
    if let Some(dir) = &cfg.dump_dir {
        let path = dir.join(format!("state_chain{chain}_iter{}.json", iteration + 1));
        let written = std::fs::create_dir_all(dir)
            .map_err(Error::from)
            .and_then(|_| Ok(serde_json::to_vec_pretty(state)?))
            .and_then(|bytes| Ok(std::fs::write(&path, bytes)?));
        match written {
            Ok(()) => msg.push_str(&format!("; state written to {}", path.display())),
            Err(e) => msg.push_str(&format!("; state dump failed: {e}")),
        }
    }
    match err {
        Error::Numerical(_) => Error::Numerical(msg),
        _ => Error::Invariant(msg),
    }
}
