use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_dataset, population_curve, population_within_season, GroundTruth, SimDesign};
use crate::error::{invalid, Result};
use crate::mcmc::{run_chain, ChainConfig, PosteriorDraws};
use crate::model::{population_trajectory, Dataset, ParamState, PriorConfig};
use crate::summaries::{armse, quantile, rmise, spearman, unit_grid};

/// Evaluation grids shared by every replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyGrids {
    pub ages: Vec<f64>,
    pub within_season: Vec<f64>,
}

impl Default for StudyGrids {
    fn default() -> Self {
        Self {
            ages: (0..=200).map(|k| 20.0 + k as f64 * 0.05).collect(),
            within_season: unit_grid(201),
        }
    }
}

/// Point estimates of every scored quantity. Curves are evaluated on the
/// [`StudyGrids`]; athletes and seasons follow dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEstimates {
    pub population: Vec<f64>,
    pub within_season: Vec<f64>,
    pub athlete_within_season: Vec<Vec<f64>>,
    pub season_within_season: Vec<Vec<Vec<f64>>>,
    pub knots: Vec<Vec<f64>>,
    pub tau2: Vec<f64>,
    pub lambda2: Vec<f64>,
}

/// Anything that turns a dataset into [`FitEstimates`]. Only oracle fitters
/// may look at `truth`.
pub trait Fitter: Sync {
    fn fit(&self, dataset: &Dataset, truth: &GroundTruth, grids: &StudyGrids) -> Result<FitEstimates>;
}

/// Returns the truth itself; scores zero error by construction. Shrinkage
/// estimates are the absolute amplitudes they are compared against.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleFitter;

impl Fitter for OracleFitter {
    fn fit(&self, _dataset: &Dataset, truth: &GroundTruth, grids: &StudyGrids) -> Result<FitEstimates> {
        let z = &grids.within_season;
        Ok(FitEstimates {
            population: grids.ages.iter().map(|a| population_curve(*a)).collect(),
            within_season: z.iter().map(|z| population_within_season(*z)).collect(),
            athlete_within_season: truth
                .athletes
                .iter()
                .map(|t| z.iter().map(|z| t.athlete_within_season(*z)).collect())
                .collect(),
            season_within_season: truth
                .athletes
                .iter()
                .map(|t| {
                    (0..t.seasonal.len())
                        .map(|s| z.iter().map(|z| t.season_within_season(s, *z)).collect())
                        .collect()
                })
                .collect(),
            knots: truth.athletes.iter().map(|t| t.knots.clone()).collect(),
            tau2: truth.athletes.iter().map(|t| t.individual.amplitude.abs()).collect(),
            lambda2: truth.athletes.iter().map(|t| t.mean_abs_seasonal_amplitude()).collect(),
        })
    }
}

/// Fits the full model by MCMC. Curves and knots are posterior means;
/// shrinkage scales are posterior medians.
#[derive(Debug, Clone, Default)]
pub struct McmcFitter {
    /// `mean_age` is overwritten from each dataset.
    pub prior: PriorConfig,
    pub chain: ChainConfig,
}

impl McmcFitter {
    /// Point estimates from an existing set of draws.
    pub fn estimates(draws: &PosteriorDraws, grids: &StudyGrids) -> Result<FitEstimates> {
        let total = draws.total_draws();
        if total == 0 {
            return Err(invalid("no posterior draws"));
        }
        let len = draws.dims.flat_len(draws.with_latents);
        let mut sum = vec![0.0; len];
        for d in draws.chains.iter().flat_map(|c| &c.draws) {
            for (s, x) in sum.iter_mut().zip(d) {
                *s += x;
            }
        }
        sum.iter_mut().for_each(|s| *s /= total as f64);
        let mean = ParamState::unflatten(&draws.dims, draws.with_latents, &sum)?;
        let layout = draws.dims.layout(draws.with_latents);
        let median = |idx: usize| {
            let mut v: Vec<f64> = draws.chains.iter().flat_map(|c| c.draws.iter().map(|d| d[idx])).collect();
            v.sort_by(f64::total_cmp);
            quantile(&v, 0.5)
        };
        let z = &grids.within_season;
        let curve = |c: &crate::bernstein::RbpCoefficientSet| z.iter().map(|z| c.eval(*z)).collect::<Vec<f64>>();
        Ok(FitEstimates {
            population: grids
                .ages
                .iter()
                .map(|a| population_trajectory(&mean.delta, draws.prior.mean_age, *a))
                .collect(),
            within_season: curve(&mean.beta),
            athlete_within_season: mean.beta_athlete.iter().map(&curve).collect(),
            season_within_season: mean
                .beta_season
                .iter()
                .map(|seasons| seasons.iter().map(&curve).collect())
                .collect(),
            knots: mean.knots.clone(),
            tau2: layout.athletes.iter().map(|a| median(a.tau2)).collect(),
            lambda2: layout.athletes.iter().map(|a| median(a.lambda2)).collect(),
        })
    }
}

impl Fitter for McmcFitter {
    fn fit(&self, dataset: &Dataset, _truth: &GroundTruth, grids: &StudyGrids) -> Result<FitEstimates> {
        let prior = self.prior.clone().with_mean_age_from(dataset);
        let draws = run_chain(dataset, &prior, &self.chain)?;
        Self::estimates(&draws, grids)
    }
}

/// Scores of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub rmise_population: f64,
    pub rmise_within_season: f64,
    /// Averaged over athletes.
    pub rmise_athlete: f64,
    /// Averaged over every season of every athlete.
    pub rmise_season: f64,
    pub amrse_knots: f64,
    /// `None` when a rank correlation is undefined (constant input).
    pub spearman_tau_amplitude: Option<f64>,
    pub spearman_lambda_amplitude: Option<f64>,
    /// Mean absolute gap between the true season curves and the population
    /// one at season end; the fitted model pins this to zero.
    pub truth_end_offset: f64,
}

impl ReplicationMetrics {
    pub fn score(est: &FitEstimates, truth: &GroundTruth, grids: &StudyGrids) -> Result<Self> {
        let oracle = OracleFitter.fit_truth(truth, grids)?;
        let m = truth.athletes.len();
        if est.athlete_within_season.len() != m || est.season_within_season.len() != m || est.knots.len() != m {
            return Err(invalid("estimates do not match the athlete count"));
        }
        let z = &grids.within_season;
        let mut athlete = 0.0;
        let mut season = 0.0;
        let mut seasons = 0usize;
        let mut end_gap = 0.0;
        for i in 0..m {
            athlete += rmise(z, &est.athlete_within_season[i], &oracle.athlete_within_season[i])?;
            if est.season_within_season[i].len() != oracle.season_within_season[i].len() {
                return Err(invalid(format!("athlete {i}: season count mismatch")));
            }
            for (e, t) in est.season_within_season[i].iter().zip(&oracle.season_within_season[i]) {
                season += rmise(z, e, t)?;
                seasons += 1;
            }
            let t = &truth.athletes[i];
            end_gap += t
                .seasonal
                .iter()
                .map(|o| (t.individual.at_end + o.at_end).abs())
                .sum::<f64>();
        }
        let flat = |k: &[Vec<f64>]| k.concat();
        Ok(Self {
            rmise_population: rmise(&grids.ages, &est.population, &oracle.population)?,
            rmise_within_season: rmise(z, &est.within_season, &oracle.within_season)?,
            rmise_athlete: athlete / m as f64,
            rmise_season: season / seasons as f64,
            amrse_knots: armse(&flat(&est.knots), &flat(&oracle.knots))?,
            spearman_tau_amplitude: spearman(&est.tau2, &oracle.tau2).ok(),
            spearman_lambda_amplitude: spearman(&est.lambda2, &oracle.lambda2).ok(),
            truth_end_offset: end_gap / seasons as f64,
        })
    }
}

impl OracleFitter {
    fn fit_truth(&self, truth: &GroundTruth, grids: &StudyGrids) -> Result<FitEstimates> {
        let empty = Dataset {
            athletes: vec![],
            season_length: 1.0,
            confounder_names: vec![],
        };
        self.fit(&empty, truth, grids)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub cell: usize,
    pub replication: usize,
    pub metrics: Option<ReplicationMetrics>,
    /// Set when generation, fitting or scoring failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub num_athletes: usize,
    pub short_career_prob: f64,
    pub individual_amplitude_var: f64,
    pub seasonal_amplitude_var: f64,
    pub completed: usize,
    pub failed: usize,
    pub rmise_population: f64,
    pub rmise_within_season: f64,
    pub rmise_athlete: f64,
    pub rmise_season: f64,
    pub amrse_knots: f64,
    pub spearman_tau_amplitude: Option<f64>,
    pub spearman_lambda_amplitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub designs: Vec<SimDesign>,
    pub records: Vec<ReplicationRecord>,
    pub cells: Vec<CellSummary>,
}

/// Per-cell means over completed replications.
pub fn cell_summaries(designs: &[SimDesign], records: &[ReplicationRecord]) -> Vec<CellSummary> {
    designs
        .iter()
        .enumerate()
        .map(|(c, d)| {
            let done: Vec<&ReplicationMetrics> = records
                .iter()
                .filter(|r| r.cell == c)
                .filter_map(|r| r.metrics.as_ref())
                .collect();
            let failed = records.iter().filter(|r| r.cell == c && r.metrics.is_none()).count();
            let avg = |f: &dyn Fn(&ReplicationMetrics) -> f64| {
                if done.is_empty() {
                    f64::NAN
                } else {
                    done.iter().map(|m| f(m)).sum::<f64>() / done.len() as f64
                }
            };
            let avg_opt = |f: &dyn Fn(&ReplicationMetrics) -> Option<f64>| {
                let v: Vec<f64> = done.iter().filter_map(|m| f(m)).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            CellSummary {
                cell: c,
                num_athletes: d.num_athletes,
                short_career_prob: d.short_career_prob,
                individual_amplitude_var: d.individual_amplitude_var,
                seasonal_amplitude_var: d.seasonal_amplitude_var,
                completed: done.len(),
                failed,
                rmise_population: avg(&|m| m.rmise_population),
                rmise_within_season: avg(&|m| m.rmise_within_season),
                rmise_athlete: avg(&|m| m.rmise_athlete),
                rmise_season: avg(&|m| m.rmise_season),
                amrse_knots: avg(&|m| m.amrse_knots),
                spearman_tau_amplitude: avg_opt(&|m| m.spearman_tau_amplitude),
                spearman_lambda_amplitude: avg_opt(&|m| m.spearman_lambda_amplitude),
            }
        })
        .collect()
}

/// Generate, fit and score `design.replications` datasets for every cell.
/// Replication `r` of a cell draws from stream `r` of its seed, so runs are
/// reproducible and replications run in parallel. Failures are recorded and
/// the study carries on.
pub fn run_study(designs: &[SimDesign], fitter: &dyn Fitter, grids: &StudyGrids) -> Result<StudyReport> {
    for d in designs {
        d.validate()?;
    }
    let jobs: Vec<(usize, usize)> = designs
        .iter()
        .enumerate()
        .flat_map(|(c, d)| (0..d.replications).map(move |r| (c, r)))
        .collect();
    let records: Vec<ReplicationRecord> = jobs
        .into_par_iter()
        .map(|(cell, replication)| {
            let design = &designs[cell];
            let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
            rng.set_stream(replication as u64);
            let outcome = generate_dataset(design, &mut rng).and_then(|(ds, truth)| {
                let est = fitter.fit(&ds, &truth, grids)?;
                ReplicationMetrics::score(&est, &truth, grids)
            });
            match outcome {
                Ok(m) => ReplicationRecord {
                    cell,
                    replication,
                    metrics: Some(m),
                    error: None,
                },
                Err(e) => ReplicationRecord {
                    cell,
                    replication,
                    metrics: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let cells = cell_summaries(designs, &records);
    Ok(StudyReport {
        designs: designs.to_vec(),
        records,
        cells,
    })
}
