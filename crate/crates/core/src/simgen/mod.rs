//! Synthetic careers from a known truth, and a driver that fits many of them
//! and scores the estimates.

mod study;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_error, Athlete, Dataset, Performance};

pub use study::{
    cell_summaries, run_study, CellSummary, FitEstimates, Fitter, McmcFitter, OracleFitter, ReplicationMetrics,
    ReplicationRecord, StudyGrids, StudyReport,
};

/// Settings of the data generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimDesign {
    pub num_athletes: usize,
    /// Probability that an athlete's season count comes from the
    /// short-career component.
    pub short_career_prob: f64,
    /// Poisson means of the short and long career components.
    pub season_means: (f64, f64),
    /// Inclusive range of performances per season.
    pub performances_per_season: (usize, usize),
    pub entry_age: (f64, f64),
    /// Variance of the athlete-level within-season amplitude.
    pub individual_amplitude_var: f64,
    /// Variance of the season-level within-season amplitude.
    pub seasonal_amplitude_var: f64,
    /// Range of the turning points of the offset parabolas.
    pub turning_point: (f64, f64),
    pub alpha: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub error_variance: f64,
    pub knot_start_var: f64,
    pub knot_increment_var: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for SimDesign {
    fn default() -> Self {
        Self {
            num_athletes: 100,
            short_career_prob: 0.2,
            season_means: (4.0, 8.0),
            performances_per_season: (3, 11),
            entry_age: (18.0, 22.0),
            individual_amplitude_var: 0.5,
            seasonal_amplitude_var: 0.25,
            turning_point: (0.5, 0.7),
            alpha: 3.0,
            nu1: 30.0,
            nu2: 7.0,
            error_variance: 0.25,
            knot_start_var: 4.0,
            knot_increment_var: 0.09,
            replications: 1,
            seed: 1,
        }
    }
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_athletes == 0 {
            return bad("num_athletes must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.short_career_prob) {
            return bad(format!("short_career_prob {} outside [0, 1]", self.short_career_prob));
        }
        if !(self.season_means.0 > 0.0 && self.season_means.1 > 0.0) {
            return bad("Poisson season means must be positive".into());
        }
        let (lo, hi) = self.performances_per_season;
        if lo == 0 || lo > hi {
            return bad(format!("performances per season range {lo}..={hi} is empty or zero"));
        }
        let ordered = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !ordered(self.entry_age) {
            return bad("entry age range must be increasing".into());
        }
        let (p_lo, p_hi) = self.turning_point;
        if !(ordered(self.turning_point) && p_lo > 0.0 && p_hi < 1.0) {
            return bad("turning point range must lie inside (0, 1)".into());
        }
        if !(self.individual_amplitude_var >= 0.0 && self.seasonal_amplitude_var >= 0.0) {
            return bad("amplitude variances must be >= 0".into());
        }
        for (name, v) in [
            ("error_variance", self.error_variance),
            ("knot_start_var", self.knot_start_var),
            ("knot_increment_var", self.knot_increment_var),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive"));
            }
        }
        if !self.alpha.is_finite() {
            return bad("alpha must be finite".into());
        }
        Ok(())
    }
}

/// Population age curve of the generator.
pub fn population_curve(age: f64) -> f64 {
    40.0 + 0.1 * (age - 26.0).powi(2)
}

/// Population within-season curve of the generator, minimal at mid-season.
pub fn population_within_season(z: f64) -> f64 {
    4.0 * (z - 0.5).powi(2) - 1.0
}

/// Asymmetric parabola with value `amplitude` at `turning` and zero at the
/// season start.
pub fn offset_parabola(amplitude: f64, turning: f64, z: f64) -> f64 {
    if z <= turning {
        amplitude * (1.0 - (z - turning).powi(2) / turning.powi(2))
    } else {
        amplitude * (1.0 - (z - turning).powi(2) / (1.0 - turning.powi(2)))
    }
}

/// Amplitude and turning point of one offset parabola, with its value at
/// both season ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offset {
    pub amplitude: f64,
    pub turning: f64,
    pub at_start: f64,
    pub at_end: f64,
}

impl Offset {
    fn new(amplitude: f64, turning: f64) -> Self {
        Self {
            amplitude,
            turning,
            at_start: offset_parabola(amplitude, turning, 0.0),
            at_end: offset_parabola(amplitude, turning, 1.0),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        offset_parabola(self.amplitude, self.turning, z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AthleteTruth {
    pub entry_age: f64,
    /// Season-start excess performances, one more than the season count.
    pub knots: Vec<f64>,
    pub individual: Offset,
    pub seasonal: Vec<Offset>,
    pub errors: Vec<f64>,
}

impl AthleteTruth {
    /// `h*_i(z)`.
    pub fn athlete_within_season(&self, z: f64) -> f64 {
        population_within_season(z) + self.individual.eval(z)
    }

    /// `h*_{i,s}(z)`.
    pub fn season_within_season(&self, season: usize, z: f64) -> f64 {
        self.athlete_within_season(z) + self.seasonal[season].eval(z)
    }

    /// Mean of the seasonal amplitudes' absolute values.
    pub fn mean_abs_seasonal_amplitude(&self) -> f64 {
        self.seasonal.iter().map(|o| o.amplitude.abs()).sum::<f64>() / self.seasonal.len() as f64
    }
}

/// Every latent quantity behind a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub athletes: Vec<AthleteTruth>,
}

/// Draw one dataset from `design`. Seasons are one year long, calendar time
/// starts at each athlete's first season, and there are no confounders.
pub fn generate_dataset<R: Rng + ?Sized>(design: &SimDesign, rng: &mut R) -> Result<(Dataset, GroundTruth)> {
    design.validate()?;
    let short = Poisson::new(design.season_means.0).map_err(|e| Error::Config(e.to_string()))?;
    let long = Poisson::new(design.season_means.1).map_err(|e| Error::Config(e.to_string()))?;
    let knot_start = Normal::new(0.0, design.knot_start_var.sqrt()).expect("validated");
    let knot_step = Normal::new(0.0, design.knot_increment_var.sqrt()).expect("validated");
    let individual = Normal::new(0.0, design.individual_amplitude_var.sqrt()).expect("validated");
    let seasonal = Normal::new(0.0, design.seasonal_amplitude_var.sqrt()).expect("validated");
    let (p_lo, p_hi) = design.turning_point;

    let mut athletes = Vec::with_capacity(design.num_athletes);
    let mut truths = Vec::with_capacity(design.num_athletes);
    for i in 0..design.num_athletes {
        let seasons = loop {
            let s = if rng.random::<f64>() < design.short_career_prob {
                short.sample(rng)
            } else {
                long.sample(rng)
            };
            if s >= 1.0 {
                break s as usize;
            }
        };
        let entry_age = rng.random_range(design.entry_age.0..design.entry_age.1);
        let mut knots = Vec::with_capacity(seasons + 1);
        knots.push(knot_start.sample(rng));
        for s in 0..seasons {
            knots.push(knots[s] + knot_step.sample(rng));
        }
        let ind = Offset::new(individual.sample(rng), rng.random_range(p_lo..p_hi));
        let seas: Vec<Offset> = (0..seasons)
            .map(|_| Offset::new(seasonal.sample(rng), rng.random_range(p_lo..p_hi)))
            .collect();
        let mut truth = AthleteTruth {
            entry_age,
            knots,
            individual: ind,
            seasonal: seas,
            errors: Vec::new(),
        };
        let mut performances = Vec::new();
        for s in 0..seasons {
            let n = rng.random_range(design.performances_per_season.0..=design.performances_per_season.1);
            let mut zs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            zs.sort_by(f64::total_cmp);
            for z in zs {
                let err = sample_error(design.alpha, design.nu1, design.nu2, design.error_variance, rng)?;
                let mean = population_curve(entry_age + s as f64 + z)
                    + truth.knots[s] * (1.0 - z)
                    + truth.knots[s + 1] * z
                    + truth.season_within_season(s, z);
                truth.errors.push(err);
                performances.push(Performance {
                    value: mean + err,
                    age: entry_age + s as f64 + z,
                    season: s,
                    season_fraction: z,
                    confounders: vec![],
                });
            }
        }
        athletes.push(Athlete {
            id: format!("sim{:04}", i + 1),
            seasons,
            performances,
        });
        truths.push(truth);
    }
    let dataset = Dataset::new(athletes, 1.0, vec![])?;
    Ok((dataset, GroundTruth { athletes: truths }))
}
