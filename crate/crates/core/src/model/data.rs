use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observed performance.
///
/// `season` is zero-based here; files and reports use one-based seasons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub value: f64,
    pub age: f64,
    pub season: usize,
    /// Position within the season, in `[0, 1)`.
    pub season_fraction: f64,
    pub confounders: Vec<f64>,
}

impl Performance {
    /// Calendar time since the start of the athlete's first season.
    pub fn calendar_time(&self, season_length: f64) -> f64 {
        (self.season as f64 + self.season_fraction) * season_length
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Athlete {
    pub id: String,
    /// Number of seasons spanned, counting empty ones inside the career.
    pub seasons: usize,
    /// Sorted by calendar time.
    pub performances: Vec<Performance>,
}

impl Athlete {
    pub fn len(&self) -> usize {
        self.performances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.performances.is_empty()
    }

    /// Age at calendar time zero, read off the first performance.
    pub fn start_age(&self, season_length: f64) -> f64 {
        self.performances
            .first()
            .map_or(f64::NAN, |p| p.age - p.calendar_time(season_length))
    }

    /// Number of performances in each season.
    pub fn season_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.seasons];
        for p in &self.performances {
            counts[p.season] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub athletes: Vec<Athlete>,
    /// Season length in years.
    pub season_length: f64,
    pub confounder_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        athletes: Vec<Athlete>,
        season_length: f64,
        confounder_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Self {
            athletes,
            season_length,
            confounder_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_athletes(&self) -> usize {
        self.athletes.len()
    }

    pub fn num_confounders(&self) -> usize {
        self.confounder_names.len()
    }

    pub fn num_performances(&self) -> usize {
        self.athletes.iter().map(Athlete::len).sum()
    }

    pub fn total_seasons(&self) -> usize {
        self.athletes.iter().map(|a| a.seasons).sum()
    }

    /// Mean age over every observed performance.
    pub fn mean_age(&self) -> f64 {
        let n = self.num_performances();
        if n == 0 {
            return 0.0;
        }
        self.athletes
            .iter()
            .flat_map(|a| a.performances.iter().map(|p| p.age))
            .sum::<f64>()
            / n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.season_length > 0.0 && self.season_length.is_finite()) {
            return Err(Error::Data(format!(
                "season length {} must be positive",
                self.season_length
            )));
        }
        let p = self.confounder_names.len();
        for a in &self.athletes {
            if a.performances.is_empty() {
                return Err(Error::Data(format!("athlete {} has no performances", a.id)));
            }
            if a.seasons == 0 {
                return Err(Error::Data(format!("athlete {} has no seasons", a.id)));
            }
            let mut prev_t = f64::NEG_INFINITY;
            let mut prev_age = f64::NEG_INFINITY;
            for (k, perf) in a.performances.iter().enumerate() {
                let ctx = || format!("athlete {} performance {}", a.id, k + 1);
                if !perf.value.is_finite() || !perf.age.is_finite() {
                    return Err(Error::Data(format!("{}: non-finite value or age", ctx())));
                }
                if perf.confounders.len() != p || perf.confounders.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Data(format!("{}: bad confounder row", ctx())));
                }
                if perf.season >= a.seasons {
                    return Err(Error::Data(format!(
                        "{}: season {} outside 1..={}",
                        ctx(),
                        perf.season + 1,
                        a.seasons
                    )));
                }
                if !(0.0..1.0).contains(&perf.season_fraction) {
                    return Err(Error::Data(format!(
                        "{}: season fraction {} outside [0, 1)",
                        ctx(),
                        perf.season_fraction
                    )));
                }
                let t = perf.calendar_time(self.season_length);
                if t < prev_t {
                    return Err(Error::Data(format!("{}: performances not time-ordered", ctx())));
                }
                if perf.age < prev_age {
                    return Err(Error::Data(format!("{}: age decreases with time", ctx())));
                }
                prev_t = t;
                prev_age = perf.age;
            }
            // Seasons are indexed contiguously from the first observed one.
            if a.performances[0].season != 0 {
                return Err(Error::Data(format!(
                    "athlete {}: first performance is not in season 1",
                    a.id
                )));
            }
            if a.performances.last().map(|p| p.season + 1) != Some(a.seasons) {
                return Err(Error::Data(format!(
                    "athlete {}: last performance is not in season {}",
                    a.id, a.seasons
                )));
            }
        }
        Ok(())
    }
}
