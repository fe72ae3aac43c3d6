//! Evaluation of the population, trend, seasonal and fitted trajectories.

use crate::error::{Error, Result};
use crate::model::{Dataset, ParamState, PriorConfig};

/// Population age curve `g(a) = sum_k delta_k (a - mean_age)^k`.
pub fn population_trajectory(delta: &[f64], mean_age: f64, age: f64) -> f64 {
    let x = age - mean_age;
    // Horner
    delta.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Locate calendar time `t` within the knot grid: zero-based season and the
/// fraction through it. The career end maps to the last season at `z = 1`.
pub fn season_position(seasons: usize, season_length: f64, t: f64) -> Result<(usize, f64)> {
    let span = seasons as f64 * season_length;
    let tol = 1e-9 * span.max(1.0);
    if !(t >= -tol && t <= span + tol) {
        return Err(Error::OutOfRange(format!(
            "time {t} outside career span [0, {span}]"
        )));
    }
    let u = (t / season_length).clamp(0.0, seasons as f64);
    let s = (u.floor() as usize).min(seasons - 1);
    Ok((s, u - s as f64))
}

/// Piecewise-linear trend excess `f_i(t)` through the season-start knots.
pub fn trend_trajectory(knots: &[f64], season_length: f64, t: f64) -> Result<f64> {
    if knots.len() < 2 {
        return Err(Error::InvalidArgument(
            "trend needs at least two knots".into(),
        ));
    }
    let (s, z) = season_position(knots.len() - 1, season_length, t)?;
    Ok(knots[s] * (1.0 - z) + knots[s + 1] * z)
}

impl ParamState {
    /// Conditional mean of performance `k` of `athlete` given every latent,
    /// including the skewing term `alpha / sqrt(1 + alpha^2) * kappa`.
    pub fn mean_response(
        &self,
        dataset: &Dataset,
        prior: &PriorConfig,
        athlete: usize,
        k: usize,
    ) -> f64 {
        let kappa = self.kappa[athlete][k];
        self.location(dataset, prior, athlete, k) + self.skew_loading() * kappa
    }

    /// Mean of performance `k` without the skewing component:
    /// `g(a) + f_i(t) + h*_{i,s}(z) + x zeta`.
    pub fn location(&self, dataset: &Dataset, prior: &PriorConfig, athlete: usize, k: usize) -> f64 {
        let obs = &dataset.athletes[athlete].performances[k];
        let knots = &self.knots[athlete];
        let z = obs.season_fraction;
        let trend = knots[obs.season] * (1.0 - z) + knots[obs.season + 1] * z;
        let seasonal = self.beta_season[athlete][obs.season].eval(z);
        let confounders: f64 = obs.confounders.iter().zip(&self.zeta).map(|(x, b)| x * b).sum();
        population_trajectory(&self.delta, prior.mean_age, obs.age) + trend + seasonal + confounders
    }

    /// Individual trend trajectory `g(a) + f_i(t)` at a given age and time.
    pub fn individual_trend(&self, prior: &PriorConfig, athlete: usize, season_length: f64, age: f64, t: f64) -> Result<f64> {
        Ok(population_trajectory(&self.delta, prior.mean_age, age)
            + trend_trajectory(&self.knots[athlete], season_length, t)?)
    }

    /// Individual performance trajectory `mu_i(a, t)` (no confounders).
    pub fn individual_fitted(&self, prior: &PriorConfig, athlete: usize, season_length: f64, age: f64, t: f64) -> Result<f64> {
        let seasons = self.knots[athlete].len() - 1;
        let (s, z) = season_position(seasons, season_length, t)?;
        Ok(self.individual_trend(prior, athlete, season_length, age, t)?
            + self.beta_season[athlete][s].eval(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_examples() {
        let delta = [40.0, 0.0, 0.1];
        assert_eq!(population_trajectory(&delta, 26.0, 26.0), 40.0);
        assert!((population_trajectory(&delta, 26.0, 16.0) - 50.0).abs() < 1e-12);
        assert_eq!(population_trajectory(&[3.5], 26.0, 99.0), 3.5);
    }

    #[test]
    fn trend_examples() {
        assert!((trend_trajectory(&[1.0, 3.0], 1.0, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(trend_trajectory(&[1.0, 3.0], 1.0, 1.0).unwrap(), 3.0);
        assert!((trend_trajectory(&[0.0, 2.0, -1.0], 1.0, 1.25).unwrap() - 1.25).abs() < 1e-15);
        // knot identity at interior boundary
        assert_eq!(trend_trajectory(&[0.0, 2.0, -1.0], 1.0, 1.0).unwrap(), 2.0);
        assert!(matches!(
            trend_trajectory(&[1.0, 3.0], 1.0, 1.5),
            Err(Error::OutOfRange(_))
        ));
        assert!(trend_trajectory(&[1.0, 3.0], 1.0, -0.1).is_err());
    }
}
