use serde::{Deserialize, Serialize};

use crate::bernstein::{cross_integral, order_index, RbpCoefficientSet};
use crate::error::{invalid, Error, Result};
use crate::mcmc::PosteriorDraws;
use crate::model::{population_trajectory, season_position, ParamState};

/// Which curve to summarise. Athletes and seasons are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// `g(a)` over age.
    Population,
    /// `h*(z)` over the within-season fraction.
    WithinSeason,
    /// `h*_i(z)`.
    AthleteWithinSeason { athlete: usize },
    /// `h*_{i,s}(z)`.
    SeasonWithinSeason { athlete: usize, season: usize },
    /// `f_i(t)` over calendar time since career start.
    Trend { athlete: usize },
    /// `g(a(t)) + f_i(t)`.
    IndividualTrend { athlete: usize },
    /// `g(a(t)) + f_i(t) + h*_{i,s(t)}(z(t))`.
    IndividualFitted { athlete: usize },
}

impl Trajectory {
    pub fn label(&self) -> String {
        match *self {
            Self::Population => "population".into(),
            Self::WithinSeason => "within_season".into(),
            Self::AthleteWithinSeason { athlete } => format!("athlete_within_season_{athlete}"),
            Self::SeasonWithinSeason { athlete, season } => format!("season_within_season_{athlete}_{season}"),
            Self::Trend { athlete } => format!("trend_{athlete}"),
            Self::IndividualTrend { athlete } => format!("individual_trend_{athlete}"),
            Self::IndividualFitted { athlete } => format!("individual_fitted_{athlete}"),
        }
    }

    fn athlete(&self) -> Option<usize> {
        match *self {
            Self::Population | Self::WithinSeason => None,
            Self::AthleteWithinSeason { athlete }
            | Self::SeasonWithinSeason { athlete, .. }
            | Self::Trend { athlete }
            | Self::IndividualTrend { athlete }
            | Self::IndividualFitted { athlete } => Some(athlete),
        }
    }
}

/// Pointwise posterior median and 95% interval of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub grid: Vec<f64>,
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// `n` equally spaced points on `[0, 1]`, endpoints included.
pub fn unit_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// Linear-interpolation quantile of sorted values (Hyndman–Fan type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let q = sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]);
    // keep an exact zero from printing as -0
    q + 0.0
}

struct CurveEvaluator<'a> {
    draws: &'a PosteriorDraws,
    kind: Trajectory,
    coeffs: std::ops::Range<usize>,
}

impl<'a> CurveEvaluator<'a> {
    fn new(draws: &'a PosteriorDraws, kind: Trajectory, grid: &[f64]) -> Result<Self> {
        let layout = draws.dims.layout(draws.with_latents);
        let g = layout.num_coeffs;
        if let Some(i) = kind.athlete() {
            if i >= layout.athletes.len() {
                return Err(Error::OutOfRange(format!("athlete {i} of {}", layout.athletes.len())));
            }
        }
        let seasons = |i: usize| draws.dims.seasons[i];
        let span = |i: usize| seasons(i) as f64 * draws.season_length;
        let in_unit = |z: &f64| (0.0..=1.0).contains(z);
        let ok = match kind {
            Trajectory::Population => grid.iter().all(|a| a.is_finite()),
            Trajectory::WithinSeason
            | Trajectory::AthleteWithinSeason { .. }
            | Trajectory::SeasonWithinSeason { .. } => grid.iter().all(in_unit),
            Trajectory::Trend { athlete }
            | Trajectory::IndividualTrend { athlete }
            | Trajectory::IndividualFitted { athlete } => {
                grid.iter().all(|t| season_position(seasons(athlete), draws.season_length, *t).is_ok())
                    && span(athlete) > 0.0
            }
        };
        if !ok {
            return Err(Error::OutOfRange(format!("grid outside the domain of {}", kind.label())));
        }
        let coeffs = match kind {
            Trajectory::WithinSeason => layout.beta..layout.beta + g,
            Trajectory::AthleteWithinSeason { athlete } => {
                let a = layout.athletes[athlete].beta_athlete;
                a..a + g
            }
            Trajectory::SeasonWithinSeason { athlete, season } => {
                if season >= seasons(athlete) {
                    return Err(Error::OutOfRange(format!(
                        "season {season} of athlete {athlete} with {} seasons",
                        seasons(athlete)
                    )));
                }
                let a = layout.athletes[athlete].beta_season + season * g;
                a..a + g
            }
            Trajectory::IndividualFitted { athlete } => {
                let a = layout.athletes[athlete].beta_season;
                a..a + seasons(athlete) * g
            }
            _ => 0..0,
        };
        if matches!(kind, Trajectory::IndividualTrend { .. } | Trajectory::IndividualFitted { .. })
            && draws.start_ages.len() != layout.athletes.len()
        {
            return Err(invalid("draws carry no athlete start ages"));
        }
        Ok(Self { draws, kind, coeffs })
    }

    fn eval(&self, flat: &[f64], grid: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let dims = &self.draws.dims;
        let prior = &self.draws.prior;
        let layout_delta = crate::model::SCALAR_NAMES.len();
        let delta = &flat[layout_delta..layout_delta + dims.degree + 1];
        let rbp = |range: std::ops::Range<usize>| RbpCoefficientSet::from_vec(dims.max_order, flat[range].to_vec());
        out.clear();
        match self.kind {
            Trajectory::Population => {
                out.extend(grid.iter().map(|a| population_trajectory(delta, prior.mean_age, *a)));
            }
            Trajectory::WithinSeason
            | Trajectory::AthleteWithinSeason { .. }
            | Trajectory::SeasonWithinSeason { .. } => {
                let c = rbp(self.coeffs.clone())?;
                out.extend(grid.iter().map(|z| c.eval(*z)));
            }
            Trajectory::Trend { athlete }
            | Trajectory::IndividualTrend { athlete }
            | Trajectory::IndividualFitted { athlete } => {
                let layout = dims.layout(self.draws.with_latents);
                let s = dims.seasons[athlete];
                let k0 = layout.athletes[athlete].knots;
                let knots = &flat[k0..k0 + s + 1];
                let g = layout.num_coeffs;
                for &t in grid {
                    let (season, z) = season_position(s, self.draws.season_length, t)?;
                    let mut v = knots[season] * (1.0 - z) + knots[season + 1] * z;
                    if !matches!(self.kind, Trajectory::Trend { .. }) {
                        let age = self.draws.start_ages[athlete] + t;
                        v += population_trajectory(delta, prior.mean_age, age);
                    }
                    if matches!(self.kind, Trajectory::IndividualFitted { .. }) {
                        let start = self.coeffs.start + season * g;
                        v += rbp(start..start + g)?.eval(z);
                    }
                    out.push(v);
                }
            }
        }
        Ok(())
    }
}

/// Pointwise posterior median and 2.5%/97.5% quantiles of a trajectory over
/// every recorded draw of every chain.
pub fn trajectory_band(draws: &PosteriorDraws, kind: Trajectory, grid: &[f64]) -> Result<Band> {
    if draws.total_draws() == 0 {
        return Err(invalid("no posterior draws"));
    }
    if grid.is_empty() {
        return Err(invalid("empty grid"));
    }
    let eval = CurveEvaluator::new(draws, kind, grid)?;
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.total_draws()); grid.len()];
    let mut curve = Vec::with_capacity(grid.len());
    for chain in &draws.chains {
        for flat in &chain.draws {
            eval.eval(flat, grid, &mut curve)?;
            for (col, v) in columns.iter_mut().zip(&curve) {
                col.push(*v);
            }
        }
    }
    let mut band = Band {
        grid: grid.to_vec(),
        median: Vec::with_capacity(grid.len()),
        lower: Vec::with_capacity(grid.len()),
        upper: Vec::with_capacity(grid.len()),
    };
    for mut col in columns {
        col.sort_by(f64::total_cmp);
        band.median.push(quantile(&col, 0.5));
        band.lower.push(quantile(&col, 0.025));
        band.upper.push(quantile(&col, 0.975));
    }
    Ok(band)
}

fn weighted_diagonal(scale: f64, weights: &[f64]) -> f64 {
    let quad: f64 = weights
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let (n, v) = order_index(j);
            w * cross_integral(n, v, n, v).expect("flat index maps to a valid basis")
        })
        .sum();
    scale * quad
}

/// Prior-expected integrated squared deviation of a season's within-season
/// curve from the athlete's average one.
pub fn within_season_variability(state: &ParamState, athlete: usize) -> Result<f64> {
    let l = state
        .lambda2
        .get(athlete)
        .ok_or_else(|| Error::OutOfRange(format!("athlete {athlete}")))?;
    Ok(weighted_diagonal(*l, &state.c2))
}

/// Prior-expected integrated squared deviation of an athlete's average
/// within-season curve from the population one.
pub fn average_effect_size(state: &ParamState, athlete: usize) -> Result<f64> {
    let t = state
        .tau2
        .get(athlete)
        .ok_or_else(|| Error::OutOfRange(format!("athlete {athlete}")))?;
    Ok(weighted_diagonal(*t, &state.d2))
}

/// Posterior medians of the per-athlete shrinkage summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageRow {
    pub athlete: String,
    pub lambda2: f64,
    pub tau2: f64,
    pub within_season_variability: f64,
    pub average_effect_size: f64,
}

/// One row per athlete with the posterior median of `lambda_i^2`,
/// `tau_i^2` and the two integrated summaries.
pub fn shrinkage_table(draws: &PosteriorDraws) -> Result<Vec<ShrinkageRow>> {
    if draws.total_draws() == 0 {
        return Err(invalid("no posterior draws"));
    }
    let m = draws.dims.num_athletes();
    let mut cols = vec![[Vec::new(), Vec::new(), Vec::new(), Vec::new()]; m];
    for state in draws.states() {
        let state = state?;
        for (i, c) in cols.iter_mut().enumerate() {
            c[0].push(state.lambda2[i]);
            c[1].push(state.tau2[i]);
            c[2].push(within_season_variability(&state, i)?);
            c[3].push(average_effect_size(&state, i)?);
        }
    }
    let med = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        quantile(v, 0.5)
    };
    Ok(cols
        .into_iter()
        .enumerate()
        .map(|(i, mut c)| ShrinkageRow {
            athlete: draws.athlete_ids.get(i).cloned().unwrap_or_else(|| i.to_string()),
            lambda2: med(&mut c[0]),
            tau2: med(&mut c[1]),
            within_season_variability: med(&mut c[2]),
            average_effect_size: med(&mut c[3]),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::integral_of_square;
    use crate::mcmc::ChainDraws;
    use crate::model::StateDims;
    use crate::model::PriorConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn dims(max_order: usize) -> StateDims {
        StateDims {
            degree: 2,
            max_order,
            num_confounders: 0,
            seasons: vec![2, 1],
            performances: vec![4, 2],
        }
    }

    fn draws_from(states: &[ParamState], prior: PriorConfig) -> PosteriorDraws {
        let d = states[0].dims();
        PosteriorDraws {
            prior,
            season_length: 1.0,
            athlete_ids: vec!["a".into(), "b".into()],
            start_ages: vec![20.0, 22.0],
            dims: d,
            with_latents: false,
            chains: vec![ChainDraws {
                index: 0,
                draws: states.iter().map(|s| s.flatten(false)).collect(),
                acceptance: vec![],
            }],
        }
    }

    fn state_with_curves(shift: f64) -> ParamState {
        let mut s = ParamState::baseline(&dims(3));
        s.delta = vec![40.0 + shift, 0.0, 0.1];
        for (j, b) in s.beta.as_mut_slice().iter_mut().enumerate() {
            *b = 0.5 + j as f64 + shift;
        }
        s.beta_season[0][1].as_mut_slice()[0] = -1.0 + shift;
        s.knots[0] = vec![1.0 + shift, 2.0, 0.0];
        s
    }

    #[test]
    fn variability_examples() {
        let mut s = ParamState::baseline(&dims(2));
        s.lambda2 = vec![1.0, 0.0];
        s.tau2 = vec![2.0, 0.0];
        s.c2 = vec![1.0];
        s.d2 = vec![1.0];
        assert!((within_season_variability(&s, 0).unwrap() - 2.0 / 15.0).abs() < 1e-15);
        assert_eq!(within_season_variability(&s, 1).unwrap(), 0.0);
        assert!((average_effect_size(&s, 0).unwrap() - 4.0 / 15.0).abs() < 1e-15);
        assert_eq!(average_effect_size(&s, 1).unwrap(), 0.0);
        assert!(within_season_variability(&s, 2).is_err());
    }

    #[test]
    fn variability_matches_prior_expectation() {
        let mut s = ParamState::baseline(&dims(4));
        s.lambda2 = vec![0.7, 1.0];
        s.c2 = vec![1.3, 0.4, 2.0, 0.9, 1.1, 0.6];
        let psi = within_season_variability(&s, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut total = 0.0;
        for _ in 0..n {
            let coeffs: Vec<f64> = s
                .c2
                .iter()
                .map(|c| Normal::new(0.0, (s.lambda2[0] * c).sqrt()).unwrap().sample(&mut rng))
                .collect();
            let diff = RbpCoefficientSet::from_vec(4, coeffs).unwrap();
            total += integral_of_square(&diff, &diff).unwrap();
        }
        let mc = total / n as f64;
        assert!((mc / psi - 1.0).abs() < 0.02, "{mc} vs {psi}");
    }

    #[test]
    fn rank_identical_with_shared_weights() {
        let mut s = ParamState::baseline(&dims(3));
        s.tau2 = vec![0.3, 2.5];
        let g: Vec<f64> = (0..2).map(|i| average_effect_size(&s, i).unwrap()).collect();
        assert!(g[0] < g[1]);
    }

    #[test]
    fn invariant_under_working_rescale() {
        let mut s = ParamState::baseline(&dims(3));
        s.lambda2 = vec![0.8, 1.7];
        s.c2 = vec![0.5, 1.5, 2.5];
        let before = within_season_variability(&s, 1).unwrap();
        let w = 3.7;
        s.lambda2.iter_mut().for_each(|l| *l *= w);
        s.c2.iter_mut().for_each(|c| *c /= w);
        assert!((within_season_variability(&s, 1).unwrap() / before - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_draw_band_is_the_curve() {
        let s = state_with_curves(0.0);
        let draws = draws_from(&[s.clone()], PriorConfig { max_order: 3, mean_age: 26.0, ..Default::default() });
        let grid = unit_grid(11);
        let b = trajectory_band(&draws, Trajectory::WithinSeason, &grid).unwrap();
        for (k, z) in grid.iter().enumerate() {
            let want = s.beta.eval(*z);
            assert_eq!(b.median[k], want + 0.0);
            assert_eq!(b.lower[k], b.upper[k]);
        }
        assert_eq!(b.median[0], 0.0);
        assert_eq!(b.upper[10], 0.0);
    }

    #[test]
    fn symmetric_draws_centre_on_curve() {
        let prior = PriorConfig { max_order: 3, mean_age: 26.0, ..Default::default() };
        let states: Vec<ParamState> = [-0.5, 0.0, 0.5].iter().map(|c| state_with_curves(*c)).collect();
        let draws = draws_from(&states, prior.clone());
        let ages = [18.0, 26.0, 31.5];
        let b = trajectory_band(&draws, Trajectory::Population, &ages).unwrap();
        for (k, a) in ages.iter().enumerate() {
            let want = population_trajectory(&states[1].delta, 26.0, *a);
            assert!((b.median[k] - want).abs() < 1e-12);
            assert!(b.lower[k] < b.median[k] && b.median[k] < b.upper[k]);
        }
    }

    #[test]
    fn individual_curves() {
        let prior = PriorConfig { max_order: 3, mean_age: 26.0, ..Default::default() };
        let s = state_with_curves(0.0);
        let draws = draws_from(&[s.clone()], prior.clone());
        let grid = [0.0, 0.5, 1.0, 1.25, 2.0];
        let trend = trajectory_band(&draws, Trajectory::Trend { athlete: 0 }, &grid).unwrap();
        assert_eq!(trend.median, vec![1.0, 1.5, 2.0, 1.5, 0.0]);
        let fitted = trajectory_band(&draws, Trajectory::IndividualFitted { athlete: 0 }, &grid).unwrap();
        for (k, t) in grid.iter().enumerate() {
            let want = s.individual_fitted(&prior, 0, 1.0, 20.0 + t, *t).unwrap();
            assert!((fitted.median[k] - want).abs() < 1e-12);
        }
        let season = trajectory_band(&draws, Trajectory::SeasonWithinSeason { athlete: 0, season: 1 }, &[0.0, 1.0]).unwrap();
        assert_eq!(season.median, vec![0.0, 0.0]);
        assert!(trajectory_band(&draws, Trajectory::Trend { athlete: 1 }, &[1.5]).is_err());
        assert!(trajectory_band(&draws, Trajectory::SeasonWithinSeason { athlete: 1, season: 1 }, &[0.5]).is_err());
        assert!(trajectory_band(&draws, Trajectory::WithinSeason, &[1.1]).is_err());
    }

    #[test]
    fn empty_draws_rejected() {
        let mut draws = draws_from(&[state_with_curves(0.0)], PriorConfig { max_order: 3, ..Default::default() });
        draws.chains[0].draws.clear();
        assert!(matches!(
            trajectory_band(&draws, Trajectory::WithinSeason, &[0.5]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn quantile_type7() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!(quantile(&[-0.0], 0.5).is_sign_positive());
    }
}
