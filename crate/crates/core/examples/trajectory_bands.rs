//! Fit a small simulated dataset and print posterior bands for the
//! population curves and one athlete's curves, plus the shrinkage table.
//!
//! `cargo run --release --example trajectory_bands -- [athletes] [iterations]`

use perftraj::mcmc::{run_chain, ChainConfig};
use perftraj::model::PriorConfig;
use perftraj::simgen::{generate_dataset, SimDesign};
use perftraj::summaries::{shrinkage_table, trajectory_band, unit_grid, Band, Trajectory};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn show(title: &str, band: &Band) {
    println!("{title}");
    for k in (0..band.grid.len()).step_by(band.grid.len() / 5) {
        println!(
            "  {:6.2}  {:8.3}  [{:8.3}, {:8.3}]",
            band.grid[k], band.median[k], band.lower[k], band.upper[k]
        );
    }
}

fn main() -> perftraj::Result<()> {
    let mut args = std::env::args().skip(1);
    let athletes = args.next().and_then(|a| a.parse().ok()).unwrap_or(30);
    let iterations: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(2000);

    let design = SimDesign { num_athletes: athletes, ..Default::default() };
    let (dataset, _) = generate_dataset(&design, &mut ChaCha8Rng::seed_from_u64(11))?;
    let prior = PriorConfig::default().with_mean_age_from(&dataset);
    let chain = ChainConfig { iterations, burn_in: iterations / 2, thin: 5, ..Default::default() };
    let draws = run_chain(&dataset, &prior, &chain)?;

    let ages: Vec<f64> = (0..=50).map(|k| 20.0 + 0.2 * k as f64).collect();
    let z = unit_grid(51);
    show("population curve g(age)", &trajectory_band(&draws, Trajectory::Population, &ages)?);
    show("population within-season curve", &trajectory_band(&draws, Trajectory::WithinSeason, &z)?);

    let id = dataset.athletes[0].id.clone();
    show(
        &format!("{id}: within-season curve"),
        &trajectory_band(&draws, Trajectory::AthleteWithinSeason { athlete: 0 }, &z)?,
    );
    show(
        &format!("{id}: first season"),
        &trajectory_band(&draws, Trajectory::SeasonWithinSeason { athlete: 0, season: 0 }, &z)?,
    );
    let career = dataset.athletes[0].seasons as f64 * dataset.season_length;
    let t: Vec<f64> = (0..=50).map(|k| career * k as f64 / 50.0).collect();
    show(
        &format!("{id}: trend over the career"),
        &trajectory_band(&draws, Trajectory::Trend { athlete: 0 }, &t)?,
    );

    println!("athlete  lambda2  tau2  within-season variability  average effect size");
    for row in shrinkage_table(&draws)?.iter().take(8) {
        println!(
            "{:>7} {:8.4} {:6.4} {:12.4} {:12.4}",
            row.athlete, row.lambda2, row.tau2, row.within_season_variability, row.average_effect_size
        );
    }
    Ok(())
}
