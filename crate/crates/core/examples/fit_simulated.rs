//! Simulate a career dataset, fit it and compare the estimates to the truth.
//!
//! `cargo run --release --example fit_simulated -- [athletes] [iterations]`

use std::time::Instant;

use perftraj::mcmc::{run_chain, ChainConfig};
use perftraj::model::PriorConfig;
use perftraj::simgen::{generate_dataset, population_curve, McmcFitter, ReplicationMetrics, SimDesign, StudyGrids};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> perftraj::Result<()> {
    let mut args = std::env::args().skip(1);
    let athletes = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let iterations: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(2000);

    let design = SimDesign {
        num_athletes: athletes,
        ..Default::default()
    };
    let (dataset, truth) = generate_dataset(&design, &mut ChaCha8Rng::seed_from_u64(7))?;
    println!(
        "{} athletes, {} seasons, {} performances",
        dataset.num_athletes(),
        dataset.total_seasons(),
        dataset.num_performances()
    );

    let prior = PriorConfig::default().with_mean_age_from(&dataset);
    let chain = ChainConfig {
        iterations,
        burn_in: iterations / 2,
        thin: 5,
        chains: 2,
        ..Default::default()
    };
    let start = Instant::now();
    let draws = run_chain(&dataset, &prior, &chain)?;
    let secs = start.elapsed().as_secs_f64();
    println!("{iterations} iterations x 2 chains in {secs:.1}s ({:.2} ms/iteration)", 1e3 * secs / iterations as f64);

    let grids = StudyGrids::default();
    let est = McmcFitter::estimates(&draws, &grids)?;
    let m = ReplicationMetrics::score(&est, &truth, &grids)?;
    println!("age   true g   estimate");
    for k in (0..grids.ages.len()).step_by(40) {
        println!("{:4.1} {:8.3} {:8.3}", grids.ages[k], population_curve(grids.ages[k]), est.population[k]);
    }
    println!("integrated squared error of g        {:.4}", m.rmise_population);
    println!("integrated squared error of h*       {:.4}", m.rmise_within_season);
    println!("mean for athlete curves h*_i         {:.4}", m.rmise_athlete);
    println!("mean for season curves h*_is         {:.4}", m.rmise_season);
    println!("mean squared error of season knots   {:.4}", m.amrse_knots);
    println!("rank corr tau^2 vs |a_i|             {:?}", m.spearman_tau_amplitude);
    println!("rank corr lambda^2 vs mean |b_is|    {:?}", m.spearman_lambda_amplitude);
    Ok(())
}
