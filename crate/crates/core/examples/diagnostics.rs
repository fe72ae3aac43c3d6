//! Convergence diagnostics for a multi-chain run: potential scale reduction
//! and effective sample size per parameter, then the worst value per group.
//!
//! `cargo run --release --example diagnostics -- [iterations]`

use perftraj::mcmc::{run_chain, ChainConfig};
use perftraj::model::PriorConfig;
use perftraj::simgen::{generate_dataset, SimDesign};
use perftraj::summaries::diagnose;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> perftraj::Result<()> {
    let iterations: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let design = SimDesign { num_athletes: 25, ..Default::default() };
    let (dataset, _) = generate_dataset(&design, &mut ChaCha8Rng::seed_from_u64(5))?;
    let prior = PriorConfig::default().with_mean_age_from(&dataset);
    let chain = ChainConfig { iterations, burn_in: iterations / 2, thin: 2, chains: 3, ..Default::default() };
    let draws = run_chain(&dataset, &prior, &chain)?;
    let table = diagnose(&draws)?;

    for name in ["alpha", "nu1", "nu2", "sigma2_m", "delta[0]", "delta[1]"] {
        if let Some(row) = table.row(name) {
            println!("{name:>10}  psrf {:.3}  ess {:7.1}", row.psrf.unwrap_or(f64::NAN), row.ess);
        }
    }
    println!("group            count  max psrf  min ess");
    for g in &table.groups {
        println!("{:<16} {:5} {:9.3} {:8.1}", g.group, g.parameters, g.max_psrf.unwrap_or(f64::NAN), g.min_ess);
    }
    for c in &draws.chains {
        println!("chain {} acceptance rates: {:?}", c.index, c.acceptance);
    }
    Ok(())
}
