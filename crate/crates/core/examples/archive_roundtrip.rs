//! Save posterior draws to the checksummed archive format and read them back.

use perftraj::io::{persist_draws, read_draws, restore_draws, write_draws};
use perftraj::mcmc::{run_chain, ChainConfig};
use perftraj::model::PriorConfig;
use perftraj::simgen::{generate_dataset, SimDesign};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> perftraj::Result<()> {
    let design = SimDesign { num_athletes: 10, ..Default::default() };
    let (dataset, _) = generate_dataset(&design, &mut ChaCha8Rng::seed_from_u64(2))?;
    let prior = PriorConfig::default().with_mean_age_from(&dataset);
    let chain = ChainConfig { iterations: 400, burn_in: 200, thin: 4, ..Default::default() };
    let draws = run_chain(&dataset, &prior, &chain)?;

    let path = std::env::temp_dir().join("perftraj_example.ptd");
    persist_draws(&draws, &path)?;
    let back = restore_draws(&path)?;
    println!(
        "{} chains x {} draws, {} bytes on disk, identical after reload: {}",
        back.num_chains(),
        back.draws_per_chain(),
        std::fs::metadata(&path)?.len(),
        back == draws
    );

    // a flipped byte is caught by the checksum
    let mut bytes = Vec::new();
    write_draws(&mut bytes, &draws)?;
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    match read_draws(bytes.as_slice()) {
        Ok(_) => println!("corruption went unnoticed"),
        Err(e) => println!("corrupted copy rejected: {e}"),
    }
    std::fs::remove_file(&path)?;
    Ok(())
}
