//! Draws from the skewed heavy-tailed error law and their sample moments.
//!
//! `cargo run --release --example error_law -- [alpha] [nu1] [nu2]`

use perftraj::model::ErrorLaw;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let s = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n / v.powf(1.5);
    (m, v, s)
}

fn main() -> perftraj::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().ok());
    let alpha = args.next().flatten().unwrap_or(3.0);
    let nu1 = args.next().flatten().unwrap_or(30.0);
    let nu2 = args.next().flatten().unwrap_or(7.0);
    let law = ErrorLaw::new(alpha, nu1, nu2, 0.25)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 200_000;

    let independent: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
    let shared: Vec<f64> = (0..n).map(|_| law.sample_shared_scale(&mut rng)).collect();
    for (label, xs) in [("independent scales", &independent), ("shared scale", &shared)] {
        let (m, v, s) = moments(xs);
        println!("{label:>18}: mean {m:+.4}  variance {v:.4}  skewness {s:+.3}");
    }
    Ok(())
}
