//! The `perftraj` command line: simulate, fit, summarize and diagnose.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{
    adjusted_performances, load_dataset, persist_draws, restore_draws, write_adjusted_csv, write_band_csv,
    write_dataset, write_diagnostics_csv, write_shrinkage_csv, RunConfig, RunManifest, SeasonStart,
};
use crate::mcmc::{run_chain, PosteriorDraws};
use crate::simgen::generate_dataset;
use crate::summaries::{diagnose, shrinkage_table, trajectory_band, unit_grid, Trajectory};

/// File names written by the subcommands.
pub const DATASET_FILE: &str = "dataset.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const ARCHIVE_FILE: &str = "draws.ptd";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOAD_REPORT_FILE: &str = "load_report.json";

#[derive(Debug, Parser)]
#[command(name = "perftraj", version, about = "Athlete performance trajectories with seasonal effects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its ground truth.
    Simulate(SimulateArgs),
    /// Fit the model to a performance file and archive the draws.
    Fit(FitArgs),
    /// Write trajectory bands and shrinkage tables from an archive.
    Summarize(SummarizeArgs),
    /// Write PSRF and ESS for every parameter in an archive.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct ChainFlags {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct DataFlags {
    /// Drop athletes with fewer performances.
    #[arg(long)]
    pub min_performances: Option<usize>,
    /// Month and day seasons start on, as MM-DD.
    #[arg(long)]
    pub season_start: Option<SeasonStart>,
    /// Confounder column; repeat for several.
    #[arg(long = "confounder")]
    pub confounders: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub athletes: Option<usize>,
    #[arg(long)]
    pub season_start: Option<SeasonStart>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Performance CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainFlags,
    #[command(flatten)]
    pub data: DataFlags,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Draws archive.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 201)]
    pub grid_points: usize,
    /// Performance CSV to adjust for a confounder.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Confounder whose effect is removed in `adjusted.csv`.
    #[arg(long, requires = "data")]
    pub adjust: Option<String>,
    #[command(flatten)]
    pub data_flags: DataFlags,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Draws archive.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV to write; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

impl ChainFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        let c = &mut cfg.chain;
        c.seed = self.seed.unwrap_or(c.seed);
        c.chains = self.chains.unwrap_or(c.chains);
        c.iterations = self.iters.unwrap_or(c.iterations);
        c.burn_in = self.burnin.unwrap_or(c.burn_in);
        c.thin = self.thin.unwrap_or(c.thin);
    }
}

impl DataFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        let d = &mut cfg.data;
        d.min_performances = self.min_performances.unwrap_or(d.min_performances);
        d.season_start = self.season_start.unwrap_or(d.season_start);
        if !self.confounders.is_empty() {
            d.confounders = self.confounders.clone();
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn csv_file(path: &Path) -> Result<fs::File> {
    Ok(fs::File::create(path)?)
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    cfg.sim.seed = args.seed.unwrap_or(cfg.sim.seed);
    cfg.sim.num_athletes = args.athletes.unwrap_or(cfg.sim.num_athletes);
    cfg.data.season_start = args.season_start.unwrap_or(cfg.data.season_start);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sim.seed);
    let (dataset, truth) = generate_dataset(&cfg.sim, &mut rng)?;
    create_dir(&args.out)?;
    write_dataset(csv_file(&args.out.join(DATASET_FILE))?, &dataset, cfg.data.season_start, 2000)?;
    write_json(
        &args.out.join(TRUTH_FILE),
        &serde_json::json!({ "design": cfg.sim, "truth": truth }),
    )
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    args.chain.apply(&mut cfg);
    args.data.apply(&mut cfg);
    cfg.prior.validate()?;
    cfg.chain.validate()?;
    let (dataset, report) = load_dataset(
        &args.input,
        &cfg.data.confounders,
        cfg.data.season_start,
        cfg.data.min_performances,
    )?;
    if dataset.num_athletes() == 0 {
        return Err(Error::Data("no athletes left after filtering".into()));
    }
    cfg.prior = cfg.prior.clone().with_mean_age_from(&dataset);
    let mut manifest = RunManifest::new(std::slice::from_ref(&args.input), &cfg)?;
    let draws = run_chain(&dataset, &cfg.prior, &cfg.chain)?;
    create_dir(&args.out)?;
    write_json(&args.out.join(LOAD_REPORT_FILE), &report)?;
    let archive = args.out.join(ARCHIVE_FILE);
    persist_draws(&draws, &archive)?;
    manifest.finish(&archive)?;
    manifest.save(&args.out.join(MANIFEST_FILE))
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_band(draws: &PosteriorDraws, kind: Trajectory, grid: &[f64], grid_name: &str, path: &Path) -> Result<()> {
    let band = trajectory_band(draws, kind, grid)?;
    write_band_csv(csv_file(path)?, grid_name, &band)
}

pub fn summarize(args: &SummarizeArgs) -> Result<()> {
    let draws = restore_draws(&args.input)?;
    if draws.total_draws() == 0 {
        return Err(Error::InvalidArgument(format!("{} holds no draws", args.input.display())));
    }
    if args.grid_points < 2 {
        return Err(Error::InvalidArgument("need at least two grid points".into()));
    }
    create_dir(&args.out)?;
    let n = args.grid_points;
    let z = unit_grid(n);
    let span = |i: usize| draws.dims.seasons[i] as f64 * draws.season_length;
    let m = draws.dims.num_athletes();
    let youngest = draws.start_ages.iter().copied().fold(f64::INFINITY, f64::min);
    let oldest = (0..m).map(|i| draws.start_ages[i] + span(i)).fold(f64::NEG_INFINITY, f64::max);
    let ages: Vec<f64> = z.iter().map(|u| youngest + u * (oldest - youngest)).collect();
    write_band(&draws, Trajectory::Population, &ages, "age", &args.out.join("population.csv"))?;
    write_band(&draws, Trajectory::WithinSeason, &z, "z", &args.out.join("within_season.csv"))?;

    let dir = args.out.join("athletes");
    create_dir(&dir)?;
    for i in 0..m {
        let stem = file_stem(&draws.athlete_ids[i]);
        let athlete = i;
        write_band(
            &draws,
            Trajectory::AthleteWithinSeason { athlete },
            &z,
            "z",
            &dir.join(format!("{stem}_within_season.csv")),
        )?;
        for season in 0..draws.dims.seasons[i] {
            write_band(
                &draws,
                Trajectory::SeasonWithinSeason { athlete, season },
                &z,
                "z",
                &dir.join(format!("{stem}_season{}.csv", season + 1)),
            )?;
        }
        let t: Vec<f64> = z.iter().map(|u| u * span(i)).collect();
        write_band(&draws, Trajectory::Trend { athlete }, &t, "t", &dir.join(format!("{stem}_trend_excess.csv")))?;
        write_band(
            &draws,
            Trajectory::IndividualTrend { athlete },
            &t,
            "t",
            &dir.join(format!("{stem}_trend.csv")),
        )?;
        write_band(
            &draws,
            Trajectory::IndividualFitted { athlete },
            &t,
            "t",
            &dir.join(format!("{stem}_fitted.csv")),
        )?;
    }
    write_shrinkage_csv(csv_file(&args.out.join("shrinkage.csv"))?, &shrinkage_table(&draws)?)?;

    if let (Some(data), Some(name)) = (&args.data, &args.adjust) {
        let mut cfg = load_config(args.config.as_deref())?;
        args.data_flags.apply(&mut cfg);
        let (dataset, _) = load_dataset(data, &cfg.data.confounders, cfg.data.season_start, cfg.data.min_performances)?;
        let rows = adjusted_performances(&dataset, &draws, name)?;
        write_adjusted_csv(csv_file(&args.out.join("adjusted.csv"))?, &rows)?;
    }
    Ok(())
}

pub fn diagnose_archive(args: &DiagnoseArgs) -> Result<()> {
    let draws = restore_draws(&args.input)?;
    let table = diagnose(&draws)?;
    match &args.out {
        Some(path) => write_diagnostics_csv(csv_file(path)?, &table),
        None => write_diagnostics_csv(std::io::stdout().lock(), &table),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Summarize(a) => summarize(a),
        Command::Diagnose(a) => diagnose_archive(a),
    }
}

/// Parse `args`, run, and map the outcome to an exit status: 0 on success,
/// 2 for usage errors, 1 for every other failure with `error[kind]: message`
/// on standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from([
            "perftraj", "fit", "--input", "d.csv", "--out", "o", "--seed", "9", "--chains", "3", "--iters", "100",
            "--burnin", "40", "--thin", "2", "--min-performances", "5", "--season-start", "09-01", "--confounder",
            "pool_length",
        ])
        .unwrap();
        let Command::Fit(args) = cli.command else { panic!("fit expected") };
        let mut cfg = RunConfig::default();
        args.chain.apply(&mut cfg);
        args.data.apply(&mut cfg);
        assert_eq!((cfg.chain.seed, cfg.chain.chains, cfg.chain.iterations), (9, 3, 100));
        assert_eq!((cfg.chain.burn_in, cfg.chain.thin), (40, 2));
        assert_eq!(cfg.data.min_performances, 5);
        assert_eq!(cfg.data.season_start, SeasonStart { month: 9, day: 1 });
        assert_eq!(cfg.data.confounders, vec!["pool_length".to_string()]);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["perftraj", "fit"]), 2);
        assert_eq!(main_with_args(["perftraj", "bogus"]), 2);
    }

    #[test]
    fn stems_are_safe() {
        assert_eq!(file_stem("A. Smith/2"), "A__Smith_2");
    }
}
