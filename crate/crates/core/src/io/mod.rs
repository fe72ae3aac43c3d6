//! Reading performance files and configs, persisting posterior draws, and
//! writing plot-ready tables.

mod archive;
mod config;
mod dataset;
mod export;

pub use archive::{persist_draws, read_draws, restore_draws, write_draws, ARCHIVE_MAGIC, ARCHIVE_VERSION};
pub use config::{DataOptions, RunConfig, RunManifest};
pub use dataset::{
    load_dataset, read_dataset, season_start_date, write_dataset, ConfounderCoding, LoadReport, SeasonStart,
};
pub use export::{
    adjusted_performances, write_adjusted_csv, write_band_csv, write_diagnostics_csv, write_shrinkage_csv,
    AdjustedRow,
};
