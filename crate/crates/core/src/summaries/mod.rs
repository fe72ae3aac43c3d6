//! Posterior summaries, simulation-study metrics and MCMC diagnostics.

mod diagnostics;
mod metrics;
mod trajectories;

pub use diagnostics::{diagnose, ess, ess_chains, psrf, DiagnosticRow, DiagnosticsTable, GroupSummary};
pub use metrics::{armse, rmise, spearman};
pub use trajectories::{
    average_effect_size, quantile, shrinkage_table, trajectory_band, unit_grid, within_season_variability, Band,
    ShrinkageRow, Trajectory,
};
