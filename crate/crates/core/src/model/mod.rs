//! Data containers, the prior, the parameter state and trajectory evaluation.

mod data;
mod noise;
mod prior;
mod state;
mod trajectory;

pub use data::{Athlete, Dataset, Performance};
pub use noise::{sample_error, ErrorLaw};
pub use prior::{GammaPrior, InvGammaPrior, PriorConfig};
pub use state::{skew_loading, AthleteOffsets, FlatLayout, ParamState, StateDims, SCALAR_NAMES};
pub use trajectory::{population_trajectory, season_position, trend_trajectory};
