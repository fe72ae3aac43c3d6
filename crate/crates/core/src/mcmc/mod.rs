//! Gibbs sampler for the hierarchical performance model.

mod chain;
mod design;
mod init;
mod joint;
mod updates;

pub use chain::{run_chain, ChainConfig, ChainDraws, PosteriorDraws, Sampler};
pub use design::{build_design, AthleteDesign, DesignCache};
pub use init::init_state;
pub use joint::{sample_prior, simulate_responses};
pub use updates::{
    alpha_collapsed_log_density, alpha_log_density, alpha_log_density_gradient, alpha_statistics, error_residuals, interweave_shift,
    kappa_conditional, local_scale_conditional, mixing_conditional, rescale, shape_constraints, mean_skew_offset, skew_terms, sigma2_conditional, sigma2_m_conditional, skew_residuals, t_marginal_log_density, update_athlete_block,
    update_error_scales, update_kappa, update_population_block, update_prior_scales, update_scale_family,
    update_shrinkage_family, update_tail_family, ModelContext, SkewTerm, Tuners,
};
