use serde::{Deserialize, Serialize};

use crate::bernstein::ImprovementDirection;
use crate::error::{Error, Result};

/// `Ga(shape, rate)`, density proportional to `x^(shape-1) exp(-rate x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

/// `IG(shape, scale)`, density proportional to `x^(-shape-1) exp(-scale / x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl GammaPrior {
    pub const fn new(shape: f64, rate: f64) -> Self {
        Self { shape, rate }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - self.rate * x
    }

    fn check(&self, name: &str) -> Result<()> {
        check_positive(name, self.shape)?;
        check_positive(name, self.rate)
    }
}

impl InvGammaPrior {
    pub const fn new(shape: f64, scale: f64) -> Self {
        Self { shape, scale }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        -(self.shape + 1.0) * x.ln() - self.scale / x
    }

    fn check(&self, name: &str) -> Result<()> {
        check_positive(name, self.shape)?;
        check_positive(name, self.scale)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}: {v} must be positive and finite")))
    }
}

const VAGUE: InvGammaPrior = InvGammaPrior::new(0.001, 0.001);

/// Fixed hyperparameters of the model.
///
/// Defaults reproduce the published prior. `delta_prior_precision` and
/// `zeta_prior_precision` of zero give the flat prior on the fixed effects;
/// positive values give independent zero-mean normal priors (the joint
/// distribution tests need a proper prior).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    /// Degree `d` of the population age polynomial.
    pub degree: usize,
    /// Highest restricted Bernstein order `N`.
    pub max_order: usize,
    pub direction: ImprovementDirection,
    /// Centre of the age polynomial; set from the data with
    /// [`PriorConfig::with_mean_age_from`].
    pub mean_age: f64,
    pub delta_prior_precision: f64,
    pub zeta_prior_precision: f64,
    pub alpha_prior_variance: f64,
    pub nu_prior: GammaPrior,
    pub lambda0_prior: GammaPrior,
    pub tau0_prior: GammaPrior,
    pub lambda1_prior: InvGammaPrior,
    pub tau1_prior: InvGammaPrior,
    pub sigma2_a_prior: InvGammaPrior,
    pub sigma2_m_prior: InvGammaPrior,
    pub sigma2_mu_prior: InvGammaPrior,
    pub sigma2_eta_prior: InvGammaPrior,
    pub c2_prior: GammaPrior,
    pub d2_prior: GammaPrior,
    pub sigma2_beta_prior: InvGammaPrior,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            degree: 4,
            max_order: 4,
            direction: ImprovementDirection::Negative,
            mean_age: 0.0,
            delta_prior_precision: 0.0,
            zeta_prior_precision: 0.0,
            alpha_prior_variance: 9.0,
            nu_prior: GammaPrior::new(2.0, 0.1),
            lambda0_prior: GammaPrior::new(1.0, 1.0),
            tau0_prior: GammaPrior::new(1.0, 1.0),
            lambda1_prior: VAGUE,
            tau1_prior: VAGUE,
            sigma2_a_prior: VAGUE,
            sigma2_m_prior: VAGUE,
            sigma2_mu_prior: VAGUE,
            sigma2_eta_prior: VAGUE,
            c2_prior: GammaPrior::new(5.0, 5.0),
            d2_prior: GammaPrior::new(5.0, 5.0),
            sigma2_beta_prior: InvGammaPrior::new(5.0, 5.0),
        }
    }
}

impl PriorConfig {
    /// Number of coefficients `G = N(N-1)/2`.
    pub fn num_coeffs(&self) -> usize {
        crate::bernstein::num_coeffs(self.max_order)
    }

    /// Freeze the polynomial centre at the mean observed age.
    pub fn with_mean_age_from(mut self, dataset: &crate::model::Dataset) -> Self {
        self.mean_age = dataset.mean_age();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_order < 2 {
            return Err(Error::Config(format!("max_order {} < 2", self.max_order)));
        }
        if self.max_order > 15 {
            return Err(Error::Config(format!(
                "max_order {} > 15 loses double precision in the basis",
                self.max_order
            )));
        }
        if !self.mean_age.is_finite() {
            return Err(Error::Config("mean_age must be finite".into()));
        }
        if self.delta_prior_precision < 0.0 || self.zeta_prior_precision < 0.0 {
            return Err(Error::Config("fixed-effect prior precisions must be >= 0".into()));
        }
        check_positive("alpha_prior_variance", self.alpha_prior_variance)?;
        self.nu_prior.check("nu_prior")?;
        self.lambda0_prior.check("lambda0_prior")?;
        self.tau0_prior.check("tau0_prior")?;
        self.lambda1_prior.check("lambda1_prior")?;
        self.tau1_prior.check("tau1_prior")?;
        self.sigma2_a_prior.check("sigma2_a_prior")?;
        self.sigma2_m_prior.check("sigma2_m_prior")?;
        self.sigma2_mu_prior.check("sigma2_mu_prior")?;
        self.sigma2_eta_prior.check("sigma2_eta_prior")?;
        self.c2_prior.check("c2_prior")?;
        self.d2_prior.check("d2_prior")?;
        self.sigma2_beta_prior.check("sigma2_beta_prior")
    }
}
